//! HTTP calls to the application server and the local token cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedToken {
    pub token: String,
    pub user: String,
    #[serde(default)]
    pub expires_at: Option<String>,
}

/// Tokens keyed by server URL, stored as JSON.
pub struct TokenCache {
    path: PathBuf,
}

impl TokenCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        TokenCache { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn load_all(&self) -> Result<BTreeMap<String, CachedToken>> {
        match std::fs::read_to_string(&self.path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| CliError::io(self.path.display(), e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(CliError::io(self.path.display(), e)),
        }
    }

    pub fn get(&self, server: &str) -> Result<Option<CachedToken>> {
        Ok(self.load_all()?.remove(server))
    }

    pub fn set(&self, server: &str, token: Option<CachedToken>) -> Result<()> {
        let mut all = self.load_all()?;
        match token {
            Some(t) => all.insert(server.to_string(), t),
            None => all.remove(server),
        };
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        }
        let text = serde_json::to_string_pretty(&all).expect("token map serializes");
        write_private(&self.path, text.as_bytes()).map_err(|e| CliError::io(self.path.display(), e))
    }
}

#[cfg(unix)]
fn write_private(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    use std::os::unix::fs::OpenOptionsExt;
    let mut f = std::fs::OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .mode(0o600)
        .open(path)?;
    f.write_all(bytes)
}

#[cfg(not(unix))]
fn write_private(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::write(path, bytes)
}

pub struct Api {
    base: String,
    token: Option<String>,
    agent: ureq::Agent,
}

/// A raw response body with its entity tag.
pub struct Raw {
    pub body: String,
    pub etag: Option<String>,
}

impl Api {
    pub fn new(base: &str, token: Option<String>) -> Api {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(300)))
            .build()
            .into();
        Api {
            base: base.to_string(),
            token,
            agent,
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn auth(&self) -> Result<String> {
        self.token
            .as_ref()
            .map(|t| format!("Bearer {t}"))
            .ok_or_else(|| CliError::NotLoggedIn(self.base.clone()))
    }

    fn finish(&self, url: &str, resp: std::result::Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<Raw> {
        let mut resp = resp.map_err(|e| CliError::Transport {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let etag = resp
            .headers()
            .get("etag")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let body = resp.body_mut().read_to_string().map_err(|e| CliError::Transport {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        if status >= 400 {
            let parsed: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
            let text = |k: &str| parsed.get(k).and_then(Value::as_str).map(str::to_string);
            return Err(CliError::Api {
                status,
                code: text("code").unwrap_or_else(|| format!("HTTP_{status}")),
                message: text("message").unwrap_or(body),
            });
        }
        Ok(Raw { body, etag })
    }

    fn json(raw: Raw) -> Result<Value> {
        if raw.body.is_empty() {
            return Ok(Value::Null);
        }
        serde_json::from_str(&raw.body).map_err(|e| CliError::Api {
            status: 200,
            code: "BAD_RESPONSE".into(),
            message: e.to_string(),
        })
    }

    pub fn get_raw(&self, path: &str, query: &[(&str, &str)]) -> Result<Raw> {
        let url = self.url(path);
        let mut req = self.agent.get(&url).header("Authorization", &self.auth()?);
        for (k, v) in query {
            req = req.query(*k, *v);
        }
        self.finish(&url, req.call())
    }

    pub fn get(&self, path: &str, query: &[(&str, &str)]) -> Result<Value> {
        Self::json(self.get_raw(path, query)?)
    }

    pub fn post(&self, path: &str, body: Option<&Value>) -> Result<Value> {
        let url = self.url(path);
        let req = self.agent.post(&url).header("Authorization", &self.auth()?);
        let resp = match body {
            Some(b) => req.send_json(b),
            None => req.send_empty(),
        };
        Self::json(self.finish(&url, resp)?)
    }

    /// Log in; needs no token.
    pub fn login(&self, user: &str, password: &str) -> Result<Value> {
        let url = self.url("/auth/login");
        let resp = self
            .agent
            .post(&url)
            .send_json(serde_json::json!({ "user": user, "password": password }));
        Self::json(self.finish(&url, resp)?)
    }
}
