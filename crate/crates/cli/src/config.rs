use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8080";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
}

/// Where the client talks to and how it prints. It only ever knows the
/// application server's address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientConfig {
    pub server: String,
    pub token_cache: PathBuf,
    pub format: Format,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    server: Option<String>,
    token_cache: Option<PathBuf>,
    format: Option<Format>,
}

/// Overrides from flags and the environment, highest precedence first.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub server: Option<String>,
    pub token_cache: Option<PathBuf>,
    pub format: Option<Format>,
}

fn home_dir(env: &dyn Fn(&str) -> Option<String>, xdg: &str, fallback: &str) -> Option<PathBuf> {
    env(xdg)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| env("HOME").map(|h| Path::new(&h).join(fallback)))
}

/// Default location of the optional configuration file.
pub fn default_config_path(env: &dyn Fn(&str) -> Option<String>) -> Option<PathBuf> {
    home_dir(env, "XDG_CONFIG_HOME", ".config").map(|d| d.join("icon").join("cli.toml"))
}

fn default_token_cache(env: &dyn Fn(&str) -> Option<String>) -> PathBuf {
    home_dir(env, "XDG_CACHE_HOME", ".cache")
        .unwrap_or_else(std::env::temp_dir)
        .join("icon")
        .join("token.json")
}

/// The server address must be a plain http(s) base URL.
pub fn normalize_server(url: &str) -> Result<String> {
    let url = url.trim().trim_end_matches('/');
    let rest = url
        .strip_prefix("http://")
        .or_else(|| url.strip_prefix("https://"))
        .ok_or_else(|| CliError::Config(format!("server {url:?}: expected an http:// or https:// URL")))?;
    if rest.is_empty() || rest.contains(char::is_whitespace) {
        return Err(CliError::Config(format!("server {url:?}: missing host")));
    }
    Ok(url.to_string())
}

impl ClientConfig {
    /// Defaults, then the config file (if any), then `overrides`.
    pub fn resolve(
        file: Option<&Path>,
        overrides: Overrides,
        env: &dyn Fn(&str) -> Option<String>,
    ) -> Result<ClientConfig> {
        let explicit = file.is_some();
        let path = file.map(Path::to_path_buf).or_else(|| default_config_path(env));
        let from_file = match path {
            Some(p) if explicit || p.exists() => {
                let text = std::fs::read_to_string(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            _ => FileConfig::default(),
        };
        let server = overrides
            .server
            .or(from_file.server)
            .unwrap_or_else(|| DEFAULT_SERVER.to_string());
        Ok(ClientConfig {
            server: normalize_server(&server)?,
            token_cache: overrides
                .token_cache
                .or(from_file.token_cache)
                .unwrap_or_else(|| default_token_cache(env)),
            format: overrides.format.or(from_file.format).unwrap_or_default(),
        })
    }
}
