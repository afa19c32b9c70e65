//! Static credential file and bearer tokens.
//!
//! The credential file has one `username:sha256-hex-of-password` entry per
//! line; blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use icon_core::digest::sha256_hex;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Credentials {
    users: BTreeMap<String, String>,
}

impl Credentials {
    pub fn parse(text: &str) -> Result<Credentials> {
        let mut users = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (user, hash) = line.split_once(':').ok_or_else(|| {
                ServiceError::Validation(format!("credentials line {}: expected user:hash", n + 1))
            })?;
            let hash = hash.trim().to_ascii_lowercase();
            if user.trim().is_empty() || hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(ServiceError::Validation(format!(
                    "credentials line {}: bad entry",
                    n + 1
                )));
            }
            users.insert(user.trim().to_string(), hash);
        }
        Ok(Credentials { users })
    }

    /// The file line for a user, for provisioning.
    pub fn entry(user: &str, password: &str) -> String {
        format!("{user}:{}", sha256_hex(password.as_bytes()))
    }

    pub fn check(&self, user: &str, password: &str) -> bool {
        self.users
            .get(user)
            .is_some_and(|h| *h == sha256_hex(password.as_bytes()))
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub user: String,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug)]
pub struct Auth {
    credentials: Credentials,
    ttl: Duration,
    sessions: Mutex<HashMap<String, Session>>,
}

impl Auth {
    pub fn new(credentials: Credentials, ttl: std::time::Duration) -> Auth {
        Auth {
            credentials,
            ttl: Duration::from_std(ttl).unwrap_or(Duration::hours(1)),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn login(&self, user: &str, password: &str) -> Result<Session> {
        if !self.credentials.check(user, password) {
            return Err(ServiceError::AuthFailed("unknown user or wrong password".into()));
        }
        let mut bytes = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut bytes);
        let session = Session {
            token: hex::encode(bytes),
            user: user.to_string(),
            expires_at: Utc::now() + self.ttl,
        };
        let mut sessions = self.sessions.lock().expect("session table poisoned");
        let now = Utc::now();
        sessions.retain(|_, s| s.expires_at > now);
        sessions.insert(session.token.clone(), session.clone());
        Ok(session)
    }

    /// The user behind a bearer token.
    pub fn authenticate(&self, token: &str) -> Result<String> {
        let mut sessions = self.sessions.lock().expect("session table poisoned");
        match sessions.get(token) {
            Some(s) if s.expires_at > Utc::now() => Ok(s.user.clone()),
            Some(_) => {
                sessions.remove(token);
                Err(ServiceError::AuthFailed("token expired".into()))
            }
            None => Err(ServiceError::AuthFailed("unknown token".into())),
        }
    }

    pub fn logout(&self, token: &str) {
        self.sessions.lock().expect("session table poisoned").remove(token);
    }
}
