//! Server configuration: one TOML file, overridable by `ICON_*` variables.

use std::path::{Path, PathBuf};

use icon_core::corpus::SourceConfig;
use icon_core::linganalysis::AnalysisConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for {var}: {reason}")]
    Override { var: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    #[default]
    Memory,
    /// Append-only log files in a local directory.
    Log,
    /// A data-tier server reached over TCP.
    Remote,
    Redis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageConfig {
    pub backend: StorageKind,
    pub path: Option<PathBuf>,
    pub address: Option<String>,
    pub fsync: bool,
}

impl Default for StorageConfig {
    fn default() -> Self {
        StorageConfig {
            backend: StorageKind::Memory,
            path: None,
            address: None,
            fsync: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthConfig {
    /// `user:sha256hex(password)` lines.
    pub credentials: Option<PathBuf>,
    pub token_ttl_secs: u64,
}

impl Default for AuthConfig {
    fn default() -> Self {
        AuthConfig {
            credentials: None,
            token_ttl_secs: 3600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeaseConfig {
    pub ttl_secs: u64,
}

impl Default for LeaseConfig {
    fn default() -> Self {
        LeaseConfig { ttl_secs: 600 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    /// Dictionary documents loaded into the library at startup.
    pub dictionaries: Vec<PathBuf>,
    /// Exchange document used by projects created without an initial ontology.
    pub initial_ontology: Option<PathBuf>,
    /// Directory of component manifests; the built-in set when absent.
    pub manifests: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    pub storage: StorageConfig,
    pub auth: AuthConfig,
    pub leases: LeaseConfig,
    pub analysis: AnalysisConfig,
    pub resources: ResourceConfig,
    pub sources: Option<SourceConfig>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:8080".into(),
            storage: StorageConfig::default(),
            auth: AuthConfig::default(),
            leases: LeaseConfig::default(),
            analysis: AnalysisConfig::default(),
            resources: ResourceConfig::default(),
            sources: None,
        }
    }
}

fn parse<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Override {
        var: var.to_string(),
        reason: e.to_string(),
    })
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<ServerConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Read the file, then apply overrides from the process environment.
    pub fn load(path: Option<&Path>) -> Result<ServerConfig, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                let mut c = Self::from_toml(&text)?;
                c.resolve_paths(p.parent().unwrap_or(Path::new(".")));
                c
            }
            None => ServerConfig::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    /// Relative paths in the file are relative to the file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.storage.path.as_mut().map(fix);
        self.auth.credentials.as_mut().map(fix);
        self.resources.dictionaries.iter_mut().for_each(fix);
        self.resources.initial_ontology.as_mut().map(fix);
        self.resources.manifests.as_mut().map(fix);
    }

    /// Apply `ICON_*` overrides. Unrelated variables are ignored; unknown
    /// `ICON_` variables are an error so typos do not pass silently.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (var, value) in vars {
            let Some(name) = var.strip_prefix("ICON_") else {
                continue;
            };
            match name {
                "CONFIG" | "LOG" => {}
                "LISTEN" => self.listen = value,
                "STORAGE_BACKEND" => {
                    self.storage.backend = serde_json::from_value(serde_json::Value::from(value.as_str()))
                        .map_err(|_| ConfigError::Override {
                            var: var.clone(),
                            reason: format!("unknown backend {value:?}"),
                        })?
                }
                "STORAGE_PATH" => self.storage.path = Some(value.into()),
                "STORAGE_ADDRESS" => self.storage.address = Some(value),
                "STORAGE_FSYNC" => self.storage.fsync = parse(&var, &value)?,
                "AUTH_CREDENTIALS" => self.auth.credentials = Some(value.into()),
                "AUTH_TOKEN_TTL_SECS" => self.auth.token_ttl_secs = parse(&var, &value)?,
                "LEASES_TTL_SECS" => self.leases.ttl_secs = parse(&var, &value)?,
                "RESOURCES_INITIAL_ONTOLOGY" => self.resources.initial_ontology = Some(value.into()),
                "RESOURCES_MANIFESTS" => self.resources.manifests = Some(value.into()),
                "RESOURCES_DICTIONARIES" => {
                    self.resources.dictionaries = std::env::split_paths(&value).collect();
                }
                _ => {
                    return Err(ConfigError::Override {
                        var,
                        reason: "unknown setting".into(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.storage.backend {
            StorageKind::Log if self.storage.path.is_none() => {
                Err(ConfigError::Invalid("storage.path is required for the log backend".into()))
            }
            StorageKind::Remote | StorageKind::Redis if self.storage.address.is_none() => Err(ConfigError::Invalid(
                "storage.address is required for remote and redis backends".into(),
            )),
            _ if self.auth.token_ttl_secs == 0 => Err(ConfigError::Invalid("auth.token_ttl_secs must be positive".into())),
            _ if self.leases.ttl_secs == 0 => Err(ConfigError::Invalid("leases.ttl_secs must be positive".into())),
            _ => Ok(()),
        }
    }
}
