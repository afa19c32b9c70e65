//! Startup sequence: integrity check, storage, resources.

use std::sync::Arc;
use std::time::Duration;

use icon_core::library::{Library, LibraryError, LogBackend, RedisBackend, RemoteStore, Store};
use icon_core::linganalysis::Dictionary;
use icon_core::manifest::{FunctionCatalogue, IntegrityReport, ManifestError, Registry};
use icon_core::ontology::Ontology;
use thiserror::Error;

use crate::auth::{Auth, Credentials};
use crate::config::{ConfigError, ServerConfig, StorageKind};
use crate::service::{Service, ServiceOptions};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("integrity check failed with {} violation(s)", .0.violations.len())]
    Integrity(IntegrityReport),
    #[error("cannot load manifests: {0}")]
    Manifest(#[from] ManifestError),
    #[error("storage: {0}")]
    Storage(#[from] LibraryError),
    #[error("resource {path}: {reason}")]
    Resource { path: String, reason: String },
}

impl StartupError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StartupError::Integrity(_) | StartupError::Manifest(_) => EXIT_INTEGRITY,
            StartupError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Everything the HTTP layer needs.
pub struct App {
    pub service: Arc<Service>,
    pub auth: Arc<Auth>,
    pub integrity: IntegrityReport,
}

fn resource(path: &std::path::Path, reason: impl ToString) -> StartupError {
    StartupError::Resource {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Verify the component manifests against the function catalogue. A
/// manifest directory may carry its own `catalogue.json`.
pub fn integrity_check(config: &ServerConfig) -> Result<IntegrityReport, StartupError> {
    let (registry, catalogue) = match &config.resources.manifests {
        Some(dir) => {
            let registry = Registry::load_dir(dir)?;
            let cat_path = dir.join("catalogue.json");
            let catalogue = if cat_path.exists() {
                let text = std::fs::read_to_string(&cat_path).map_err(|e| resource(&cat_path, e))?;
                FunctionCatalogue::from_json(&text)?
            } else {
                FunctionCatalogue::shipped()
            };
            (registry, catalogue)
        }
        None => (Registry::shipped(), FunctionCatalogue::shipped()),
    };
    let report = registry.check(&catalogue);
    if report.valid {
        Ok(report)
    } else {
        Err(StartupError::Integrity(report))
    }
}

pub fn open_store(config: &ServerConfig) -> Result<Arc<dyn Store>, StartupError> {
    let s = &config.storage;
    Ok(match s.backend {
        StorageKind::Memory => Arc::new(Library::in_memory()),
        StorageKind::Log => {
            let path = s.path.as_deref().expect("validated: log backend has a path");
            Arc::new(Library::new(LogBackend::open(path)?.with_fsync(s.fsync)))
        }
        StorageKind::Remote => {
            let addr = s.address.as_deref().expect("validated: remote backend has an address");
            let store = RemoteStore::connect(addr)?;
            store.ping()?;
            Arc::new(store)
        }
        StorageKind::Redis => {
            let addr = s.address.as_deref().expect("validated: redis backend has an address");
            Arc::new(Library::new(RedisBackend::connect(addr)?))
        }
    })
}

/// Run the startup sequence against an already opened store.
pub fn build_with_store(config: &ServerConfig, store: Arc<dyn Store>) -> Result<App, StartupError> {
    let integrity = integrity_check(config)?;
    for w in &integrity.warnings {
        tracing::warn!("manifest: {w}");
    }

    let credentials = match &config.auth.credentials {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| resource(p, e))?;
            Credentials::parse(&text).map_err(|e| resource(p, e))?
        }
        None => {
            tracing::warn!("no credentials file configured; nobody can log in");
            Credentials::default()
        }
    };

    let default_initial_ontology = match &config.resources.initial_ontology {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| resource(p, e))?;
            Ontology::from_exchange_json(&text).map_err(|e| resource(p, e))?;
            Some(text)
        }
        None => None,
    };

    let service = Service::new(
        store,
        ServiceOptions {
            analysis: config.analysis.clone(),
            lease_ttl: Duration::from_secs(config.leases.ttl_secs),
            sources: config.sources.clone(),
            default_initial_ontology,
        },
    );
    for p in &config.resources.dictionaries {
        let text = std::fs::read_to_string(p).map_err(|e| resource(p, e))?;
        let dict = Dictionary::from_json(&text).map_err(|e| resource(p, e))?;
        service.put_dictionary(&dict).map_err(|e| resource(p, e))?;
    }

    Ok(App {
        service: Arc::new(service),
        auth: Arc::new(Auth::new(credentials, Duration::from_secs(config.auth.token_ttl_secs))),
        integrity,
    })
}

pub fn build(config: &ServerConfig) -> Result<App, StartupError> {
    // integrity first: a broken composition must not touch storage
    integrity_check(config)?;
    let store = open_store(config)?;
    build_with_store(config, store)
}
