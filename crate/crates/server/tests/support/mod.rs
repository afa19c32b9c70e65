#![allow(dead_code)]

pub mod explorer;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Barrier};
use std::time::Duration;

use icon_core::library::Store;
use icon_core::linganalysis::Dictionary;
use icon_server::auth::{Auth, Credentials};
use icon_server::http::{router, AppState};
use icon_server::project::{ProjectState, Stage};
use icon_server::service::{IngestRequest, Service, ServiceOptions, StageParams};
use serde_json::Value;

pub const USER: &str = "expert";
pub const PASSWORD: &str = "correct horse";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `(file name, text)` of the fixture documents in name order.
pub fn fixture_texts() -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

pub fn fixture_dictionaries() -> Vec<Dictionary> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures().join("dictionaries"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| Dictionary::from_json(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}

pub fn initial_ontology() -> String {
    std::fs::read_to_string(fixtures().join("initial_ontology.json")).unwrap()
}

pub fn options() -> ServiceOptions {
    ServiceOptions {
        default_initial_ontology: Some(initial_ontology()),
        ..ServiceOptions::default()
    }
}

/// A service over `store` with the fixture dictionaries loaded.
pub fn service_over(store: Arc<dyn Store>) -> Service {
    let s = Service::new(store, options());
    for d in fixture_dictionaries() {
        s.put_dictionary(&d).unwrap();
    }
    s
}

/// Ingest the fixture documents; returns their ids in file order.
pub fn ingest_fixture(s: &Service) -> Vec<String> {
    fixture_texts()
        .into_iter()
        .map(|(name, text)| {
            let req = IngestRequest {
                text: Some(text),
                uri: Some(format!("fixture:{name}")),
                ..Default::default()
            };
            s.ingest(&req).unwrap().remove(0).id
        })
        .collect()
}

/// Start `n` runs of `stage` at the same instant; each result is the new
/// state or the error code.
pub fn race(s: &Arc<Service>, id: &str, stage: Stage, n: usize) -> Vec<Result<ProjectState, String>> {
    let barrier = Arc::new(Barrier::new(n));
    let handles: Vec<_> = (0..n)
        .map(|i| {
            let (s, id, barrier) = (s.clone(), id.to_string(), barrier.clone());
            std::thread::spawn(move || {
                barrier.wait();
                s.run_stage(&id, stage, &StageParams::default(), &format!("user{i}"))
                    .map(|v| v.state)
                    .map_err(|e| e.code().to_string())
            })
        })
        .collect();
    handles.into_iter().map(|h| h.join().unwrap()).collect()
}

pub fn credentials() -> Credentials {
    Credentials::parse(&Credentials::entry(USER, PASSWORD)).unwrap()
}

/// An HTTP server on an ephemeral port, running until the process exits.
pub struct TestServer {
    pub addr: SocketAddr,
    pub service: Arc<Service>,
    agent: ureq::Agent,
}

impl TestServer {
    pub fn start(service: Service, token_ttl: Duration) -> TestServer {
        let service = Arc::new(service);
        let state = AppState {
            service: service.clone(),
            auth: Arc::new(Auth::new(credentials(), token_ttl)),
        };
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).unwrap();
                axum::serve(listener, router(state)).await.unwrap();
            });
        });
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        TestServer { addr, service, agent }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn agent(&self) -> &ureq::Agent {
        &self.agent
    }

    pub fn login(&self) -> String {
        let r = self.request("POST", "/auth/login", None, Some(&serde_json::json!({"user": USER, "password": PASSWORD})));
        assert_eq!(r.status, 200, "{:?}", r.body);
        r.json()["token"].as_str().unwrap().to_string()
    }

    /// Send a request with an optional bearer token and JSON body.
    pub fn request(&self, method: &str, path: &str, token: Option<&str>, body: Option<&Value>) -> Reply {
        self.raw(method, path, token, &[], body.map(|b| b.to_string()))
    }

    pub fn raw(
        &self,
        method: &str,
        path: &str,
        token: Option<&str>,
        headers: &[(&str, &str)],
        body: Option<String>,
    ) -> Reply {
        let url = self.url(path);
        let mut req = ureq::http::Request::builder().method(method).uri(&url);
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let req = req
            .header("Content-Type", "application/json")
            .body(body.unwrap_or_default())
            .unwrap();
        let mut resp = self.agent.run(req).unwrap();
        let status = resp.status().as_u16();
        let etag = resp
            .headers()
            .get("etag")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let body = resp.body_mut().read_to_string().unwrap();
        Reply { status, etag, body }
    }
}

#[derive(Debug)]
pub struct Reply {
    pub status: u16,
    pub etag: Option<String>,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_string()
    }
}
