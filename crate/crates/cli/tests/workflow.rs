//! Drives the `icon` binary against an in-process server.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use icon_server::auth::Credentials;
use icon_server::config::ServerConfig;
use icon_server::http::{router, AppState};
use icon_server::startup::build;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_icon");
const USER: &str = "expert";
const PASSWORD: &str = "correct horse";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Server {
    url: String,
    _dir: tempfile::TempDir,
}

fn start_server() -> Server {
    let dir = tempfile::tempdir().unwrap();
    let credentials = dir.path().join("users");
    std::fs::write(&credentials, Credentials::entry(USER, PASSWORD)).unwrap();
    let mut config = ServerConfig::default();
    config.auth.credentials = Some(credentials);
    config.resources.initial_ontology = Some(fixtures().join("initial_ontology.json"));
    let mut dicts: Vec<PathBuf> = std::fs::read_dir(fixtures().join("dictionaries"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    dicts.sort();
    config.resources.dictionaries = dicts;
    let app = build(&config).unwrap();
    let state = AppState::from(&app);
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        tokio::runtime::Runtime::new().unwrap().block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, router(state)).await.unwrap();
        });
    });
    Server { url, _dir: dir }
}

/// A client environment with its own home directory and token cache.
struct Client {
    home: tempfile::TempDir,
    server: String,
}

impl Client {
    fn new(server: &str) -> Client {
        Client {
            home: tempfile::tempdir().unwrap(),
            server: server.to_string(),
        }
    }

    fn run_with(&self, args: &[&str], password: Option<&str>) -> Output {
        let mut cmd = Command::new(BIN);
        cmd.args(args)
            .env_clear()
            .env("HOME", self.home.path())
            .env("ICON_SERVER", &self.server);
        if let Some(p) = password {
            cmd.env("ICON_PASSWORD", p);
        }
        cmd.output().unwrap()
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_with(args, None)
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn json(&self, args: &[&str]) -> Value {
        let mut all = vec!["--json"];
        all.extend_from_slice(args);
        serde_json::from_str(&self.ok(&all)).unwrap()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_workflow_from_the_terminal() {
    let server = start_server();
    let c = Client::new(&server.url);

    let out = c.run(&["status"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("icon login"), "{}", stderr(&out));

    let out = c.run_with(&["login", "--user", USER], Some("wrong"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("AUTH_FAILED"));
    let out = c.run_with(&["login", "--user", USER], Some(PASSWORD));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let mut files: Vec<String> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path().display().to_string())
        .collect();
    files.sort();
    let mut args = vec!["--json", "ingest"];
    args.extend(files.iter().map(String::as_str));
    let docs: Value = serde_json::from_str(&c.ok(&args)).unwrap();
    assert_eq!(docs.as_array().unwrap().len(), files.len());

    let listed = c.ok(&["status", "--show", "documents", "--group", "language"]);
    let total: usize = listed
        .lines()
        .filter(|l| l.starts_with("language = "))
        .map(|l| l.rsplit('(').next().unwrap().trim_end_matches(')').parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, files.len(), "{listed}");

    let progress = c.json(&["corpus", "--new", "terminal"]);
    assert_eq!(progress["state"], "CORPUS_READY");
    let id = progress["project_id"].as_str().unwrap().to_string();
    assert_eq!(c.json(&["index", &id])["state"], "INDEXED");

    let table = c.ok(&["analyze", &id, "--show", "terms", "--sort", "score", "--desc", "--limit", "5"]);
    let lines: Vec<&str> = table.lines().skip_while(|l| !l.starts_with("lemma_key")).collect();
    assert!(!lines.is_empty(), "{table}");
    assert_eq!(lines.len(), 6, "{table}");

    let terms = c.json(&["status", &id, "--show", "terms"]);
    let mut scores: Vec<(f64, String)> = terms
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["score"].as_f64().unwrap(), t["lemma_key"].as_str().unwrap().to_string()))
        .collect();
    scores.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (line, (_, lemma)) in lines[1..].iter().zip(&scores) {
        assert!(line.starts_with(lemma.as_str()), "{line} vs {lemma}");
    }

    let grouped = c.ok(&["status", &id, "--show", "concepts", "--group", "kind"]);
    let counts: usize = grouped
        .lines()
        .filter(|l| l.starts_with("kind = "))
        .map(|l| l.rsplit('(').next().unwrap().trim_end_matches(')').parse::<usize>().unwrap())
        .sum();
    let concepts = c.json(&["status", &id, "--show", "concepts"]);
    assert_eq!(counts, concepts.as_array().unwrap().len());

    let out = c.run(&["status", &id, "--show", "terms", "--sort", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UNKNOWN_FIELD"));

    assert_eq!(c.json(&["build", &id])["state"], "DRAFT_ONTOLOGY");
    let corpus = c.json(&["status"])[0]["corpus_id"].as_str().unwrap().to_string();
    let hits = c.json(&["search", &corpus, "онтология"]);
    assert!(!hits.as_array().unwrap().is_empty());

    let out_dir = tempfile::tempdir().unwrap();
    let a = out_dir.path().join("a.json");
    c.ok(&["export", &id, "-o", a.to_str().unwrap()]);
    let printed = c.ok(&["export", &id]);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), printed);
    let exported: Value = serde_json::from_str(&printed).unwrap();
    assert!(exported.is_object());

    assert_eq!(c.json(&["verify", &id, "submit"])["state"], "UNDER_VERIFICATION");
    let v = c.json(&["verify", &id, "approve", "--comment", "fine"]);
    assert_eq!(v["progress"]["state"], "VERIFIED");
    assert!(c.ok(&["status", &id]).contains("VERIFIED"));

    // stage commands out of order are server errors
    let out = c.run(&["index", &id]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("INVALID_STATE"));

    c.ok(&["login", "--logout"]);
    assert_eq!(c.run(&["status"]).status.code(), Some(2));
}

#[test]
fn usage_errors_never_reach_the_network() {
    // nothing listens on this port; usage errors must be reported first
    let c = Client::new("http://127.0.0.1:9");
    let id = "0123456789abcdef0123456789abcdef";
    for args in [
        &["ingest", "x.txt", "--language", "de"][..],
        &["index", "nope"],
        &["status", id, "--show", "terms", "--min-score", "-1"],
        &["frobnicate"],
        &["verify", id, "maybe"],
    ] {
        let out = c.run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
    }
    let out = c.run(&["ingest", "x.txt", "--language", "de"]);
    assert!(stderr(&out).contains("USAGE_ERROR: --language"), "{}", stderr(&out));
    assert_eq!(c.run(&["--help"]).status.code(), Some(0));

    let out = c.run_with(&["login", "--user", USER], Some(PASSWORD));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot reach"), "{}", stderr(&out));

    let out = c.run(&["--server", "redis://127.0.0.1:6379", "status"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn client_depends_only_on_the_server_api() {
    let manifest: toml::Table = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let deps = manifest["dependencies"].as_table().unwrap();
    for forbidden in ["icon-core", "icon-server"] {
        assert!(!deps.contains_key(forbidden), "{forbidden} is a runtime dependency");
    }
}
