//! Command definitions and dispatch. Every command validates its arguments,
//! makes a few server calls and presents the result.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use base64::Engine;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::client::{Api, CachedToken, TokenCache};
use crate::config::{ClientConfig, Format, Overrides};
use crate::error::{CliError, Result, UsageError, EXIT_USAGE};
use crate::present::{present, render, Order, Row, Sort, Table};
use crate::validate;

#[derive(Debug, Parser)]
#[command(name = "icon", version, about = "Terminal client for the icon ontology workbench")]
pub struct Cli {
    /// Application server base URL.
    #[arg(long, global = true, env = "ICON_SERVER")]
    pub server: Option<String>,
    /// Client configuration file.
    #[arg(long, global = true, env = "ICON_CLI_CONFIG")]
    pub config: Option<PathBuf>,
    /// Where login tokens are kept.
    #[arg(long, global = true, env = "ICON_TOKEN_CACHE")]
    pub token_cache: Option<PathBuf>,
    /// Print raw API payloads instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Show {
    Terms,
    Concepts,
    Relations,
    Documents,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ViewArgs {
    /// What to list.
    #[arg(long, value_enum)]
    pub show: Option<Show>,
    /// Column to sort by.
    #[arg(long)]
    pub sort: Option<String>,
    /// Sort descending.
    #[arg(long)]
    pub desc: bool,
    /// Column to group by; each group is printed with its row count.
    #[arg(long)]
    pub group: Option<String>,
    /// Hide rows scoring below this.
    #[arg(long, allow_negative_numbers = true)]
    pub min_score: Option<f64>,
    /// Hide relations less confident than this.
    #[arg(long, allow_negative_numbers = true)]
    pub min_confidence: Option<f64>,
    /// Print at most this many rows (per group when grouping).
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyAction {
    Submit,
    Approve,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoding {
    Utf8,
    Windows1251,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Any,
    All,
    Phrase,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log in and cache the session token. The password is read from
    /// ICON_PASSWORD or the first line of standard input.
    Login {
        #[arg(long)]
        user: Option<String>,
        #[arg(long, env = "ICON_PASSWORD", hide_env_values = true, hide = true)]
        password: Option<String>,
        /// End the cached session instead.
        #[arg(long, conflicts_with = "user")]
        logout: bool,
    },
    /// Add documents to the library.
    Ingest {
        files: Vec<PathBuf>,
        /// Fetch documents from the configured external sources instead.
        #[arg(long, conflicts_with = "files")]
        query: Option<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long, value_enum)]
        encoding: Option<Encoding>,
        /// Warn about documents detected as another language.
        #[arg(long)]
        language: Option<String>,
    },
    /// Assemble a project's corpus, creating the project with --new.
    Corpus {
        #[arg(required_unless_present = "new")]
        project: Option<String>,
        #[arg(long, conflicts_with = "project")]
        new: Option<String>,
        /// Initial ontology (exchange JSON) for a new project.
        #[arg(long, requires = "new")]
        initial: Option<PathBuf>,
        /// Restrict the corpus to these documents.
        #[arg(long = "doc")]
        docs: Vec<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Build the project's search index.
    Index { project: String },
    /// Extract terms, concepts and relations.
    Analyze {
        project: String,
        #[command(flatten)]
        view: ViewArgs,
    },
    /// Merge the draft ontology.
    Build { project: String },
    /// Submit the draft for verification, or record a verdict.
    Verify {
        project: String,
        #[arg(value_enum)]
        action: VerifyAction,
        #[arg(long, default_value = "")]
        comment: String,
    },
    /// Show projects, a project's progress, or its artifacts.
    Status {
        project: Option<String>,
        #[command(flatten)]
        view: ViewArgs,
    },
    /// Search a corpus.
    Search {
        corpus: String,
        #[arg(required = true, num_args = 1..)]
        query: Vec<String>,
        #[arg(long, value_enum, default_value = "any")]
        mode: Mode,
        #[command(flatten)]
        view: ViewArgs,
    },
    /// Write the project's ontology in the exchange format.
    Export {
        project: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn check_view(view: &ViewArgs) -> std::result::Result<(), UsageError> {
    if let Some(v) = view.min_score {
        validate::threshold("--min-score", v)?;
    }
    if let Some(v) = view.min_confidence {
        validate::fraction("--min-confidence", v)?;
    }
    if view.limit == Some(0) {
        return Err(UsageError::new("--limit", "must be at least 1"));
    }
    for (arg, v) in [("--sort", &view.sort), ("--group", &view.group)] {
        if let Some(v) = v {
            validate::non_empty(arg, v)?;
        }
    }
    Ok(())
}

impl Command {
    /// Check and normalize arguments without touching the network.
    pub fn validate(mut self) -> std::result::Result<Command, UsageError> {
        match &mut self {
            Command::Login { user, logout, .. } => {
                if !*logout {
                    let u = user.as_deref().ok_or_else(|| UsageError::new("--user", "required to log in"))?;
                    *user = Some(validate::non_empty("--user", u)?);
                }
            }
            Command::Ingest {
                files,
                query,
                title,
                language,
                ..
            } => {
                if let Some(l) = language {
                    *language = Some(validate::language("--language", l)?);
                }
                match query {
                    Some(q) => *query = Some(validate::non_empty("--query", q)?),
                    None if files.is_empty() => return Err(UsageError::new("FILES", "give files or --query")),
                    None => {}
                }
                if title.is_some() && files.len() > 1 {
                    return Err(UsageError::new("--title", "only valid for a single file"));
                }
            }
            Command::Corpus {
                project, new, docs, ..
            } => {
                if let Some(p) = project {
                    validate::project_id("PROJECT", p)?;
                }
                if let Some(n) = new {
                    *new = Some(validate::non_empty("--new", n)?);
                }
                for d in docs.iter() {
                    validate::content_id("--doc", d)?;
                }
            }
            Command::Index { project } | Command::Build { project } | Command::Export { project, .. } => {
                validate::project_id("PROJECT", project)?;
            }
            Command::Verify { project, .. } => {
                validate::project_id("PROJECT", project)?;
            }
            Command::Analyze { project, view } => {
                validate::project_id("PROJECT", project)?;
                check_view(view)?;
                if view.show == Some(Show::Documents) {
                    return Err(UsageError::new("--show", "analyze shows terms, concepts or relations"));
                }
            }
            Command::Status { project, view } => {
                if let Some(p) = project {
                    validate::project_id("PROJECT", p)?;
                }
                check_view(view)?;
                let needs_project = matches!(view.show, Some(Show::Terms | Show::Concepts | Show::Relations));
                if needs_project && project.is_none() {
                    return Err(UsageError::new("PROJECT", "required with --show terms|concepts|relations"));
                }
            }
            Command::Search { corpus, query, view, .. } => {
                validate::content_id("CORPUS", corpus)?;
                let q = query.join(" ");
                *query = vec![validate::non_empty("QUERY", &q)?];
                check_view(view)?;
                if view.show.is_some() {
                    return Err(UsageError::new("--show", "not used by search"));
                }
            }
        }
        Ok(self)
    }
}

/// Streams a command reads from and writes to.
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

struct Ctx<'a, 'b> {
    config: ClientConfig,
    cache: TokenCache,
    io: &'a mut Io<'b>,
}

impl Ctx<'_, '_> {
    fn api(&self) -> Result<Api> {
        let token = self.cache.get(&self.config.server)?.map(|t| t.token);
        Ok(Api::new(&self.config.server, token))
    }

    fn json(&self) -> bool {
        self.config.format == Format::Json
    }

    fn out(&mut self, text: &str) -> Result<()> {
        self.io
            .stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("stdout", e))
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.io.stderr, "warning: {text}");
    }

    fn payload(&mut self, v: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(v).expect("JSON value serializes");
        self.out(&format!("{text}\n"))
    }
}

/// Parse, validate and run; returns the process exit code.
pub fn run<I, T>(args: I, io: &mut Io<'_>, env: &dyn Fn(&str) -> Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { io.stderr } else { io.stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli, io, env) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.stderr, "icon: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, io: &mut Io<'_>, env: &dyn Fn(&str) -> Option<String>) -> Result<()> {
    let command = cli.command.validate()?;
    let overrides = Overrides {
        server: cli.server,
        token_cache: cli.token_cache,
        format: cli.json.then_some(Format::Json),
    };
    let config = ClientConfig::resolve(cli.config.as_deref(), overrides, env)?;
    let cache = TokenCache::new(config.token_cache.clone());
    let mut ctx = Ctx { config, cache, io };
    match command {
        Command::Login { user, password, logout } => login(&mut ctx, user, password, logout),
        Command::Ingest {
            files,
            query,
            title,
            encoding,
            language,
        } => ingest(&mut ctx, files, query, title, encoding, language),
        Command::Corpus {
            project,
            new,
            initial,
            docs,
            name,
        } => corpus(&mut ctx, project, new, initial, docs, name),
        Command::Index { project } => stage(&mut ctx, &project, "index", None),
        Command::Analyze { project, view } => {
            stage(&mut ctx, &project, "analyze", None)?;
            match view.show {
                Some(show) => {
                    if !ctx.json() {
                        ctx.out("\n")?;
                    }
                    artifacts(&mut ctx, &project, show, &view)
                }
                None => Ok(()),
            }
        }
        Command::Build { project } => stage(&mut ctx, &project, "build", None),
        Command::Verify {
            project,
            action,
            comment,
        } => verify(&mut ctx, &project, action, &comment),
        Command::Status { project, view } => status(&mut ctx, project, &view),
        Command::Search {
            corpus,
            query,
            mode,
            view,
        } => search(&mut ctx, &corpus, &query[0], mode, &view),
        Command::Export { project, output } => export(&mut ctx, &project, output),
    }
}

fn login(ctx: &mut Ctx, user: Option<String>, password: Option<String>, logout: bool) -> Result<()> {
    let server = ctx.config.server.clone();
    if logout {
        let api = ctx.api()?;
        if let Err(e) = api.post("/auth/logout", None) {
            // an expired session is as good as ended
            if !matches!(e, CliError::Api { status: 401, .. } | CliError::NotLoggedIn(_)) {
                return Err(e);
            }
        }
        ctx.cache.set(&server, None)?;
        return ctx.out(&format!("logged out of {server}\n"));
    }
    let user = user.expect("validated");
    let password = match password {
        Some(p) => p,
        None => {
            let mut line = String::new();
            ctx.io.stdin.read_line(&mut line).map_err(|e| CliError::io("stdin", e))?;
            line.trim_end_matches(['\r', '\n']).to_string()
        }
    };
    let session = Api::new(&server, None).login(&user, &password)?;
    let token = session["token"].as_str().unwrap_or_default().to_string();
    let expires_at = session["expires_at"].as_str().map(str::to_string);
    ctx.cache.set(
        &server,
        Some(CachedToken {
            token,
            user: user.clone(),
            expires_at: expires_at.clone(),
        }),
    )?;
    if ctx.json() {
        ctx.payload(&json!({ "user": user, "server": server, "expires_at": expires_at }))
    } else {
        ctx.out(&format!(
            "logged in to {server} as {user} until {}\n",
            expires_at.as_deref().unwrap_or("-")
        ))
    }
}

fn ingest(
    ctx: &mut Ctx,
    files: Vec<PathBuf>,
    query: Option<String>,
    title: Option<String>,
    encoding: Option<Encoding>,
    language: Option<String>,
) -> Result<()> {
    let api = ctx.api()?;
    let encoding = encoding.map(|e| match e {
        Encoding::Utf8 => "utf8",
        Encoding::Windows1251 => "windows1251",
    });
    let mut requests = Vec::new();
    if let Some(q) = query {
        requests.push(("query".to_string(), json!({ "source_query": q })));
    }
    for f in &files {
        let bytes = std::fs::read(f).map_err(|e| CliError::io(f.display(), e))?;
        let mut body = json!({
            "content_base64": base64::engine::general_purpose::STANDARD.encode(bytes),
            "uri": format!("file:{}", f.display()),
        });
        if let Some(t) = &title {
            body["title"] = json!(t);
        }
        if let Some(e) = encoding {
            body["encoding"] = json!(e);
        }
        requests.push((f.display().to_string(), body));
    }
    let mut summaries = Vec::new();
    for (origin, body) in requests {
        let reply = api.post("/documents", Some(&body))?;
        for s in reply.as_array().cloned().unwrap_or_default() {
            if let (Some(want), Some(got)) = (&language, s["language"].as_str()) {
                if want != got {
                    ctx.warn(&format!("{origin}: detected {got}, expected {want}"));
                }
            }
            summaries.push(s);
        }
    }
    if ctx.json() {
        return ctx.payload(&Value::Array(summaries));
    }
    let rows = summaries.iter().map(document_row).collect();
    table(ctx, Table::new(DOCUMENT_COLUMNS, "id", rows), &ViewArgs::default())
}

fn progress(ctx: &mut Ctx, v: &Value) -> Result<()> {
    if ctx.json() {
        return ctx.payload(v);
    }
    let c = &v["counters"];
    let mut text = format!(
        "{}  {}\n",
        v["project_id"].as_str().unwrap_or_default(),
        v["state"].as_str().unwrap_or_default()
    );
    let counts: Vec<String> = ["docs", "terms", "concepts", "relations", "nodes", "edges"]
        .iter()
        .map(|k| format!("{k} {}", c[k].as_u64().unwrap_or(0)))
        .collect();
    text.push_str(&counts.join("  "));
    text.push('\n');
    if let Some(e) = v["last_event"].as_object() {
        let detail = e.get("detail").and_then(Value::as_str).unwrap_or_default();
        text.push_str(&format!(
            "last: {} {detail}\n",
            e.get("event").and_then(Value::as_str).unwrap_or_default()
        ));
    }
    ctx.out(&text)
}

fn stage(ctx: &mut Ctx, project: &str, stage: &str, body: Option<&Value>) -> Result<()> {
    let v = ctx.api()?.post(&format!("/projects/{project}/stages/{stage}"), body)?;
    progress(ctx, &v)
}

fn corpus(
    ctx: &mut Ctx,
    project: Option<String>,
    new: Option<String>,
    initial: Option<PathBuf>,
    docs: Vec<String>,
    name: Option<String>,
) -> Result<()> {
    let api = ctx.api()?;
    let initial = match &initial {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p.display(), e))?;
            Some(serde_json::from_str::<Value>(&text).map_err(|e| CliError::io(p.display(), e))?)
        }
        None => None,
    };
    let project = match (project, new) {
        (Some(p), _) => p,
        (None, Some(n)) => {
            let mut body = json!({ "name": n });
            if let Some(o) = initial {
                body["initial_ontology"] = o;
            }
            let created = api.post("/projects", Some(&body))?;
            created["id"].as_str().unwrap_or_default().to_string()
        }
        (None, None) => unreachable!("validated"),
    };
    let mut body = json!({});
    if !docs.is_empty() {
        body["documents"] = json!(docs);
    }
    if let Some(n) = name {
        body["corpus_name"] = json!(n);
    }
    stage(ctx, &project, "corpus", Some(&body))
}

fn verify(ctx: &mut Ctx, project: &str, action: VerifyAction, comment: &str) -> Result<()> {
    let verdict = match action {
        VerifyAction::Submit => return stage(ctx, project, "submit_verification", None),
        VerifyAction::Approve => "approve",
        VerifyAction::Reject => "reject",
    };
    let v = ctx.api()?.post(
        &format!("/projects/{project}/verify"),
        Some(&json!({ "verdict": verdict, "comment": comment })),
    )?;
    if ctx.json() {
        return ctx.payload(&v);
    }
    progress(ctx, &v["progress"])
}

fn status(ctx: &mut Ctx, project: Option<String>, view: &ViewArgs) -> Result<()> {
    match (project, view.show) {
        (Some(p), Some(show)) if show != Show::Documents => artifacts(ctx, &p, show, view),
        (_, Some(Show::Documents)) => {
            let v = ctx.api()?.get("/documents", &[])?;
            if ctx.json() {
                return ctx.payload(&v);
            }
            let rows = v.as_array().map(|a| a.iter().map(document_row).collect()).unwrap_or_default();
            table(ctx, Table::new(DOCUMENT_COLUMNS, "id", rows), view)
        }
        (Some(p), _) => {
            let v = ctx.api()?.get(&format!("/projects/{p}/progress"), &[])?;
            progress(ctx, &v)
        }
        (None, _) => {
            let v = ctx.api()?.get("/projects", &[])?;
            if ctx.json() {
                return ctx.payload(&v);
            }
            let rows = v
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|p| {
                            row(&[
                                ("name", p["name"].clone()),
                                ("state", p["state"].clone()),
                                ("id", p["id"].clone()),
                                ("corpus_id", p["corpus_id"].clone()),
                            ])
                        })
                        .collect()
                })
                .unwrap_or_default();
            table(ctx, Table::new(&["name", "state", "id", "corpus_id"], "id", rows), view)
        }
    }
}

const DOCUMENT_COLUMNS: &[&str] = &["id", "title", "language", "chars", "source"];

fn row(pairs: &[(&str, Value)]) -> Row {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn count(v: &Value) -> Value {
    json!(v.as_array().map_or(0, Vec::len))
}

fn document_row(d: &Value) -> Row {
    row(&DOCUMENT_COLUMNS.iter().map(|c| (*c, d[c].clone())).collect::<Vec<_>>())
}

/// Flatten one artifact list into rows.
pub fn artifact_table(show: Show, payload: &Value) -> Table {
    let list = payload.as_array().cloned().unwrap_or_default();
    match show {
        Show::Terms => {
            let rows = list
                .iter()
                .map(|t| {
                    let key = t["lemma_key"].as_str().unwrap_or_default();
                    row(&[
                        ("lemma_key", t["lemma_key"].clone()),
                        ("words", json!(key.split(' ').count())),
                        ("tf", t["tf"].clone()),
                        ("df", t["df"].clone()),
                        ("tfidf", t["tfidf"].clone()),
                        ("cvalue", t["cvalue"].clone()),
                        ("score", t["score"].clone()),
                    ])
                })
                .collect();
            Table::new(&["lemma_key", "words", "tf", "df", "tfidf", "cvalue", "score"], "lemma_key", rows)
        }
        Show::Concepts => {
            let rows = list
                .iter()
                .map(|c| {
                    row(&[
                        ("label", c["label"].clone()),
                        ("kind", c["kind"].clone()),
                        ("score", c["score"].clone()),
                        ("synonyms", count(&c["synonyms"])),
                        ("occurrences", count(&c["occurrences"])),
                        ("id", c["id"].clone()),
                    ])
                })
                .collect();
            Table::new(&["label", "kind", "score", "synonyms", "occurrences", "id"], "label", rows)
        }
        Show::Relations => {
            let rows = list
                .iter()
                .map(|r| {
                    row(&[
                        ("source", r["source"].clone()),
                        ("rtype", r["rtype"].clone()),
                        ("target", r["target"].clone()),
                        ("confidence", r["confidence"].clone()),
                        ("evidence", count(&r["evidence"])),
                    ])
                })
                .collect();
            Table::new(&["source", "rtype", "target", "confidence", "evidence"], "source", rows)
        }
        Show::Documents => Table::new(DOCUMENT_COLUMNS, "id", Vec::new()),
    }
}

fn artifacts(ctx: &mut Ctx, project: &str, show: Show, view: &ViewArgs) -> Result<()> {
    let segment = match show {
        Show::Terms => "terms",
        Show::Concepts => "concepts",
        Show::Relations => "relations",
        Show::Documents => unreachable!("validated"),
    };
    let v = ctx.api()?.get(&format!("/projects/{project}/{segment}"), &[])?;
    if ctx.json() {
        return ctx.payload(&v);
    }
    table(ctx, artifact_table(show, &v), view)
}

fn search(ctx: &mut Ctx, corpus: &str, query: &str, mode: Mode, view: &ViewArgs) -> Result<()> {
    let mode = match mode {
        Mode::Any => "any",
        Mode::All => "all",
        Mode::Phrase => "phrase",
    };
    let v = ctx
        .api()?
        .get("/search", &[("corpus", corpus), ("q", query), ("mode", mode)])?;
    if ctx.json() {
        return ctx.payload(&v);
    }
    let rows = v
        .as_array()
        .map(|a| {
            a.iter()
                .map(|h| {
                    row(&[
                        ("doc_id", h["doc_id"].clone()),
                        ("title", h["title"].clone()),
                        ("score", h["score"].clone()),
                    ])
                })
                .collect()
        })
        .unwrap_or_default();
    table(ctx, Table::new(&["doc_id", "title", "score"], "doc_id", rows), view)
}

fn export(ctx: &mut Ctx, project: &str, output: Option<PathBuf>) -> Result<()> {
    let raw = ctx.api()?.get_raw(&format!("/projects/{project}/ontology"), &[])?;
    match output {
        Some(path) => {
            std::fs::write(&path, raw.body.as_bytes()).map_err(|e| CliError::io(path.display(), e))?;
            if !ctx.json() {
                let _ = writeln!(
                    ctx.io.stderr,
                    "wrote {} ({})",
                    path.display(),
                    raw.etag.as_deref().unwrap_or("no digest")
                );
            }
            Ok(())
        }
        None => ctx.out(&raw.body),
    }
}

/// Apply the view's filters, sort, grouping and limit, then print.
fn table(ctx: &mut Ctx, mut t: Table, view: &ViewArgs) -> Result<()> {
    let num = |r: &Row, k: &str| r.get(k).and_then(Value::as_f64);
    if let Some(min) = view.min_score {
        t.rows.retain(|r| num(r, "score").is_none_or(|s| s >= min));
    }
    if let Some(min) = view.min_confidence {
        t.rows.retain(|r| num(r, "confidence").is_none_or(|c| c >= min));
    }
    let sort = view.sort.as_ref().map(|key| Sort {
        key: key.clone(),
        order: if view.desc { Order::Desc } else { Order::Asc },
    });
    let mut p = present(t, sort.as_ref(), view.group.as_deref())?;
    if let Some(limit) = view.limit {
        // group headings keep the full count
        for g in &mut p.groups {
            g.rows.truncate(limit);
        }
    }
    let text = render(&p);
    ctx.out(&text)
}
