use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use icon_server::config::ServerConfig;
use icon_server::http::{router, AppState};
use icon_server::startup::{self, StartupError};
use tracing_subscriber::EnvFilter;

/// Ontology workbench application server.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML configuration file.
    #[arg(long, short, env = "ICON_CONFIG")]
    config: Option<PathBuf>,
    /// Run the integrity check, print the report and exit.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("ICON_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let StartupError::Integrity(report) = &e {
                for v in &report.violations {
                    eprintln!("{:?} {}: {}", v.kind, v.subject, v.detail);
                }
            }
            eprintln!("icon-server: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: Args) -> Result<(), StartupError> {
    let config = ServerConfig::load(args.config.as_deref())?;
    if args.check {
        let report = startup::integrity_check(&config)?;
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    let app = startup::build(&config)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| io_error("runtime", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&config.listen)
            .await
            .map_err(|e| io_error(&config.listen, e))?;
        tracing::info!(addr = %config.listen, "listening");
        axum::serve(listener, router(AppState::from(&app)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| io_error("server", e))
    })
}

fn io_error(what: &str, e: std::io::Error) -> StartupError {
    StartupError::Resource {
        path: what.to_string(),
        reason: e.to_string(),
    }
}
