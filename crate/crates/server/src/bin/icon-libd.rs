use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use icon_core::library::{serve, Library, LogBackend, Store};
use tracing_subscriber::EnvFilter;

/// Data-tier server: serves the document library over TCP.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "ICON_LIBD_LISTEN", default_value = "127.0.0.1:7070")]
    listen: String,
    /// Log directory; records are kept in memory when absent.
    #[arg(long, env = "ICON_LIBD_PATH")]
    path: Option<PathBuf>,
    /// Skip fsync after each write.
    #[arg(long)]
    no_fsync: bool,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("ICON_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let store: Arc<dyn Store> = match &args.path {
        Some(p) => match LogBackend::open(p) {
            Ok(b) => Arc::new(Library::new(b.with_fsync(!args.no_fsync))),
            Err(e) => {
                eprintln!("icon-libd: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => Arc::new(Library::in_memory()),
    };
    match serve(args.listen.as_str(), store) {
        Ok(handle) => {
            tracing::info!(addr = %handle.local_addr(), "serving library");
            handle.wait();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("icon-libd: {e}");
            ExitCode::from(2)
        }
    }
}
