//! Server binary: open the journaled store and serve it over HTTP.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ddso_core::PersistentStore;

/// HTTP server for a description-driven object store.
#[derive(Parser)]
#[command(name = "ddso-server", version)]
struct Args {
    /// Snapshot file backing the store (also read from DDSO_STORE).
    #[arg(long, env = "DDSO_STORE", default_value = "./ddso.store")]
    store: PathBuf,
    /// Journal file; defaults to the store path with ".journal" appended.
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Address to listen on (also read from DDSO_LISTEN).
    #[arg(long, env = "DDSO_LISTEN", default_value = "127.0.0.1:7878")]
    listen: SocketAddr,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let journal = args
        .journal
        .clone()
        .unwrap_or_else(|| journal_path_for(&args.store));
    let store = match PersistentStore::open(&args.store, &journal) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}", ddso_core::Record::error(&e).to_line());
            return ExitCode::from(4);
        }
    };
    let (bound, handle) = match ddso_server::serve(store, args.listen).await {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("failed to bind {}: {e}", args.listen);
            return ExitCode::from(4);
        }
    };
    eprintln!("listening on http://{bound}");
    match handle.await {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("server error: {e}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("server task failed: {e}");
            ExitCode::from(4)
        }
    }
}

fn journal_path_for(store: &std::path::Path) -> PathBuf {
    let mut s = store.as_os_str().to_os_string();
    s.push(".journal");
    PathBuf::from(s)
}
