//! HTTP front end for the object store.
//!
//! The server owns one journaled store and exposes the canonical grammar
//! over four routes: commands and queries as JSON bodies, plus snapshot
//! download/upload as plain text. Response bodies are [`Envelope`]s, so a
//! domain rejection arrives with its error code intact rather than as a
//! bare status line. Writes serialize through one lock; the journal is
//! flushed before a command answers, so an acknowledged command survives
//! a crash.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use ddso_core::{parse_command, parse_query, snapshot_string, Envelope, Error, PersistentStore};

/// Shared server state: the journaled store behind a writer lock.
pub type SharedStore = Arc<RwLock<PersistentStore>>;

/// Builds the application router over an already-opened store.
pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/command", post(command))
        .route("/v1/query", post(query))
        .route("/v1/snapshot", get(download_snapshot).put(upload_snapshot))
        .with_state(store)
}

/// Opens the store and serves it on `addr` until the task is dropped.
/// Returns the bound address, which matters when `addr` asks for port 0.
pub async fn serve(
    store: PersistentStore,
    addr: SocketAddr,
) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<std::io::Result<()>>)> {
    let shared: SharedStore = Arc::new(RwLock::new(store));
    let app = router(shared);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    let handle = tokio::spawn(async move { axum::serve(listener, app).await });
    Ok((bound, handle))
}

fn status_for(err: &Error) -> StatusCode {
    if err.is_io() {
        StatusCode::INTERNAL_SERVER_ERROR
    } else if matches!(err, Error::UnknownCommand(_)) {
        StatusCode::BAD_REQUEST
    } else {
        // Domain rejections: the request was well-formed, the store said no.
        StatusCode::UNPROCESSABLE_ENTITY
    }
}

fn envelope_response(status: StatusCode, envelope: &Envelope) -> Response {
    let body = serde_json::to_string(envelope).expect("envelopes serialize");
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        body,
    )
        .into_response()
}

fn failure(err: &Error) -> Response {
    envelope_response(status_for(err), &Envelope::from_error(err))
}

async fn health() -> Response {
    envelope_response(StatusCode::OK, &Envelope::from_records(Vec::new()))
}

async fn command(State(store): State<SharedStore>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(e) => return failure(&Error::UnknownCommand(format!("body is not UTF-8: {e}"))),
    };
    let cmd = match parse_command(text) {
        Ok(c) => c,
        Err(e) => return failure(&e),
    };
    let mut guard = store.write().expect("store lock poisoned");
    match guard.execute(&cmd) {
        Ok(out) => envelope_response(StatusCode::OK, &Envelope::from_output(out)),
        Err(e) => failure(&e),
    }
}

async fn query(State(store): State<SharedStore>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(e) => return failure(&Error::UnknownCommand(format!("body is not UTF-8: {e}"))),
    };
    let q = match parse_query(text) {
        Ok(q) => q,
        Err(e) => return failure(&e),
    };
    let guard = store.read().expect("store lock poisoned");
    match guard.store().run_query(&q) {
        Ok(records) => envelope_response(StatusCode::OK, &Envelope::from_records(records)),
        Err(e) => failure(&e),
    }
}

async fn download_snapshot(State(store): State<SharedStore>) -> Response {
    let guard = store.read().expect("store lock poisoned");
    let text = snapshot_string(guard.store());
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        text,
    )
        .into_response()
}

async fn upload_snapshot(State(store): State<SharedStore>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(e) => {
            return failure(&Error::CorruptSnapshot {
                line: 0,
                reason: format!("body is not UTF-8: {e}"),
            })
        }
    };
    let mut guard = store.write().expect("store lock poisoned");
    match guard.import_text(text, "upload") {
        Ok(record) => envelope_response(
            StatusCode::OK,
            &Envelope::from_records(vec![record]),
        ),
        Err(e) => failure(&e),
    }
}
