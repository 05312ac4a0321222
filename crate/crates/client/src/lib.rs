//! Blocking HTTP client for the object store server.
//!
//! [`RemoteStore`] implements the same [`Engine`] trait as the in-process
//! store, so the CLI and the scenario runner work identically against a
//! local file or a running server. Transport failures surface as
//! `IoFailure`; domain rejections come back under their original error
//! codes via [`Error::Remote`].

use std::time::Duration;

use ddso_core::{Command, CommandOutput, Engine, Envelope, Error, Query, Record, Result};

/// A store reached over HTTP.
pub struct RemoteStore {
    base: String,
    http: reqwest::blocking::Client,
}

impl RemoteStore {
    /// Points the client at a server base URL such as
    /// `http://127.0.0.1:7878`; a trailing slash is tolerated.
    pub fn new(base: impl Into<String>) -> RemoteStore {
        let mut base = base.into();
        while base.ends_with('/') {
            base.pop();
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .expect("default client configuration is valid");
        RemoteStore { base, http }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn transport_err(&self, context: &str, e: reqwest::Error) -> Error {
        Error::IoFailure(format!("{context} {}: {e}", self.base))
    }

    fn read_envelope(&self, context: &str, response: reqwest::blocking::Response) -> Result<Envelope> {
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| self.transport_err(context, e))?;
        serde_json::from_str(&body).map_err(|e| {
            Error::IoFailure(format!(
                "{context} {}: unparseable response (status {status}): {e}",
                self.base
            ))
        })
    }

    /// Confirms the server is up and speaking the envelope grammar.
    pub fn health(&self) -> Result<()> {
        let response = self
            .http
            .get(format!("{}/health", self.base))
            .send()
            .map_err(|e| self.transport_err("reaching", e))?;
        self.read_envelope("health-checking", response)?
            .into_output()
            .map(|_| ())
    }

    /// Downloads the canonical snapshot text of the server's store.
    pub fn fetch_snapshot(&self) -> Result<String> {
        let response = self
            .http
            .get(format!("{}/v1/snapshot", self.base))
            .send()
            .map_err(|e| self.transport_err("reaching", e))?;
        if !response.status().is_success() {
            let status = response.status();
            if let Ok(envelope) = self.read_envelope("downloading from", response) {
                envelope.into_output()?;
            }
            return Err(Error::IoFailure(format!(
                "downloading from {}: status {status}",
                self.base
            )));
        }
        response
            .text()
            .map_err(|e| self.transport_err("downloading from", e))
    }

    /// Uploads snapshot text; the server adopts it as its new baseline.
    pub fn push_snapshot(&self, text: &str) -> Result<Vec<Record>> {
        let response = self
            .http
            .put(format!("{}/v1/snapshot", self.base))
            .body(text.to_string())
            .send()
            .map_err(|e| self.transport_err("uploading to", e))?;
        self.read_envelope("uploading to", response)?
            .into_output()
            .map(|out| out.records)
    }
}

impl Engine for RemoteStore {
    fn execute(&mut self, cmd: &Command) -> Result<CommandOutput> {
        let body = serde_json::to_string(cmd).expect("commands serialize");
        let response = self
            .http
            .post(format!("{}/v1/command", self.base))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .map_err(|e| self.transport_err("reaching", e))?;
        self.read_envelope("executing against", response)?.into_output()
    }

    fn query(&self, q: &Query) -> Result<Vec<Record>> {
        let body = serde_json::to_string(q).expect("queries serialize");
        let response = self
            .http
            .post(format!("{}/v1/query", self.base))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .map_err(|e| self.transport_err("reaching", e))?;
        self.read_envelope("querying", response)?
            .into_output()
            .map(|out| out.records)
    }
}
