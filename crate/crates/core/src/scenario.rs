//! Scenario files: scripted command batches with inline expectations.
//!
//! A scenario is a text file of JSON lines. Blank lines and lines starting
//! with `#` are ignored. Every other line is one of:
//!
//! * a command object (`{"c":…}`) — applied, aborting the run on failure;
//! * an expectation (`{"expect":…}`) — checked against the store;
//! * an expected failure (`{"fail":{"error":…,"command":{…}}}`) — the
//!   command must be rejected with exactly that error code, leaving the
//!   store untouched.
//!
//! The runner works through any `Engine`, so scenarios behave identically
//! against an embedded store and a remote server, and its output is a
//! deterministic function of the file and the starting store.

use serde::{Deserialize, Serialize};

use crate::command::{Command, Engine, Query, Record};
use crate::error::{Error, Result};
use crate::evolution::VersionSelector;
use crate::graph::{OpFlag, RelationshipKind};
use crate::id::NodeId;
use crate::value::AttrValue;

/// A checkable statement about the store, evaluated through queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "expect", rename_all = "kebab-case")]
pub enum Expectation {
    NodeCount { value: u64 },
    RelCount { value: u64 },
    ChainLength { name: String, value: u64 },
    Instances {
        name: String,
        version: VersionSelector,
        count: u64,
    },
    NodeVersion { node: NodeId, value: u64 },
    Closure {
        start: NodeId,
        kind: RelationshipKind,
        flag: OpFlag,
        nodes: Vec<NodeId>,
    },
    InboxCount { node: NodeId, value: u64 },
    Attr {
        node: NodeId,
        name: String,
        value: AttrValue,
    },
}

impl Expectation {
    /// Checks the expectation, answering a human-readable confirmation.
    pub fn check(&self, engine: &dyn Engine) -> Result<String> {
        let fail = |detail: String| Err(Error::ExpectationFailed(detail));
        match self {
            Expectation::NodeCount { value } => {
                let found = match engine.query(&Query::Stats)?.first() {
                    Some(Record::Stats { nodes, .. }) => *nodes,
                    _ => return fail("stats query answered nothing".to_string()),
                };
                if found == *value {
                    Ok(format!("node count is {value}"))
                } else {
                    fail(format!("node count is {found}, expected {value}"))
                }
            }
            Expectation::RelCount { value } => {
                let found = match engine.query(&Query::Stats)?.first() {
                    Some(Record::Stats { rels, .. }) => *rels,
                    _ => return fail("stats query answered nothing".to_string()),
                };
                if found == *value {
                    Ok(format!("relationship count is {value}"))
                } else {
                    fail(format!("relationship count is {found}, expected {value}"))
                }
            }
            Expectation::ChainLength { name, value } => {
                let found = match engine
                    .query(&Query::History { name: name.clone() })?
                    .first()
                {
                    Some(Record::History { entries, .. }) => entries.len() as u64,
                    _ => return fail(format!("history query for {name:?} answered nothing")),
                };
                if found == *value {
                    Ok(format!("chain {name:?} has {value} versions"))
                } else {
                    fail(format!(
                        "chain {name:?} has {found} versions, expected {value}"
                    ))
                }
            }
            Expectation::Instances {
                name,
                version,
                count,
            } => {
                let found = match engine
                    .query(&Query::InstancesOf {
                        name: name.clone(),
                        version: *version,
                    })?
                    .first()
                {
                    Some(Record::Instances { nodes, .. }) => nodes.len() as u64,
                    _ => return fail(format!("instance query for {name:?} answered nothing")),
                };
                if found == *count {
                    Ok(format!("{name:?} version {version} has {count} instances"))
                } else {
                    fail(format!(
                        "{name:?} version {version} has {found} instances, expected {count}"
                    ))
                }
            }
            Expectation::NodeVersion { node, value } => {
                let found = match engine.query(&Query::Node { id: node.clone() })?.first() {
                    Some(Record::Node(n)) => n.version,
                    _ => return fail(format!("node query for {node} answered nothing")),
                };
                if found == *value {
                    Ok(format!("{node} is at version {value}"))
                } else {
                    fail(format!("{node} is at version {found}, expected {value}"))
                }
            }
            Expectation::Closure {
                start,
                kind,
                flag,
                nodes,
            } => {
                let found = match engine
                    .query(&Query::Closure {
                        start: start.clone(),
                        kind: *kind,
                        flag: *flag,
                    })?
                    .first()
                {
                    Some(Record::Closure { nodes, .. }) => nodes.clone(),
                    _ => return fail(format!("closure query from {start} answered nothing")),
                };
                if found == *nodes {
                    Ok(format!(
                        "{flag} closure over {kind} from {start} has {} nodes in order",
                        nodes.len()
                    ))
                } else {
                    fail(format!(
                        "closure from {start} is {found:?}, expected {nodes:?}"
                    ))
                }
            }
            Expectation::InboxCount { node, value } => {
                let found = match engine.query(&Query::Inbox { node: node.clone() })?.first() {
                    Some(Record::Inbox { events, .. }) => events.len() as u64,
                    _ => return fail(format!("inbox query for {node} answered nothing")),
                };
                if found == *value {
                    Ok(format!("{node} holds {value} change notices"))
                } else {
                    fail(format!(
                        "{node} holds {found} change notices, expected {value}"
                    ))
                }
            }
            Expectation::Attr { node, name, value } => {
                let found = match engine.query(&Query::Node { id: node.clone() })?.first() {
                    Some(Record::Node(n)) => n
                        .payload
                        .values()
                        .and_then(|m| m.get(name))
                        .cloned(),
                    _ => return fail(format!("node query for {node} answered nothing")),
                };
                match found {
                    Some(v) if v == *value => Ok(format!("{node} attribute {name:?} matches")),
                    Some(v) => fail(format!(
                        "{node} attribute {name:?} is {}, expected {}",
                        serde_json::to_string(&v).expect("values serialize"),
                        serde_json::to_string(value).expect("values serialize"),
                    )),
                    None => fail(format!("{node} has no attribute {name:?}")),
                }
            }
        }
    }
}

/// An expected rejection: the command plus the error code it must fail
/// with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailSpec {
    pub error: String,
    pub command: Command,
}

/// One meaningful line of a scenario file.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioLine {
    Command(Command),
    Expect(Expectation),
    Fail(FailSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLine {
    Fail { fail: FailSpec },
    Expect(Expectation),
    Command(Command),
}

/// Parses scenario text into `(line_number, line)` pairs.
pub fn parse_scenario(text: &str) -> Result<Vec<(u64, ScenarioLine)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = (idx + 1) as u64;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed: RawLine = serde_json::from_str(trimmed).map_err(|e| {
            Error::UnknownCommand(format!("scenario line {lineno}: {e}"))
        })?;
        let line = match parsed {
            RawLine::Fail { fail } => ScenarioLine::Fail(fail),
            RawLine::Expect(e) => ScenarioLine::Expect(e),
            RawLine::Command(c) => ScenarioLine::Command(c),
        };
        out.push((lineno, line));
    }
    Ok(out)
}

/// The outcome of a scenario run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    /// One record per expectation and expected failure, plus the closing
    /// summary record.
    pub records: Vec<Record>,
    pub commands: u64,
    pub expects: u64,
    pub expected_failures: u64,
}

/// Runs a scenario against an engine, aborting on the first command
/// failure or unmet expectation.
pub fn run_scenario(
    engine: &mut dyn Engine,
    file_label: &str,
    text: &str,
) -> Result<ScenarioReport> {
    let lines = parse_scenario(text)?;
    let mut records = Vec::new();
    let mut commands = 0u64;
    let mut expects = 0u64;
    let mut expected_failures = 0u64;
    for (lineno, line) in lines {
        match line {
            ScenarioLine::Command(cmd) => {
                engine.execute(&cmd).map_err(|e| match e {
                    Error::Remote { code, message } => Error::Remote {
                        code,
                        message: format!("line {lineno}: {message}"),
                    },
                    other => other,
                })?;
                commands += 1;
            }
            ScenarioLine::Fail(spec) => {
                match engine.execute(&spec.command) {
                    Ok(_) => {
                        return Err(Error::ExpectationFailed(format!(
                            "line {lineno}: command succeeded, expected rejection with {}",
                            spec.error
                        )));
                    }
                    Err(e) if e.code() == spec.error => {
                        expected_failures += 1;
                        records.push(Record::Expect {
                            line: lineno,
                            ok: true,
                            detail: format!("rejected with {}", spec.error),
                        });
                    }
                    Err(e) => {
                        return Err(Error::ExpectationFailed(format!(
                            "line {lineno}: expected rejection with {}, got {}: {e}",
                            spec.error,
                            e.code()
                        )));
                    }
                }
            }
            ScenarioLine::Expect(expectation) => {
                let detail = expectation.check(engine).map_err(|e| match e {
                    Error::ExpectationFailed(m) => {
                        Error::ExpectationFailed(format!("line {lineno}: {m}"))
                    }
                    other => other,
                })?;
                expects += 1;
                records.push(Record::Expect {
                    line: lineno,
                    ok: true,
                    detail,
                });
            }
        }
    }
    records.push(Record::Scenario {
        file: file_label.to_string(),
        commands,
        expects,
        expected_failures,
        ok: true,
    });
    Ok(ScenarioReport {
        records,
        commands,
        expects,
        expected_failures,
    })
}
