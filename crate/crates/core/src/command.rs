//! The canonical command/query/record protocol.
//!
//! One JSON-line grammar serves every surface: journal entries, snapshot
//! lines, scenario files, CLI output, and the HTTP body format are all the
//! same serde-derived encodings. Commands (tag `"c"`) mutate and are
//! journaled; queries (tag `"q"`) read and are not; records (tag `"t"`) are
//! what operations answer with.
//!
//! `Engine` abstracts over anything that can run commands and queries — the
//! in-process store, the journaled store, or a remote server — so the CLI
//! and the scenario runner behave identically against any of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionDelta, HistoryEntry, VersionSelector};
use crate::graph::{
    Direction, Layer, Level, Node, OpFlag, Payload, PropagationPolicy, Relationship,
    RelationshipKind, Store,
};
use crate::id::{NodeId, RelId};
use crate::layers::builtin_constructs;
use crate::relations::{ChangeEvent, Delivery};
use crate::schema::AttributeSpec;
use crate::value::{AttrValue, AttributeValueMap};

/// A mutating operation, as it appears on the wire and in the journal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "c", rename_all = "kebab-case")]
pub enum Command {
    CreateNode {
        layer: Layer,
        level: Level,
        payload: Payload,
    },
    CreateRel {
        kind: RelationshipKind,
        parent: NodeId,
        children: Vec<NodeId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        policy: Option<PropagationPolicy>,
    },
    DeleteNode {
        id: NodeId,
    },
    SetAttr {
        node: NodeId,
        name: String,
        value: AttrValue,
    },
    SetRelAttr {
        rel: RelId,
        name: String,
        value: AttrValue,
    },
    SetPolicy {
        rel: RelId,
        policy: PropagationPolicy,
    },
    CopyNode {
        node: NodeId,
    },
    MoveNode {
        node: NodeId,
        new_parent: NodeId,
    },
    VersionNode {
        node: NodeId,
    },
    Mediate {
        node: NodeId,
        message: AttributeValueMap,
    },
    EvolveType {
        name: String,
        delta: EvolutionDelta,
    },
    MigrateInstance {
        instance: NodeId,
        to_version: u64,
        #[serde(default)]
        fill: AttributeValueMap,
    },
}

/// A read-only operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "q", rename_all = "kebab-case")]
pub enum Query {
    Node { id: NodeId },
    Rel { id: RelId },
    Neighbors {
        node: NodeId,
        kind: RelationshipKind,
        direction: Direction,
    },
    Closure {
        start: NodeId,
        kind: RelationshipKind,
        flag: OpFlag,
    },
    InstancesOf {
        name: String,
        version: VersionSelector,
    },
    Schema { node: NodeId },
    History { name: String },
    Inbox { node: NodeId },
    Audit,
    Constructs,
    Stats,
}

/// A node id together with its version counter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionedNode {
    pub id: NodeId,
    pub version: u64,
}

/// Everything an operation can answer with, one JSON object per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "kebab-case")]
pub enum Record {
    /// Snapshot header: counters plus the line counts of each section.
    Meta {
        format: u32,
        last_sequence: u64,
        node_counter: u64,
        rel_counter: u64,
        event_counter: u64,
        nodes: u64,
        rels: u64,
        chains: u64,
        inboxes: u64,
    },
    Node(Node),
    Rel(Relationship),
    Chain(crate::evolution::Chain),
    Inbox {
        node: NodeId,
        events: Vec<ChangeEvent>,
    },
    Deleted {
        nodes: Vec<NodeId>,
        rels: Vec<RelId>,
    },
    Copied {
        root: NodeId,
        map: BTreeMap<NodeId, NodeId>,
        rels: Vec<RelId>,
    },
    Moved {
        node: NodeId,
        detached: Vec<RelId>,
        removed: Vec<RelId>,
        attached: RelId,
    },
    Versioned {
        nodes: Vec<VersionedNode>,
    },
    Delivery(Delivery),
    Evolved {
        name: String,
        version: u64,
        node: NodeId,
        rel: RelId,
    },
    Migrated {
        instance: NodeId,
        from_version: u64,
        to_version: u64,
        node_version: u64,
    },
    Closure {
        start: NodeId,
        kind: RelationshipKind,
        flag: OpFlag,
        nodes: Vec<NodeId>,
    },
    Neighbors {
        node: NodeId,
        kind: RelationshipKind,
        direction: Direction,
        nodes: Vec<NodeId>,
    },
    Instances {
        name: String,
        version: VersionSelector,
        nodes: Vec<NodeId>,
    },
    Schema {
        node: NodeId,
        specs: Vec<AttributeSpec>,
    },
    History {
        name: String,
        entries: Vec<HistoryEntry>,
    },
    Audit {
        ok: bool,
        violations: Vec<String>,
    },
    Constructs {
        names: Vec<String>,
    },
    Stats {
        nodes: u64,
        rels: u64,
        chains: u64,
        events: u64,
        last_sequence: u64,
    },
    Dumped {
        path: String,
        bytes: u64,
    },
    Loaded {
        path: String,
        nodes: u64,
        rels: u64,
        chains: u64,
        last_sequence: u64,
    },
    Expect {
        line: u64,
        ok: bool,
        detail: String,
    },
    Scenario {
        file: String,
        commands: u64,
        expects: u64,
        expected_failures: u64,
        ok: bool,
    },
    Error {
        code: String,
        message: String,
    },
}

impl Record {
    /// The canonical one-line serialization.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn error(e: &Error) -> Record {
        // A relayed server error already carries its code; unwrap it so
        // the printed record is identical to what a local store emits.
        match e {
            Error::Remote { code, message } => Record::Error {
                code: code.clone(),
                message: message.clone(),
            },
            _ => Record::Error {
                code: e.code().to_string(),
                message: e.to_string(),
            },
        }
    }
}

/// What a command answered: its output records plus the ids it minted, in
/// creation order. The ids are journaled so replay can verify it minted
/// the very same ones.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutput {
    pub records: Vec<Record>,
    pub result_ids: Vec<String>,
}

/// Anything that can run the protocol: the in-process store, the journaled
/// store, or a client talking to a remote server.
pub trait Engine {
    fn execute(&mut self, cmd: &Command) -> Result<CommandOutput>;
    fn query(&self, q: &Query) -> Result<Vec<Record>>;
}

/// The error half of an HTTP envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
}

/// The HTTP response body: the same records as everywhere else, wrapped
/// with an ok flag so transport success and domain failure stay distinct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub result_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<Record>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Envelope {
    pub fn from_output(out: CommandOutput) -> Self {
        Envelope {
            ok: true,
            result_ids: out.result_ids,
            records: out.records,
            error: None,
        }
    }

    pub fn from_records(records: Vec<Record>) -> Self {
        Envelope {
            ok: true,
            result_ids: Vec::new(),
            records,
            error: None,
        }
    }

    pub fn from_error(err: &Error) -> Self {
        Envelope {
            ok: false,
            result_ids: Vec::new(),
            records: Vec::new(),
            error: Some(WireError {
                code: err.code().to_string(),
                message: err.to_string(),
            }),
        }
    }

    /// Unwraps a response the way a client sees it: a failed envelope
    /// becomes the remote error it carries.
    pub fn into_output(self) -> Result<CommandOutput> {
        if self.ok {
            Ok(CommandOutput {
                records: self.records,
                result_ids: self.result_ids,
            })
        } else {
            let e = self.error.unwrap_or(WireError {
                code: "IoFailure".to_string(),
                message: "failed response carried no error".to_string(),
            });
            Err(Error::Remote {
                code: e.code,
                message: e.message,
            })
        }
    }
}

/// Parses one command line of the canonical JSON grammar.
pub fn parse_command(line: &str) -> Result<Command> {
    serde_json::from_str(line.trim()).map_err(|e| Error::UnknownCommand(e.to_string()))
}

/// Parses one query line of the canonical JSON grammar.
pub fn parse_query(line: &str) -> Result<Query> {
    serde_json::from_str(line.trim()).map_err(|e| Error::UnknownCommand(e.to_string()))
}

impl Store {
    /// Applies one command, answering with its records and minted ids.
    pub fn execute(&mut self, cmd: &Command) -> Result<CommandOutput> {
        match cmd {
            Command::CreateNode {
                layer,
                level,
                payload,
            } => {
                let id = self.create_node(*layer, *level, payload.clone())?;
                Ok(CommandOutput {
                    records: vec![Record::Node(self.node(&id)?.clone())],
                    result_ids: vec![id.as_str().to_string()],
                })
            }
            Command::CreateRel {
                kind,
                parent,
                children,
                policy,
            } => {
                let id =
                    self.create_relationship(*kind, parent.clone(), children.clone(), *policy)?;
                Ok(CommandOutput {
                    records: vec![Record::Rel(self.relationship(&id)?.clone())],
                    result_ids: vec![id.as_str().to_string()],
                })
            }
            Command::DeleteNode { id } => {
                let report = self.delete_node(id)?;
                let mut records = vec![Record::Deleted {
                    nodes: report.nodes,
                    rels: report.rels,
                }];
                records.extend(report.deliveries.into_iter().map(Record::Delivery));
                Ok(CommandOutput {
                    records,
                    result_ids: vec![],
                })
            }
            Command::SetAttr { node, name, value } => {
                let deliveries = self.set_attribute(node, name, value.clone())?;
                let mut records = vec![Record::Node(self.node(node)?.clone())];
                records.extend(deliveries.into_iter().map(Record::Delivery));
                Ok(CommandOutput {
                    records,
                    result_ids: vec![],
                })
            }
            Command::SetRelAttr { rel, name, value } => {
                self.set_relationship_attribute(rel, name, value.clone())?;
                Ok(CommandOutput {
                    records: vec![Record::Rel(self.relationship(rel)?.clone())],
                    result_ids: vec![],
                })
            }
            Command::SetPolicy { rel, policy } => {
                self.set_policy(rel, *policy)?;
                Ok(CommandOutput {
                    records: vec![Record::Rel(self.relationship(rel)?.clone())],
                    result_ids: vec![],
                })
            }
            Command::CopyNode { node } => {
                let report = self.propagate_copy(node)?;
                let mut ids: Vec<String> = report
                    .map
                    .values()
                    .map(|id| id.as_str().to_string())
                    .collect();
                ids.sort();
                ids.extend(report.rels.iter().map(|r| r.as_str().to_string()));
                Ok(CommandOutput {
                    records: vec![Record::Copied {
                        root: report.root,
                        map: report.map,
                        rels: report.rels,
                    }],
                    result_ids: ids,
                })
            }
            Command::MoveNode { node, new_parent } => {
                let report = self.propagate_move(node, new_parent)?;
                let result_ids = if report.attached_created {
                    vec![report.attached.as_str().to_string()]
                } else {
                    vec![]
                };
                Ok(CommandOutput {
                    records: vec![Record::Moved {
                        node: report.node,
                        detached: report.detached,
                        removed: report.removed,
                        attached: report.attached,
                    }],
                    result_ids,
                })
            }
            Command::VersionNode { node } => {
                let report = self.propagate_version(node)?;
                let mut records = vec![Record::Versioned {
                    nodes: report
                        .bumped
                        .into_iter()
                        .map(|(id, version)| VersionedNode { id, version })
                        .collect(),
                }];
                records.extend(report.deliveries.into_iter().map(Record::Delivery));
                Ok(CommandOutput {
                    records,
                    result_ids: vec![],
                })
            }
            Command::Mediate { node, message } => {
                let deliveries = self.mediate(node, message.clone())?;
                Ok(CommandOutput {
                    records: deliveries.into_iter().map(Record::Delivery).collect(),
                    result_ids: vec![],
                })
            }
            Command::EvolveType { name, delta } => {
                let report = self.evolve_type(name, delta.clone())?;
                let mut records = vec![Record::Evolved {
                    name: name.clone(),
                    version: report.version,
                    node: report.node.clone(),
                    rel: report.rel.clone(),
                }];
                records.extend(report.deliveries.into_iter().map(Record::Delivery));
                Ok(CommandOutput {
                    records,
                    result_ids: vec![
                        report.node.as_str().to_string(),
                        report.rel.as_str().to_string(),
                    ],
                })
            }
            Command::MigrateInstance {
                instance,
                to_version,
                fill,
            } => {
                let report = self.migrate_instance(instance, *to_version, fill.clone())?;
                let result_ids = report
                    .rel_created
                    .iter()
                    .map(|r| r.as_str().to_string())
                    .collect();
                let mut records = vec![Record::Migrated {
                    instance: report.instance,
                    from_version: report.from_version,
                    to_version: report.to_version,
                    node_version: report.node_version,
                }];
                records.extend(report.deliveries.into_iter().map(Record::Delivery));
                Ok(CommandOutput {
                    records,
                    result_ids,
                })
            }
        }
    }

    /// Answers one query.
    pub fn run_query(&self, q: &Query) -> Result<Vec<Record>> {
        match q {
            Query::Node { id } => Ok(vec![Record::Node(self.node(id)?.clone())]),
            Query::Rel { id } => Ok(vec![Record::Rel(self.relationship(id)?.clone())]),
            Query::Neighbors {
                node,
                kind,
                direction,
            } => {
                let nodes = self.neighbors(node, *kind, *direction)?;
                Ok(vec![Record::Neighbors {
                    node: node.clone(),
                    kind: *kind,
                    direction: *direction,
                    nodes,
                }])
            }
            Query::Closure { start, kind, flag } => {
                let set = self.closure(start, *kind, *flag)?;
                Ok(vec![Record::Closure {
                    start: start.clone(),
                    kind: *kind,
                    flag: *flag,
                    nodes: set.into_nodes(),
                }])
            }
            Query::InstancesOf { name, version } => {
                let nodes = self.instances_of(name, *version)?;
                Ok(vec![Record::Instances {
                    name: name.clone(),
                    version: *version,
                    nodes,
                }])
            }
            Query::Schema { node } => {
                let specs = self.effective_schema(node)?;
                Ok(vec![Record::Schema {
                    node: node.clone(),
                    specs,
                }])
            }
            Query::History { name } => {
                let entries = self.version_history(name)?;
                Ok(vec![Record::History {
                    name: name.clone(),
                    entries,
                }])
            }
            Query::Inbox { node } => {
                let events = self.inbox(node)?.to_vec();
                Ok(vec![Record::Inbox {
                    node: node.clone(),
                    events,
                }])
            }
            Query::Audit => {
                let violations = self.audit();
                Ok(vec![Record::Audit {
                    ok: violations.is_empty(),
                    violations,
                }])
            }
            Query::Constructs => Ok(vec![Record::Constructs {
                names: builtin_constructs(),
            }]),
            Query::Stats => Ok(vec![Record::Stats {
                nodes: self.node_count() as u64,
                rels: self.rel_count() as u64,
                chains: self.chain_count() as u64,
                events: self.event_counter,
                last_sequence: self.last_sequence(),
            }]),
        }
    }
}

impl Engine for Store {
    fn execute(&mut self, cmd: &Command) -> Result<CommandOutput> {
        Store::execute(self, cmd)
    }

    fn query(&self, q: &Query) -> Result<Vec<Record>> {
        self.run_query(q)
    }
}
