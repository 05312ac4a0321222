//! Batch command-line front end for the object store.
//!
//! Every action prints the same canonical JSON-line records the store
//! format uses — one grammar everywhere — and identical invocation
//! sequences produce byte-identical stdout. The tool either owns a local
//! journaled store (default) or speaks to a running server (`--server`),
//! with no behavioral difference beyond the transport.
//!
//! Exit codes: 0 success, 2 usage, 3 domain rejection, 4 I/O or corrupt
//! data.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddso_client::RemoteStore;
use ddso_core::{
    run_scenario, AttrValue, AttributeSpec, AttributeValueMap, Command, Direction, Engine, Error,
    EvolutionDelta, Layer, Level, NodeId, OpFlag, Payload, PersistentStore, PropagationPolicy,
    Query, Record, RelId, RelationshipKind, RenamePair, Result, TypeDescription, VersionSelector,
};

/// Description-driven object store: define types, link and evolve
/// objects, and query the graph.
#[derive(Parser)]
#[command(name = "ddso", version, max_term_width = 100)]
struct Cli {
    /// Snapshot file backing the local store.
    #[arg(long, global = true, env = "DDSO_STORE", default_value = "./ddso.store")]
    store: PathBuf,

    /// Journal file; defaults to the store path with ".journal" appended.
    #[arg(long, global = true)]
    journal: Option<PathBuf>,

    /// Base URL of a running server; when set, every action goes over
    /// HTTP instead of touching local files.
    #[arg(long, global = true, env = "DDSO_SERVER")]
    server: Option<String>,

    /// Print nothing on success; errors still go to stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Define, evolve, and inspect versioned types.
    #[command(subcommand)]
    Type(TypeAction),
    /// Create and manipulate nodes.
    #[command(subcommand)]
    Node(NodeAction),
    /// Create a relationship of the given kind.
    Link(LinkArgs),
    /// Inspect and adjust relationships.
    #[command(subcommand)]
    Rel(RelAction),
    /// Read-only views of the graph.
    #[command(subcommand)]
    Query(QueryAction),
    /// Run a scenario file of commands and expectations.
    #[command(subcommand)]
    Scenario(ScenarioAction),
    /// Snapshot maintenance.
    #[command(subcommand)]
    Store(StoreAction),
}

#[derive(Subcommand)]
enum TypeAction {
    /// Create version 1 of a named type on the model layer.
    Define {
        name: String,
        /// Declared attribute, as name:kind (text, integer, decimal, flag, ref).
        #[arg(long = "attr", value_name = "NAME:KIND", value_parser = parse_spec)]
        attrs: Vec<AttributeSpec>,
        /// Declared operation name.
        #[arg(long = "op", value_name = "NAME")]
        ops: Vec<String>,
        /// Place the description at the meta level instead of base.
        #[arg(long)]
        meta: bool,
    },
    /// Append a version to the type's chain by applying a delta.
    Evolve {
        name: String,
        /// Attribute to add, as name:kind.
        #[arg(long = "add", value_name = "NAME:KIND", value_parser = parse_spec)]
        add: Vec<AttributeSpec>,
        /// Attribute to remove.
        #[arg(long = "remove", value_name = "NAME")]
        remove: Vec<String>,
        /// Attribute to rename, as from:to.
        #[arg(long = "rename", value_name = "FROM:TO", value_parser = parse_rename)]
        rename: Vec<RenamePair>,
    },
    /// Print the full version history of a chain.
    History { name: String },
}

#[derive(Subcommand)]
enum NodeAction {
    /// Create a node on the instance layer.
    Create {
        /// Create at the meta level: the node carries a description.
        #[arg(long, requires = "name")]
        meta: bool,
        /// Description name (meta level only).
        #[arg(long, requires = "meta")]
        name: Option<String>,
        /// Declared attribute of the description, as name:kind.
        #[arg(long = "attr", value_name = "NAME:KIND", value_parser = parse_spec, requires = "meta")]
        attrs: Vec<AttributeSpec>,
        /// Initial value, as name=literal (base level only).
        #[arg(long = "value", value_name = "NAME=LITERAL", value_parser = parse_pair, conflicts_with = "meta")]
        values: Vec<ValuePair>,
    },
    /// Delete a node and whatever its delete-enabled aggregation edges reach.
    Delete { id: String },
    /// Replicate a node's copy closure under fresh ids.
    Copy { id: String },
    /// Reparent a node (and its subtree) under a new aggregate.
    Move { id: String, new_parent: String },
    /// Bump a node's version and propagate along version-enabled edges.
    Version { id: String },
    /// Set one attribute; the literal is typed by prefix (integer:5,
    /// decimal:1.5, flag:true, ref:N000001, text:... or bare text).
    Set {
        id: String,
        name: String,
        #[arg(value_parser = parse_literal)]
        value: AttrValue,
    },
    /// Move an instance to another version of its type.
    Migrate {
        id: String,
        to_version: u64,
        /// Value for an attribute the target version requires, as name=literal.
        #[arg(long = "fill", value_name = "NAME=LITERAL", value_parser = parse_pair)]
        fill: Vec<ValuePair>,
    },
    /// Publish a message to the node's dependency subscribers.
    Mediate {
        id: String,
        /// Message entry, as name=literal; repeatable.
        #[arg(long = "value", value_name = "NAME=LITERAL", value_parser = parse_pair, required = true)]
        values: Vec<ValuePair>,
    },
}

#[derive(clap::Args)]
struct LinkArgs {
    /// aggregation, generalization, describes, dependency, or instance-of.
    #[arg(value_parser = parse_kind)]
    kind: RelationshipKind,
    parent: String,
    /// One or more child node ids, in order.
    #[arg(required = true)]
    children: Vec<String>,
    /// Override the kind's default propagation policy: a comma list of
    /// enabled flags (copy,delete,move,version,notify), or "none".
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PropagationPolicy>,
}

#[derive(Subcommand)]
enum RelAction {
    /// Print one relationship.
    Get { id: String },
    /// Set an attribute on a relationship.
    Set {
        id: String,
        name: String,
        #[arg(value_parser = parse_literal)]
        value: AttrValue,
    },
    /// Replace a relationship's propagation policy (comma list or "none").
    SetPolicy {
        id: String,
        #[arg(value_parser = parse_policy)]
        policy: PropagationPolicy,
    },
}

#[derive(Subcommand)]
enum QueryAction {
    /// Nodes reached from a start over one kind's flag-enabled edges.
    Closure {
        start: String,
        #[arg(value_parser = parse_kind)]
        kind: RelationshipKind,
        #[arg(value_parser = parse_flag)]
        flag: OpFlag,
    },
    /// Direct neighbors over one kind.
    Neighbors {
        node: String,
        #[arg(value_parser = parse_kind)]
        kind: RelationshipKind,
        /// parent-to-child or child-to-parent.
        #[arg(value_parser = parse_direction)]
        direction: Direction,
    },
    /// Instances classified under a chain, at one version or "any".
    InstancesOf {
        name: String,
        #[arg(default_value = "any", value_parser = parse_selector)]
        version: VersionSelector,
    },
    /// The effective attribute schema of a description node.
    Schema { node: String },
    /// Change notices delivered to a node, oldest first.
    Inbox { node: String },
    /// Print one node.
    Node { id: String },
    /// Print one relationship.
    Rel { id: String },
    /// Check every structural invariant; report violations.
    Audit,
    /// The fixed meta-model vocabulary.
    Constructs,
    /// Store counters.
    Stats,
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Execute a .ddso scenario file; abort on the first failure.
    Run { file: PathBuf },
}

#[derive(Subcommand)]
enum StoreAction {
    /// Write a snapshot: to PATH, or to the bound store file (local
    /// mode); with --server and no PATH the snapshot prints to stdout.
    Dump { path: Option<PathBuf> },
    /// Replace the store with the snapshot at PATH; the journal restarts.
    Load { path: PathBuf },
}

// ----------------------------------------------------------------------
// Argument literal parsers (failures exit 2 through clap)

#[derive(Clone, Debug)]
struct ValuePair {
    name: String,
    value: AttrValue,
}

fn parse_spec(s: &str) -> std::result::Result<AttributeSpec, String> {
    AttributeSpec::parse_literal(s)
}

fn parse_rename(s: &str) -> std::result::Result<RenamePair, String> {
    let (from, to) = s
        .split_once(':')
        .ok_or_else(|| format!("bad rename {s:?}: expected from:to"))?;
    if from.is_empty() || to.is_empty() {
        return Err(format!("bad rename {s:?}: expected from:to"));
    }
    Ok(RenamePair {
        from: from.to_string(),
        to: to.to_string(),
    })
}

fn parse_literal(s: &str) -> std::result::Result<AttrValue, String> {
    AttrValue::parse_literal(s)
}

fn parse_pair(s: &str) -> std::result::Result<ValuePair, String> {
    let (name, literal) = s
        .split_once('=')
        .ok_or_else(|| format!("bad value {s:?}: expected name=literal"))?;
    if name.is_empty() {
        return Err(format!("bad value {s:?}: empty name"));
    }
    Ok(ValuePair {
        name: name.to_string(),
        value: AttrValue::parse_literal(literal)?,
    })
}

fn parse_kind(s: &str) -> std::result::Result<RelationshipKind, String> {
    RelationshipKind::parse(s).ok_or_else(|| {
        format!(
            "unknown relationship kind {s:?}; expected one of {}",
            RelationshipKind::ALL.map(|k| k.as_str()).join(", ")
        )
    })
}

fn parse_flag(s: &str) -> std::result::Result<OpFlag, String> {
    OpFlag::parse(s)
        .ok_or_else(|| format!("unknown flag {s:?}; expected copy, delete, move, version, or notify"))
}

fn parse_direction(s: &str) -> std::result::Result<Direction, String> {
    Direction::parse(s)
        .ok_or_else(|| format!("unknown direction {s:?}; expected parent-to-child or child-to-parent"))
}

fn parse_selector(s: &str) -> std::result::Result<VersionSelector, String> {
    s.parse::<VersionSelector>()
}

fn parse_policy(s: &str) -> std::result::Result<PropagationPolicy, String> {
    let mut policy = PropagationPolicy::none();
    if s == "none" {
        return Ok(policy);
    }
    for part in s.split(',') {
        let flag = OpFlag::parse(part.trim())
            .ok_or_else(|| format!("unknown flag {part:?} in policy {s:?}"))?;
        policy.set(flag, true);
    }
    Ok(policy)
}

// ----------------------------------------------------------------------
// Backends

enum Backend {
    Local(PersistentStore),
    Remote(RemoteStore),
}

impl Engine for Backend {
    fn execute(&mut self, cmd: &Command) -> Result<ddso_core::CommandOutput> {
        match self {
            Backend::Local(s) => s.execute(cmd),
            Backend::Remote(s) => s.execute(cmd),
        }
    }

    fn query(&self, q: &Query) -> Result<Vec<Record>> {
        match self {
            Backend::Local(s) => s.query(q),
            Backend::Remote(s) => s.query(q),
        }
    }
}

fn journal_path_for(store: &Path) -> PathBuf {
    let mut s = store.as_os_str().to_os_string();
    s.push(".journal");
    PathBuf::from(s)
}

fn open_backend(cli: &Cli) -> Result<Backend> {
    if let Some(url) = &cli.server {
        Ok(Backend::Remote(RemoteStore::new(url.clone())))
    } else {
        let journal = cli
            .journal
            .clone()
            .unwrap_or_else(|| journal_path_for(&cli.store));
        Ok(Backend::Local(PersistentStore::open(&cli.store, &journal)?))
    }
}

// ----------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", Record::error(&e).to_line());
            ExitCode::from(if e.is_io() { 4 } else { 3 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut backend = open_backend(cli)?;
    let emit = |records: &[Record]| {
        if !cli.quiet {
            for record in records {
                println!("{}", record.to_line());
            }
        }
    };

    match &cli.action {
        Action::Type(TypeAction::Define {
            name,
            attrs,
            ops,
            meta,
        }) => {
            let mut desc = TypeDescription::new(name.clone());
            desc.attributes = attrs.clone();
            desc.operations = ops.clone();
            let cmd = Command::CreateNode {
                layer: Layer::Model,
                level: if *meta { Level::Meta } else { Level::Base },
                payload: Payload::Description(desc),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Type(TypeAction::Evolve {
            name,
            add,
            remove,
            rename,
        }) => {
            let cmd = Command::EvolveType {
                name: name.clone(),
                delta: EvolutionDelta {
                    add: add.clone(),
                    remove: remove.clone(),
                    rename: rename.clone(),
                },
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Type(TypeAction::History { name }) => {
            emit(&backend.query(&Query::History { name: name.clone() })?);
        }

        Action::Node(NodeAction::Create {
            meta,
            name,
            attrs,
            values,
        }) => {
            let cmd = if *meta {
                let mut desc =
                    TypeDescription::new(name.clone().expect("clap enforces --name with --meta"));
                desc.attributes = attrs.clone();
                Command::CreateNode {
                    layer: Layer::Instance,
                    level: Level::Meta,
                    payload: Payload::Description(desc),
                }
            } else {
                let mut map = AttributeValueMap::new();
                for pair in values {
                    map.insert(pair.name.clone(), pair.value.clone());
                }
                Command::CreateNode {
                    layer: Layer::Instance,
                    level: Level::Base,
                    payload: Payload::Values(map),
                }
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Delete { id }) => {
            let cmd = Command::DeleteNode {
                id: NodeId::new(id.clone()),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Copy { id }) => {
            let cmd = Command::CopyNode {
                node: NodeId::new(id.clone()),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Move { id, new_parent }) => {
            let cmd = Command::MoveNode {
                node: NodeId::new(id.clone()),
                new_parent: NodeId::new(new_parent.clone()),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Version { id }) => {
            let cmd = Command::VersionNode {
                node: NodeId::new(id.clone()),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Set { id, name, value }) => {
            let cmd = Command::SetAttr {
                node: NodeId::new(id.clone()),
                name: name.clone(),
                value: value.clone(),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Migrate {
            id,
            to_version,
            fill,
        }) => {
            let mut map = AttributeValueMap::new();
            for pair in fill {
                map.insert(pair.name.clone(), pair.value.clone());
            }
            let cmd = Command::MigrateInstance {
                instance: NodeId::new(id.clone()),
                to_version: *to_version,
                fill: map,
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Node(NodeAction::Mediate { id, values }) => {
            let mut map = AttributeValueMap::new();
            for pair in values {
                map.insert(pair.name.clone(), pair.value.clone());
            }
            let cmd = Command::Mediate {
                node: NodeId::new(id.clone()),
                message: map,
            };
            emit(&backend.execute(&cmd)?.records);
        }

        Action::Link(args) => {
            let cmd = Command::CreateRel {
                kind: args.kind,
                parent: NodeId::new(args.parent.clone()),
                children: args.children.iter().map(|c| NodeId::new(c.clone())).collect(),
                policy: args.policy,
            };
            emit(&backend.execute(&cmd)?.records);
        }

        Action::Rel(RelAction::Get { id }) => {
            emit(&backend.query(&Query::Rel {
                id: RelId::new(id.clone()),
            })?);
        }
        Action::Rel(RelAction::Set { id, name, value }) => {
            let cmd = Command::SetRelAttr {
                rel: RelId::new(id.clone()),
                name: name.clone(),
                value: value.clone(),
            };
            emit(&backend.execute(&cmd)?.records);
        }
        Action::Rel(RelAction::SetPolicy { id, policy }) => {
            let cmd = Command::SetPolicy {
                rel: RelId::new(id.clone()),
                policy: *policy,
            };
            emit(&backend.execute(&cmd)?.records);
        }

        Action::Query(q) => {
            let query = match q {
                QueryAction::Closure { start, kind, flag } => Query::Closure {
                    start: NodeId::new(start.clone()),
                    kind: *kind,
                    flag: *flag,
                },
                QueryAction::Neighbors {
                    node,
                    kind,
                    direction,
                } => Query::Neighbors {
                    node: NodeId::new(node.clone()),
                    kind: *kind,
                    direction: *direction,
                },
                QueryAction::InstancesOf { name, version } => Query::InstancesOf {
                    name: name.clone(),
                    version: *version,
                },
                QueryAction::Schema { node } => Query::Schema {
                    node: NodeId::new(node.clone()),
                },
                QueryAction::Inbox { node } => Query::Inbox {
                    node: NodeId::new(node.clone()),
                },
                QueryAction::Node { id } => Query::Node {
                    id: NodeId::new(id.clone()),
                },
                QueryAction::Rel { id } => Query::Rel {
                    id: RelId::new(id.clone()),
                },
                QueryAction::Audit => Query::Audit,
                QueryAction::Constructs => Query::Constructs,
                QueryAction::Stats => Query::Stats,
            };
            emit(&backend.query(&query)?);
        }

        Action::Scenario(ScenarioAction::Run { file }) => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Error::IoFailure(format!("reading {}: {e}", file.display())))?;
            let label = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string());
            let report = run_scenario(&mut backend, &label, &text)?;
            emit(&report.records);
        }

        Action::Store(StoreAction::Dump { path }) => match (&backend, path) {
            (Backend::Local(_), _) => {
                let Backend::Local(store) = &backend else {
                    unreachable!()
                };
                let record = store.dump(path.as_deref())?;
                emit(&[record]);
            }
            (Backend::Remote(remote), Some(path)) => {
                let text = remote.fetch_snapshot()?;
                std::fs::write(path, &text)
                    .map_err(|e| Error::IoFailure(format!("writing {}: {e}", path.display())))?;
                emit(&[Record::Dumped {
                    path: path.display().to_string(),
                    bytes: text.len() as u64,
                }]);
            }
            (Backend::Remote(remote), None) => {
                let text = remote.fetch_snapshot()?;
                if !cli.quiet {
                    print!("{text}");
                }
            }
        },
        Action::Store(StoreAction::Load { path }) => match &mut backend {
            Backend::Local(store) => {
                let record = store.import(path)?;
                emit(&[record]);
            }
            Backend::Remote(remote) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::IoFailure(format!("reading {}: {e}", path.display())))?;
                let records = remote.push_snapshot(&text)?;
                emit(&records);
            }
        },
    }
    Ok(())
}
