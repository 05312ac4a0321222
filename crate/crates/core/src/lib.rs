//! A description-driven object store.
//!
//! Objects and the descriptions that govern them live in one graph, joined
//! by five reified relationship kinds — aggregation, generalization,
//! describes, dependency, and instance-of. Relationships are objects in
//! their own right, each carrying its own propagation policy, so copy,
//! delete, move, version, and change-notification behavior is data, not
//! code. Descriptions are versioned in linear chains and instances migrate
//! between versions explicitly, so a running store can host decades of
//! schema history with old and new instances side by side.
//!
//! Everything observable is deterministic: ids come from monotone
//! counters, all maps iterate in key order, and the journal of applied
//! commands replays to a byte-identical store.

pub mod command;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod id;
pub mod layers;
pub mod persist;
pub mod relations;
pub mod scenario;
pub mod schema;
pub mod value;

pub use command::{
    parse_command, parse_query, Command, CommandOutput, Engine, Envelope, Query, Record,
    VersionedNode, WireError,
};
pub use error::{Error, Result};
pub use evolution::{
    Chain, ChainEntry, EvolutionDelta, EvolveReport, HistoryEntry, MigrateReport, RenamePair,
    VersionSelector,
};
pub use graph::{
    DeleteReport, Direction, Layer, Level, Node, OpFlag, Payload, PropagationPolicy, Relationship,
    RelationshipKind, Store,
};
pub use id::{NodeId, RelId};
pub use layers::{builtin_constructs, BUILTIN_CONSTRUCTS};
pub use persist::{
    load_snapshot, parse_snapshot, read_journal, replay, replay_onto, snapshot_string,
    write_snapshot, JournalRecord, PersistentStore,
};
pub use relations::{
    default_policy, AffectedSet, ChangeEvent, ChangeKind, CopyReport, Delivery, MoveReport,
    VersionReport,
};
pub use scenario::{parse_scenario, run_scenario, Expectation, FailSpec, ScenarioLine, ScenarioReport};
pub use schema::{AttributeSpec, TypeDescription};
pub use value::{AttrValue, AttributeValueMap, ValueKind};
