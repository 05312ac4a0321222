//! Error vocabulary shared by every operation in the store.
//!
//! Every rejected operation leaves the store untouched: operations validate
//! first and mutate only once validation has fully passed. `Error::code`
//! returns the stable machine-readable name that appears in error records,
//! journals, and the HTTP error envelope; `Error::is_io` distinguishes the
//! environment failures (exit code 4 in the CLI) from domain rejections
//! (exit code 3).

use crate::id::{NodeId, RelId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A node payload violates the payload rules for its coordinate, a type
    /// description is malformed, or an attribute name is unusable.
    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("unknown relationship {0}")]
    UnknownRelationship(RelId),

    /// Relationships must reference at least one child at all times.
    #[error("a relationship requires at least one child")]
    EmptyChildren,

    /// The link or move would close a cycle over an order-like relationship
    /// kind, or is a self-link.
    #[error("cycle rejected: {0}")]
    CycleRejected(String),

    /// A link violates the layer/level placement rules for its kind.
    #[error("layer rule violation: {0}")]
    LayerRuleViolation(String),

    /// A value does not conform to the governing effective schema, or a
    /// migration fill is inconsistent with the target schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A node may be classified by at most one model node.
    #[error("node {0} is already an instance of a model node")]
    AlreadyInstantiated(NodeId),

    /// Completing the link would leave the instance-of / described-by square
    /// open: the models of a described pair must themselves be linked by a
    /// description edge.
    #[error("description square violation: {0}")]
    SquareViolation(String),

    /// Two superclasses contribute conflicting definitions for the same
    /// attribute name.
    #[error("ambiguous inheritance: {0}")]
    AmbiguousInheritance(String),

    #[error("unknown type {0:?}")]
    UnknownType(String),

    #[error("invalid evolution delta: {0}")]
    InvalidDelta(String),

    #[error("type {name:?} has no version {version}")]
    UnknownVersion { name: String, version: u64 },

    /// A migration did not supply a value for an attribute added between the
    /// source and target versions.
    #[error("migration missing fill for attribute {0:?}")]
    MissingFill(String),

    /// The node has no aggregation parent, so it cannot be moved.
    #[error("node {0} is not aggregated under any parent")]
    NotAggregated(NodeId),

    /// Mediation requires the node to publish over at least one dependency
    /// relationship.
    #[error("node {0} does not mediate any dependency relationship")]
    NotAMediator(NodeId),

    /// Version-chain member nodes are permanent; deleting one (directly or
    /// through delete propagation) is rejected.
    #[error("node {0} is a version-chain member and cannot be deleted")]
    TypeInUse(NodeId),

    /// Copy propagation refuses to duplicate description-carrying nodes;
    /// descriptions evolve through version chains instead.
    #[error("node {0} carries a type description and cannot be copied")]
    CannotCopyType(NodeId),

    /// The operation requires a description-carrying node.
    #[error("node {0} does not carry a type description")]
    NotAType(NodeId),

    #[error("io failure: {0}")]
    IoFailure(String),

    #[error("corrupt snapshot at line {line}: {reason}")]
    CorruptSnapshot { line: usize, reason: String },

    #[error("corrupt journal at line {line}: {reason}")]
    CorruptJournal { line: usize, reason: String },

    /// Journal records must form a contiguous sequence.
    #[error("gap in journal: expected sequence {expected}, found {found}")]
    GapInJournal { expected: u64, found: u64 },

    #[error("unknown command: {0}")]
    UnknownCommand(String),

    /// A scenario expectation did not hold against the store.
    #[error("expectation failed: {0}")]
    ExpectationFailed(String),

    /// A domain error reported by a remote server, preserved verbatim.
    #[error("{code}: {message}")]
    Remote { code: String, message: String },
}

impl Error {
    /// Stable machine-readable error name.
    pub fn code(&self) -> &str {
        match self {
            Error::MalformedPayload(_) => "MalformedPayload",
            Error::UnknownNode(_) => "UnknownNode",
            Error::UnknownRelationship(_) => "UnknownRelationship",
            Error::EmptyChildren => "EmptyChildren",
            Error::CycleRejected(_) => "CycleRejected",
            Error::LayerRuleViolation(_) => "LayerRuleViolation",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::AlreadyInstantiated(_) => "AlreadyInstantiated",
            Error::SquareViolation(_) => "SquareViolation",
            Error::AmbiguousInheritance(_) => "AmbiguousInheritance",
            Error::UnknownType(_) => "UnknownType",
            Error::InvalidDelta(_) => "InvalidDelta",
            Error::UnknownVersion { .. } => "UnknownVersion",
            Error::MissingFill(_) => "MissingFill",
            Error::NotAggregated(_) => "NotAggregated",
            Error::NotAMediator(_) => "NotAMediator",
            Error::TypeInUse(_) => "TypeInUse",
            Error::CannotCopyType(_) => "CannotCopyType",
            Error::NotAType(_) => "NotAType",
            Error::IoFailure(_) => "IoFailure",
            Error::CorruptSnapshot { .. } => "CorruptSnapshot",
            Error::CorruptJournal { .. } => "CorruptJournal",
            Error::GapInJournal { .. } => "GapInJournal",
            Error::UnknownCommand(_) => "UnknownCommand",
            Error::ExpectationFailed(_) => "ExpectationFailed",
            Error::Remote { code, .. } => code,
        }
    }

    /// True for environment failures (I/O, corrupt files) as opposed to
    /// domain rejections.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::IoFailure(_)
                | Error::CorruptSnapshot { .. }
                | Error::CorruptJournal { .. }
                | Error::GapInJournal { .. }
        ) || matches!(self, Error::Remote { code, .. } if code == "IoFailure"
                || code == "CorruptSnapshot"
                || code == "CorruptJournal"
                || code == "GapInJournal")
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
