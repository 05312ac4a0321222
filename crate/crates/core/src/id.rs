//! Identifiers for nodes and relationships.
//!
//! Ids are opaque strings minted from monotone counters (`N000001`,
//! `R000001`, ...). Ordering is by `(length, lexicographic)` rather than
//! plain lexicographic so that numbering stays numeric once counters grow
//! past the zero-padded width: `N1000000` sorts after `N999999`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a node in the store.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub(crate) String);

/// Identifier of a reified relationship in the store.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelId(pub(crate) String);

fn length_then_lex(a: &str, b: &str) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl NodeId {
    /// Wraps an externally supplied id string (used when parsing input).
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    /// Formats the id minted for the `n`-th node created in a store.
    pub fn minted(n: u64) -> Self {
        NodeId(format!("N{n:06}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl RelId {
    pub fn new(s: impl Into<String>) -> Self {
        RelId(s.into())
    }

    /// Formats the id minted for the `n`-th relationship created in a store.
    pub fn minted(n: u64) -> Self {
        RelId(format!("R{n:06}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        length_then_lex(&self.0, &other.0)
    }
}

impl PartialOrd for RelId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RelId {
    fn cmp(&self, other: &Self) -> Ordering {
        length_then_lex(&self.0, &other.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for RelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
