//! Shared helpers for the integration tests: store builders, a seeded
//! random DAG generator, and independent oracles for reachability, closure
//! order, and cycle detection.
//!
//! The oracles deliberately use different algorithms from the store —
//! fixed-point iteration instead of breadth-first search, distance
//! relaxation instead of level sets — so agreement is meaningful.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ddso_core::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn nid(n: u64) -> NodeId {
    NodeId::new(format!("N{n:06}"))
}

pub fn rid(n: u64) -> RelId {
    RelId::new(format!("R{n:06}"))
}

/// Creates a plain instance-layer base-level node with no values.
pub fn value_node(store: &mut Store) -> NodeId {
    store
        .create_node(Layer::Instance, Level::Base, Payload::Values(Default::default()))
        .unwrap()
}

/// Creates `n` plain nodes and answers their ids in creation order.
pub fn value_nodes(store: &mut Store, n: usize) -> Vec<NodeId> {
    (0..n).map(|_| value_node(store)).collect()
}

pub fn policy(copy: bool, delete: bool, move_: bool, version: bool, notify: bool) -> PropagationPolicy {
    PropagationPolicy {
        copy,
        delete,
        move_,
        version,
        notify,
    }
}

/// One planned relationship in a generated DAG.
pub struct RelPlan {
    pub parent: usize,
    pub children: Vec<usize>,
    pub policy: PropagationPolicy,
}

/// A generated aggregation DAG over nodes `0..n`. Edges always point from
/// a lower index to a higher one, so the plan is acyclic by construction.
pub struct DagPlan {
    pub n: usize,
    pub rels: Vec<RelPlan>,
}

impl DagPlan {
    /// The flag-enabled parent→child edge list.
    pub fn edges(&self, flag: OpFlag) -> Vec<(usize, usize)> {
        self.rels
            .iter()
            .filter(|r| r.policy.enables(flag))
            .flat_map(|r| r.children.iter().map(|c| (r.parent, *c)))
            .collect()
    }

    /// Every edge, regardless of flags.
    pub fn all_edges(&self) -> Vec<(usize, usize)> {
        self.rels
            .iter()
            .flat_map(|r| r.children.iter().map(|c| (r.parent, *c)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.rels.iter().map(|r| r.children.len()).sum()
    }
}

/// Generates a random aggregation DAG with at most `max_nodes` nodes and
/// `max_edges` edges and mixed random policies.
pub fn random_dag(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> DagPlan {
    let n = rng.random_range(1..=max_nodes);
    let mut rels = Vec::new();
    let mut edges = 0usize;
    if n >= 2 {
        let attempts = rng.random_range(0..=n * 2);
        for _ in 0..attempts {
            if edges >= max_edges {
                break;
            }
            let parent = rng.random_range(0..n - 1);
            let mut pool: Vec<usize> = (parent + 1..n).collect();
            let take = rng.random_range(1..=pool.len().min(4));
            let mut children = Vec::new();
            for _ in 0..take {
                if pool.is_empty() || edges >= max_edges {
                    break;
                }
                let i = rng.random_range(0..pool.len());
                children.push(pool.swap_remove(i));
                edges += 1;
            }
            if children.is_empty() {
                continue;
            }
            let policy = PropagationPolicy {
                copy: rng.random_bool(0.7),
                delete: rng.random_bool(0.7),
                move_: rng.random_bool(0.5),
                version: rng.random_bool(0.5),
                notify: rng.random_bool(0.5),
            };
            rels.push(RelPlan {
                parent,
                children,
                policy,
            });
        }
    }
    DagPlan { n, rels }
}

/// Builds the plan into a store of plain nodes joined by aggregation
/// relationships. Node index `i` becomes the `i+1`-th minted id, so index
/// order and id order agree.
pub fn build_aggregation_store(plan: &DagPlan) -> (Store, Vec<NodeId>) {
    let mut store = Store::new();
    let ids = value_nodes(&mut store, plan.n);
    for rel in &plan.rels {
        store
            .create_relationship(
                RelationshipKind::Aggregation,
                ids[rel.parent].clone(),
                rel.children.iter().map(|c| ids[*c].clone()).collect(),
                Some(rel.policy),
            )
            .expect("plans are forward-only, so links cannot cycle");
    }
    (store, ids)
}

/// Oracle: the set reachable from `start` over `edges`, by fixed-point
/// iteration.
pub fn oracle_reachable(edges: &[(usize, usize)], start: usize) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    set.insert(start);
    loop {
        let mut grew = false;
        for (p, c) in edges {
            if set.contains(p) && set.insert(*c) {
                grew = true;
            }
        }
        if !grew {
            return set;
        }
    }
}

/// Oracle: closure order — hop distance by exhaustive relaxation, ties by
/// node index.
pub fn oracle_closure_order(n: usize, edges: &[(usize, usize)], start: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    for _ in 0..n {
        for (p, c) in edges {
            if dist[*p] != usize::MAX && dist[*p] + 1 < dist[*c] {
                dist[*c] = dist[*p] + 1;
            }
        }
    }
    let mut reachable: Vec<usize> = (0..n).filter(|i| dist[*i] != usize::MAX).collect();
    reachable.sort_by_key(|i| (dist[*i], *i));
    reachable
}

/// Oracle: would adding an edge set `parent → children` to `edges` close a
/// cycle?
pub fn oracle_would_cycle(edges: &[(usize, usize)], parent: usize, children: &[usize]) -> bool {
    children
        .iter()
        .any(|c| *c == parent || oracle_reachable(edges, *c).contains(&parent))
}

/// Asserts the store audit is clean, printing the violations otherwise.
pub fn assert_sound(store: &Store) {
    let violations = store.audit();
    assert!(
        violations.is_empty(),
        "audit found violations: {violations:#?}"
    );
}
