//! Acyclicity of the order kinds: every link attempt is judged against an
//! independent cycle oracle — no false accepts, no false rejects.

mod common;

use common::*;
use ddso_core::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn self_links_are_rejected_for_every_kind() {
    for kind in RelationshipKind::ALL {
        let mut store = Store::new();
        let a = value_node(&mut store);
        let err = store
            .create_relationship(kind, a.clone(), vec![a.clone()], None)
            .unwrap_err();
        assert_eq!(err.code(), "CycleRejected", "kind {kind}");
    }
}

#[test]
fn two_step_aggregation_cycle_is_rejected() {
    let mut store = Store::new();
    let ids = value_nodes(&mut store, 2);
    store
        .create_relationship(
            RelationshipKind::Aggregation,
            ids[0].clone(),
            vec![ids[1].clone()],
            None,
        )
        .unwrap();
    let before = store.rel_count();
    let err = store
        .create_relationship(
            RelationshipKind::Aggregation,
            ids[1].clone(),
            vec![ids[0].clone()],
            None,
        )
        .unwrap_err();
    assert_eq!(err.code(), "CycleRejected");
    assert_eq!(store.rel_count(), before, "rejected link must not persist");
    assert_sound(&store);
}

#[test]
fn long_generalization_cycle_is_rejected() {
    let mut store = Store::new();
    let ids = value_nodes(&mut store, 5);
    for w in [(0, 1), (1, 2), (2, 3), (3, 4)] {
        store
            .create_relationship(
                RelationshipKind::Generalization,
                ids[w.0].clone(),
                vec![ids[w.1].clone()],
                None,
            )
            .unwrap();
    }
    let err = store
        .create_relationship(
            RelationshipKind::Generalization,
            ids[4].clone(),
            vec![ids[0].clone()],
            None,
        )
        .unwrap_err();
    assert_eq!(err.code(), "CycleRejected");
}

/// The cycle check is structural: a path of flag-disabled edges still
/// counts.
#[test]
fn cycle_check_ignores_policy_flags() {
    let mut store = Store::new();
    let ids = value_nodes(&mut store, 2);
    store
        .create_relationship(
            RelationshipKind::Aggregation,
            ids[0].clone(),
            vec![ids[1].clone()],
            Some(PropagationPolicy::none()),
        )
        .unwrap();
    let err = store
        .create_relationship(
            RelationshipKind::Aggregation,
            ids[1].clone(),
            vec![ids[0].clone()],
            None,
        )
        .unwrap_err();
    assert_eq!(err.code(), "CycleRejected");
}

/// Dependency links may cycle freely.
#[test]
fn dependency_cycles_are_allowed() {
    let mut store = Store::new();
    let ids = value_nodes(&mut store, 2);
    store
        .create_relationship(
            RelationshipKind::Dependency,
            ids[0].clone(),
            vec![ids[1].clone()],
            None,
        )
        .unwrap();
    store
        .create_relationship(
            RelationshipKind::Dependency,
            ids[1].clone(),
            vec![ids[0].clone()],
            None,
        )
        .unwrap();
    assert_sound(&store);
}

/// Aggregation and generalization edge sets are independent orders: a
/// generalization edge does not make the reverse aggregation edge a cycle.
#[test]
fn order_kinds_are_checked_separately() {
    let mut store = Store::new();
    let ids = value_nodes(&mut store, 2);
    store
        .create_relationship(
            RelationshipKind::Generalization,
            ids[0].clone(),
            vec![ids[1].clone()],
            None,
        )
        .unwrap();
    store
        .create_relationship(
            RelationshipKind::Aggregation,
            ids[1].clone(),
            vec![ids[0].clone()],
            None,
        )
        .unwrap();
    assert_sound(&store);
}

/// Random link attempts over a free-form graph, judged by the oracle:
/// every accept and every reject must agree with it exactly.
#[test]
fn random_link_attempts_match_cycle_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for round in 0..20 {
        let mut store = Store::new();
        let n = rng.random_range(2..=20);
        let ids = value_nodes(&mut store, n);
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for attempt in 0..80 {
            let parent = rng.random_range(0..n);
            let mut pool: Vec<usize> = (0..n).collect();
            let take = rng.random_range(1..=3.min(n));
            let mut children = Vec::new();
            for _ in 0..take {
                let i = rng.random_range(0..pool.len());
                children.push(pool.swap_remove(i));
            }
            let should_cycle = oracle_would_cycle(&edges, parent, &children);
            let result = store.create_relationship(
                RelationshipKind::Aggregation,
                ids[parent].clone(),
                children.iter().map(|c| ids[*c].clone()).collect(),
                None,
            );
            match result {
                Ok(_) => {
                    assert!(
                        !should_cycle,
                        "round {round} attempt {attempt}: accepted a cycle {parent}→{children:?}"
                    );
                    edges.extend(children.iter().map(|c| (parent, *c)));
                }
                Err(e) => {
                    assert_eq!(e.code(), "CycleRejected", "round {round} attempt {attempt}");
                    assert!(
                        should_cycle,
                        "round {round} attempt {attempt}: rejected acyclic link {parent}→{children:?}"
                    );
                }
            }
        }
        assert_sound(&store);
    }
}

/// `check_antisymmetry` is callable directly and matches the oracle
/// prediction too.
#[test]
fn antisymmetry_predicate_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let plan = random_dag(&mut rng, 25, 60);
    let (store, ids) = build_aggregation_store(&plan);
    let edges = plan.all_edges();
    for _ in 0..300 {
        let parent = rng.random_range(0..plan.n);
        let child = rng.random_range(0..plan.n);
        let ok = store.check_antisymmetry(
            RelationshipKind::Aggregation,
            &ids[parent],
            &[ids[child].clone()],
        );
        assert_eq!(ok, !oracle_would_cycle(&edges, parent, &[child]));
    }
}
