//! Relationship semantics: default policies, propagation closures, and the
//! operations that ride them.
//!
//! Propagation is uniform across kinds: an operation walks parent-to-child
//! over the edges of one kind whose policy enables the operation's flag.
//! The defaults give each kind its customary character — aggregation
//! carries copy/delete/move, generalization carries version, dependency
//! carries notify, and description links carry nothing until a link is
//! explicitly opted in.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Layer, Node, OpFlag, PropagationPolicy, RelationshipKind, Store};
use crate::id::{NodeId, RelId};
use crate::value::AttributeValueMap;

/// The default propagation policy of each relationship kind.
///
/// | kind           | copy | delete | move | version | notify |
/// |----------------|------|--------|------|---------|--------|
/// | aggregation    | yes  | yes    | yes  | no      | no     |
/// | generalization | no   | no     | no   | yes     | no     |
/// | describes      | no   | no     | no   | no      | no     |
/// | dependency     | no   | no     | no   | no      | yes    |
/// | instance-of    | no   | no     | no   | no      | no     |
pub fn default_policy(kind: RelationshipKind) -> PropagationPolicy {
    let mut p = PropagationPolicy::none();
    match kind {
        RelationshipKind::Aggregation => {
            p.copy = true;
            p.delete = true;
            p.move_ = true;
        }
        RelationshipKind::Generalization => {
            p.version = true;
        }
        RelationshipKind::Describes => {}
        RelationshipKind::Dependency => {
            p.notify = true;
        }
        RelationshipKind::InstanceOf => {}
    }
    p
}

/// What happened, from a subscriber's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    AttributeSet,
    VersionBump,
    Deleted,
    Message,
}

/// A change notice as it lands in a subscriber's inbox.
///
/// `seq` is minted from the store-wide event counter at publication, so the
/// order of any two events is globally defined. The optional fields carry
/// the detail for the matching kind: the attribute name for
/// `attribute-set`, the new version for `version-bump`, the mediated value
/// map for `message`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeEvent {
    pub seq: u64,
    pub source: NodeId,
    pub op: ChangeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<AttributeValueMap>,
}

/// One event landing in one inbox.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub to: NodeId,
    pub event: ChangeEvent,
}

/// The nodes an operation reaches from a start node, in propagation order:
/// breadth-first by hop distance, ties broken by ascending node id, start
/// first, duplicates impossible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffectedSet {
    nodes: Vec<NodeId>,
}

impl AffectedSet {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<NodeId> {
        self.nodes
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Result of a copy propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct CopyReport {
    /// The copy of the start node.
    pub root: NodeId,
    /// Original id to copy id, for every copied node.
    pub map: BTreeMap<NodeId, NodeId>,
    /// Relationships minted for the copies, in creation order.
    pub rels: Vec<RelId>,
}

/// Result of a move propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct MoveReport {
    pub node: NodeId,
    /// Aggregation relationships the node was detached from.
    pub detached: Vec<RelId>,
    /// Detached relationships that were deleted because the node was their
    /// last child.
    pub removed: Vec<RelId>,
    /// The aggregation relationship now holding the node (created fresh if
    /// the new parent had none).
    pub attached: RelId,
    /// True when `attached` was minted by this move.
    pub attached_created: bool,
}

/// Result of a version propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct VersionReport {
    /// Bumped nodes in propagation order, with their new versions.
    pub bumped: Vec<(NodeId, u64)>,
    pub deliveries: Vec<Delivery>,
}

impl Store {
    /// Computes the affected set of `flag`-propagation over `kind` edges
    /// from `start`: every node reachable parent-to-child through
    /// relationships of that kind whose policy enables the flag.
    ///
    /// The walk is breadth-first; within one hop distance nodes are ordered
    /// by ascending id. Cycles (possible for dependency edges) are walked
    /// once. The result is the exact order in which propagating operations
    /// visit, so closure order is delivery order.
    pub fn closure(
        &self,
        start: &NodeId,
        kind: RelationshipKind,
        flag: OpFlag,
    ) -> Result<AffectedSet> {
        self.node(start)?;
        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        seen.insert(start.clone());
        let mut order = vec![start.clone()];
        let mut frontier: BTreeSet<NodeId> = BTreeSet::new();
        frontier.insert(start.clone());
        while !frontier.is_empty() {
            let mut next: BTreeSet<NodeId> = BTreeSet::new();
            for rel in self.rels.values() {
                if rel.kind != kind || !rel.policy.enables(flag) {
                    continue;
                }
                if !frontier.contains(&rel.parent) {
                    continue;
                }
                for child in &rel.children {
                    if !seen.contains(child) {
                        next.insert(child.clone());
                    }
                }
            }
            for id in &next {
                seen.insert(id.clone());
                order.push(id.clone());
            }
            frontier = next;
        }
        Ok(AffectedSet { nodes: order })
    }

    /// Would linking `parent` above `children` keep `kind` an order?
    ///
    /// Structural check, ignoring policy flags: the link is rejected when
    /// any child is the parent itself or can already reach the parent
    /// parent-to-child, since the new edge would then close a cycle.
    /// Kinds that are not orders always pass.
    pub fn check_antisymmetry(
        &self,
        kind: RelationshipKind,
        parent: &NodeId,
        children: &[NodeId],
    ) -> bool {
        if !kind.is_order() {
            return true;
        }
        children
            .iter()
            .all(|c| c != parent && !self.reaches(kind, c, parent))
    }

    /// Structural reachability `from ⇒ to` parent-to-child over `kind`
    /// edges, ignoring policy flags.
    pub(crate) fn reaches(&self, kind: RelationshipKind, from: &NodeId, to: &NodeId) -> bool {
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut stack: Vec<&NodeId> = vec![from];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            for rel in self.rels.values() {
                if rel.kind == kind && rel.parent == *id {
                    for child in &rel.children {
                        if child == to {
                            return true;
                        }
                        stack.push(child);
                    }
                }
            }
        }
        false
    }

    // ------------------------------------------------------------------
    // Copy

    /// Copies `start` and its copy-enabled aggregation closure.
    ///
    /// Description-carrying nodes refuse to be copied — descriptions evolve
    /// through version chains instead — so the closure must be free of
    /// them. Fresh ids are minted in closure order. Aggregation edges
    /// inside the closure are replicated between the copies; children
    /// outside the closure stay shared (both originals and copies aggregate
    /// them). Generalization, description, and dependency links touching
    /// the closure are re-created so each copy points at the *original*
    /// counterpart: the copy subclasses, describes, or notifies whatever
    /// the original did. Classification links are not replicated — a copy
    /// starts unclassified. Copies keep their originals' version numbers.
    pub fn propagate_copy(&mut self, start: &NodeId) -> Result<CopyReport> {
        let seq = self.op_counter + 1;
        let order = self.closure(start, RelationshipKind::Aggregation, OpFlag::Copy)?;
        for n in order.nodes() {
            if self.nodes[n].payload.description().is_some() {
                return Err(Error::CannotCopyType(n.clone()));
            }
        }
        let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for orig_id in order.nodes() {
            let Node {
                layer,
                level,
                version,
                payload,
                ..
            } = self.nodes[orig_id].clone();
            let copy_id = self.mint_node(layer, level, version, payload);
            map.insert(orig_id.clone(), copy_id);
        }
        let snapshot: Vec<crate::graph::Relationship> = self.rels.values().cloned().collect();
        let mut new_rels = Vec::new();
        for rel in &snapshot {
            if rel.kind == RelationshipKind::Aggregation && map.contains_key(&rel.parent) {
                let children = rel
                    .children
                    .iter()
                    .map(|c| map.get(c).unwrap_or(c).clone())
                    .collect();
                new_rels.push(self.mint_relationship(
                    rel.kind,
                    map[&rel.parent].clone(),
                    children,
                    rel.policy,
                    rel.attributes.clone(),
                ));
            }
        }
        for rel in &snapshot {
            if !matches!(
                rel.kind,
                RelationshipKind::Generalization
                    | RelationshipKind::Describes
                    | RelationshipKind::Dependency
            ) {
                continue;
            }
            if let Some(copy_parent) = map.get(&rel.parent) {
                new_rels.push(self.mint_relationship(
                    rel.kind,
                    copy_parent.clone(),
                    rel.children.clone(),
                    rel.policy,
                    rel.attributes.clone(),
                ));
            }
            for child in &rel.children {
                if let Some(copy_child) = map.get(child) {
                    new_rels.push(self.mint_relationship(
                        rel.kind,
                        rel.parent.clone(),
                        vec![copy_child.clone()],
                        rel.policy,
                        rel.attributes.clone(),
                    ));
                }
            }
        }
        self.op_counter = seq;
        Ok(CopyReport {
            root: map[start].clone(),
            map,
            rels: new_rels,
        })
    }

    // ------------------------------------------------------------------
    // Move

    /// Re-parents `node` under `new_parent` in the aggregation order.
    ///
    /// The node must currently be aggregated somewhere (`NotAggregated`
    /// otherwise), and the new parent must not be the node itself or one of
    /// its aggregation descendants (`CycleRejected`). The node is detached
    /// from every aggregation relationship holding it — relationships left
    /// childless die — and attached to the new parent's lowest-id
    /// aggregation relationship, or a fresh default-policy one.
    pub fn propagate_move(&mut self, node: &NodeId, new_parent: &NodeId) -> Result<MoveReport> {
        let seq = self.op_counter + 1;
        self.node(node)?;
        self.node(new_parent)?;
        let holding: Vec<RelId> = self
            .rels
            .iter()
            .filter(|(_, r)| {
                r.kind == RelationshipKind::Aggregation && r.children.contains(node)
            })
            .map(|(rid, _)| rid.clone())
            .collect();
        if holding.is_empty() {
            return Err(Error::NotAggregated(node.clone()));
        }
        if new_parent == node
            || self.reaches(RelationshipKind::Aggregation, node, new_parent)
        {
            return Err(Error::CycleRejected(format!(
                "moving {node} under {new_parent} would close an aggregation cycle"
            )));
        }
        let mut removed = Vec::new();
        for rid in &holding {
            let rel = self.rels.get_mut(rid).expect("held above");
            rel.children.retain(|c| c != node);
            if rel.children.is_empty() {
                self.rels.remove(rid);
                removed.push(rid.clone());
            }
        }
        let target: Option<RelId> = self
            .rels
            .iter()
            .filter(|(_, r)| r.kind == RelationshipKind::Aggregation && r.parent == *new_parent)
            .map(|(rid, _)| rid.clone())
            .next();
        let (attached, attached_created) = match target {
            Some(rid) => {
                self.rels
                    .get_mut(&rid)
                    .expect("found above")
                    .children
                    .push(node.clone());
                (rid, false)
            }
            None => (
                self.mint_relationship(
                    RelationshipKind::Aggregation,
                    new_parent.clone(),
                    vec![node.clone()],
                    default_policy(RelationshipKind::Aggregation),
                    AttributeValueMap::new(),
                ),
                true,
            ),
        };
        self.op_counter = seq;
        Ok(MoveReport {
            node: node.clone(),
            detached: holding,
            removed,
            attached,
            attached_created,
        })
    }

    // ------------------------------------------------------------------
    // Version

    /// Bumps `start` and everything its version-enabled generalization and
    /// description edges reach.
    ///
    /// The affected set is the generalization closure followed by any
    /// description-closure nodes not already in it. Every member's version
    /// increments by one and publishes a version-bump notice to its
    /// subscribers, in affected-set order.
    pub fn propagate_version(&mut self, start: &NodeId) -> Result<VersionReport> {
        let seq = self.op_counter + 1;
        let gen = self.closure(start, RelationshipKind::Generalization, OpFlag::Version)?;
        let desc = self.closure(start, RelationshipKind::Describes, OpFlag::Version)?;
        let mut order = gen.into_nodes();
        for id in desc.into_nodes() {
            if !order.contains(&id) {
                order.push(id);
            }
        }
        let mut bumped = Vec::new();
        let mut deliveries = Vec::new();
        for id in &order {
            let node = self.nodes.get_mut(id).expect("closure members exist");
            node.version += 1;
            let v = node.version;
            bumped.push((id.clone(), v));
            deliveries.extend(self.publish_event(
                id,
                ChangeKind::VersionBump,
                None,
                Some(v),
                None,
            ));
        }
        self.op_counter = seq;
        Ok(VersionReport { bumped, deliveries })
    }

    // ------------------------------------------------------------------
    // Change publication

    /// Publishes one change notice from `source` and delivers it to the
    /// notify closure — every subscriber reachable over notify-enabled
    /// dependency edges, excluding the source itself. Exactly one event is
    /// minted per publication (the event counter advances even when nobody
    /// subscribes) and lands exactly once per subscriber, in closure order.
    pub(crate) fn publish_event(
        &mut self,
        source: &NodeId,
        op: ChangeKind,
        attribute: Option<String>,
        version: Option<u64>,
        message: Option<AttributeValueMap>,
    ) -> Vec<Delivery> {
        self.event_counter += 1;
        let event = ChangeEvent {
            seq: self.event_counter,
            source: source.clone(),
            op,
            attribute,
            version,
            message,
        };
        let targets = self
            .closure(source, RelationshipKind::Dependency, OpFlag::Notify)
            .expect("source exists")
            .into_nodes();
        let mut deliveries = Vec::new();
        for to in targets {
            if to == *source {
                continue;
            }
            self.inboxes.entry(to.clone()).or_default().push(event.clone());
            deliveries.push(Delivery {
                to,
                event: event.clone(),
            });
        }
        deliveries
    }

    /// Publishes an explicit message on behalf of `mediator`.
    ///
    /// The mediator must parent at least one dependency relationship —
    /// mediation is what dependency parents are for — and the message
    /// reaches its notify closure like any other change notice.
    pub fn mediate(
        &mut self,
        mediator: &NodeId,
        message: AttributeValueMap,
    ) -> Result<Vec<Delivery>> {
        let seq = self.op_counter + 1;
        self.node(mediator)?;
        for value in message.values() {
            value.check_storable().map_err(Error::MalformedPayload)?;
        }
        let parents_any = self
            .rels
            .values()
            .any(|r| r.kind == RelationshipKind::Dependency && r.parent == *mediator);
        if !parents_any {
            return Err(Error::NotAMediator(mediator.clone()));
        }
        let deliveries =
            self.publish_event(mediator, ChangeKind::Message, None, None, Some(message));
        self.op_counter = seq;
        Ok(deliveries)
    }

    /// The change notices delivered to `node`, oldest first.
    pub fn inbox(&self, node: &NodeId) -> Result<&[ChangeEvent]> {
        self.node(node)?;
        Ok(self
            .inboxes
            .get(node)
            .map(|v| v.as_slice())
            .unwrap_or(&[]))
    }

    /// Every node of the given layer, in id order. Used by tests and the
    /// instance audit in acceptance checks.
    pub fn nodes_in_layer(&self, layer: Layer) -> Vec<&Node> {
        self.nodes.values().filter(|n| n.layer == layer).collect()
    }
}
