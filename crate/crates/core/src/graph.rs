//! The object graph: nodes, reified relationships, and the store that owns
//! them.
//!
//! Relationships are first-class objects, not pointers. Each relationship
//! has exactly one parent, an ordered set of at least one child, its own
//! propagation policy, and its own attribute map. Its lifecycle is coupled
//! to its parent: deleting the parent deletes the relationship; removing the
//! last child deletes the relationship.
//!
//! Every node carries a two-axis coordinate: `layer` (instance or model)
//! says whether the node is an ordinary object or a classifier of objects;
//! `level` (base or meta) says whether it lives among the domain objects or
//! among the objects that describe them. The coordinate fixes the payload:
//! model-layer and meta-level nodes carry a `TypeDescription`, and only
//! instance-layer base-level nodes carry plain attribute values.
//!
//! All maps are `BTreeMap`s and all ids are minted from monotone counters,
//! so iteration order — and therefore every serialization, closure, and
//! delivery order — is deterministic. Mutating operations validate first
//! and mutate only after validation has fully passed; a rejected operation
//! leaves the store byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Chain;
use crate::id::{NodeId, RelId};
use crate::relations::{ChangeEvent, ChangeKind, Delivery};
use crate::schema::TypeDescription;
use crate::value::{AttrValue, AttributeValueMap};

/// Horizontal axis: is the node an ordinary object or a classifier?
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Instance,
    Model,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Instance => "instance",
            Layer::Model => "model",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Vertical axis: does the node live among the domain objects or among the
/// objects that describe them?
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Base,
    Meta,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Base => "base",
            Level::Meta => "meta",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The five reified relationship kinds.
///
/// * `Aggregation` — whole/part composition; an order (acyclic).
/// * `Generalization` — superclass/subclass; an order (acyclic).
/// * `Describes` — a meta-level object describing base-level objects.
/// * `Dependency` — publisher/subscriber; cycles are permitted.
/// * `InstanceOf` — a model node classifying instance nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationshipKind {
    Aggregation,
    Generalization,
    Describes,
    Dependency,
    InstanceOf,
}

impl RelationshipKind {
    pub const ALL: [RelationshipKind; 5] = [
        RelationshipKind::Aggregation,
        RelationshipKind::Generalization,
        RelationshipKind::Describes,
        RelationshipKind::Dependency,
        RelationshipKind::InstanceOf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationshipKind::Aggregation => "aggregation",
            RelationshipKind::Generalization => "generalization",
            RelationshipKind::Describes => "describes",
            RelationshipKind::Dependency => "dependency",
            RelationshipKind::InstanceOf => "instance-of",
        }
    }

    pub fn parse(s: &str) -> Option<RelationshipKind> {
        RelationshipKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds that must stay acyclic (they model orders).
    pub fn is_order(self) -> bool {
        matches!(
            self,
            RelationshipKind::Aggregation | RelationshipKind::Generalization
        )
    }
}

impl fmt::Display for RelationshipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One of the five per-relationship propagation switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpFlag {
    Copy,
    Delete,
    Move,
    Version,
    Notify,
}

impl OpFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            OpFlag::Copy => "copy",
            OpFlag::Delete => "delete",
            OpFlag::Move => "move",
            OpFlag::Version => "version",
            OpFlag::Notify => "notify",
        }
    }

    pub fn parse(s: &str) -> Option<OpFlag> {
        match s {
            "copy" => Some(OpFlag::Copy),
            "delete" => Some(OpFlag::Delete),
            "move" => Some(OpFlag::Move),
            "version" => Some(OpFlag::Version),
            "notify" => Some(OpFlag::Notify),
            _ => None,
        }
    }
}

impl fmt::Display for OpFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which graph operations a relationship carries from its parent to its
/// children. The policy belongs to the relationship instance, not to its
/// kind: the kind only supplies the default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationPolicy {
    pub copy: bool,
    pub delete: bool,
    #[serde(rename = "move")]
    pub move_: bool,
    pub version: bool,
    pub notify: bool,
}

impl PropagationPolicy {
    pub fn none() -> Self {
        PropagationPolicy {
            copy: false,
            delete: false,
            move_: false,
            version: false,
            notify: false,
        }
    }

    pub fn enables(&self, flag: OpFlag) -> bool {
        match flag {
            OpFlag::Copy => self.copy,
            OpFlag::Delete => self.delete,
            OpFlag::Move => self.move_,
            OpFlag::Version => self.version,
            OpFlag::Notify => self.notify,
        }
    }

    pub fn set(&mut self, flag: OpFlag, on: bool) {
        match flag {
            OpFlag::Copy => self.copy = on,
            OpFlag::Delete => self.delete = on,
            OpFlag::Move => self.move_ = on,
            OpFlag::Version => self.version = on,
            OpFlag::Notify => self.notify = on,
        }
    }
}

/// What a node carries: a type description or a plain value map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    Description(TypeDescription),
    Values(AttributeValueMap),
}

impl Payload {
    pub fn description(&self) -> Option<&TypeDescription> {
        match self {
            Payload::Description(d) => Some(d),
            Payload::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&AttributeValueMap> {
        match self {
            Payload::Description(_) => None,
            Payload::Values(v) => Some(v),
        }
    }
}

/// A node in the object graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub layer: Layer,
    pub level: Level,
    pub version: u64,
    pub payload: Payload,
}

/// A reified relationship: parent, ordered children, policy, attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relationship {
    pub id: RelId,
    pub kind: RelationshipKind,
    pub parent: NodeId,
    pub children: Vec<NodeId>,
    pub policy: PropagationPolicy,
    #[serde(default)]
    pub attributes: AttributeValueMap,
}

/// Traversal direction for `neighbors`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ParentToChild,
    ChildToParent,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::ParentToChild => "parent-to-child",
            Direction::ChildToParent => "child-to-parent",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "parent-to-child" => Some(Direction::ParentToChild),
            "child-to-parent" => Some(Direction::ChildToParent),
            _ => None,
        }
    }
}

/// Result of a propagating delete.
#[derive(Clone, Debug, PartialEq)]
pub struct DeleteReport {
    /// Deleted nodes, in the closure order the delete walked (root first).
    pub nodes: Vec<NodeId>,
    /// Relationships that disappeared, in ascending id order.
    pub rels: Vec<RelId>,
    /// Deletion notices delivered to subscribers along the way.
    pub deliveries: Vec<Delivery>,
}

/// The store: the single owner of all nodes, relationships, version chains,
/// and subscriber inboxes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Store {
    pub(crate) nodes: BTreeMap<NodeId, Node>,
    pub(crate) rels: BTreeMap<RelId, Relationship>,
    pub(crate) chains: BTreeMap<String, Chain>,
    pub(crate) inboxes: BTreeMap<NodeId, Vec<ChangeEvent>>,
    pub(crate) node_counter: u64,
    pub(crate) rel_counter: u64,
    pub(crate) event_counter: u64,
    /// Count of successfully applied mutating operations; doubles as the
    /// journal sequence number of the latest applied command.
    pub(crate) op_counter: u64,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    // ------------------------------------------------------------------
    // Read access

    pub fn node(&self, id: &NodeId) -> Result<&Node> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.clone()))
    }

    pub fn relationship(&self, id: &RelId) -> Result<&Relationship> {
        self.rels
            .get(id)
            .ok_or_else(|| Error::UnknownRelationship(id.clone()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn rel_count(&self) -> usize {
        self.rels.len()
    }

    pub fn chain_count(&self) -> usize {
        self.chains.len()
    }

    /// Sequence number of the most recently applied mutating operation.
    pub fn last_sequence(&self) -> u64 {
        self.op_counter
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn relationships(&self) -> impl Iterator<Item = &Relationship> {
        self.rels.values()
    }

    /// Adjacent node ids over one relationship kind.
    ///
    /// `ParentToChild` lists the children of every relationship of that kind
    /// parented at `node`; `ChildToParent` lists the parent of every
    /// relationship of that kind containing `node` as a child. Order is by
    /// ascending relationship id, then child position; one id may appear
    /// once per relationship that carries it.
    pub fn neighbors(
        &self,
        node: &NodeId,
        kind: RelationshipKind,
        direction: Direction,
    ) -> Result<Vec<NodeId>> {
        self.node(node)?;
        let mut out = Vec::new();
        for rel in self.rels.values() {
            if rel.kind != kind {
                continue;
            }
            match direction {
                Direction::ParentToChild => {
                    if rel.parent == *node {
                        out.extend(rel.children.iter().cloned());
                    }
                }
                Direction::ChildToParent => {
                    if rel.children.contains(node) {
                        out.push(rel.parent.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    // ------------------------------------------------------------------
    // Node creation

    /// Creates a node at the given coordinate.
    ///
    /// The payload must match the coordinate: model-layer and meta-level
    /// nodes carry a `TypeDescription` (version 1 — later versions are
    /// minted only by type evolution), instance-layer base-level nodes carry
    /// a value map. Creating a model-layer description also opens its
    /// version chain, so the description name must be unused by any chain;
    /// `(level, name, version)` must be unique among all descriptions.
    pub fn create_node(&mut self, layer: Layer, level: Level, payload: Payload) -> Result<NodeId> {
        let seq = self.op_counter + 1;
        let wants_description = layer == Layer::Model || level == Level::Meta;
        match (&payload, wants_description) {
            (Payload::Values(_), true) => {
                return Err(Error::MalformedPayload(format!(
                    "a {layer}-layer {level}-level node must carry a type description"
                )));
            }
            (Payload::Description(_), false) => {
                return Err(Error::MalformedPayload(
                    "an instance-layer base-level node carries plain values, not a description"
                        .to_string(),
                ));
            }
            _ => {}
        }
        if let Payload::Values(map) = &payload {
            for (name, value) in map {
                valid_attr_name(name)?;
                value.check_storable().map_err(Error::MalformedPayload)?;
            }
        }
        if let Payload::Description(desc) = &payload {
            desc.validate()?;
            if desc.version != 1 {
                return Err(Error::MalformedPayload(format!(
                    "new descriptions start at version 1, got {}; later versions are minted by evolution",
                    desc.version
                )));
            }
            if self.description_exists(level, &desc.name, desc.version) {
                return Err(Error::MalformedPayload(format!(
                    "a {}-level description {:?} version {} already exists",
                    level, desc.name, desc.version
                )));
            }
            if layer == Layer::Model && self.chains.contains_key(&desc.name) {
                return Err(Error::MalformedPayload(format!(
                    "type name {:?} is already taken by a version chain",
                    desc.name
                )));
            }
        }
        self.node_counter += 1;
        let id = NodeId::minted(self.node_counter);
        if let (Layer::Model, Payload::Description(desc)) = (layer, &payload) {
            self.chains
                .insert(desc.name.clone(), Chain::opened(desc.name.clone(), level, id.clone(), seq));
        }
        self.nodes.insert(
            id.clone(),
            Node {
                id: id.clone(),
                layer,
                level,
                version: 1,
                payload,
            },
        );
        self.op_counter = seq;
        Ok(id)
    }

    pub(crate) fn description_exists(&self, level: Level, name: &str, version: u64) -> bool {
        self.nodes.values().any(|n| {
            n.level == level
                && n.payload
                    .description()
                    .is_some_and(|d| d.name == name && d.version == version)
        })
    }

    /// Mints a node without the public-operation bookkeeping; used by type
    /// evolution and copy propagation, which mint nodes mid-operation.
    pub(crate) fn mint_node(
        &mut self,
        layer: Layer,
        level: Level,
        version: u64,
        payload: Payload,
    ) -> NodeId {
        self.node_counter += 1;
        let id = NodeId::minted(self.node_counter);
        self.nodes.insert(
            id.clone(),
            Node {
                id: id.clone(),
                layer,
                level,
                version,
                payload,
            },
        );
        id
    }

    // ------------------------------------------------------------------
    // Relationship creation

    /// Creates a relationship of `kind` from `parent` to `children`, with an
    /// explicit policy or the kind's default.
    ///
    /// Checks, in order: parent and children exist; children are non-empty
    /// and duplicate-free; no self-link; order kinds stay acyclic; layered
    /// kinds respect their placement rules (see the layer module).
    pub fn create_relationship(
        &mut self,
        kind: RelationshipKind,
        parent: NodeId,
        children: Vec<NodeId>,
        policy: Option<PropagationPolicy>,
    ) -> Result<RelId> {
        let seq = self.op_counter + 1;
        self.node(&parent)?;
        if children.is_empty() {
            return Err(Error::EmptyChildren);
        }
        for child in &children {
            self.node(child)?;
        }
        for i in 0..children.len() {
            if children[i] == parent {
                return Err(Error::CycleRejected(format!(
                    "{} may not be its own {} child",
                    parent,
                    kind.as_str()
                )));
            }
            for j in (i + 1)..children.len() {
                if children[i] == children[j] {
                    return Err(Error::MalformedPayload(format!(
                        "duplicate child {} — children form an ordered set",
                        children[i]
                    )));
                }
            }
        }
        if kind.is_order() && !self.check_antisymmetry(kind, &parent, &children) {
            return Err(Error::CycleRejected(format!(
                "linking {} over {} would close a cycle",
                parent,
                kind.as_str()
            )));
        }
        match kind {
            RelationshipKind::Describes => self.check_describes_link(&parent, &children)?,
            RelationshipKind::InstanceOf => self.check_instance_of_link(&parent, &children)?,
            _ => {}
        }
        let policy = policy.unwrap_or_else(|| crate::relations::default_policy(kind));
        self.rel_counter += 1;
        let id = RelId::minted(self.rel_counter);
        self.rels.insert(
            id.clone(),
            Relationship {
                id: id.clone(),
                kind,
                parent,
                children,
                policy,
                attributes: AttributeValueMap::new(),
            },
        );
        self.op_counter = seq;
        Ok(id)
    }

    /// Mints a relationship without the public-operation bookkeeping; used
    /// by compound operations that create links mid-flight after doing
    /// their own validation.
    pub(crate) fn mint_relationship(
        &mut self,
        kind: RelationshipKind,
        parent: NodeId,
        children: Vec<NodeId>,
        policy: PropagationPolicy,
        attributes: AttributeValueMap,
    ) -> RelId {
        self.rel_counter += 1;
        let id = RelId::minted(self.rel_counter);
        self.rels.insert(
            id.clone(),
            Relationship {
                id: id.clone(),
                kind,
                parent,
                children,
                policy,
                attributes,
            },
        );
        id
    }

    // ------------------------------------------------------------------
    // Attribute and policy mutation

    /// Sets one named value on an instance node.
    ///
    /// Description-carrying nodes reject in-place edits — descriptions
    /// change only through evolution. If the node is classified, the value
    /// must conform to the model's effective schema. Publishes a change
    /// notice to the node's subscribers.
    pub fn set_attribute(
        &mut self,
        node: &NodeId,
        name: &str,
        value: AttrValue,
    ) -> Result<Vec<Delivery>> {
        let seq = self.op_counter + 1;
        let n = self.node(node)?;
        if n.payload.description().is_some() {
            return Err(Error::MalformedPayload(format!(
                "{node} carries a type description; descriptions change only through evolution"
            )));
        }
        valid_attr_name(name)?;
        value.check_storable().map_err(Error::MalformedPayload)?;
        if let Some(model) = self.instance_model(node) {
            let schema = self.effective_schema(&model)?;
            match schema.iter().find(|s| s.name == name) {
                None => {
                    return Err(Error::SchemaMismatch(format!(
                        "attribute {:?} is not declared by the schema of {}",
                        name, model
                    )));
                }
                Some(spec) if spec.kind != value.kind() => {
                    return Err(Error::SchemaMismatch(format!(
                        "attribute {:?} is declared {} but the value is {}",
                        name,
                        spec.kind,
                        value.kind()
                    )));
                }
                Some(_) => {}
            }
        }
        let n = self.nodes.get_mut(node).expect("checked above");
        match &mut n.payload {
            Payload::Values(map) => {
                map.insert(name.to_string(), value);
            }
            Payload::Description(_) => unreachable!("rejected above"),
        }
        let deliveries = self.publish_event(
            node,
            ChangeKind::AttributeSet,
            Some(name.to_string()),
            None,
            None,
        );
        self.op_counter = seq;
        Ok(deliveries)
    }

    /// Sets one named value on a relationship's own attribute map.
    pub fn set_relationship_attribute(
        &mut self,
        rel: &RelId,
        name: &str,
        value: AttrValue,
    ) -> Result<()> {
        let seq = self.op_counter + 1;
        self.relationship(rel)?;
        valid_attr_name(name)?;
        value.check_storable().map_err(Error::MalformedPayload)?;
        self.rels
            .get_mut(rel)
            .expect("checked above")
            .attributes
            .insert(name.to_string(), value);
        self.op_counter = seq;
        Ok(())
    }

    /// Replaces a relationship's propagation policy.
    pub fn set_policy(&mut self, rel: &RelId, policy: PropagationPolicy) -> Result<()> {
        let seq = self.op_counter + 1;
        self.relationship(rel)?;
        self.rels.get_mut(rel).expect("checked above").policy = policy;
        self.op_counter = seq;
        Ok(())
    }

    // ------------------------------------------------------------------
    // Deletion

    /// Deletes a node and everything its delete-enabled aggregation edges
    /// reach.
    ///
    /// The delete walks the aggregation closure under the `delete` flag. If
    /// any reached node is a version-chain member the whole operation is
    /// rejected (`TypeInUse`) — chain members are permanent. Otherwise the
    /// closure is deleted leaves-first; each node publishes a deletion
    /// notice to its subscribers before it disappears, and every
    /// relationship that references a deleted node as parent — or loses its
    /// last child — is deleted with it. No dangling reference survives.
    pub fn delete_node(&mut self, id: &NodeId) -> Result<DeleteReport> {
        let seq = self.op_counter + 1;
        let order = self.closure(id, RelationshipKind::Aggregation, OpFlag::Delete)?;
        for n in order.nodes() {
            if self.nodes[n].layer == Layer::Model {
                return Err(Error::TypeInUse(n.clone()));
            }
        }
        let mut dead_rels: BTreeSet<RelId> = BTreeSet::new();
        let mut deliveries = Vec::new();
        for n in order.nodes().iter().rev() {
            deliveries.extend(self.publish_event(n, ChangeKind::Deleted, None, None, None));
            self.remove_single_node(n, &mut dead_rels);
        }
        self.op_counter = seq;
        Ok(DeleteReport {
            nodes: order.into_nodes(),
            rels: dead_rels.into_iter().collect(),
            deliveries,
        })
    }

    /// Removes one node plus every relationship it parents, and prunes it
    /// from child sets; relationships left childless are removed too.
    fn remove_single_node(&mut self, id: &NodeId, dead_rels: &mut BTreeSet<RelId>) {
        self.nodes.remove(id);
        self.inboxes.remove(id);
        let parented: Vec<RelId> = self
            .rels
            .iter()
            .filter(|(_, r)| r.parent == *id)
            .map(|(rid, _)| rid.clone())
            .collect();
        for rid in parented {
            self.rels.remove(&rid);
            dead_rels.insert(rid);
        }
        let mut emptied = Vec::new();
        for (rid, rel) in self.rels.iter_mut() {
            if rel.children.contains(id) {
                rel.children.retain(|c| c != id);
                if rel.children.is_empty() {
                    emptied.push(rid.clone());
                }
            }
        }
        for rid in emptied {
            self.rels.remove(&rid);
            dead_rels.insert(rid);
        }
    }

    // ------------------------------------------------------------------
    // Integrity audit

    /// Checks every structural invariant of the store and reports each
    /// violation as one line. An empty report means the store is sound.
    /// The audit never mutates; it exists so persistence can verify loads
    /// and tests can assert invariants hold after every operation.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (id, node) in &self.nodes {
            if *id != node.id {
                out.push(format!("node {} is keyed under {}", node.id, id));
            }
            let wants_description = node.layer == Layer::Model || node.level == Level::Meta;
            match (&node.payload, wants_description) {
                (Payload::Values(_), true) => {
                    out.push(format!("node {} should carry a description", id));
                }
                (Payload::Description(_), false) => {
                    out.push(format!("node {} should carry plain values", id));
                }
                _ => {}
            }
            if node.version == 0 {
                out.push(format!("node {} has version 0", id));
            }
        }
        for (id, rel) in &self.rels {
            if *id != rel.id {
                out.push(format!("relationship {} is keyed under {}", rel.id, id));
            }
            if rel.children.is_empty() {
                out.push(format!("relationship {} has no children", id));
            }
            if !self.nodes.contains_key(&rel.parent) {
                out.push(format!("relationship {} has dangling parent {}", id, rel.parent));
            }
            let mut seen = BTreeSet::new();
            for child in &rel.children {
                if !self.nodes.contains_key(child) {
                    out.push(format!("relationship {} has dangling child {}", id, child));
                }
                if !seen.insert(child) {
                    out.push(format!("relationship {} repeats child {}", id, child));
                }
                if *child == rel.parent {
                    out.push(format!("relationship {} is a self-link on {}", id, child));
                }
            }
        }
        for kind in [RelationshipKind::Aggregation, RelationshipKind::Generalization] {
            if let Some(node) = self.find_order_cycle(kind) {
                out.push(format!("{} edges form a cycle through {}", kind, node));
            }
        }
        out.extend(self.audit_layers());
        out.extend(self.audit_chains());
        for node in self.inboxes.keys() {
            if !self.nodes.contains_key(node) {
                out.push(format!("inbox exists for unknown node {}", node));
            }
        }
        let mut descs: BTreeMap<(Level, &str, u64), &NodeId> = BTreeMap::new();
        for (id, node) in &self.nodes {
            if let Some(d) = node.payload.description() {
                if let Some(first) = descs.insert((node.level, d.name.as_str(), d.version), id) {
                    out.push(format!(
                        "descriptions {} and {} both claim {}-level {:?} version {}",
                        first, id, node.level, d.name, d.version
                    ));
                }
            }
        }
        out
    }

    /// Returns a node on a cycle over `kind` edges, if one exists.
    fn find_order_cycle(&self, kind: RelationshipKind) -> Option<NodeId> {
        // Kahn's algorithm: whatever survives repeated leaf-stripping is
        // cyclic.
        let mut indegree: BTreeMap<&NodeId, usize> =
            self.nodes.keys().map(|id| (id, 0)).collect();
        let mut edges: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for rel in self.rels.values() {
            if rel.kind != kind {
                continue;
            }
            for child in &rel.children {
                if self.nodes.contains_key(&rel.parent) && self.nodes.contains_key(child) {
                    edges.entry(&rel.parent).or_default().push(child);
                    *indegree.get_mut(child).expect("all nodes present") += 1;
                }
            }
        }
        let mut queue: Vec<&NodeId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut remaining = indegree.len();
        while let Some(id) = queue.pop() {
            remaining -= 1;
            if let Some(children) = edges.get(id) {
                for child in children {
                    let d = indegree.get_mut(child).expect("all nodes present");
                    *d -= 1;
                    if *d == 0 {
                        queue.push(child);
                    }
                }
            }
        }
        if remaining == 0 {
            None
        } else {
            indegree
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .map(|(id, _)| id.clone())
                .next()
        }
    }
}

pub(crate) fn valid_attr_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::MalformedPayload(format!(
            "bad attribute name {name:?}"
        )));
    }
    Ok(())
}
