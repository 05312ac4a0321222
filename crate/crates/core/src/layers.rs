//! The two-axis discipline: classification links, description links, and
//! the rules that keep the four quadrants coherent.
//!
//! An `instance-of` link runs from a model-layer node (the classifier) to
//! instance-layer nodes at the same level. A `describes` link runs from a
//! meta-level node (the describer) to base-level nodes in the same layer.
//! A node is classified by at most one model node.
//!
//! The two link families must commute. When a described instance and its
//! describer are both classified, their classifiers must themselves be
//! joined by a description link:
//!
//! ```text
//!        describes
//!   D ──────────────▶ M          D = model of the describer
//!   ▲                 ▲          M = model of the described instance
//!   │ instance-of     │ instance-of
//!   │                 │
//!   T ──────────────▶ B          T describes B
//!        describes
//! ```
//!
//! Any link that would complete the lower rungs of such a square while the
//! top edge is missing is rejected with `SquareViolation`. Deletions can
//! never re-open an accepted square: removing a rung removes the obligation
//! with it.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{Layer, Level, Payload, RelationshipKind, Store};
use crate::id::{NodeId, RelId};
use crate::schema::AttributeSpec;
use crate::value::AttributeValueMap;

/// The closed vocabulary of modeling constructs the store itself is built
/// from. Descriptions are Classes made of Attributes and Operations; plain
/// objects are Nodes wired by Relationships into a Graph; Association and
/// Component name the relationship roles (dependency-like and
/// aggregation-like) in that vocabulary.
pub const BUILTIN_CONSTRUCTS: [&str; 8] = [
    "Class",
    "Attribute",
    "Association",
    "Operation",
    "Component",
    "Graph",
    "Node",
    "Relationship",
];

/// The construct vocabulary, in its frozen order.
pub fn builtin_constructs() -> Vec<String> {
    BUILTIN_CONSTRUCTS.iter().map(|s| s.to_string()).collect()
}

impl Store {
    /// The model node classifying `node`, if any.
    pub fn instance_model(&self, node: &NodeId) -> Option<NodeId> {
        self.rels
            .values()
            .find(|r| r.kind == RelationshipKind::InstanceOf && r.children.contains(node))
            .map(|r| r.parent.clone())
    }

    /// Is there a describes edge from `meta` to `base`?
    pub(crate) fn describes_edge(&self, meta: &NodeId, base: &NodeId) -> bool {
        self.rels.values().any(|r| {
            r.kind == RelationshipKind::Describes
                && r.parent == *meta
                && r.children.contains(base)
        })
    }

    /// Classifies `instance` under `model`: sugar for creating an
    /// `instance-of` relationship.
    pub fn link_instance_of(&mut self, instance: &NodeId, model: &NodeId) -> Result<RelId> {
        self.create_relationship(
            RelationshipKind::InstanceOf,
            model.clone(),
            vec![instance.clone()],
            None,
        )
    }

    /// Records that `meta` describes `base`: sugar for creating a
    /// `describes` relationship.
    pub fn link_described_by(&mut self, base: &NodeId, meta: &NodeId) -> Result<RelId> {
        self.create_relationship(
            RelationshipKind::Describes,
            meta.clone(),
            vec![base.clone()],
            None,
        )
    }

    /// Placement and square rules for a new describes link `parent →
    /// children`.
    pub(crate) fn check_describes_link(
        &self,
        parent: &NodeId,
        children: &[NodeId],
    ) -> Result<()> {
        let p = self.node(parent)?;
        if p.level != Level::Meta {
            return Err(Error::LayerRuleViolation(format!(
                "describer {parent} must be meta-level, is {}-level",
                p.level
            )));
        }
        for child in children {
            let c = self.node(child)?;
            if c.level != Level::Base {
                return Err(Error::LayerRuleViolation(format!(
                    "described node {child} must be base-level, is {}-level",
                    c.level
                )));
            }
            if c.layer != p.layer {
                return Err(Error::LayerRuleViolation(format!(
                    "describes links stay within one layer: {parent} is {}-layer, {child} is {}-layer",
                    p.layer, c.layer
                )));
            }
            if let (Some(d), Some(m)) = (self.instance_model(parent), self.instance_model(child)) {
                if !self.describes_edge(&d, &m) {
                    return Err(Error::SquareViolation(format!(
                        "{parent} describes {child}, but their models {d} and {m} lack a describes link"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Placement, uniqueness, conformance, and square rules for a new
    /// instance-of link `parent → children`.
    pub(crate) fn check_instance_of_link(
        &self,
        parent: &NodeId,
        children: &[NodeId],
    ) -> Result<()> {
        let model = self.node(parent)?;
        if model.layer != Layer::Model {
            return Err(Error::LayerRuleViolation(format!(
                "classifier {parent} must be model-layer, is {}-layer",
                model.layer
            )));
        }
        for child in children {
            let inst = self.node(child)?;
            if inst.layer != Layer::Instance {
                return Err(Error::LayerRuleViolation(format!(
                    "classified node {child} must be instance-layer, is {}-layer",
                    inst.layer
                )));
            }
            if inst.level != model.level {
                return Err(Error::LayerRuleViolation(format!(
                    "instance-of links stay within one level: {parent} is {}-level, {child} is {}-level",
                    model.level, inst.level
                )));
            }
            if self.instance_model(child).is_some() {
                return Err(Error::AlreadyInstantiated(child.clone()));
            }
            if let Payload::Values(values) = &inst.payload {
                self.check_conformance(values, parent)?;
            }
            // The new classification edge may complete squares on either
            // side: the child as described instance, or the child as
            // describer.
            for rel in self.rels.values() {
                if rel.kind != RelationshipKind::Describes {
                    continue;
                }
                if rel.children.contains(child) {
                    if let Some(d) = self.instance_model(&rel.parent) {
                        if !self.describes_edge(&d, parent) {
                            return Err(Error::SquareViolation(format!(
                                "{} describes {child}, but their models {d} and {parent} lack a describes link",
                                rel.parent
                            )));
                        }
                    }
                }
                if rel.parent == *child {
                    for base in &rel.children {
                        if let Some(m) = self.instance_model(base) {
                            if !self.describes_edge(parent, &m) {
                                return Err(Error::SquareViolation(format!(
                                    "{child} describes {base}, but their models {parent} and {m} lack a describes link"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Do these values conform to the model's effective schema? Every value
    /// must be declared with a matching kind; declared attributes may be
    /// absent.
    pub(crate) fn check_conformance(
        &self,
        values: &AttributeValueMap,
        model: &NodeId,
    ) -> Result<()> {
        let schema = self.effective_schema(model)?;
        for (name, value) in values {
            match schema.iter().find(|s| s.name == *name) {
                None => {
                    return Err(Error::SchemaMismatch(format!(
                        "attribute {name:?} is not declared by the schema of {model}"
                    )));
                }
                Some(spec) if spec.kind != value.kind() => {
                    return Err(Error::SchemaMismatch(format!(
                        "attribute {name:?} is declared {} but the value is {}",
                        spec.kind,
                        value.kind()
                    )));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// The full attribute schema of a description-carrying node: its own
    /// specs (declaration order) plus everything inherited over
    /// generalization links, nearest first.
    ///
    /// Own specs shadow inherited ones of the same name. Identical
    /// inherited definitions arriving over different paths merge; same name
    /// with different kinds is `AmbiguousInheritance`. Version-successor
    /// links inside chains are not inheritance and are skipped.
    pub fn effective_schema(&self, id: &NodeId) -> Result<Vec<AttributeSpec>> {
        let node = self.node(id)?;
        if node.payload.description().is_none() {
            return Err(Error::NotAType(id.clone()));
        }
        let successors = self.successor_rel_ids();
        let mut visiting = BTreeSet::new();
        self.resolve_schema(id, &successors, &mut visiting)
    }

    fn resolve_schema(
        &self,
        id: &NodeId,
        successors: &BTreeSet<RelId>,
        visiting: &mut BTreeSet<NodeId>,
    ) -> Result<Vec<AttributeSpec>> {
        if !visiting.insert(id.clone()) {
            return Err(Error::AmbiguousInheritance(format!(
                "generalization cycle through {id}"
            )));
        }
        let desc = self.nodes[id]
            .payload
            .description()
            .expect("resolution only recurses into description nodes");
        let own: Vec<AttributeSpec> = desc.attributes.clone();
        let mut result = own.clone();
        for rel in self.rels.values() {
            if rel.kind != RelationshipKind::Generalization
                || successors.contains(&rel.id)
                || !rel.children.contains(id)
            {
                continue;
            }
            if self.nodes[&rel.parent].payload.description().is_none() {
                continue;
            }
            for spec in self.resolve_schema(&rel.parent, successors, visiting)? {
                if own.iter().any(|s| s.name == spec.name) {
                    continue;
                }
                match result.iter().find(|s| s.name == spec.name) {
                    None => result.push(spec),
                    Some(existing) if existing.kind == spec.kind => {}
                    Some(existing) => {
                        return Err(Error::AmbiguousInheritance(format!(
                            "attribute {:?} inherited as both {} and {}",
                            spec.name, existing.kind, spec.kind
                        )));
                    }
                }
            }
        }
        visiting.remove(id);
        Ok(result)
    }

    /// The modeling construct a node realizes: `Class` for
    /// description-carrying nodes, `Node` for plain objects.
    pub fn construct_of(&self, id: &NodeId) -> Result<&'static str> {
        Ok(match self.node(id)?.payload {
            Payload::Description(_) => "Class",
            Payload::Values(_) => "Node",
        })
    }

    /// Layer-discipline section of the store audit.
    pub(crate) fn audit_layers(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (rid, rel) in &self.rels {
            match rel.kind {
                RelationshipKind::InstanceOf => {
                    let Ok(model) = self.node(&rel.parent) else { continue };
                    if model.layer != Layer::Model {
                        out.push(format!(
                            "instance-of {rid} has non-model classifier {}",
                            rel.parent
                        ));
                    }
                    for child in &rel.children {
                        let Ok(inst) = self.node(child) else { continue };
                        if inst.layer != Layer::Instance {
                            out.push(format!(
                                "instance-of {rid} classifies non-instance {child}"
                            ));
                        }
                        if inst.level != model.level {
                            out.push(format!("instance-of {rid} crosses levels at {child}"));
                        }
                        if let Payload::Values(values) = &inst.payload {
                            if let Err(e) = self.check_conformance(values, &rel.parent) {
                                out.push(format!("instance {child} does not conform: {e}"));
                            }
                        }
                    }
                }
                RelationshipKind::Describes => {
                    let Ok(describer) = self.node(&rel.parent) else { continue };
                    if describer.level != Level::Meta {
                        out.push(format!(
                            "describes {rid} has non-meta describer {}",
                            rel.parent
                        ));
                    }
                    for child in &rel.children {
                        let Ok(described) = self.node(child) else { continue };
                        if described.level != Level::Base {
                            out.push(format!("describes {rid} describes non-base {child}"));
                        }
                        if described.layer != describer.layer {
                            out.push(format!("describes {rid} crosses layers at {child}"));
                        }
                        if let (Some(d), Some(m)) = (
                            self.instance_model(&rel.parent),
                            self.instance_model(child),
                        ) {
                            if !self.describes_edge(&d, &m) {
                                out.push(format!(
                                    "square open: {} describes {child} but {d} and {m} are unlinked",
                                    rel.parent
                                ));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        let mut classified: BTreeSet<&NodeId> = BTreeSet::new();
        for rel in self.rels.values() {
            if rel.kind != RelationshipKind::InstanceOf {
                continue;
            }
            for child in &rel.children {
                if !classified.insert(child) {
                    out.push(format!("node {child} is classified more than once"));
                }
            }
        }
        out
    }
}
