//! Type evolution: linear version chains, deltas, and explicit instance
//! migration.
//!
//! Every model-layer description opens a chain at version 1. A chain grows
//! only by applying an `EvolutionDelta` to its latest version, which mints
//! a brand-new description node — earlier versions stay untouched and
//! their instances keep running against them. Chain members are joined by
//! generalization links marked as version successors; successor links
//! default every propagation flag off and are excluded from inheritance,
//! so minting a version never touches existing instances.
//!
//! Instances change versions only through `migrate_instance`, which maps
//! attribute values across the delta path (renames carry values, removals
//! drop them, additions demand explicit fill values), re-points the
//! classification link, and bumps the instance's version counter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Layer, Level, Payload, PropagationPolicy, RelationshipKind, Store};
use crate::id::{NodeId, RelId};
use crate::relations::{ChangeKind, Delivery};
use crate::schema::{AttributeSpec, TypeDescription};
use crate::value::{AttrValue, AttributeValueMap};

/// One attribute rename inside a delta.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenamePair {
    pub from: String,
    pub to: String,
}

/// The difference between two consecutive versions of a description.
///
/// Applied in the order renames, removals, additions; added specs append at
/// the end of the declaration order. A name may appear in at most one of
/// the three lists.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionDelta {
    #[serde(default)]
    pub add: Vec<AttributeSpec>,
    #[serde(default)]
    pub remove: Vec<String>,
    #[serde(default)]
    pub rename: Vec<RenamePair>,
}

impl EvolutionDelta {
    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.remove.is_empty() && self.rename.is_empty()
    }
}

/// One version slot of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    /// The description node holding this version.
    pub node: NodeId,
    /// Sequence number of the operation that minted the version.
    pub seq: u64,
    /// The successor link from the previous version (absent at version 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub succ_rel: Option<RelId>,
    /// The delta that produced this version (absent at version 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<EvolutionDelta>,
}

/// The linear version history of one named type. Entry `i` holds version
/// `i + 1`; the chain is append-only and its member nodes are permanent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub name: String,
    pub level: Level,
    pub entries: Vec<ChainEntry>,
}

impl Chain {
    pub(crate) fn opened(name: String, level: Level, node: NodeId, seq: u64) -> Self {
        Chain {
            name,
            level,
            entries: vec![ChainEntry {
                node,
                seq,
                succ_rel: None,
                delta: None,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The node holding `version`, if the chain reaches it.
    pub fn version_node(&self, version: u64) -> Option<&NodeId> {
        if version == 0 {
            return None;
        }
        self.entries.get((version - 1) as usize).map(|e| &e.node)
    }
}

/// Picks chain versions in queries: a specific version or all of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VersionSelector {
    Any,
    At(u64),
}

impl Serialize for VersionSelector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            VersionSelector::Any => serializer.serialize_str("any"),
            VersionSelector::At(v) => serializer.serialize_u64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for VersionSelector {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = VersionSelector;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a version number or the string \"any\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(VersionSelector::At(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                u64::try_from(v)
                    .map(VersionSelector::At)
                    .map_err(|_| E::custom("version must be non-negative"))
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Self::Value, E> {
                if s == "any" {
                    Ok(VersionSelector::Any)
                } else {
                    Err(E::custom(format!(
                        "expected a version number or \"any\", got {s:?}"
                    )))
                }
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl FromStr for VersionSelector {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "any" {
            return Ok(VersionSelector::Any);
        }
        s.parse::<u64>()
            .map(VersionSelector::At)
            .map_err(|_| format!("expected a version number or \"any\", got {s:?}"))
    }
}

impl fmt::Display for VersionSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VersionSelector::Any => f.write_str("any"),
            VersionSelector::At(v) => write!(f, "{v}"),
        }
    }
}

/// One line of a `version_history` answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub version: u64,
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<EvolutionDelta>,
}

/// Result of evolving a type.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolveReport {
    /// The freshly minted description node.
    pub node: NodeId,
    /// The successor link joining it to its predecessor.
    pub rel: RelId,
    /// The new chain version.
    pub version: u64,
    /// Change notices published by the predecessor node.
    pub deliveries: Vec<Delivery>,
}

/// Result of migrating an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct MigrateReport {
    pub instance: NodeId,
    pub from_version: u64,
    pub to_version: u64,
    /// The instance's own version counter after the bump.
    pub node_version: u64,
    /// A classification link minted by the migration, if the target version
    /// had none to join.
    pub rel_created: Option<RelId>,
    pub deliveries: Vec<Delivery>,
}

/// Rejects a delta that does not cleanly apply to `desc`.
pub fn validate_delta(desc: &TypeDescription, delta: &EvolutionDelta) -> Result<()> {
    let mut mentioned: Vec<&str> = Vec::new();
    mentioned.extend(delta.add.iter().map(|s| s.name.as_str()));
    mentioned.extend(delta.remove.iter().map(|s| s.as_str()));
    mentioned.extend(delta.rename.iter().map(|p| p.from.as_str()));
    mentioned.extend(delta.rename.iter().map(|p| p.to.as_str()));
    let mut sorted = mentioned.clone();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidDelta(format!(
                "name {:?} appears more than once in the delta",
                w[0]
            )));
        }
    }
    for name in &mentioned {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidDelta(format!("bad attribute name {name:?}")));
        }
    }
    for spec in &delta.add {
        if desc.spec(&spec.name).is_some() {
            return Err(Error::InvalidDelta(format!(
                "cannot add {:?}: already declared by version {}",
                spec.name, desc.version
            )));
        }
    }
    for name in &delta.remove {
        if desc.spec(name).is_none() {
            return Err(Error::InvalidDelta(format!(
                "cannot remove {:?}: not declared by version {}",
                name, desc.version
            )));
        }
    }
    for pair in &delta.rename {
        if desc.spec(&pair.from).is_none() {
            return Err(Error::InvalidDelta(format!(
                "cannot rename {:?}: not declared by version {}",
                pair.from, desc.version
            )));
        }
        if desc.spec(&pair.to).is_some() {
            return Err(Error::InvalidDelta(format!(
                "cannot rename {:?} to {:?}: target already declared",
                pair.from, pair.to
            )));
        }
    }
    Ok(())
}

/// Applies a validated delta, producing the next version of `desc`.
/// Renames run first, then removals, then additions; operations are fixed
/// at definition time and pass through unchanged.
pub fn apply_delta(desc: &TypeDescription, delta: &EvolutionDelta) -> TypeDescription {
    let mut next = desc.clone();
    next.version += 1;
    for pair in &delta.rename {
        if let Some(spec) = next.attributes.iter_mut().find(|s| s.name == pair.from) {
            spec.name = pair.to.clone();
        }
    }
    next.attributes.retain(|s| !delta.remove.contains(&s.name));
    next.attributes.extend(delta.add.iter().cloned());
    next
}

impl Store {
    /// The version chain named `name`.
    pub fn chain(&self, name: &str) -> Result<&Chain> {
        self.chains
            .get(name)
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn chains(&self) -> impl Iterator<Item = &Chain> {
        self.chains.values()
    }

    /// Ids of all version-successor links, across every chain.
    pub(crate) fn successor_rel_ids(&self) -> BTreeSet<RelId> {
        self.chains
            .values()
            .flat_map(|c| c.entries.iter().filter_map(|e| e.succ_rel.clone()))
            .collect()
    }

    /// Is this node a member of any version chain?
    pub fn is_chain_member(&self, id: &NodeId) -> bool {
        self.chains
            .values()
            .any(|c| c.entries.iter().any(|e| e.node == *id))
    }

    /// Grows the chain `name` by one version.
    ///
    /// Validates the delta against the latest version's own specs, mints
    /// the new description node, joins it to its predecessor with a
    /// successor link (a generalization link with every flag off and a
    /// `successor` marker attribute), and publishes a version-bump notice
    /// from the predecessor. No instance payload changes.
    pub fn evolve_type(&mut self, name: &str, delta: EvolutionDelta) -> Result<EvolveReport> {
        let seq = self.op_counter + 1;
        let chain = self.chain(name)?;
        let level = chain.level;
        let latest = chain
            .entries
            .last()
            .expect("chains are never empty")
            .node
            .clone();
        let latest_desc = self.nodes[&latest]
            .payload
            .description()
            .expect("chain members carry descriptions")
            .clone();
        validate_delta(&latest_desc, &delta)?;
        let next_desc = apply_delta(&latest_desc, &delta);
        let version = next_desc.version;
        if self.description_exists(level, name, version) {
            return Err(Error::MalformedPayload(format!(
                "a {level}-level description {name:?} version {version} already exists"
            )));
        }
        let node = self.mint_node(Layer::Model, level, 1, Payload::Description(next_desc));
        let mut attrs = AttributeValueMap::new();
        attrs.insert("successor".to_string(), AttrValue::Flag(true));
        let rel = self.mint_relationship(
            RelationshipKind::Generalization,
            latest.clone(),
            vec![node.clone()],
            PropagationPolicy::none(),
            attrs,
        );
        let entry = ChainEntry {
            node: node.clone(),
            seq,
            succ_rel: Some(rel.clone()),
            delta: Some(delta),
        };
        self.chains
            .get_mut(name)
            .expect("looked up above")
            .entries
            .push(entry);
        let deliveries = self.publish_event(&latest, ChangeKind::VersionBump, None, Some(version), None);
        self.op_counter = seq;
        Ok(EvolveReport {
            node,
            rel,
            version,
            deliveries,
        })
    }

    /// The instances classified under the selected version(s) of chain
    /// `name`, in ascending id order.
    pub fn instances_of(&self, name: &str, selector: VersionSelector) -> Result<Vec<NodeId>> {
        let chain = self.chain(name)?;
        let version_nodes: Vec<&NodeId> = match selector {
            VersionSelector::Any => chain.entries.iter().map(|e| &e.node).collect(),
            VersionSelector::At(v) => {
                vec![chain.version_node(v).ok_or(Error::UnknownVersion {
                    name: name.to_string(),
                    version: v,
                })?]
            }
        };
        let mut out: BTreeSet<NodeId> = BTreeSet::new();
        for vnode in version_nodes {
            for rel in self.rels.values() {
                if rel.kind == RelationshipKind::InstanceOf && rel.parent == *vnode {
                    out.extend(rel.children.iter().cloned());
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// The full version history of chain `name`: one entry per version with
    /// the delta that produced it (none for version 1).
    pub fn version_history(&self, name: &str) -> Result<Vec<HistoryEntry>> {
        let chain = self.chain(name)?;
        Ok(chain
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| HistoryEntry {
                version: (i + 1) as u64,
                seq: e.seq,
                delta: e.delta.clone(),
            })
            .collect())
    }

    /// Moves one instance to another version of its type's chain.
    ///
    /// Attribute values follow the delta path between the versions: renamed
    /// attributes carry their values (compositions and inverses included),
    /// removed attributes drop theirs, and every attribute the path adds
    /// must be supplied in `fill` — no more, no less. Values for inherited
    /// attributes carry over iff the target's effective schema still
    /// declares them. The classification link is re-pointed, the square
    /// rule is re-checked against the target, and the instance's own
    /// version counter bumps by one, publishing a version-bump notice.
    pub fn migrate_instance(
        &mut self,
        instance: &NodeId,
        to_version: u64,
        fill: AttributeValueMap,
    ) -> Result<MigrateReport> {
        let seq = self.op_counter + 1;
        self.node(instance)?;
        let io_rel = self
            .rels
            .values()
            .find(|r| r.kind == RelationshipKind::InstanceOf && r.children.contains(instance))
            .map(|r| r.id.clone())
            .ok_or_else(|| {
                Error::LayerRuleViolation(format!(
                    "cannot migrate {instance}: it is not classified under any model node"
                ))
            })?;
        let source_model = self.rels[&io_rel].parent.clone();
        let chain = self
            .chains
            .values()
            .find(|c| c.entries.iter().any(|e| e.node == source_model))
            .cloned()
            .ok_or_else(|| {
                Error::LayerRuleViolation(format!(
                    "cannot migrate {instance}: its classifier {source_model} is not a chain version"
                ))
            })?;
        let from_version = chain
            .entries
            .iter()
            .position(|e| e.node == source_model)
            .expect("found above") as u64
            + 1;
        let target_node = chain
            .version_node(to_version)
            .ok_or(Error::UnknownVersion {
                name: chain.name.clone(),
                version: to_version,
            })?
            .clone();
        let source_desc = self.nodes[&source_model]
            .payload
            .description()
            .expect("chain members carry descriptions")
            .clone();
        let target_desc = self.nodes[&target_node]
            .payload
            .description()
            .expect("chain members carry descriptions")
            .clone();

        // Compose the rename map along the delta path. Keys are source
        // attribute names; values are where those attributes ended up at the
        // target version. Entries vanish when the attribute does.
        let mut map: BTreeMap<String, String> = source_desc
            .spec_names()
            .map(|n| (n.to_string(), n.to_string()))
            .collect();
        if to_version > from_version {
            for v in (from_version + 1)..=to_version {
                let delta = chain.entries[(v - 1) as usize]
                    .delta
                    .as_ref()
                    .expect("versions past 1 carry deltas");
                for pair in &delta.rename {
                    for val in map.values_mut() {
                        if *val == pair.from {
                            *val = pair.to.clone();
                        }
                    }
                }
                map.retain(|_, val| !delta.remove.contains(val));
            }
        } else {
            for v in ((to_version + 1)..=from_version).rev() {
                let delta = chain.entries[(v - 1) as usize]
                    .delta
                    .as_ref()
                    .expect("versions past 1 carry deltas");
                map.retain(|_, val| !delta.add.iter().any(|s| s.name == *val));
                for pair in &delta.rename {
                    for val in map.values_mut() {
                        if *val == pair.to {
                            *val = pair.from.clone();
                        }
                    }
                }
            }
        }
        let mapped: BTreeSet<&String> = map.values().collect();
        let required: BTreeSet<&str> = target_desc
            .spec_names()
            .filter(|n| !mapped.contains(&n.to_string()))
            .collect();

        let new_payload = match &self.nodes[instance].payload {
            Payload::Description(_) => {
                if !fill.is_empty() {
                    return Err(Error::SchemaMismatch(format!(
                        "fill values have no place on description-carrying instance {instance}"
                    )));
                }
                None
            }
            Payload::Values(values) => {
                for name in &required {
                    if !fill.contains_key(*name) {
                        return Err(Error::MissingFill((*name).to_string()));
                    }
                }
                for (name, value) in &fill {
                    value.check_storable().map_err(Error::MalformedPayload)?;
                    if !required.contains(name.as_str()) {
                        return Err(Error::SchemaMismatch(format!(
                            "unexpected fill for attribute {name:?}"
                        )));
                    }
                    let spec = target_desc.spec(name).expect("required names are target specs");
                    if spec.kind != value.kind() {
                        return Err(Error::SchemaMismatch(format!(
                            "fill for {name:?} is {}, declared {}",
                            value.kind(),
                            spec.kind
                        )));
                    }
                }
                let target_schema = self.effective_schema(&target_node)?;
                let mut next = AttributeValueMap::new();
                for (name, value) in values {
                    if let Some(target_name) = map.get(name) {
                        next.insert(target_name.clone(), value.clone());
                    } else if source_desc.spec(name).is_none()
                        && target_schema
                            .iter()
                            .any(|s| s.name == *name && s.kind == value.kind())
                    {
                        next.insert(name.clone(), value.clone());
                    }
                }
                for (name, value) in &fill {
                    next.insert(name.clone(), value.clone());
                }
                self.check_conformance(&next, &target_node)?;
                Some(next)
            }
        };

        // Re-pointing the classifier must not re-open a description square.
        for rel in self.rels.values() {
            if rel.kind != RelationshipKind::Describes {
                continue;
            }
            if rel.children.contains(instance) {
                if let Some(d) = self.instance_model(&rel.parent) {
                    if !self.describes_edge(&d, &target_node) {
                        return Err(Error::SquareViolation(format!(
                            "{} describes {instance}, but {d} and target model {target_node} lack a describes link",
                            rel.parent
                        )));
                    }
                }
            }
            if rel.parent == *instance {
                for base in &rel.children {
                    if let Some(m) = self.instance_model(base) {
                        if !self.describes_edge(&target_node, &m) {
                            return Err(Error::SquareViolation(format!(
                                "{instance} describes {base}, but target model {target_node} and {m} lack a describes link"
                            )));
                        }
                    }
                }
            }
        }

        // Commit.
        let mut detach_removed = false;
        {
            let rel = self.rels.get_mut(&io_rel).expect("held above");
            rel.children.retain(|c| c != instance);
            if rel.children.is_empty() {
                self.rels.remove(&io_rel);
                detach_removed = true;
            }
        }
        let _ = detach_removed;
        let attach_target: Option<RelId> = self
            .rels
            .iter()
            .filter(|(_, r)| r.kind == RelationshipKind::InstanceOf && r.parent == target_node)
            .map(|(rid, _)| rid.clone())
            .next();
        let rel_created = match attach_target {
            Some(rid) => {
                self.rels
                    .get_mut(&rid)
                    .expect("found above")
                    .children
                    .push(instance.clone());
                None
            }
            None => Some(self.mint_relationship(
                RelationshipKind::InstanceOf,
                target_node.clone(),
                vec![instance.clone()],
                PropagationPolicy::none(),
                AttributeValueMap::new(),
            )),
        };
        let node = self.nodes.get_mut(instance).expect("checked above");
        if let Some(values) = new_payload {
            node.payload = Payload::Values(values);
        }
        node.version += 1;
        let node_version = node.version;
        let deliveries = self.publish_event(
            instance,
            ChangeKind::VersionBump,
            None,
            Some(node_version),
            None,
        );
        self.op_counter = seq;
        Ok(MigrateReport {
            instance: instance.clone(),
            from_version,
            to_version,
            node_version,
            rel_created,
            deliveries,
        })
    }

    /// Chain-discipline section of the store audit.
    pub(crate) fn audit_chains(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut members: BTreeMap<&NodeId, &str> = BTreeMap::new();
        for (name, chain) in &self.chains {
            if chain.name != *name {
                out.push(format!("chain {name:?} is keyed under {:?}", chain.name));
            }
            if chain.entries.is_empty() {
                out.push(format!("chain {name:?} has no versions"));
                continue;
            }
            let mut last_seq = 0;
            for (i, entry) in chain.entries.iter().enumerate() {
                let version = (i + 1) as u64;
                if let Some(prev) = members.insert(&entry.node, name.as_str()) {
                    out.push(format!(
                        "node {} belongs to chains {prev:?} and {name:?}",
                        entry.node
                    ));
                }
                if entry.seq <= last_seq {
                    out.push(format!(
                        "chain {name:?} version {version} has non-increasing sequence"
                    ));
                }
                last_seq = entry.seq;
                let Some(node) = self.nodes.get(&entry.node) else {
                    out.push(format!(
                        "chain {name:?} version {version} points at missing node {}",
                        entry.node
                    ));
                    continue;
                };
                if node.layer != Layer::Model {
                    out.push(format!(
                        "chain {name:?} version {version} node {} is not model-layer",
                        entry.node
                    ));
                }
                if node.level != chain.level {
                    out.push(format!(
                        "chain {name:?} version {version} node {} is on the wrong level",
                        entry.node
                    ));
                }
                match node.payload.description() {
                    None => out.push(format!(
                        "chain {name:?} version {version} node {} carries no description",
                        entry.node
                    )),
                    Some(d) => {
                        if d.name != *name || d.version != version {
                            out.push(format!(
                                "chain {name:?} version {version} node {} is labeled {:?} version {}",
                                entry.node, d.name, d.version
                            ));
                        }
                    }
                }
                match (&entry.succ_rel, i) {
                    (None, 0) => {}
                    (None, _) => out.push(format!(
                        "chain {name:?} version {version} lacks its successor link"
                    )),
                    (Some(rid), 0) => out.push(format!(
                        "chain {name:?} version 1 unexpectedly has successor link {rid}"
                    )),
                    (Some(rid), _) => match self.rels.get(rid) {
                        None => out.push(format!(
                            "chain {name:?} version {version} successor link {rid} is missing"
                        )),
                        Some(rel) => {
                            let prev = &chain.entries[i - 1].node;
                            if rel.kind != RelationshipKind::Generalization
                                || rel.parent != *prev
                                || rel.children != vec![entry.node.clone()]
                            {
                                out.push(format!(
                                    "chain {name:?} version {version} successor link {rid} is malformed"
                                ));
                            }
                        }
                    },
                }
                if (i == 0) != entry.delta.is_none() {
                    out.push(format!(
                        "chain {name:?} version {version} has the wrong delta presence"
                    ));
                }
            }
        }
        for (id, node) in &self.nodes {
            if node.layer == Layer::Model && !members.contains_key(id) {
                out.push(format!("model node {id} belongs to no chain"));
            }
        }
        out
    }
}
