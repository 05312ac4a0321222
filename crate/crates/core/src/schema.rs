//! Type descriptions: the payload of model nodes and of meta-level objects.
//!
//! A `TypeDescription` is itself data — it lives in the payload of a node
//! and is manipulated by the same operations as any other node. Attribute
//! specs are ordered (declaration order is observable in schema queries);
//! names are unique within one description.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::ValueKind;

/// Declares one named, typed attribute slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: ValueKind,
}

impl AttributeSpec {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        AttributeSpec {
            name: name.into(),
            kind,
        }
    }

    /// Parses the CLI spec literal `name:kind`, e.g. `mass:decimal`.
    pub fn parse_literal(s: &str) -> std::result::Result<AttributeSpec, String> {
        let (name, kind) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("bad attribute spec {s:?}: expected name:kind"))?;
        let kind = ValueKind::parse(kind)
            .ok_or_else(|| format!("bad attribute kind {kind:?} in spec {s:?}"))?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(format!("bad attribute name {name:?} in spec {s:?}"));
        }
        Ok(AttributeSpec::new(name, kind))
    }
}

/// The description payload: a named, versioned bundle of attribute specs and
/// operation names.
///
/// Operation names are fixed when the description is created; evolution
/// deltas only touch attribute specs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDescription {
    pub name: String,
    pub version: u64,
    #[serde(default)]
    pub attributes: Vec<AttributeSpec>,
    #[serde(default)]
    pub operations: Vec<String>,
}

impl TypeDescription {
    pub fn new(name: impl Into<String>) -> Self {
        TypeDescription {
            name: name.into(),
            version: 1,
            attributes: Vec::new(),
            operations: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, kind: ValueKind) -> Self {
        self.attributes.push(AttributeSpec::new(name, kind));
        self
    }

    pub fn with_operation(mut self, name: impl Into<String>) -> Self {
        self.operations.push(name.into());
        self
    }

    pub fn spec(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|s| s.name == name)
    }

    pub fn spec_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|s| s.name.as_str())
    }

    /// Structural validity: non-empty whitespace-free name, version >= 1,
    /// unique well-formed spec names, well-formed operation names.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(char::is_whitespace) {
            return Err(Error::MalformedPayload(format!(
                "bad type name {:?}",
                self.name
            )));
        }
        if self.version == 0 {
            return Err(Error::MalformedPayload(
                "type version must be at least 1".to_string(),
            ));
        }
        for spec in &self.attributes {
            if spec.name.is_empty() || spec.name.contains(char::is_whitespace) {
                return Err(Error::MalformedPayload(format!(
                    "bad attribute name {:?} in type {:?}",
                    spec.name, self.name
                )));
            }
        }
        for i in 0..self.attributes.len() {
            for j in (i + 1)..self.attributes.len() {
                if self.attributes[i].name == self.attributes[j].name {
                    return Err(Error::MalformedPayload(format!(
                        "duplicate attribute name {:?} in type {:?}",
                        self.attributes[i].name, self.name
                    )));
                }
            }
        }
        for op in &self.operations {
            if op.is_empty() || op.contains(char::is_whitespace) {
                return Err(Error::MalformedPayload(format!(
                    "bad operation name {:?} in type {:?}",
                    op, self.name
                )));
            }
        }
        Ok(())
    }
}
