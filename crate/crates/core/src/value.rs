//! Typed attribute values.
//!
//! Values appear in three places: the payload of plain object nodes, the
//! attribute map attached to every relationship, and mediated messages.
//! Maps are `BTreeMap`s so every serialization is canonical.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::id::NodeId;

/// The kind of a value, as declared by an attribute spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Text,
    Integer,
    Decimal,
    Flag,
    Ref,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Integer => "integer",
            ValueKind::Decimal => "decimal",
            ValueKind::Flag => "flag",
            ValueKind::Ref => "ref",
        }
    }

    pub fn parse(s: &str) -> Option<ValueKind> {
        match s {
            "text" => Some(ValueKind::Text),
            "integer" => Some(ValueKind::Integer),
            "decimal" => Some(ValueKind::Decimal),
            "flag" => Some(ValueKind::Flag),
            "ref" => Some(ValueKind::Ref),
            _ => None,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A typed attribute value.
///
/// Serialized externally tagged by kind: `{"text":"x"}`, `{"integer":5}`,
/// `{"decimal":1.5}`, `{"flag":true}`, `{"ref":"N000001"}`. `Ref` values are
/// soft references: they name a node but do not pin it, so they may dangle
/// after a delete.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrValue {
    Text(String),
    Integer(i64),
    Decimal(f64),
    Flag(bool),
    Ref(NodeId),
}

impl AttrValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            AttrValue::Text(_) => ValueKind::Text,
            AttrValue::Integer(_) => ValueKind::Integer,
            AttrValue::Decimal(_) => ValueKind::Decimal,
            AttrValue::Flag(_) => ValueKind::Flag,
            AttrValue::Ref(_) => ValueKind::Ref,
        }
    }

    /// Parses the command-line literal syntax: `integer:5`, `decimal:1.5`,
    /// `flag:true`, `ref:N000001`, `text:anything`; a literal without a
    /// recognized prefix is text. Non-finite decimals are rejected because
    /// they have no JSON representation.
    pub fn parse_literal(s: &str) -> Result<AttrValue, String> {
        if let Some(rest) = s.strip_prefix("text:") {
            return Ok(AttrValue::Text(rest.to_string()));
        }
        if let Some(rest) = s.strip_prefix("integer:") {
            return rest
                .parse::<i64>()
                .map(AttrValue::Integer)
                .map_err(|e| format!("bad integer literal {rest:?}: {e}"));
        }
        if let Some(rest) = s.strip_prefix("decimal:") {
            let v = rest
                .parse::<f64>()
                .map_err(|e| format!("bad decimal literal {rest:?}: {e}"))?;
            if !v.is_finite() {
                return Err(format!("decimal literal {rest:?} is not finite"));
            }
            return Ok(AttrValue::Decimal(v));
        }
        if let Some(rest) = s.strip_prefix("flag:") {
            return rest
                .parse::<bool>()
                .map(AttrValue::Flag)
                .map_err(|_| format!("bad flag literal {rest:?}: expected true or false"));
        }
        if let Some(rest) = s.strip_prefix("ref:") {
            if rest.is_empty() || rest.contains(char::is_whitespace) {
                return Err(format!("bad node reference {rest:?}"));
            }
            return Ok(AttrValue::Ref(NodeId::new(rest)));
        }
        Ok(AttrValue::Text(s.to_string()))
    }

    /// Confirms the value survives a JSON round trip. Non-finite decimals
    /// have no JSON representation, so they are refused at every point
    /// where values enter the store.
    pub fn check_storable(&self) -> Result<(), String> {
        match self {
            AttrValue::Decimal(v) if !v.is_finite() => {
                Err(format!("decimal value {v} has no JSON representation"))
            }
            _ => Ok(()),
        }
    }
}

/// Named values carried by plain object nodes and by relationships.
pub type AttributeValueMap = BTreeMap<String, AttrValue>;
