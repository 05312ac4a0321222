//! Layer/level placement rules, classification, conformance checking,
//! commuting-square enforcement, and effective-schema resolution through
//! generalization hierarchies.

mod common;

use common::*;
use ddso_core::*;

fn td(name: &str) -> Payload {
    Payload::Description(TypeDescription::new(name))
}

fn td_with(name: &str, attrs: &[(&str, ValueKind)]) -> Payload {
    let mut d = TypeDescription::new(name);
    for (n, k) in attrs {
        d = d.with_attribute(*n, *k);
    }
    Payload::Description(d)
}

// ----------------------------------------------------------------------
// Payload placement

#[test]
fn payload_kind_is_fixed_by_the_quadrant() {
    let mut store = Store::new();
    // Instance/base holds values; everything else holds descriptions.
    assert!(store
        .create_node(Layer::Instance, Level::Base, Payload::Values(Default::default()))
        .is_ok());
    assert!(store.create_node(Layer::Instance, Level::Meta, td("A")).is_ok());
    assert!(store.create_node(Layer::Model, Level::Base, td("B")).is_ok());
    assert!(store.create_node(Layer::Model, Level::Meta, td("C")).is_ok());

    let err = store
        .create_node(Layer::Instance, Level::Base, td("D"))
        .unwrap_err();
    assert_eq!(err.code(), "MalformedPayload");
    for (layer, level) in [
        (Layer::Instance, Level::Meta),
        (Layer::Model, Level::Base),
        (Layer::Model, Level::Meta),
    ] {
        let err = store
            .create_node(layer, level, Payload::Values(Default::default()))
            .unwrap_err();
        assert_eq!(err.code(), "MalformedPayload");
    }
    assert_sound(&store);
}

#[test]
fn model_layer_descriptions_must_be_well_formed() {
    let mut store = Store::new();
    let mut bad = TypeDescription::new("");
    bad.version = 1;
    let err = store
        .create_node(Layer::Model, Level::Base, Payload::Description(bad))
        .unwrap_err();
    assert_eq!(err.code(), "MalformedPayload");

    let mut v2 = TypeDescription::new("Part");
    v2.version = 2;
    let err = store
        .create_node(Layer::Model, Level::Base, Payload::Description(v2))
        .unwrap_err();
    assert_eq!(err.code(), "MalformedPayload");

    store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let err = store
        .create_node(Layer::Model, Level::Base, td("Part"))
        .unwrap_err();
    assert_eq!(err.code(), "MalformedPayload");
}

// ----------------------------------------------------------------------
// Instance-of links

#[test]
fn instance_of_spans_layers_within_a_level() {
    let mut store = Store::new();
    let model = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let inst = value_node(&mut store);
    store.link_instance_of(&inst, &model).unwrap();
    assert_eq!(store.instance_model(&inst), Some(model.clone()));

    // Wrong direction: instance-layer parent.
    let other = value_node(&mut store);
    let err = store
        .create_relationship(
            RelationshipKind::InstanceOf,
            other.clone(),
            vec![inst.clone()],
            None,
        )
        .unwrap_err();
    assert_eq!(err.code(), "LayerRuleViolation");

    // Level mismatch: meta model over base instance is fine, but a base
    // model cannot classify a meta instance.
    let meta_inst = store
        .create_node(Layer::Instance, Level::Meta, td("PartType#1"))
        .unwrap();
    let err = store.link_instance_of(&meta_inst, &model).unwrap_err();
    assert_eq!(err.code(), "LayerRuleViolation");
    assert_sound(&store);
}

#[test]
fn second_classification_is_rejected() {
    let mut store = Store::new();
    let m1 = store.create_node(Layer::Model, Level::Base, td("A")).unwrap();
    let m2 = store.create_node(Layer::Model, Level::Base, td("B")).unwrap();
    let inst = value_node(&mut store);
    store.link_instance_of(&inst, &m1).unwrap();
    let err = store.link_instance_of(&inst, &m2).unwrap_err();
    assert_eq!(err.code(), "AlreadyInstantiated");
    let err = store.link_instance_of(&inst, &m1).unwrap_err();
    assert_eq!(err.code(), "AlreadyInstantiated");
}

#[test]
fn classification_checks_existing_values_against_the_schema() {
    let mut store = Store::new();
    let model = store
        .create_node(
            Layer::Model,
            Level::Base,
            td_with("Part", &[("code", ValueKind::Text), ("mass", ValueKind::Decimal)]),
        )
        .unwrap();
    let good = value_node(&mut store);
    store
        .set_attribute(&good, "code", AttrValue::Text("X-1".into()))
        .unwrap();
    store.link_instance_of(&good, &model).unwrap();

    let bad = value_node(&mut store);
    store.set_attribute(&bad, "mass", AttrValue::Text("heavy".into())).unwrap();
    let err = store.link_instance_of(&bad, &model).unwrap_err();
    assert_eq!(err.code(), "SchemaMismatch");

    let undeclared = value_node(&mut store);
    store.set_attribute(&undeclared, "color", AttrValue::Text("red".into())).unwrap();
    let err = store.link_instance_of(&undeclared, &model).unwrap_err();
    assert_eq!(err.code(), "SchemaMismatch");
    assert_sound(&store);
}

/// Once classified, attribute writes are checked against the effective
/// schema; unclassified nodes accept anything well-named.
#[test]
fn attribute_writes_respect_classification() {
    let mut store = Store::new();
    let model = store
        .create_node(Layer::Model, Level::Base, td_with("Part", &[("mass", ValueKind::Decimal)]))
        .unwrap();
    let inst = value_node(&mut store);
    store.link_instance_of(&inst, &model).unwrap();
    store.set_attribute(&inst, "mass", AttrValue::Decimal(1.5)).unwrap();
    let err = store
        .set_attribute(&inst, "mass", AttrValue::Integer(2))
        .unwrap_err();
    assert_eq!(err.code(), "SchemaMismatch");
    let err = store
        .set_attribute(&inst, "color", AttrValue::Text("red".into()))
        .unwrap_err();
    assert_eq!(err.code(), "SchemaMismatch");

    let free = value_node(&mut store);
    store.set_attribute(&free, "anything", AttrValue::Flag(true)).unwrap();
    let err = store
        .set_attribute(&free, "bad name", AttrValue::Flag(true))
        .unwrap_err();
    assert_eq!(err.code(), "MalformedPayload");
}

#[test]
fn descriptions_reject_direct_attribute_writes() {
    let mut store = Store::new();
    let model = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let err = store
        .set_attribute(&model, "name", AttrValue::Text("X".into()))
        .unwrap_err();
    assert_eq!(err.code(), "MalformedPayload");
}

// ----------------------------------------------------------------------
// Describes links and the commuting square

/// The four-corner fixture: model description ▸ model type, instance
/// description ▸ instance values, with classification on both columns.
/// Both link orders must close the square.
#[test]
fn commuting_square_closes_in_either_order() {
    // Order 1: describes first, then classify the base column.
    let mut store = Store::new();
    let mm = store.create_node(Layer::Model, Level::Meta, td("ClassDesc")).unwrap();
    let mb = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let im = store.create_node(Layer::Instance, Level::Meta, td("PartType#1")).unwrap();
    let ib = value_node(&mut store);
    store.link_described_by(&mb, &mm).unwrap();
    store.link_described_by(&ib, &im).unwrap();
    store.link_instance_of(&im, &mm).unwrap();
    store.link_instance_of(&ib, &mb).unwrap();
    assert_sound(&store);

    // Order 2: classify first, then describe.
    let mut store = Store::new();
    let mm = store.create_node(Layer::Model, Level::Meta, td("ClassDesc")).unwrap();
    let mb = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let im = store.create_node(Layer::Instance, Level::Meta, td("PartType#1")).unwrap();
    let ib = value_node(&mut store);
    store.link_instance_of(&im, &mm).unwrap();
    store.link_instance_of(&ib, &mb).unwrap();
    store.link_described_by(&mb, &mm).unwrap();
    store.link_described_by(&ib, &im).unwrap();
    assert_sound(&store);
}

/// Linking an instance-layer describes edge whose model-layer
/// counterparts are not themselves linked breaks the square.
#[test]
fn mismatched_square_is_rejected() {
    let mut store = Store::new();
    let mm1 = store.create_node(Layer::Model, Level::Meta, td("D1")).unwrap();
    let mm2 = store.create_node(Layer::Model, Level::Meta, td("D2")).unwrap();
    let mb = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let im = store.create_node(Layer::Instance, Level::Meta, td("T1")).unwrap();
    let ib = value_node(&mut store);
    store.link_described_by(&mb, &mm1).unwrap();
    store.link_instance_of(&im, &mm2).unwrap(); // mismatched model edge
    store.link_instance_of(&ib, &mb).unwrap();
    let err = store.link_described_by(&ib, &im).unwrap_err();
    assert_eq!(err.code(), "SquareViolation");
}

/// The square is also enforced when the instance-of edge arrives last.
#[test]
fn late_classification_cannot_break_the_square() {
    let mut store = Store::new();
    let mm1 = store.create_node(Layer::Model, Level::Meta, td("D1")).unwrap();
    let mm2 = store.create_node(Layer::Model, Level::Meta, td("D2")).unwrap();
    let mb = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    let im = store.create_node(Layer::Instance, Level::Meta, td("T1")).unwrap();
    let ib = value_node(&mut store);
    store.link_described_by(&mb, &mm1).unwrap();
    store.link_described_by(&ib, &im).unwrap();
    store.link_instance_of(&ib, &mb).unwrap();
    let err = store.link_instance_of(&im, &mm2).unwrap_err();
    assert_eq!(err.code(), "SquareViolation");
    store.link_instance_of(&im, &mm1).unwrap();
    assert_sound(&store);
}

#[test]
fn describes_must_cross_levels_within_a_layer() {
    let mut store = Store::new();
    let base_a = value_node(&mut store);
    let base_b = value_node(&mut store);
    let err = store.link_described_by(&base_a, &base_b).unwrap_err();
    assert_eq!(err.code(), "LayerRuleViolation");

    let meta = store.create_node(Layer::Instance, Level::Meta, td("T")).unwrap();
    let model_base = store.create_node(Layer::Model, Level::Base, td("P")).unwrap();
    let err = store.link_described_by(&model_base, &meta).unwrap_err();
    assert_eq!(err.code(), "LayerRuleViolation");
}

// ----------------------------------------------------------------------
// Effective schema

/// A chain of generalizations merges attribute specs top-down: own specs
/// first, then inherited ones, with subclasses shadowing by name.
#[test]
fn effective_schema_accumulates_along_generalization() {
    let mut store = Store::new();
    let item = store
        .create_node(Layer::Model, Level::Base, td_with("Item", &[("serial", ValueKind::Text)]))
        .unwrap();
    let part = store
        .create_node(
            Layer::Model,
            Level::Base,
            td_with("Part", &[("code", ValueKind::Text), ("mass", ValueKind::Decimal)]),
        )
        .unwrap();
    store
        .create_relationship(
            RelationshipKind::Generalization,
            item.clone(),
            vec![part.clone()],
            None,
        )
        .unwrap();
    let schema = store.effective_schema(&part).unwrap();
    let names: Vec<&str> = schema.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, vec!["code", "mass", "serial"], "own specs precede inherited");

    // Instances of the subclass may use inherited attributes.
    let inst = value_node(&mut store);
    store.link_instance_of(&inst, &part).unwrap();
    store.set_attribute(&inst, "serial", AttrValue::Text("S-9".into())).unwrap();
    assert_sound(&store);
}

#[test]
fn subclass_shadows_inherited_spec() {
    let mut store = Store::new();
    let sup = store
        .create_node(Layer::Model, Level::Base, td_with("A", &[("x", ValueKind::Text)]))
        .unwrap();
    let sub = store
        .create_node(Layer::Model, Level::Base, td_with("B", &[("x", ValueKind::Integer)]))
        .unwrap();
    store
        .create_relationship(RelationshipKind::Generalization, sup, vec![sub.clone()], None)
        .unwrap();
    let schema = store.effective_schema(&sub).unwrap();
    assert_eq!(schema.len(), 1);
    assert_eq!(schema[0].kind, ValueKind::Integer, "own declaration wins");
}

/// Diamond inheritance: identical specs reached twice merge silently;
/// conflicting kinds for the same name are ambiguous.
#[test]
fn diamond_inheritance_merges_or_rejects() {
    let mut store = Store::new();
    let top = store
        .create_node(Layer::Model, Level::Base, td_with("Top", &[("t", ValueKind::Flag)]))
        .unwrap();
    let left = store
        .create_node(Layer::Model, Level::Base, td_with("Left", &[("x", ValueKind::Text)]))
        .unwrap();
    let right = store
        .create_node(Layer::Model, Level::Base, td_with("Right", &[("x", ValueKind::Text)]))
        .unwrap();
    let bottom = store.create_node(Layer::Model, Level::Base, td("Bottom")).unwrap();
    for (p, c) in [(&top, &left), (&top, &right), (&left, &bottom), (&right, &bottom)] {
        store
            .create_relationship(
                RelationshipKind::Generalization,
                (*p).clone(),
                vec![(*c).clone()],
                None,
            )
            .unwrap();
    }
    let schema = store.effective_schema(&bottom).unwrap();
    let names: Vec<&str> = schema.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, vec!["x", "t"], "identical spec merged once, diamond top once");

    // Introduce a conflicting kind on one branch.
    let left2 = store
        .create_node(Layer::Model, Level::Base, td_with("Left2", &[("y", ValueKind::Text)]))
        .unwrap();
    let right2 = store
        .create_node(Layer::Model, Level::Base, td_with("Right2", &[("y", ValueKind::Integer)]))
        .unwrap();
    let bottom2 = store.create_node(Layer::Model, Level::Base, td("Bottom2")).unwrap();
    for (p, c) in [(&left2, &bottom2), (&right2, &bottom2)] {
        store
            .create_relationship(
                RelationshipKind::Generalization,
                (*p).clone(),
                vec![(*c).clone()],
                None,
            )
            .unwrap();
    }
    let err = store.effective_schema(&bottom2).unwrap_err();
    assert_eq!(err.code(), "AmbiguousInheritance");
}

#[test]
fn effective_schema_rejects_value_nodes() {
    let mut store = Store::new();
    let v = value_node(&mut store);
    let err = store.effective_schema(&v).unwrap_err();
    assert_eq!(err.code(), "NotAType");
}

/// Generalization above a description may pass through value nodes (the
/// relationship kind does not restrict layers); such parents contribute
/// no specs.
#[test]
fn non_description_supers_contribute_nothing() {
    let mut store = Store::new();
    let v = value_node(&mut store);
    let model = store
        .create_node(Layer::Model, Level::Base, td_with("Part", &[("code", ValueKind::Text)]))
        .unwrap();
    store
        .create_relationship(RelationshipKind::Generalization, v, vec![model.clone()], None)
        .unwrap();
    let schema = store.effective_schema(&model).unwrap();
    assert_eq!(schema.len(), 1);
}

// ----------------------------------------------------------------------
// Built-in constructs

#[test]
fn construct_names_are_fixed() {
    let names = builtin_constructs();
    assert_eq!(names.len(), 8);
    assert!(names.iter().any(|n| n == "Class"));
    assert!(names.iter().any(|n| n == "Relationship"));
    let mut sorted = names.to_vec();
    sorted.sort_unstable();
    let mut dedup = sorted.clone();
    dedup.dedup();
    assert_eq!(sorted, dedup, "no duplicate construct names");
}

#[test]
fn construct_of_follows_payload_kind() {
    let mut store = Store::new();
    let v = value_node(&mut store);
    let d = store.create_node(Layer::Model, Level::Base, td("Part")).unwrap();
    assert_eq!(store.construct_of(&v).unwrap(), "Node");
    assert_eq!(store.construct_of(&d).unwrap(), "Class");
}
