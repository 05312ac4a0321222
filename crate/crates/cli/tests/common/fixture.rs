//! Builds the shipped demonstration scenario, `fixtures/cristal26.ddso`.
//!
//! The scenario walks the store through everything it can do: the
//! four-object description square, every relationship kind, a rejected
//! aggregation cycle, a transitive change-notification chain, 25 schema
//! evolutions of one type, instances created under three different
//! versions living side by side, one explicit migration, and a cascading
//! delete. A sync test asserts the committed file matches this builder
//! byte for byte, so the fixture can never drift from the grammar.

use ddso_core::{
    AttrValue, AttributeSpec, AttributeValueMap, Command, Expectation, FailSpec, Layer, Level,
    NodeId, OpFlag, Payload, RelationshipKind, TypeDescription, VersionSelector,
};

/// The scenario's file name, as the closing record reports it.
pub const FILE_NAME: &str = "cristal26.ddso";

/// Commands, expectations, and expected failures the scenario contains;
/// the closing summary record must quote exactly these.
pub const COMMANDS: u64 = 59;
pub const EXPECTS: u64 = 21;
pub const EXPECTED_FAILURES: u64 = 1;

/// Instance counts per version of "Part" once the scenario has run.
pub const V1_INSTANCES: u64 = 2;
pub const V10_INSTANCES: u64 = 1;
pub const V26_INSTANCES: u64 = 3;
pub const ALL_INSTANCES: u64 = 6;

struct Script {
    lines: Vec<String>,
}

impl Script {
    fn new() -> Script {
        Script { lines: Vec::new() }
    }

    fn comment(&mut self, text: &str) {
        self.lines.push(format!("# {text}"));
    }

    fn blank(&mut self) {
        self.lines.push(String::new());
    }

    fn cmd(&mut self, c: Command) {
        self.lines
            .push(serde_json::to_string(&c).expect("commands serialize"));
    }

    fn expect(&mut self, e: Expectation) {
        self.lines
            .push(serde_json::to_string(&e).expect("expectations serialize"));
    }

    fn fail(&mut self, error: &str, command: Command) {
        #[derive(serde::Serialize)]
        struct Wrapper<'a> {
            fail: &'a FailSpec,
        }
        let spec = FailSpec {
            error: error.to_string(),
            command,
        };
        self.lines
            .push(serde_json::to_string(&Wrapper { fail: &spec }).expect("fail lines serialize"));
    }

    fn finish(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

fn description(name: &str, attrs: &[(&str, &str)], ops: &[&str]) -> TypeDescription {
    let mut desc = TypeDescription::new(name);
    desc.attributes = attrs
        .iter()
        .map(|(n, k)| AttributeSpec::parse_literal(&format!("{n}:{k}")).expect("spec parses"))
        .collect();
    desc.operations = ops.iter().map(|o| o.to_string()).collect();
    desc
}

fn create_description(layer: Layer, level: Level, desc: TypeDescription) -> Command {
    Command::CreateNode {
        layer,
        level,
        payload: Payload::Description(desc),
    }
}

fn create_values(values: &[(&str, AttrValue)]) -> Command {
    let mut map = AttributeValueMap::new();
    for (name, value) in values {
        map.insert(name.to_string(), value.clone());
    }
    Command::CreateNode {
        layer: Layer::Instance,
        level: Level::Base,
        payload: Payload::Values(map),
    }
}

fn link(kind: RelationshipKind, parent: &str, children: &[&str]) -> Command {
    Command::CreateRel {
        kind,
        parent: NodeId::new(parent),
        children: children.iter().map(|c| NodeId::new(*c)).collect(),
        policy: None,
    }
}

fn text(s: &str) -> AttrValue {
    AttrValue::Text(s.to_string())
}

/// Renders the complete scenario text.
pub fn scenario_text() -> String {
    let mut s = Script::new();

    s.comment("The full tour: a description square, every relationship kind,");
    s.comment("25 schema evolutions, instances of three versions side by side,");
    s.comment("one migration, one notification chain, one rejected cycle.");
    s.blank();

    // ---- The four-object description square -------------------------
    s.comment("Four objects, one per quadrant: PartDescription (model meta, N1)");
    s.comment("describes Part (model base, N2); PartType#1 (instance meta, N3)");
    s.comment("describes Part#1212 (instance base, N4). The last link closes the");
    s.comment("square, so it is only accepted because the other three exist.");
    s.cmd(create_description(
        Layer::Model,
        Level::Meta,
        description("PartDescription", &[], &[]),
    ));
    s.cmd(create_description(
        Layer::Model,
        Level::Base,
        description(
            "Part",
            &[("code", "text"), ("mass", "decimal")],
            &["assemble"],
        ),
    ));
    s.cmd(create_description(
        Layer::Instance,
        Level::Meta,
        description("PartType#1", &[("code", "text"), ("mass", "decimal")], &[]),
    ));
    s.cmd(create_values(&[
        ("code", text("C-1212")),
        ("mass", AttrValue::Decimal(7.5)),
    ]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000001", &["N000003"]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000002", &["N000004"]));
    s.cmd(link(RelationshipKind::Describes, "N000001", &["N000002"]));
    s.cmd(link(RelationshipKind::Describes, "N000003", &["N000004"]));
    s.expect(Expectation::NodeCount { value: 4 });
    s.expect(Expectation::RelCount { value: 4 });
    s.blank();

    // ---- Aggregation, and the cycle that must not close --------------
    s.comment("An aggregate pair (N5 holds N6); closing the loop back from N6");
    s.comment("to N5 must be rejected, because aggregation stays acyclic.");
    s.cmd(create_values(&[]));
    s.cmd(create_values(&[]));
    s.cmd(link(RelationshipKind::Aggregation, "N000005", &["N000006"]));
    s.fail(
        "CycleRejected",
        link(RelationshipKind::Aggregation, "N000006", &["N000005"]),
    );
    s.blank();

    // ---- Generalization ---------------------------------------------
    s.comment("Product (N7) generalizes Part: an explicit superclass link.");
    s.cmd(create_description(
        Layer::Model,
        Level::Base,
        description("Product", &[], &[]),
    ));
    s.cmd(link(RelationshipKind::Generalization, "N000007", &["N000002"]));
    s.blank();

    // ---- A transitive notification chain ----------------------------
    s.comment("Part#1212 publishes changes to N8, which relays to N9. One");
    s.comment("attribute write lands exactly one notice in each inbox.");
    s.cmd(create_values(&[]));
    s.cmd(create_values(&[]));
    s.cmd(link(RelationshipKind::Dependency, "N000004", &["N000008"]));
    s.cmd(link(RelationshipKind::Dependency, "N000008", &["N000009"]));
    s.cmd(Command::SetAttr {
        node: NodeId::new("N000004"),
        name: "code".to_string(),
        value: text("C-1212-R2"),
    });
    s.expect(Expectation::InboxCount {
        node: NodeId::new("N000008"),
        value: 1,
    });
    s.expect(Expectation::InboxCount {
        node: NodeId::new("N000009"),
        value: 1,
    });
    s.expect(Expectation::Attr {
        node: NodeId::new("N000004"),
        name: "code".to_string(),
        value: text("C-1212-R2"),
    });
    s.blank();

    // ---- Twenty-five evolutions of Part ------------------------------
    s.comment("Part evolves 25 times: a coating attribute appears, is renamed,");
    s.comment("and is dropped again; then one integer attribute per version.");
    s.comment("Existing instances stay exactly as they are throughout.");
    s.cmd(evolve("Part", &["coating:text"], &[], &[]));
    s.cmd(evolve("Part", &[], &[], &[("coating", "surface")]));
    s.cmd(evolve("Part", &[], &["surface"], &[]));
    for v in 5..=26 {
        s.cmd(evolve("Part", &[&format!("p{v:02}:integer")], &[], &[]));
    }
    s.expect(Expectation::ChainLength {
        name: "Part".to_string(),
        value: 26,
    });
    s.blank();

    // ---- Instances of three different versions ----------------------
    s.comment("New instances classify under version 1 (the original node N2),");
    s.comment("version 10 (N18), and version 26 (N34). All coexist.");
    s.cmd(create_values(&[("code", text("C-0001"))]));
    s.cmd(create_values(&[("code", text("C-0002"))]));
    s.cmd(create_values(&[
        ("code", text("C-1010")),
        ("p07", AttrValue::Integer(7)),
    ]));
    s.cmd(create_values(&[("code", text("C-2601"))]));
    s.cmd(create_values(&[("code", text("C-2602"))]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000002", &["N000035"]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000002", &["N000036"]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000018", &["N000037"]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000034", &["N000038"]));
    s.cmd(link(RelationshipKind::InstanceOf, "N000034", &["N000039"]));
    s.expect(instances(1, 3));
    s.expect(instances(10, 1));
    s.expect(instances(26, 2));
    s.expect(Expectation::Instances {
        name: "Part".to_string(),
        version: VersionSelector::Any,
        count: 6,
    });
    s.blank();

    // ---- One explicit migration -------------------------------------
    s.comment("N36 moves from version 1 to version 26; the 22 attributes the");
    s.comment("target requires and the source never had must be filled in.");
    s.cmd(migrate_n36());
    s.expect(instances(1, V1_INSTANCES));
    s.expect(instances(26, V26_INSTANCES));
    s.blank();

    // ---- A cascading delete -----------------------------------------
    s.comment("An aggregate of three; deleting the root takes the closure out.");
    s.cmd(create_values(&[]));
    s.cmd(create_values(&[]));
    s.cmd(create_values(&[]));
    s.cmd(link(
        RelationshipKind::Aggregation,
        "N000040",
        &["N000041", "N000042"],
    ));
    s.expect(Expectation::Closure {
        start: NodeId::new("N000040"),
        kind: RelationshipKind::Aggregation,
        flag: OpFlag::Delete,
        nodes: vec![
            NodeId::new("N000040"),
            NodeId::new("N000041"),
            NodeId::new("N000042"),
        ],
    });
    s.cmd(Command::DeleteNode {
        id: NodeId::new("N000040"),
    });
    s.blank();

    // ---- Final ledger ------------------------------------------------
    s.comment("The closing balance.");
    s.expect(Expectation::NodeCount { value: 39 });
    // 39 relationships were minted; the delete above took one with its
    // parent, and the migration emptied N36's old classification link.
    s.expect(Expectation::RelCount { value: 37 });
    s.expect(Expectation::ChainLength {
        name: "Part".to_string(),
        value: 26,
    });
    s.expect(instances(1, V1_INSTANCES));
    s.expect(instances(10, V10_INSTANCES));
    s.expect(instances(26, V26_INSTANCES));
    s.expect(Expectation::Instances {
        name: "Part".to_string(),
        version: VersionSelector::Any,
        count: ALL_INSTANCES,
    });
    s.expect(Expectation::NodeVersion {
        node: NodeId::new("N000004"),
        value: 1,
    });

    s.finish()
}

fn evolve(name: &str, add: &[&str], remove: &[&str], rename: &[(&str, &str)]) -> Command {
    Command::EvolveType {
        name: name.to_string(),
        delta: ddso_core::EvolutionDelta {
            add: add
                .iter()
                .map(|a| AttributeSpec::parse_literal(a).expect("spec parses"))
                .collect(),
            remove: remove.iter().map(|r| r.to_string()).collect(),
            rename: rename
                .iter()
                .map(|(from, to)| ddso_core::RenamePair {
                    from: from.to_string(),
                    to: to.to_string(),
                })
                .collect(),
        },
    }
}

fn migrate_n36() -> Command {
    let mut fill = AttributeValueMap::new();
    for v in 5..=26 {
        fill.insert(format!("p{v:02}"), AttrValue::Integer(v));
    }
    Command::MigrateInstance {
        instance: NodeId::new("N000036"),
        to_version: 26,
        fill,
    }
}

fn instances(version: u64, count: u64) -> Expectation {
    Expectation::Instances {
        name: "Part".to_string(),
        version: VersionSelector::At(version),
        count,
    }
}
