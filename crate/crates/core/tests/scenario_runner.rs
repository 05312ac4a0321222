//! The scenario runner: line-oriented scripts mixing commands,
//! expectations, and expected failures, executed against any engine.

use ddso_core::*;

const HAPPY: &str = r#"
# build a two-node aggregate and check what the store sees
{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}
{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}
{"c":"create-rel","kind":"aggregation","parent":"N000001","children":["N000002"]}
{"c":"set-attr","node":"N000002","name":"code","value":{"text":"X"}}

{"expect":"node-count","value":2}
{"expect":"rel-count","value":1}
{"expect":"attr","node":"N000002","name":"code","value":{"text":"X"}}
{"expect":"closure","start":"N000001","kind":"aggregation","flag":"delete","nodes":["N000001","N000002"]}
{"fail":{"error":"CycleRejected","command":{"c":"create-rel","kind":"aggregation","parent":"N000002","children":["N000001"]}}}
"#;

#[test]
fn scenarios_execute_commands_and_expectations_in_order() {
    let mut store = Store::new();
    let report = run_scenario(&mut store, "happy.ddso", HAPPY).unwrap();
    assert_eq!(report.commands, 4);
    assert_eq!(report.expects, 4);
    assert_eq!(report.expected_failures, 1);
    let last = report.records.last().unwrap();
    assert_eq!(
        last.to_line(),
        r#"{"t":"scenario","file":"happy.ddso","commands":4,"expects":4,"expected_failures":1,"ok":true}"#
    );
    // Every expectation answered with a per-line record before the summary.
    assert_eq!(report.records.len(), 6);
    assert_eq!(store.node_count(), 2, "commands really ran");
}

#[test]
fn comments_and_blank_lines_are_skipped() {
    let text = "# just commentary\n\n   \n# more\n";
    let mut store = Store::new();
    let report = run_scenario(&mut store, "empty.ddso", text).unwrap();
    assert_eq!(report.commands, 0);
    assert_eq!(report.records.len(), 1, "only the summary record");
}

#[test]
fn unparseable_lines_name_their_line_number() {
    let text = "{\"c\":\"create-node\",\"layer\":\"instance\",\"level\":\"base\",\"payload\":{\"values\":{}}}\nwhat is this\n";
    let err = parse_scenario(text).unwrap_err();
    assert_eq!(err.code(), "UnknownCommand");
    assert!(err.to_string().contains("line 2"), "got: {err}");
}

#[test]
fn failed_expectations_stop_the_run() {
    let text = r#"
{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}
{"expect":"node-count","value":5}
"#;
    let mut store = Store::new();
    let err = run_scenario(&mut store, "bad.ddso", text).unwrap_err();
    assert_eq!(err.code(), "ExpectationFailed");
    assert!(err.to_string().contains("line 3"), "got: {err}");
}

#[test]
fn expected_failures_must_fail_with_the_right_code() {
    // The command succeeds although a failure was promised.
    let text = r#"
{"fail":{"error":"CycleRejected","command":{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}}}
"#;
    let mut store = Store::new();
    let err = run_scenario(&mut store, "s.ddso", text).unwrap_err();
    assert_eq!(err.code(), "ExpectationFailed");

    // The command fails, but with a different code than promised.
    let text = r#"
{"fail":{"error":"CycleRejected","command":{"c":"delete-node","id":"N000042"}}}
"#;
    let mut store = Store::new();
    let err = run_scenario(&mut store, "s.ddso", text).unwrap_err();
    assert_eq!(err.code(), "ExpectationFailed");
    assert!(err.to_string().contains("UnknownNode"), "names the actual code: {err}");
}

#[test]
fn a_failing_command_aborts_with_its_own_error() {
    let text = r#"
{"c":"delete-node","id":"N000042"}
"#;
    let mut store = Store::new();
    let err = run_scenario(&mut store, "s.ddso", text).unwrap_err();
    assert_eq!(err.code(), "UnknownNode");
}

/// The runner speaks to the engine trait only, so a store behind any
/// transport behaves the same; here the embedded store stands in.
#[test]
fn expectations_query_through_the_engine_interface() {
    let mut store = Store::new();
    let model_line = r#"{"c":"create-node","layer":"model","level":"base","payload":{"description":{"name":"Part","version":1,"attributes":[{"name":"code","kind":"text"}],"operations":[]}}}"#;
    let text = format!(
        "{model_line}\n{}\n{}\n{}\n{}\n",
        r#"{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}"#,
        r#"{"c":"create-rel","kind":"instance-of","parent":"N000001","children":["N000002"]}"#,
        r#"{"expect":"chain-length","name":"Part","value":1}"#,
        r#"{"expect":"instances","name":"Part","version":1,"count":1}"#,
    );
    let report = run_scenario(&mut store, "typed.ddso", &text).unwrap();
    assert_eq!(report.expects, 2);
    let lines: Vec<String> = report.records.iter().map(|r| r.to_line()).collect();
    assert!(lines[0].contains(r#""ok":true"#));
}

#[test]
fn inbox_and_version_expectations_observe_propagation() {
    let text = r#"
{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}
{"c":"create-node","layer":"instance","level":"base","payload":{"values":{}}}
{"c":"create-rel","kind":"dependency","parent":"N000001","children":["N000002"]}
{"c":"set-attr","node":"N000001","name":"x","value":{"integer":1}}
{"c":"version-node","node":"N000001"}
{"expect":"inbox-count","node":"N000002","value":2}
{"expect":"node-version","node":"N000001","value":2}
{"expect":"node-version","node":"N000002","value":1}
"#;
    let mut store = Store::new();
    let report = run_scenario(&mut store, "events.ddso", text).unwrap();
    assert_eq!(report.expects, 3);
}
