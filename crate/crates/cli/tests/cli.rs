use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weaktrace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn row<'a>(table: &'a str, arm: &str) -> Vec<&'a str> {
    table
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .find(|cols| cols.first() == Some(&arm))
        .unwrap_or_else(|| panic!("no row for {arm} in\n{table}"))
}

#[test]
fn builtin_piped_into_weakvalues() {
    let src = run(&["builtin", "fig1"]);
    assert!(src.status.success());
    let out = run_stdin(&["weakvalues"], &stdout(&src));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = stdout(&out);
    for (arm, w) in [("A", "1+0i"), ("D", "0+0i"), ("B", "0.5+0i"), ("C", "-0.5+0i"), ("E", "0+0i")] {
        assert_eq!(row(&table, arm)[2], w);
    }
    assert!(table.contains("postselection probability 0.25"));
}

#[test]
fn trace_verdict_line() {
    for name in ["fig1", "fig2"] {
        let out = run(&["trace", name]);
        assert_eq!(out.status.code(), Some(0));
        assert!(stdout(&out).contains("discontinuous; present: A,B,C; gaps: D,E"), "{}", stdout(&out));
    }
}

#[test]
fn missing_file_is_status_2() {
    let out = run(&["weakvalues", "nosuchfile.scn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nosuchfile.scn"));
}

#[test]
fn usage_errors_are_status_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["weakvalues", "fig1", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--format", "yaml", "weakvalues", "fig1"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "fig1", "--arm", "B", "--g", "0.1,0.2"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "fig1", "--arm", "Z", "--g", "0.1"]).status.code(), Some(1));
    assert_eq!(run(&["trace", "fig1", "--threshold", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.scn");
    std::fs::write(&good, stdout(&run(&["builtin", "fig2"]))).unwrap();
    let out = run(&["validate", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("ok: fig2"));

    let bad = dir.path().join("bad.scn");
    std::fs::write(&bad, "modes A B\npreselect 1@A\nstage s\nbeamsplitter A A pi/4\npostselect 1@A\n").unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains(":4:16:"), "{err}");

    let unnormalized = dir.path().join("norm.scn");
    std::fs::write(&unnormalized, "modes A B\npreselect 1@A + 1@B\npostselect 1@A\n").unwrap();
    let out = run(&["weakvalues", unnormalized.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_is_byte_stable_and_matches_table() {
    let a = run(&["--format", "json", "trace", "fig2"]);
    let b = run(&["trace", "fig2", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(doc["postselection_probability"], 0.25);
    assert_eq!(doc["trace"]["continuous"], false);
    assert_eq!(doc["trace"]["gaps"], serde_json::json!(["D", "E"]));

    let table = stdout(&run(&["trace", "fig2"]));
    for w in doc["weak_values"].as_array().unwrap() {
        let arm = w["arm"].as_str().unwrap();
        let cols = row(&table, arm);
        assert_eq!(cols[1], w["boundary"].to_string());
        let (re, im) = (w["re"].as_f64().unwrap(), w["im"].as_f64().unwrap());
        let shown = cols[2].trim_end_matches('i');
        let split = shown.rfind(['+', '-']).unwrap();
        assert_eq!(shown[..split].parse::<f64>().unwrap(), re);
        assert_eq!(shown[split..].parse::<f64>().unwrap(), im);
    }
}

#[test]
fn json_rounds_to_fifteen_digits() {
    let doc: serde_json::Value =
        serde_json::from_slice(&run(&["--format", "json", "weakvalues", "fig2"]).stdout).unwrap();
    let b = &doc["weak_values"].as_array().unwrap()[1];
    assert_eq!(b["arm"], "B");
    assert_eq!(b["re"].to_string(), "0.353553390593274");
}

#[test]
fn sweep_json_shape() {
    let out = run(&["--format", "json", "sweep", "fig1", "--arm", "C", "--g", "0.2,0.1,0.05,0.025"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let sweep = &doc["sweeps"][0];
    assert_eq!(sweep["arm"], "C");
    assert_eq!(sweep["points"].as_array().unwrap().len(), 4);
    let last = sweep["points"][3]["discrepancy"].as_f64().unwrap();
    assert!(last < 0.02);
    assert!((sweep["probability_order"].as_f64().unwrap() - 2.0).abs() < 0.1);

    let exact = run(&["--format", "json", "sweep", "fig1", "--arm", "A", "--g", "0.1,0.05"]);
    let doc: serde_json::Value = serde_json::from_slice(&exact.stdout).unwrap();
    assert_eq!(doc["sweeps"][0]["shift_order"], "exact");
}

#[test]
fn scenario_hash_follows_content() {
    let h = |args: &[&str]| {
        let doc: serde_json::Value = serde_json::from_slice(&run(args).stdout).unwrap();
        doc["scenario_hash"].as_str().unwrap().to_string()
    };
    let fig1 = h(&["--format", "json", "weakvalues", "fig1"]);
    assert_eq!(fig1.len(), 64);
    assert_eq!(fig1, h(&["--format", "json", "builtin", "fig1"]));
    assert_ne!(fig1, h(&["--format", "json", "weakvalues", "fig2"]));
}
