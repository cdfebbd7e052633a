use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ceg_core::fixtures;

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let out = ceg(&["fixtures", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    dir
}

fn ceg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ceg"))
        .args(args)
        .env_remove("CEG_TOLERANCE")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(dir: &Path, file: &str) -> String {
    dir.join(file).to_str().unwrap().to_string()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
        .to_string()
}

#[test]
fn build_lists_bushing_positions() {
    let dir = workdir("build");
    let out = ceg(&["build", "--model", &p(&dir, "bushing.json"), "--out", &p(&dir, "dot")]);
    assert!(out.status.success());
    let r = stdout(&out);
    assert_eq!(value(&r, "positions"), "9");
    assert_eq!(value(&r, "paths"), "20");
    for (w, members) in [
        ("w0", "v0"),
        ("w1", "v1"),
        ("w2", "v2"),
        ("w3", "v3 v4"),
        ("w4", "v5"),
        ("w5", "v6"),
        ("w6", "v9 v11"),
        ("w7", "v10 v12"),
        ("w8", "v7 v8 v13 v14 v15 v16"),
    ] {
        assert!(value(&r, &format!("position {w}")).starts_with(members), "{w}");
    }
    assert_eq!(value(&r, "parallel edges"), "w1=>w3 w2=>w8 w4=>w8 w5=>w8");

    let first = fs::read(dir.join("dot/ceg.dot")).unwrap();
    let again = ceg(&["build", "--model", &p(&dir, "bushing.json"), "--out", &p(&dir, "dot")]);
    assert_eq!(stdout(&again), r);
    assert_eq!(fs::read(dir.join("dot/ceg.dot")).unwrap(), first);
    assert!(dir.join("dot/tree.dot").is_file() && dir.join("dot/staged.dot").is_file());
}

#[test]
fn minimal_model_and_bad_documents() {
    let dir = workdir("minimal");
    let model = dir.join("one.json");
    fs::write(&model, fixtures::single_floret(0.5).to_document().to_json()).unwrap();
    let r = stdout(&ceg(&["build", "--model", model.to_str().unwrap()]));
    assert_eq!(value(&r, "paths"), "2");
    assert_eq!(value(&r, "positions"), "1");

    fs::write(dir.join("bad.json"), "{\"devents\": [").unwrap();
    let bad = ceg(&["build", "--model", &p(&dir, "bad.json")]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("parse error at line"));

    let mut doc = fixtures::single_floret(0.5).to_document();
    doc.theta.insert("v0".into(), vec![0.3, 0.3]);
    fs::write(dir.join("sum.json"), doc.to_json()).unwrap();
    assert_eq!(ceg(&["build", "--model", &p(&dir, "sum.json")]).status.code(), Some(2));
    assert_eq!(ceg(&["build", "--model", &p(&dir, "missing.json")]).status.code(), Some(2));
}

#[test]
fn tolerance_from_environment() {
    let dir = workdir("tolerance");
    let out = Command::new(env!("CARGO_BIN_EXE_ceg"))
        .args(["build", "--model", &p(&dir, "bushing.json")])
        .env("CEG_TOLERANCE", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(ceg(&["build", "--model", &p(&dir, "bushing.json"), "--tolerance", "1e-9"])
        .status
        .success());
}

#[test]
fn bushing_query_agrees_and_verifies() {
    let dir = workdir("query");
    let args = [
        "query",
        "--model",
        &p(&dir, "bushing.json"),
        "--intervention",
        &p(&dir, "bushing-intervention.json"),
        "--query",
        &p(&dir, "bushing-query.json"),
    ];
    let out = ceg(&args);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout(&out);
    assert_eq!(value(&r, "back-door"), "VERIFIED (symptom partition)");
    assert_eq!(value(&r, "agreement"), "YES");
    assert_eq!(value(&r, "pruned positions"), "w2");
    let oracle: f64 = value(&r, "effect oracle").parse().unwrap();
    for key in ["effect devent formula", "effect edge level", "effect back-door adjustment"] {
        let v: f64 = value(&r, key).parse().unwrap();
        assert!((v - oracle).abs() <= 1e-12, "{key}");
    }
    assert_eq!(stdout(&ceg(&args)), r);
}

#[test]
fn search_finds_a_partition_without_a_declaration() {
    let dir = workdir("search");
    fs::write(dir.join("plain-query.json"), "{\"target\": \"x_f1\"}").unwrap();
    let out = ceg(&[
        "query",
        "--model",
        &p(&dir, "bushing.json"),
        "--intervention",
        &p(&dir, "bushing-intervention.json"),
        "--query",
        &p(&dir, "plain-query.json"),
    ]);
    assert!(out.status.success());
    let r = stdout(&out);
    assert_eq!(value(&r, "partition source"), "search");
    assert!(value(&r, "back-door").starts_with("VERIFIED"));
}

#[test]
fn conservator_is_a_fine_cut() {
    let dir = workdir("conservator");
    let out = ceg(&[
        "query",
        "--model",
        &p(&dir, "conservator.json"),
        "--intervention",
        &p(&dir, "conservator-intervention.json"),
        "--query",
        &p(&dir, "conservator-query.json"),
    ]);
    assert!(out.status.success());
    let r = stdout(&out);
    assert_eq!(value(&r, "fine cut"), "YES");
    assert_eq!(value(&r, "back-door"), "VERIFIED (stage partition)");
}

#[test]
fn target_outside_the_intervened_paths() {
    let dir = workdir("outside");
    fs::write(dir.join("sulphur.json"), "{\"target\": \"x_c5\"}").unwrap();
    let out = ceg(&[
        "query",
        "--model",
        &p(&dir, "bushing.json"),
        "--intervention",
        &p(&dir, "bushing-intervention.json"),
        "--query",
        &p(&dir, "sulphur.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&stdout(&out), "effect"), "0");
}

#[test]
fn imperfect_remedy_reports_the_mixture() {
    let dir = workdir("imperfect");
    let out = ceg(&[
        "query",
        "--model",
        &p(&dir, "bushing.json"),
        "--intervention",
        &p(&dir, "bushing-imperfect.json"),
        "--query",
        &p(&dir, "bushing-query.json"),
    ]);
    assert!(out.status.success());
    let r = stdout(&out);
    assert_eq!(value(&r, "remedy"), "imperfect");
    assert!(r.contains("[mixture]"));
    let a: f64 = value(&r, "expected effect").parse().unwrap();
    let b: f64 = value(&r, "expected effect oracle").parse().unwrap();
    assert!((a - b).abs() <= 1e-12);
}

#[test]
fn broken_symmetry_is_an_identification_failure() {
    let dir = workdir("broken");
    let out = ceg(&[
        "check-backdoor",
        "--model",
        &p(&dir, "bushing-broken.json"),
        "--intervention",
        &p(&dir, "bushing-intervention.json"),
        "--query",
        &p(&dir, "bushing-query.json"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = stdout(&out);
    assert_eq!(value(&r, "back-door"), "FAILED (symptom partition)");
    assert_eq!(value(&r, "criterion 1"), "violated");
    assert!(r.contains("| VIOLATED"));
}

fn node_lines(dot: &str) -> Vec<String> {
    dot.lines()
        .filter(|l| l.contains("[label=") && !l.contains("->"))
        .map(str::to_string)
        .collect()
}

#[test]
fn dot_exports() {
    let dir = workdir("dot");
    let model = p(&dir, "bushing.json");
    let ceg_dot = stdout(&ceg(&["export-dot", "ceg", "--model", &model]));
    assert_eq!(node_lines(&ceg_dot).len(), 11);

    let manipulated = stdout(&ceg(&[
        "export-dot",
        "manipulated",
        "--model",
        &model,
        "--intervention",
        &p(&dir, "bushing-intervention.json"),
    ]));
    let nodes = node_lines(&manipulated);
    assert_eq!(nodes.len(), 10);
    assert!(!manipulated.contains("\"w2\""));

    let tree = stdout(&ceg(&["export-dot", "tree", "--model", &model]));
    let with_intervention = stdout(&ceg(&[
        "export-dot",
        "tree",
        "--model",
        &model,
        "--intervention",
        &p(&dir, "bushing-intervention.json"),
    ]));
    assert_eq!(tree, with_intervention);
    assert_eq!(node_lines(&tree).len(), 37);

    let missing = ceg(&["export-dot", "manipulated", "--model", &model]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn seeded_fixtures_keep_the_structure() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("seeded");
    let _ = fs::remove_dir_all(&dir);
    assert!(ceg(&["--fixtures", "--seed", "9", "--out", dir.to_str().unwrap()]).status.success());
    let plain = workdir("unseeded");
    assert_ne!(
        fs::read(dir.join("bushing.json")).unwrap(),
        fs::read(plain.join("bushing.json")).unwrap()
    );
    let r = stdout(&ceg(&["build", "--model", &p(&dir, "bushing.json")]));
    assert_eq!(value(&r, "positions"), "9");
    assert_eq!(value(&r, "paths"), "20");
}
