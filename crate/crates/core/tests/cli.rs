//! End-to-end checks of the command-line binary: exit-code contract,
//! determinism, and certificate replay through files.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasirand"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    // 0: definite verdicts
    assert_eq!(run(&["analyze", "--family", "matching"]).status.code(), Some(0));
    assert_eq!(run(&["analyze", "--family", "pure-set"]).status.code(), Some(0));
    // 2: inconclusive estimates
    let unknown = run(&[
        "acl",
        "--family",
        "star-forest",
        "--abar",
        "0",
        "--domain",
        "8",
        "--counting-only",
    ]);
    assert_eq!(unknown.status.code(), Some(2));
    // 1: errors
    assert_eq!(run(&["analyze", "--family", "no-such"]).status.code(), Some(1));
    assert_eq!(run(&["cocycle", "--g", "(0 1", "--cbar", "0"]).status.code(), Some(1));
}

#[test]
fn cocycle_text_value() {
    let out = run(&["cocycle", "--g", "(0 1)", "--cbar", "0,2", "--format", "text"]);
    assert_eq!(stdout(&out), "1/2\n");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reports_embed_version_and_config() {
    let out = run(&["cocycle", "--g", "(0 1)", "--cbar", "0,2"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["version"], quasirand::VERSION);
    assert_eq!(json["config"]["cbar"], "0,2");
    assert_eq!(json["report"]["cocycle"], "1/2");
}

#[test]
fn byte_determinism() {
    for args in [
        vec!["analyze", "--family", "star-forest"],
        vec!["sample", "--count", "3", "--seed", "9", "--n", "10"],
        vec!["acl", "--family", "matching", "--abar", "0,3", "--domain", "12"],
        vec!["separate", "--family", "star-forest", "--depth", "2"],
    ] {
        let (a, b) = (run(&args), run(&args));
        assert_eq!(stdout(&a), stdout(&b), "args {args:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn separate_verify_round_trip_and_tamper() {
    let dir = std::env::temp_dir().join(format!("quasirand-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let tree_path = dir.join("tree.json");
    let tree_arg = tree_path.to_str().unwrap();

    let sep = run(&["separate", "--family", "matching", "--depth", "2", "--tree-out", tree_arg]);
    assert_eq!(sep.status.code(), Some(0));

    assert_eq!(run(&["verify", "--tree", tree_arg]).status.code(), Some(0));
    assert_eq!(
        run(&["verify", "--tree", tree_arg, "--pair", "00,11"]).status.code(),
        Some(0)
    );

    // corrupt one permutation entry: replay must fail with exit 1
    let mut tree: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&tree_path).unwrap()).unwrap();
    let gamma = tree["nodes"]["11"]["gamma"].as_array_mut().unwrap();
    gamma.swap(3, 4);
    let bad_path = dir.join("tampered.json");
    std::fs::write(&bad_path, serde_json::to_string(&tree).unwrap()).unwrap();
    let bad = run(&["verify", "--tree", bad_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("certificate"));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn events_file_drives_test_quasi() {
    let dir = std::env::temp_dir().join(format!("quasirand-ev-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let events = dir.join("events.json");
    std::fs::write(
        &events,
        r#"[{"CbarCoord":{"index":0,"value":0}},
            {"WindowFact":{"relation":"E","tuple":[2,3],"negated":false}}]"#,
    )
    .unwrap();
    let out = run(&[
        "test-quasi",
        "--g",
        "(0 1)",
        "--events",
        events.to_str().unwrap(),
        "--alpha",
        "0.01",
        "--count",
        "2000",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["report"]["pass"], true);
    assert_eq!(json["report"]["events"].as_array().unwrap().len(), 2);
    std::fs::remove_dir_all(&dir).ok();
}
