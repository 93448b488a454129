use std::process::Command;

use serde_json::Value;

fn stabilab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stabilab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn without_timestamp(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).expect("json report");
    v.as_object_mut().unwrap().remove("generated_at");
    v
}

#[test]
fn lists_presets() {
    let out = stabilab(&["presets", "list"]);
    assert!(out.status.success());
    let names = String::from_utf8(out.stdout).unwrap();
    assert!(names.lines().any(|l| l == "counterexample-additive"));
    assert!(names.lines().any(|l| l == "perturbed-additive"));
}

#[test]
fn preset_reruns_are_identical() {
    for name in ["counterexample-additive", "exact-decomposition", "perturbed-additive"] {
        let a = stabilab(&["presets", "run", name]);
        let b = stabilab(&["presets", "run", name]);
        assert_eq!(a.status.code(), Some(0), "{name}");
        assert_eq!(without_timestamp(&a.stdout), without_timestamp(&b.stdout), "{name}");
    }
}

#[test]
fn run_with_config_file_and_out_path() {
    let dir = std::env::temp_dir().join(format!("stabilab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("c.json");
    let report = dir.join("r.txt");
    std::fs::write(&config, r#"{"mode": "counterexample-cubic", "p": 7, "u_grid": ["1"]}"#).unwrap();
    let out = stabilab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "text",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("mode counterexample-cubic"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("stabilab-exit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"mode": "axioms", "p": 6}"#).unwrap();
    assert_eq!(stabilab(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let unknown = dir.join("unknown.json");
    std::fs::write(&unknown, r#"{"mode": "axioms", "p": 5, "colour": 1}"#).unwrap();
    assert_eq!(stabilab(&["run", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    let failing = dir.join("failing.json");
    std::fs::write(
        &failing,
        r#"{"mode": "theorem-additive", "p": 2, "map": {"builtin": "identity"}, "u_grid": [2], "v_grid": [2]}"#,
    )
    .unwrap();
    assert_eq!(stabilab(&["run", "--config", failing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(stabilab(&["presets", "run", "no-such-preset"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
