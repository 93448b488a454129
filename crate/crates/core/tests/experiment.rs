use serde_json::{json, Value};
use stabilab_core::experiment::{
    emit_report, preset, preset_names, run_experiment, ExperimentConfig, Format, Outcome, RecordBody,
};
use stabilab_core::Error;

fn config(v: Value) -> ExperimentConfig {
    serde_json::from_value(v).unwrap()
}

fn json_report(c: &ExperimentConfig) -> Value {
    let r = run_experiment(c).unwrap();
    serde_json::from_slice(&emit_report(&r, Format::Json)).unwrap()
}

#[test]
fn grid_presets_are_complete_and_tallied() {
    for name in preset_names().filter(|n| !n.starts_with("axioms")) {
        let c = preset(name).unwrap();
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.records.len(), c.u_grid.len(), "{name}");
        let unexpected = r.records.iter().filter(|x| x.outcome == Outcome::Unexpected).count();
        assert_eq!(r.summary.unexpected, unexpected, "{name}");
        assert_eq!(r.summary.expected + r.summary.unexpected, r.summary.records, "{name}");
        assert_eq!(r.exit_code(), 0, "{name}");
        for rec in &r.records {
            if let RecordBody::Theorem(t) = &rec.body {
                assert!(t.bound.as_ref().unwrap().horizon.is_some());
            }
        }
    }
}

#[test]
fn counterexample_report_shape() {
    let v = json_report(&config(json!({"mode": "counterexample-additive", "p": 5, "u_grid": ["1"]})));
    let rec = &v["records"][0];
    assert_eq!(rec["point"], "u=1");
    assert_eq!(rec["outcome"], "expected");
    assert_eq!(rec["counterexample"]["trace"]["verdict"], "diverged");
    assert_eq!(rec["counterexample"]["constant_diff_norm"], json!({"p": 5, "exponent": "0"}));
    assert!(v["generated_at"].is_u64());
    assert_eq!(v["summary"]["records"], 1);
}

#[test]
fn decomposition_rows() {
    let v = json_report(&config(json!({
        "mode": "theorem-decompose", "p": 3, "map": {"coords": ["3*u + 5*u^3"]}
    })));
    for rec in v["records"].as_array().unwrap() {
        let d = &rec["decomposition"];
        assert_eq!(d["exact"], true);
        assert_eq!(d["additive_coefficients"], json!(["3"]));
        assert_eq!(d["cubic_coefficients"], json!(["5"]));
        assert_eq!(d["bound"]["left"], "zero");
        assert_eq!(d["bound"]["regime"], "exact");
    }
}

#[test]
fn configuration_errors() {
    let empty = config(json!({"mode": "counterexample-cubic", "p": 5, "u_grid": []}));
    assert!(matches!(run_experiment(&empty), Err(Error::Config(_))));
    let bad_psi = config(json!({"mode": "theorem-additive", "p": 2, "map": {"builtin": "identity"}, "psi": "norm(w1)"}));
    assert!(run_experiment(&bad_psi).is_err());
    assert!(ExperimentConfig::from_json(r#"{"mode": "axioms", "p": 2, "extra": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"mode": "sideways", "p": 2}"#).is_err());
}

#[test]
fn unexpected_verdicts_set_exit_code() {
    // sigma ≡ 0 cannot bound the residual of the identity map
    let r = run_experiment(&config(json!({
        "mode": "theorem-additive", "p": 2, "map": {"builtin": "identity"}, "u_grid": [2], "v_grid": [2]
    })))
    .unwrap();
    assert_eq!(r.exit_code(), 1);
    let r = run_experiment(&config(json!({"mode": "hypotheses", "p": 5,
        "sigma": {"family": "corollary", "rho": 1, "x": 1, "y": 1}, "u_grid": [1]})))
    .unwrap();
    assert_eq!(r.exit_code(), 1, "violation was not expected");
}

#[test]
fn text_report_lists_every_point() {
    let r = run_experiment(&preset("exact-decomposition").unwrap()).unwrap();
    let text = String::from_utf8(emit_report(&r, Format::Text)).unwrap();
    for u in ["u=1", "u=2", "u=3", "u=1/2", "u=5/3"] {
        assert!(text.contains(&format!("== {u}\n")), "{u}");
    }
    assert!(text.contains("summary: 5 records, 5 expected, 0 unexpected, 0 errors"));
}
