use std::path::Path;
use std::process::{Command, Output};

fn gsas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsas")).current_dir(dir).args(args).output().expect("spawn gsas")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gsas(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn lp_profile_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--family", "RandomGSAS", "--n", "4", "--seed", "5", "--out", "g.json"]);
    ok(d, &["lp", "--game", "g.json", "--out", "lp.json"]);
    let spr = json(&ok(d, &["spr", "--game", "g.json", "--strategies", "lp.json"]));
    assert_eq!(spr["regime"], "Exact");
    assert!(spr["value"].as_f64().unwrap().abs() < 1e-6, "{spr}");
}

#[test]
fn scaling_recovers_rock_scissors_paper_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["lp", "--family", "ExampleRPS", "--out", "lp.json"]);
    let r = json(&ok(d, &["compact", "--family", "ExampleRPS", "--target", "lp.json"]));
    // the LP may return any equilibrium on the second player's side, so only
    // the first player's weights are pinned
    let w1 = floats(&r["p1"]["w"]);
    for (got, want) in w1.iter().zip([0.5, 1.0 / 6.0, 1.0 / 3.0]) {
        assert!((got - want).abs() < 1e-3, "{w1:?}");
    }
}

#[test]
fn runs_are_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["run", "--family", "BiasedRPS", "--n", "5", "-T", "3000", "--format", "csv"];
    let a = ok(d, &[&args[..], &["--seed", "3"]].concat());
    let b = ok(d, &[&args[..], &["--seed", "3"]].concat());
    let c = ok(d, &[&args[..], &["--seed", "4"]].concat());
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("t,max_si_sampled_p1,max_si_sampled_p2,expected_bound,hp_band,mu1_0"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"format": "csv", "seed": 1,
                  "run": {"family": "CheckerboardMP", "n": 4, "T": 500, "stride": 100}}"#;
    std::fs::write(d.join("cfg.json"), cfg).unwrap();
    let from_file = ok(d, &["run", "--config", "cfg.json"]);
    let ts: Vec<&str> = from_file.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ts, ["100", "200", "300", "400", "500"]);

    let overridden = ok(d, &["run", "--config", "cfg.json", "-T", "300", "--format", "json"]);
    let report = json(&overridden);
    assert_eq!(report["horizon"], 300);
    assert_eq!(report["seed"], 1);
    assert_eq!(report["snapshots"].as_array().unwrap().len(), 3);
}

#[test]
fn config_typos_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"run": {"family": "RBS", "horizn": 10}}"#).unwrap();
    let out = gsas(d, &["run", "--config", "cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.horizn"));

    std::fs::write(d.join("cfg.json"), r#"{"sed": 1}"#).unwrap();
    assert_eq!(gsas(d, &["run", "--config", "cfg.json"]).status.code(), Some(2));
}

#[test]
fn invalid_inputs_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["gen", "--family", "Nope"][..],
        &["gen", "--family", "MatchingPenniesLambda"],
        &["gen", "--family", "CheckerboardMP", "--n", "5"],
        &["run", "--family", "RBS", "-T", "0"],
        &["run", "--family", "RBS", "--threads", "0"],
        &["experiment", "--preset", "LambdaRegimes", "--lambdas", "1.5"],
    ] {
        let out = gsas(d, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = gsas(d, &["lp", "--game", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn experiment_writes_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let listed = ok(
        d,
        &["experiment", "--preset", "Exp2Regret", "--family", "ExampleRPS", "-T", "1000", "--seeds", "0,1", "--out", "res", "--threads", "2"],
    );
    let files: Vec<String> = serde_json::from_str(&listed).unwrap();
    assert_eq!(files.len(), 3);
    for f in &files {
        assert!(d.join(f).is_file(), "{f}");
    }
    assert!(d.join("res/exp2_regret_aggregate.csv").is_file());
}

#[test]
fn gen_csv_is_the_payoff_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["gen", "--family", "MatchingPenniesLambda", "--lambda", "0.5", "--format", "csv"]);
    assert_eq!(text, "c0,c1\n1,-1\n-1,1\n");
}
