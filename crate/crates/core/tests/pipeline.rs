mod common;

use gsas_core::analysis::deviation_gaps_general;
use gsas_core::bench::{run_experiment, ExperimentConfig, Preset};
use gsas_core::families::{example_rps, generate, FamilyTag, GameFamily};
use gsas_core::lp::{subgame_self_play, SubgameConfig};
use gsas_core::model::{BimatrixGame, GameSpec};
use gsas_core::regret::{run_self_play, SelfPlayConfig, StepsizeSchedule};
use gsas_core::strategy::Strategy;

use common::linf;

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("gsas-pipeline-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn generated_games_survive_json() {
    for (tag, n) in [
        (FamilyTag::RandomGSAS, 4),
        (FamilyTag::RBS, 6),
        (FamilyTag::CheckerboardMP, 6),
        (FamilyTag::BiasedRPS, 5),
        (FamilyTag::BiasedMP, 5),
        (FamilyTag::ExampleRPS, 3),
        (FamilyTag::MatchingPenniesLambda { lambda: 0.3 }, 2),
    ] {
        let g = generate(&GameFamily::new(tag, n, 11)).unwrap();
        let text = g.to_json().unwrap();
        let back = GameSpec::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text, "{tag:?}");
    }
}

#[test]
fn malformed_games_are_rejected() {
    let out_of_range = r#"{"payoff":[[2,0],[0,1]],"avail_p1":{"type":"independent","p":[1,1]},"avail_p2":{"type":"independent","p":[1,1]}}"#;
    assert!(GameSpec::from_json(out_of_range).is_err());
    let bad_probs = r#"{"payoff":[[1,0],[0,1]],"avail_p1":{"type":"enumerated","sets":[[0],[1]],"probs":[0.5,0.4]},"avail_p2":{"type":"independent","p":[1,1]}}"#;
    assert!(GameSpec::from_json(bad_probs).is_err());
}

#[test]
fn self_play_csv_is_deterministic() {
    let g = example_rps().unwrap();
    let cfg = SelfPlayConfig::new(2_000, StepsizeSchedule::default(), 9);
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_self_play(&g, &cfg).unwrap().write_csv(&mut a).unwrap();
    run_self_play(&g, &cfg).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t,max_si_sampled_p1,max_si_sampled_p2,expected_bound,hp_band,mu1_0,mu1_1,mu1_2,mu2_0,mu2_1,mu2_2");
    assert_eq!(text.lines().count(), 1 + 200);
}

#[test]
fn presets_write_their_tables() {
    let dir = scratch("presets");
    let mut cfg = ExperimentConfig::new(Preset::Exp2Regret, &dir);
    cfg.horizon = Some(2_000);
    cfg.seeds = vec![0, 1, 2];
    cfg.game = Some(GameFamily::new(FamilyTag::CheckerboardMP, 6, 0));
    let files = run_experiment(&cfg).unwrap();
    assert_eq!(files.len(), 4);
    let agg = std::fs::read_to_string(dir.join("exp2_regret_aggregate.csv")).unwrap();
    assert!(agg.starts_with("t,max_si_sampled_p1_mean,max_si_sampled_p1_q025,max_si_sampled_p1_q975"));
    // byte-identical reruns
    let first = std::fs::read(&files[0]).unwrap();
    run_experiment(&cfg).unwrap();
    assert_eq!(std::fs::read(&files[0]).unwrap(), first);

    let mut cfg = ExperimentConfig::new(Preset::SeCounterexample, &dir);
    cfg.horizon = Some(1_000);
    cfg.seeds = vec![4];
    run_experiment(&cfg).unwrap();
    let se = std::fs::read_to_string(dir.join("se_counterexample_seed4.csv")).unwrap();
    assert!(se.lines().next().unwrap().contains("identity_gap"));

    let mut cfg = ExperimentConfig::new(Preset::LambdaRegimes, &dir);
    cfg.lambdas = vec![0.1, 0.9];
    run_experiment(&cfg).unwrap();
    let lr = std::fs::read_to_string(dir.join("lambda_regimes.csv")).unwrap();
    assert_eq!(lr.lines().count(), 3);

    let mut cfg = ExperimentConfig::new(Preset::Exp1Runtime, &dir);
    cfg.sizes = vec![3];
    cfg.seeds = vec![0];
    run_experiment(&cfg).unwrap();
    let e1 = std::fs::read_to_string(dir.join("exp1_runtime.csv")).unwrap();
    assert!(e1.starts_with("n,seed,lp_vars,lp_seconds"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn presets_reject_bad_fields() {
    let mut cfg = ExperimentConfig::new(Preset::LambdaRegimes, "unused");
    cfg.lambdas = vec![1.5];
    assert!(run_experiment(&cfg).unwrap_err().to_string().contains("lambdas"));
    let mut cfg = ExperimentConfig::new(Preset::Exp2Regret, "unused");
    cfg.horizon = Some(0);
    assert!(run_experiment(&cfg).unwrap_err().to_string().contains("T"));
}

#[test]
fn experiment_config_reads_json() {
    let text = r#"{"preset":"Exp2SprWeights","game":{"tag":"BiasedRPS","n":10,"seed":3},"T":5000,"seeds":[1,2],
                   "schedule":{"kind":"SqrtExperiment","H":2.0},"output_dir":"out"}"#;
    let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
    assert_eq!(cfg.preset, Preset::Exp2SprWeights);
    assert_eq!(cfg.horizon, Some(5000));
    assert_eq!(cfg.game.unwrap().n, 10);
    assert_eq!(cfg.schedule, Some(StepsizeSchedule::SqrtExperiment { h: 2.0 }));
    cfg.validate().unwrap();
}

#[test]
fn dominance_game_compact_equilibrium() {
    let g = common::dominance_game();
    let r = subgame_self_play(&g, &SubgameConfig::new(20_000, 1, 10.0)).unwrap();
    let gaps = deviation_gaps_general(&g, &Strategy::Weights(r.raw[0].clone()), &Strategy::Weights(r.raw[1].clone())).unwrap();
    assert!(gaps[0] <= 0.02 && gaps[1] <= 0.02, "{gaps:?}");
}

/// Per-joint-set equilibria assume each player sees the other's set. On the
/// rock-scissors-paper variant this pools to marginals that are not an
/// equilibrium of the game with private sets.
#[test]
fn pooled_subgame_equilibria_miss_private_information_equilibrium() {
    let g = BimatrixGame::from(&example_rps().unwrap());
    let r = subgame_self_play(&g, &SubgameConfig::new(50_000, 0, 10.0)).unwrap();
    assert!(linf(&r.marginal[0], &[5.0 / 24.0, 13.0 / 24.0, 0.25]) < 0.01, "{:?}", r.marginal[0]);
    assert!(linf(&r.marginal[1], &[0.25, 2.0 / 3.0, 1.0 / 12.0]) < 0.01, "{:?}", r.marginal[1]);
    let gaps = deviation_gaps_general(&g, &Strategy::Weights(r.raw[0].clone()), &Strategy::Weights(r.raw[1].clone())).unwrap();
    assert!(gaps[0] > 0.1 && gaps[1] > 0.1, "{gaps:?}");
}
