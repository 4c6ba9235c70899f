use gsas_web::{call_json, lambda_sweep, scaling_sweep, self_play, LambdaRequest, ScalingRequest, SelfPlayRequest, MU_STAR};

#[test]
fn self_play_approaches_equilibrium_marginals() {
    let req = SelfPlayRequest { horizon: 100_000, seed: 2, ..Default::default() };
    let r = self_play(&req).unwrap();
    assert_eq!(r.t.len(), 200);
    assert_eq!(*r.t.last().unwrap(), 100_000);
    for p in 0..2 {
        let last = r.marginal[p].last().unwrap();
        let err = last.iter().zip(&MU_STAR[p]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.05, "player {p}: {last:?}");
    }
}

#[test]
fn lambda_sweep_switches_regime_at_one_half() {
    let r = lambda_sweep(&LambdaRequest { steps: 9 }).unwrap();
    for (i, &l) in r.lambda.iter().enumerate() {
        if l < 0.5 {
            assert!((r.p2_tails[i] - 1.0).abs() < 1e-9, "lambda {l}");
            assert!((r.value[i] - (2.0 * l - 1.0)).abs() < 1e-9, "lambda {l}");
        } else {
            assert!((l * r.p1_tails_given_both[i] - 0.5).abs() < 1e-9, "lambda {l}");
            assert!(r.value[i].abs() < 1e-9, "lambda {l}");
        }
    }
}

#[test]
fn scaling_error_shrinks_with_epsilon() {
    let r = scaling_sweep(&ScalingRequest::default()).unwrap();
    let errs: Vec<f64> = r.rows.iter().map(|row| row.error).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errs:?}");
    assert!(*errs.last().unwrap() < 1e-5);
    assert!(errs[0] > 1e-2);
}

#[test]
fn json_wrappers_accept_defaults_and_reject_bad_input() {
    let text = call_json("", lambda_sweep).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["lambda"].as_array().unwrap().len(), 49);
    assert!(call_json(r#"{"T": 0}"#, self_play).is_err());
    assert!(call_json(r#"{"epsilons": [2.0]}"#, scaling_sweep).is_err());
    assert!(call_json("{not json", lambda_sweep).is_err());
}
