//! Browser demo on the 3x3 rock-scissors-paper variant and on matching pennies.
//!
//! Each operation is a plain function from a request struct to a response
//! struct. The `#[wasm_bindgen]` exports wrap them with JSON strings on both
//! sides, so the page needs no generated bindings beyond `String`.

use gsas_core::bench::lambda_regimes;
use gsas_core::compact::sinkhorn_oracle;
use gsas_core::families::example_rps;
use gsas_core::model::DEFAULT_SUPPORT_CAP;
use gsas_core::regret::{run_self_play, SelfPlayConfig, StepsizeSchedule};
use gsas_core::strategy::ConditionalPolicy;
use gsas_core::{ActionSet, Player};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Keeps a single call under a few seconds in the browser.
pub const MAX_HORIZON: usize = 1_000_000;

/// Equilibrium marginals of the rock-scissors-paper variant.
pub const MU_STAR: [[f64; 3]; 2] = [[0.25, 0.25, 0.5], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];

/// Equilibrium compact weights of the rock-scissors-paper variant.
pub const W_STAR: [[f64; 3]; 2] = [[0.5, 1.0 / 6.0, 1.0 / 3.0], [0.4, 0.2, 0.4]];

fn to_string<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SelfPlayRequest {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: u64,
    #[serde(rename = "H")]
    pub h: f64,
    /// Number of snapshots returned.
    pub points: usize,
}

impl Default for SelfPlayRequest {
    fn default() -> Self {
        SelfPlayRequest { horizon: 20_000, seed: 0, h: 1.0, points: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfPlayResponse {
    pub t: Vec<usize>,
    /// Max sampled SI-regret per player.
    pub regret: [Vec<f64>; 2],
    pub bound: Vec<f64>,
    /// Time-average marginals per snapshot, per player.
    pub marginal: [Vec<Vec<f64>>; 2],
    pub target: [[f64; 3]; 2],
}

pub fn self_play(req: &SelfPlayRequest) -> Result<SelfPlayResponse, String> {
    if req.horizon == 0 || req.horizon > MAX_HORIZON {
        return Err(format!("T must lie in 1..={MAX_HORIZON}"));
    }
    let game = example_rps().map_err(to_string)?;
    let mut cfg = SelfPlayConfig::new(req.horizon, StepsizeSchedule::SqrtExperiment { h: req.h }, req.seed);
    cfg.schedule_p1.validate().map_err(to_string)?;
    cfg.stride = (req.horizon / req.points.max(1)).max(1);
    let traj = run_self_play(&game, &cfg).map_err(to_string)?;
    let s = &traj.snapshots;
    Ok(SelfPlayResponse {
        t: s.iter().map(|x| x.t).collect(),
        regret: [s.iter().map(|x| x.max_si_sampled[0]).collect(), s.iter().map(|x| x.max_si_sampled[1]).collect()],
        bound: s.iter().map(|x| x.expected_bound).collect(),
        marginal: [s.iter().map(|x| x.marginal_p1.clone()).collect(), s.iter().map(|x| x.marginal_p2.clone()).collect()],
        target: MU_STAR,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct LambdaRequest {
    /// Interior grid points in (0, 1).
    pub steps: usize,
}

impl Default for LambdaRequest {
    fn default() -> Self {
        LambdaRequest { steps: 49 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaResponse {
    pub lambda: Vec<f64>,
    pub value: Vec<f64>,
    /// Player 1's probability of T when both actions are available.
    pub p1_tails_given_both: Vec<f64>,
    pub p1_tails_marginal: Vec<f64>,
    pub p2_tails: Vec<f64>,
}

pub fn lambda_sweep(req: &LambdaRequest) -> Result<LambdaResponse, String> {
    if req.steps == 0 || req.steps > 999 {
        return Err("steps must lie in 1..=999".into());
    }
    let lambdas: Vec<f64> = (1..=req.steps).map(|i| i as f64 / (req.steps + 1) as f64).collect();
    let t = lambda_regimes(&lambdas).map_err(to_string)?;
    let col = |name: &str| t.column(name).ok_or_else(|| format!("missing column {name}"));
    Ok(LambdaResponse {
        lambda: col("lambda")?,
        value: col("value")?,
        p1_tails_given_both: col("p1_tails_given_both")?,
        p1_tails_marginal: col("p1_tails_marginal")?,
        p2_tails: col("p2_tails")?,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ScalingRequest {
    pub epsilons: Vec<f64>,
}

impl Default for ScalingRequest {
    fn default() -> Self {
        ScalingRequest { epsilons: (1..=12).map(|i| 10f64.powf(-(i as f64) / 2.0)).collect() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub w: [Vec<f64>; 2],
    pub iterations: [usize; 2],
    /// Sup-norm distance to the equilibrium weights.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingResponse {
    pub rows: Vec<ScalingRow>,
    pub target: [[f64; 3]; 2],
}

/// Equilibrium conditional policies of the rock-scissors-paper variant.
pub fn equilibrium_policies() -> [ConditionalPolicy; 2] {
    let mut out = [ConditionalPolicy::new(3), ConditionalPolicy::new(3)];
    let entries = [
        (0, vec![0, 1, 2], vec![0.5, 0.5, 0.0]),
        (0, vec![1, 2], vec![0.0, 0.0, 1.0]),
        (1, vec![0, 1], vec![2.0 / 3.0, 1.0 / 3.0, 0.0]),
        (1, vec![1, 2], vec![0.0, 1.0 / 3.0, 2.0 / 3.0]),
    ];
    for (p, set, policy) in entries {
        out[p].insert(ActionSet::new(set), policy).expect("policy lies on its set");
    }
    out
}

pub fn scaling_sweep(req: &ScalingRequest) -> Result<ScalingResponse, String> {
    if req.epsilons.is_empty() || req.epsilons.len() > 100 {
        return Err("between 1 and 100 epsilons required".into());
    }
    let game = example_rps().map_err(to_string)?;
    let targets = equilibrium_policies();
    let supports = Player::BOTH
        .map(|pl| game.availability(pl).enumerate_support(DEFAULT_SUPPORT_CAP))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_string)?;
    let mut rows = Vec::with_capacity(req.epsilons.len());
    for &eps in &req.epsilons {
        let r0 = sinkhorn_oracle(&supports[0], &targets[0], eps, 1e-12, 100_000).map_err(to_string)?;
        let r1 = sinkhorn_oracle(&supports[1], &targets[1], eps, 1e-12, 100_000).map_err(to_string)?;
        let w = [r0.w.0, r1.w.0];
        let error = w.iter().zip(&W_STAR).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
        rows.push(ScalingRow { epsilon: eps, w, iterations: [r0.iterations, r1.iterations], error });
    }
    Ok(ScalingResponse { rows, target: W_STAR })
}

/// Parses `request` (an empty string means all defaults), runs `op`, and
/// serializes the response.
pub fn call_json<Q, R>(request: &str, op: impl FnOnce(&Q) -> Result<R, String>) -> Result<String, String>
where
    Q: DeserializeOwned + Default,
    R: Serialize,
{
    let req = if request.trim().is_empty() { Q::default() } else { serde_json::from_str(request).map_err(to_string)? };
    serde_json::to_string(&op(&req)?).map_err(to_string)
}

#[wasm_bindgen(js_name = selfPlay)]
pub fn self_play_js(request: &str) -> Result<String, JsValue> {
    call_json(request, self_play).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lambdaSweep)]
pub fn lambda_sweep_js(request: &str) -> Result<String, JsValue> {
    call_json(request, lambda_sweep).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = scalingSweep)]
pub fn scaling_sweep_js(request: &str) -> Result<String, JsValue> {
    call_json(request, scaling_sweep).map_err(|e| JsValue::from_str(&e))
}
