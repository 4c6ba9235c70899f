//! Compact equilibrium weights: the stochastic-approximation learner with
//! robust averaging, a Sinkhorn matrix-scaling oracle, and an exact
//! implementability test.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::softmax;
use crate::model::{ActionSet, GameSpec, Player};
use crate::regret::{SelfPlay, SelfPlayConfig};
use crate::strategy::{CompactWeights, ConditionalPolicy};

/// Rounds dropped from the robust average by default.
pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaState {
    pub theta: Vec<f64>,
    pub t: usize,
}

impl ThetaState {
    pub fn new(n: usize) -> Self {
        ThetaState { theta: vec![1.0; n], t: 0 }
    }

    /// `sum(theta) - n`; stays 0 while every step's gradient sums to 0.
    pub fn drift(&self) -> f64 {
        self.theta.iter().sum::<f64>() - self.theta.len() as f64
    }
}

/// Softmax of `theta` over `set`, zero elsewhere.
pub fn restricted_softmax(theta: &[f64], set: &ActionSet) -> Vec<f64> {
    let m = set.iter().map(|a| theta[a]).fold(f64::NEG_INFINITY, f64::max);
    let mut p = vec![0.0; theta.len()];
    let mut z = 0.0;
    for a in set.iter() {
        p[a] = (theta[a] - m).exp();
        z += p[a];
    }
    for a in set.iter() {
        p[a] /= z;
    }
    p
}

/// `G = target - restricted_softmax(theta, set)`, `theta += eta G`. Returns `G`.
pub fn sa_step(state: &mut ThetaState, target: &[f64], set: &ActionSet, eta: f64) -> Vec<f64> {
    let p = restricted_softmax(&state.theta, set);
    let g: Vec<f64> = target.iter().zip(&p).map(|(t, q)| t - q).collect();
    for (th, gi) in state.theta.iter_mut().zip(&g) {
        *th += eta * gi;
    }
    state.t += 1;
    g
}

pub fn weights_from_theta(theta: &[f64]) -> CompactWeights {
    CompactWeights(softmax(theta))
}

/// Stepsize-weighted average of iterates after a burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustAverager {
    pub weighted_sum: Vec<f64>,
    pub weight_total: f64,
    pub burn_in: usize,
    seen: usize,
}

impl RobustAverager {
    pub fn new(n: usize, burn_in: usize) -> Self {
        RobustAverager { weighted_sum: vec![0.0; n], weight_total: 0.0, burn_in, seen: 0 }
    }

    /// Feeds one iterate with weight `eta`; the first `burn_in` calls are dropped.
    pub fn observe(&mut self, theta: &[f64], eta: f64) {
        self.seen += 1;
        if self.seen <= self.burn_in {
            return;
        }
        for (s, x) in self.weighted_sum.iter_mut().zip(theta) {
            *s += eta * x;
        }
        self.weight_total += eta;
    }

    pub fn average(&self) -> Result<Vec<f64>> {
        if self.weight_total <= 0.0 {
            return Err(Error::NoData);
        }
        Ok(self.weighted_sum.iter().map(|s| s / self.weight_total).collect())
    }
}

pub fn robust_average(avgr: &mut RobustAverager, state: &ThetaState, eta: f64) {
    avgr.observe(&state.theta, eta)
}

/// What the learner tracks each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TargetMode {
    /// Running average of the played policies.
    #[default]
    TimeAveraged,
    /// The policy played this round.
    PerRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactConfig {
    /// `eta_t = k / sqrt(t)`
    pub k: f64,
    pub burn_in: usize,
    pub target: TargetMode,
}

impl Default for CompactConfig {
    fn default() -> Self {
        CompactConfig { k: 10.0, burn_in: DEFAULT_BURN_IN, target: TargetMode::TimeAveraged }
    }
}

/// Weight learner for one player: SA on `theta` plus robust averaging,
/// with averaging weights `1 / (sqrt 2 sqrt t)`.
#[derive(Debug, Clone)]
pub struct CompactLearner {
    pub theta: ThetaState,
    pub averager: RobustAverager,
    pub config: CompactConfig,
}

impl CompactLearner {
    pub fn new(n: usize, config: CompactConfig) -> Result<Self> {
        if !(config.k > 0.0 && config.k.is_finite()) {
            return Err(Error::Config(format!("stepsize constant must be positive, got {}", config.k)));
        }
        Ok(CompactLearner { theta: ThetaState::new(n), averager: RobustAverager::new(n, config.burn_in), config })
    }

    pub fn step(&mut self, set: &ActionSet, target: &[f64]) -> Vec<f64> {
        let t = (self.theta.t + 1) as f64;
        let g = sa_step(&mut self.theta, target, set, self.config.k / t.sqrt());
        self.averager.observe(&self.theta.theta, 1.0 / (2f64.sqrt() * t.sqrt()));
        g
    }

    pub fn weights(&self) -> CompactWeights {
        weights_from_theta(&self.theta.theta)
    }

    pub fn robust_weights(&self) -> Result<CompactWeights> {
        Ok(weights_from_theta(&self.averager.average()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSnapshot {
    pub t: usize,
    pub raw: [Vec<f64>; 2],
    pub robust: Option<[Vec<f64>; 2]>,
    pub marginal: [Vec<f64>; 2],
}

#[derive(Debug, Clone)]
pub struct CompactRun {
    pub snapshots: Vec<WeightSnapshot>,
    pub raw: [CompactWeights; 2],
    pub robust: [CompactWeights; 2],
    pub marginal: [Vec<f64>; 2],
}

/// SI-MWU self-play feeding one weight learner per player.
pub fn run_compact_pipeline(game: &GameSpec, sp: &SelfPlayConfig, cfg: [CompactConfig; 2]) -> Result<CompactRun> {
    let mut play = SelfPlay::from_config(game, sp)?;
    let mut learners = [
        CompactLearner::new(game.n_actions(Player::One), cfg[0])?,
        CompactLearner::new(game.n_actions(Player::Two), cfg[1])?,
    ];
    let stride = sp.stride.max(1);
    let mut snapshots = Vec::new();
    for t in 1..=sp.horizon {
        let o = play.step()?;
        let sets = [&o.draw.s1, &o.draw.s2];
        let policies = [&o.policy_p1, &o.policy_p2];
        for (i, pl) in Player::BOTH.into_iter().enumerate() {
            match cfg[i].target {
                TargetMode::TimeAveraged => learners[i].step(sets[i], &play.mean_marginal(pl)),
                TargetMode::PerRound => learners[i].step(sets[i], policies[i]),
            };
        }
        if t % stride == 0 || t == sp.horizon {
            let robust = match (learners[0].robust_weights(), learners[1].robust_weights()) {
                (Ok(a), Ok(b)) => Some([a.0, b.0]),
                _ => None,
            };
            snapshots.push(WeightSnapshot {
                t,
                raw: [learners[0].weights().0, learners[1].weights().0],
                robust,
                marginal: [play.mean_marginal(Player::One), play.mean_marginal(Player::Two)],
            });
        }
    }
    let robust = [learners[0].robust_weights()?, learners[1].robust_weights()?];
    Ok(CompactRun {
        snapshots,
        raw: [learners[0].weights(), learners[1].weights()],
        robust,
        marginal: [play.mean_marginal(Player::One), play.mean_marginal(Player::Two)],
    })
}

/// Outcome of the matrix-scaling oracle. `coupling` is sets x actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub sets: Vec<ActionSet>,
    pub row_scaling: Vec<f64>,
    pub col_scaling: Vec<f64>,
    pub coupling: Vec<Vec<f64>>,
    pub w: CompactWeights,
    pub iterations: usize,
    pub residual: f64,
    pub log_domain: bool,
}

impl ScalingResult {
    /// Dense coupling as CSV, one row per set.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.col_scaling.len();
        let mut header = vec!["set".to_string()];
        header.extend((0..n).map(|a| format!("a{a}")));
        w.write_record(&header)?;
        for (s, row) in self.sets.iter().zip(&self.coupling) {
            let label = s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
            let mut rec = vec![label];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smoothed target marginal `sum_S rho(S) [(1 - eps) pi(.|S) + eps / |S|]`.
pub fn smoothed_marginal(support: &[(ActionSet, f64)], target: &ConditionalPolicy, eps: f64) -> Result<Vec<f64>> {
    let mut mu = vec![0.0; target.n_actions];
    for (s, r) in support {
        let p = target.get(s)?;
        let k = s.len() as f64;
        for a in s.iter() {
            mu[a] += r * ((1.0 - eps) * p[a] + eps / k);
        }
    }
    Ok(mu)
}

fn log_sum_exp(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Scales the set/action incidence matrix to row sums `rho` and column sums
/// equal to the smoothed target marginal. `w` is the normalized column scaling.
pub fn sinkhorn_oracle(
    support: &[(ActionSet, f64)],
    target: &ConditionalPolicy,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ScalingResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let n = target.n_actions;
    let mu = smoothed_marginal(support, target, eps)?;
    let rho: Vec<f64> = support.iter().map(|(_, r)| *r).collect();
    let sets: Vec<ActionSet> = support.iter().map(|(s, _)| s.clone()).collect();
    // columns of actions never available carry no mass and stay at zero
    let live: Vec<bool> = (0..n).map(|a| sets.iter().any(|s| s.contains(a))).collect();
    let members: Vec<Vec<usize>> = (0..n).map(|a| (0..sets.len()).filter(|&i| sets[i].contains(a)).collect()).collect();
    let log_domain = rho.iter().chain(mu.iter().enumerate().filter(|(a, _)| live[*a]).map(|(_, m)| m)).any(|&x| x < 1e-8);

    let mut lu = vec![0.0; sets.len()];
    let mut lv: Vec<f64> = (0..n).map(|a| if live[a] { 0.0 } else { f64::NEG_INFINITY }).collect();
    let lrho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let lmu: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let mut u = vec![1.0; sets.len()];
    let mut v: Vec<f64> = (0..n).map(|a| if live[a] { 1.0 } else { 0.0 }).collect();

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        if log_domain {
            for (i, s) in sets.iter().enumerate() {
                lu[i] = lrho[i] - log_sum_exp(s.iter().map(|a| lv[a]));
            }
            for a in (0..n).filter(|&a| live[a]) {
                lv[a] = lmu[a] - log_sum_exp(members[a].iter().map(|&i| lu[i]));
            }
            residual = sets
                .iter()
                .enumerate()
                .map(|(i, s)| (s.iter().map(|a| (lu[i] + lv[a]).exp()).sum::<f64>() - rho[i]).abs())
                .fold(0.0, f64::max);
        } else {
            for (i, s) in sets.iter().enumerate() {
                u[i] = rho[i] / s.iter().map(|a| v[a]).sum::<f64>();
            }
            for a in (0..n).filter(|&a| live[a]) {
                v[a] = mu[a] / members[a].iter().map(|&i| u[i]).sum::<f64>();
            }
            // renormalize the gauge so entries stay bounded
            let z: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= z);
            u.iter_mut().for_each(|x| *x *= z);
            residual = sets
                .iter()
                .enumerate()
                .map(|(i, s)| (u[i] * s.iter().map(|a| v[a]).sum::<f64>() - rho[i]).abs())
                .fold(0.0, f64::max);
            // columns were just fitted exactly, so only rows can deviate
        }
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(Error::ScalingNotConverged { iterations, residual });
    }
    if log_domain {
        u = lu.iter().map(|x| x.exp()).collect();
        let m = lv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v = lv.iter().map(|x| (x - m).exp()).collect();
        let shift = m.exp();
        u.iter_mut().for_each(|x| *x *= shift);
    }
    let coupling: Vec<Vec<f64>> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| (0..n).map(|a| if s.contains(a) { u[i] * v[a] } else { 0.0 }).collect())
        .collect();
    let total: f64 = v.iter().sum();
    let w = CompactWeights(v.iter().map(|x| x / total).collect());
    Ok(ScalingResult { sets, row_scaling: u, col_scaling: v, coupling, w, iterations, residual, log_domain })
}

/// Fixed-point scale for capacities in the feasibility flow.
pub const FLOW_SCALE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Implementability {
    pub feasible: bool,
    /// Sets x actions transport plan when feasible.
    pub plan: Option<Vec<Vec<f64>>>,
    /// Mass that could be routed, out of 1.
    pub routed: f64,
}

struct FlowGraph {
    head: Vec<usize>,
    cap: Vec<i128>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph { head: Vec::new(), cap: Vec::new(), adj: vec![Vec::new(); n] }
    }

    fn add(&mut self, from: usize, to: usize, cap: i128) -> usize {
        let e = self.head.len();
        self.head.push(to);
        self.cap.push(cap);
        self.adj[from].push(e);
        self.head.push(from);
        self.cap.push(0);
        self.adj[to].push(e + 1);
        e
    }

    /// Edmonds-Karp.
    fn max_flow(&mut self, s: usize, t: usize) -> i128 {
        let mut flow = 0;
        loop {
            let mut prev: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(x) = queue.pop_front() {
                for &e in &self.adj[x] {
                    let y = self.head[e];
                    if !seen[y] && self.cap[e] > 0 {
                        seen[y] = true;
                        prev[y] = Some(e);
                        queue.push_back(y);
                    }
                }
            }
            if !seen[t] {
                return flow;
            }
            let mut bottleneck = i128::MAX;
            let mut y = t;
            while let Some(e) = prev[y] {
                bottleneck = bottleneck.min(self.cap[e]);
                y = self.head[e ^ 1];
            }
            let mut y = t;
            while let Some(e) = prev[y] {
                self.cap[e] -= bottleneck;
                self.cap[e ^ 1] += bottleneck;
                y = self.head[e ^ 1];
            }
            flow += bottleneck;
        }
    }
}

/// Decides whether `mu` is the marginal of some policy on `support` by
/// max-flow on integer-scaled capacities.
pub fn implementability_check(mu: &[f64], support: &[(ActionSet, f64)]) -> Implementability {
    let n = mu.len();
    let k = support.len();
    let (src, sink) = (k + n, k + n + 1);
    let mut g = FlowGraph::new(k + n + 2);
    let to_int = |x: f64| (x.max(0.0) * FLOW_SCALE).round() as i128;
    let mut edges = Vec::new();
    for (i, (s, r)) in support.iter().enumerate() {
        g.add(src, i, to_int(*r));
        for a in s.iter().filter(|&a| a < n) {
            edges.push((i, a, g.add(i, k + a, i128::MAX / 4)));
        }
    }
    for (a, &m) in mu.iter().enumerate() {
        g.add(k + a, sink, to_int(m));
    }
    let demand: i128 = mu.iter().map(|&m| to_int(m)).sum();
    let supply: i128 = support.iter().map(|(_, r)| to_int(*r)).sum();
    let flow = g.max_flow(src, sink);
    // rounding of each capacity can lose at most one unit per edge
    let slack = (k + n) as i128;
    let feasible = flow + slack >= demand && flow + slack >= supply;
    let routed = flow as f64 / FLOW_SCALE;
    let plan = feasible.then(|| {
        let mut p = vec![vec![0.0; n]; k];
        for &(i, a, e) in &edges {
            p[i][a] = g.cap[e ^ 1] as f64 / FLOW_SCALE;
        }
        p
    });
    Implementability { feasible, plan, routed }
}
