//! Sleeping-internal-regret minimization (SI-MWU and its optimistic variant),
//! regret ledgers, bound curves and self-play.

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_in_place;
use crate::model::{ActionSet, GameSpec, JointDraw, Player};
use crate::rng::{stream, Purpose, Rng};

/// Default residual tolerance of the stationary solve.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Rounds between max-shifts of the log-weights in the sparse MWU path.
const RENORMALIZE_EVERY: usize = 64;
const CLIP: f64 = 1e-12;
const POWER_ITER_CAP: usize = 1_000_000;

/// Dense index of ordered pairs `(a -> b)`, `a != b`, over `n` actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    n: usize,
}

impl PairIndex {
    pub fn new(n: usize) -> Self {
        PairIndex { n }
    }

    pub fn n_actions(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        debug_assert!(a != b);
        a * (self.n - 1) + if b < a { b } else { b - 1 }
    }

    #[inline]
    pub fn pair(&self, e: usize) -> (usize, usize) {
        let a = e / (self.n - 1);
        let r = e % (self.n - 1);
        (a, if r < a { r } else { r + 1 })
    }
}

/// Experts over ordered action pairs. Weights are held as log-weights, shifted
/// so the largest is zero, so positivity survives arbitrarily long runs;
/// `qtilde` exposes the normalized weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertState {
    n_actions: usize,
    log_w: Vec<f64>,
    pub prev_loss: Option<Vec<f64>>,
    pub round: usize,
}

impl ExpertState {
    pub fn uniform(n_actions: usize) -> Result<Self> {
        if n_actions < 2 {
            return Err(Error::InvalidGame("sleeping experts need at least two actions".into()));
        }
        let m = n_actions * (n_actions - 1);
        Ok(ExpertState { n_actions, log_w: vec![0.0; m], prev_loss: None, round: 0 })
    }

    /// Builds a state from arbitrary positive weights.
    pub fn from_weights(n_actions: usize, w: &[f64]) -> Result<Self> {
        let mut s = Self::uniform(n_actions)?;
        if w.len() != s.log_w.len() || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Config("expert weights must be positive over all ordered pairs".into()));
        }
        s.log_w = w.iter().map(|x| x.ln()).collect();
        s.renormalize();
        Ok(s)
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn pairs(&self) -> PairIndex {
        PairIndex::new(self.n_actions)
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn qtilde(&self) -> Vec<f64> {
        let m = self.max_log_w();
        let w: Vec<f64> = self.log_w.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    fn max_log_w(&self) -> f64 {
        self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shifts log-weights so the largest is zero; the normalized weights are unchanged.
    fn renormalize(&mut self) {
        let m = self.max_log_w();
        for l in &mut self.log_w {
            *l -= m;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StepsizeSchedule {
    /// `scale * sqrt(2 ln n) / sqrt(t)`
    SqrtTheorem { scale: f64 },
    /// `h * sqrt(ln(n (n - 1)) / t)`
    SqrtExperiment {
        #[serde(rename = "H", alias = "h")]
        h: f64,
    },
    Constant { eta: f64 },
}

impl Default for StepsizeSchedule {
    fn default() -> Self {
        StepsizeSchedule::SqrtExperiment { h: 1.0 }
    }
}

impl StepsizeSchedule {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            StepsizeSchedule::SqrtTheorem { scale } => scale,
            StepsizeSchedule::SqrtExperiment { h } => h,
            StepsizeSchedule::Constant { eta } => eta,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("stepsize parameter must be positive, got {v}")))
        }
    }

    /// Stepsize at round `t >= 1` for a player with `n` actions.
    pub fn eta(&self, t: usize, n: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            StepsizeSchedule::SqrtTheorem { scale } => scale * (2.0 * (n as f64).ln()).sqrt() / t.sqrt(),
            StepsizeSchedule::SqrtExperiment { h } => h * ((n as f64 * (n as f64 - 1.0)).ln() / t).sqrt(),
            StepsizeSchedule::Constant { eta } => eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    Mwu,
    Omwu,
}

/// One round of play from a single player's perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub set: ActionSet,
    /// Length `n`, zero off `set`.
    pub policy: Vec<f64>,
    pub action: usize,
    /// `u_i(., a_{-i})` over all own actions.
    pub payoff_vec: Vec<f64>,
}

/// Restricts `q̃` to experts whose target lies in `set` and renormalizes.
pub fn awake_normalize(state: &ExpertState, set: &ActionSet) -> Result<Vec<f64>> {
    let pairs = state.pairs();
    let n = state.n_actions;
    let mut q = vec![0.0; pairs.len()];
    if set.is_empty() || set.max_action().unwrap() >= n {
        return Err(Error::InvalidAvailability("set is empty or out of range".into()));
    }
    // max-shift over awake log-weights keeps the ratio exact under underflow
    let mut m = f64::NEG_INFINITY;
    for b in set.iter() {
        for a in (0..n).filter(|&a| a != b) {
            m = m.max(state.log_w[pairs.index(a, b)]);
        }
    }
    let mut total = 0.0;
    for b in set.iter() {
        for a in (0..n).filter(|&a| a != b) {
            let e = pairs.index(a, b);
            q[e] = (state.log_w[e] - m).exp();
            total += q[e];
        }
    }
    for b in set.iter() {
        for a in (0..n).filter(|&a| a != b) {
            q[pairs.index(a, b)] /= total;
        }
    }
    Ok(q)
}

/// Dense `k x k` rates among the actions of a set, `rates[i * k + j]` for the
/// move from the `i`-th to the `j`-th action. The diagonal is ignored.
fn balance_residual(rates: &[f64], k: usize, pi: &[f64]) -> f64 {
    let mut res = (pi.iter().sum::<f64>() - 1.0).abs();
    for b in 0..k {
        let mut r = 0.0;
        for a in (0..k).filter(|&a| a != b) {
            r += pi[a] * rates[a * k + b] - pi[b] * rates[b * k + a];
        }
        res = res.max(r.abs());
    }
    res
}

/// Stationary distribution of the chain with dense rates; length `k`.
/// Rates need only be known up to a common positive factor.
pub fn stationary_dense(rates: &[f64], k: usize, tol: f64) -> Result<Vec<f64>> {
    if k == 1 {
        return Ok(vec![1.0]);
    }
    // row b: pi(b) out(b) - sum_a pi(a) q(a->b) = 0; last row replaced by sum pi = 1
    let mut m = vec![0.0; k * k];
    for b in 0..k {
        for a in (0..k).filter(|&a| a != b) {
            m[b * k + b] += rates[b * k + a];
            m[b * k + a] -= rates[a * k + b];
        }
    }
    for j in 0..k {
        m[(k - 1) * k + j] = 1.0;
    }
    let mut pi = vec![0.0; k];
    pi[k - 1] = 1.0;
    let solved = solve_in_place(&mut m, &mut pi, k, 1e-300).is_some();
    if solved && pi.iter().all(|x| x.is_finite() && *x > -1e-9) {
        for x in &mut pi {
            if *x < CLIP {
                *x = 0.0;
            }
        }
        let z: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= z);
        if balance_residual(rates, k, &pi) <= tol {
            return Ok(pi);
        }
    }
    power_iteration(rates, k, tol)
}

/// Stationary distribution on `set` of the chain `a -> a'` with rates `q(a -> a')`.
///
/// Output has length `n` and is zero off `set`.
pub fn stationary_policy(q: &[f64], n: usize, set: &ActionSet, tol: f64) -> Result<Vec<f64>> {
    let pairs = PairIndex::new(n);
    let s = set.as_slice();
    let k = s.len();
    let mut rates = vec![0.0; k * k];
    for (ia, &a) in s.iter().enumerate() {
        for (ib, &b) in s.iter().enumerate() {
            if a != b {
                rates[ia * k + ib] = q[pairs.index(a, b)];
            }
        }
    }
    let local = stationary_dense(&rates, k, tol)?;
    let mut pi = vec![0.0; n];
    for (&a, x) in s.iter().zip(local) {
        pi[a] = x;
    }
    Ok(pi)
}

fn power_iteration(rates: &[f64], k: usize, tol: f64) -> Result<Vec<f64>> {
    let out: Vec<f64> = (0..k).map(|a| (0..k).filter(|&b| b != a).map(|b| rates[a * k + b]).sum()).collect();
    // uniformization with a strict self-loop makes the chain aperiodic
    let z = out.iter().cloned().fold(0.0, f64::max) * 1.01;
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    let mut residual = f64::INFINITY;
    for it in 0..POWER_ITER_CAP {
        for b in 0..k {
            let mut v = pi[b] * (1.0 - out[b] / z);
            for a in (0..k).filter(|&a| a != b) {
                v += pi[a] * rates[a * k + b] / z;
            }
            next[b] = v;
        }
        let tot: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= tot);
        std::mem::swap(&mut pi, &mut next);
        if it % 16 == 0 {
            residual = balance_residual(rates, k, &pi);
            if residual <= tol {
                return Ok(pi);
            }
        }
    }
    Err(Error::StationaryNotConverged { residual })
}

/// `1 - <p, u>`
pub fn played_loss(policy: &[f64], payoff_vec: &[f64]) -> f64 {
    1.0 - policy.iter().zip(payoff_vec).map(|(p, u)| p * u).sum::<f64>()
}

/// Losses of every expert given the round's record.
pub fn expert_losses(record: &RoundRecord, pairs: PairIndex) -> Vec<f64> {
    let lhat = played_loss(&record.policy, &record.payoff_vec);
    let mut out = vec![lhat; pairs.len()];
    let u = &record.payoff_vec;
    for b in record.set.iter() {
        for a in (0..pairs.n_actions()).filter(|&a| a != b) {
            let pa = record.policy[a];
            if pa != 0.0 {
                out[pairs.index(a, b)] = lhat - pa * (u[b] - u[a]);
            }
        }
    }
    out
}

/// `q̃ ∝ q̃ exp(-eta * loss)`
pub fn mwu_update(state: &mut ExpertState, losses: &[f64], eta: f64) {
    for (l, x) in state.log_w.iter_mut().zip(losses) {
        *l -= eta * x;
    }
    state.renormalize();
    state.round += 1;
}

/// `q̃ ∝ q̃ exp(-2 eta loss + eta prev_loss)`, with `prev_loss` taken from the
/// state (zero on the first round).
pub fn omwu_update(state: &mut ExpertState, losses: &[f64], eta: f64) {
    match &state.prev_loss {
        Some(prev) => {
            for ((l, x), p) in state.log_w.iter_mut().zip(losses).zip(prev) {
                *l -= 2.0 * eta * x - eta * p;
            }
        }
        None => {
            for (l, x) in state.log_w.iter_mut().zip(losses) {
                *l -= 2.0 * eta * x;
            }
        }
    }
    state.prev_loss = Some(losses.to_vec());
    state.renormalize();
    state.round += 1;
}

/// A single SI-MWU player. `act` and `observe` split a round so that both
/// players can commit to actions before seeing each other's.
#[derive(Debug, Clone)]
pub struct SiMwuLearner {
    pub state: ExpertState,
    pub schedule: StepsizeSchedule,
    pub variant: Variant,
    pub tol: f64,
}

impl SiMwuLearner {
    pub fn new(n_actions: usize, schedule: StepsizeSchedule, variant: Variant) -> Result<Self> {
        schedule.validate()?;
        Ok(SiMwuLearner { state: ExpertState::uniform(n_actions)?, schedule, variant, tol: STATIONARY_TOL })
    }

    /// Policy on `set` for the current round, zero off `set`.
    pub fn policy(&self, set: &ActionSet) -> Result<Vec<f64>> {
        if set.is_empty() || set.max_action().unwrap() >= self.state.n_actions {
            return Err(Error::InvalidAvailability("set is empty or out of range".into()));
        }
        if set.len() == 1 {
            let mut p = vec![0.0; self.state.n_actions];
            p[set.as_slice()[0]] = 1.0;
            return Ok(p);
        }
        // rates among awake actions only, max-shifted; the stationary
        // distribution is invariant to their common scale
        let pairs = self.state.pairs();
        let s = set.as_slice();
        let k = s.len();
        let mut m = f64::NEG_INFINITY;
        for &a in s {
            for &b in s {
                if a != b {
                    m = m.max(self.state.log_w[pairs.index(a, b)]);
                }
            }
        }
        let mut rates = vec![0.0; k * k];
        for (ia, &a) in s.iter().enumerate() {
            for (ib, &b) in s.iter().enumerate() {
                if a != b {
                    rates[ia * k + ib] = (self.state.log_w[pairs.index(a, b)] - m).exp();
                }
            }
        }
        let local = stationary_dense(&rates, k, self.tol)?;
        let mut pi = vec![0.0; self.state.n_actions];
        for (&a, x) in s.iter().zip(local) {
            pi[a] = x;
        }
        Ok(pi)
    }

    pub fn observe(&mut self, record: &RoundRecord) {
        let pairs = self.state.pairs();
        let eta = self.schedule.eta(self.state.round + 1, self.state.n_actions);
        if self.variant == Variant::Mwu {
            // every expert's loss is lhat plus a correction on awake pairs with
            // a played source; the common lhat cancels under normalization
            let u = &record.payoff_vec;
            for b in record.set.iter() {
                for (a, &pa) in record.policy.iter().enumerate() {
                    if pa != 0.0 && a != b {
                        self.state.log_w[pairs.index(a, b)] += eta * pa * (u[b] - u[a]);
                    }
                }
            }
            self.state.round += 1;
            if self.state.round.is_multiple_of(RENORMALIZE_EVERY) {
                self.state.renormalize();
            }
            return;
        }
        let losses = expert_losses(record, pairs);
        omwu_update(&mut self.state, &losses, eta);
    }

    /// The awake mixture of expert losses equals the played loss. Holds only
    /// when `record.policy` is this learner's own policy on `record.set`.
    #[cfg(debug_assertions)]
    fn check_mixture_identity(&self, record: &RoundRecord) {
        if record.set.len() > 1 {
            let losses = expert_losses(record, self.state.pairs());
            let q = awake_normalize(&self.state, &record.set).expect("set validated when acting");
            let mixed: f64 = q.iter().zip(&losses).map(|(a, b)| a * b).sum();
            let lhat = played_loss(&record.policy, &record.payoff_vec);
            let scale = 1.0 + record.payoff_vec.iter().fold(0.0f64, |m, u| m.max(u.abs()));
            debug_assert!((mixed - lhat).abs() <= 1e-8 * scale, "mixture loss {mixed} vs played {lhat}");
        }
    }
}

/// Samples an index from a probability vector.
pub fn sample_from(p: &[f64], rng: &mut Rng) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = i;
            if r < acc {
                return i;
            }
        }
    }
    last
}

/// One full round against a payoff vector fixed in advance.
pub fn si_mwu_round(
    learner: &mut SiMwuLearner,
    set: &ActionSet,
    payoff_vec: &[f64],
    rng: &mut Rng,
) -> Result<RoundRecord> {
    let policy = learner.policy(set)?;
    let action = sample_from(&policy, rng);
    let record = RoundRecord { set: set.clone(), policy, action, payoff_vec: payoff_vec.to_vec() };
    #[cfg(debug_assertions)]
    learner.check_mixture_identity(&record);
    learner.observe(&record);
    Ok(record)
}

/// Cumulative SI- and SE-regrets, sampled and conditionally expected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub n: usize,
    pub t: usize,
    /// Row-major `n x n`, entry `(a, a')` is the regret of `a -> a'`.
    pub si_sampled: Vec<f64>,
    pub si_expected: Vec<f64>,
    pub se_sampled: Vec<f64>,
    pub se_expected: Vec<f64>,
}

impl RegretLedger {
    pub fn new(n: usize) -> Self {
        RegretLedger {
            n,
            t: 0,
            si_sampled: vec![0.0; n * n],
            si_expected: vec![0.0; n * n],
            se_sampled: vec![0.0; n],
            se_expected: vec![0.0; n],
        }
    }

    pub fn update(&mut self, record: &RoundRecord) {
        let n = self.n;
        let u = &record.payoff_vec;
        let at = record.action;
        let played: f64 = record.policy.iter().zip(u).map(|(p, x)| p * x).sum();
        let support: Vec<usize> = (0..n).filter(|&a| record.policy[a] != 0.0).collect();
        for b in record.set.iter() {
            if b != at {
                self.si_sampled[at * n + b] += u[b] - u[at];
            }
            self.se_sampled[b] += u[b] - u[at];
            self.se_expected[b] += u[b] - played;
            for &a in &support {
                if a != b {
                    self.si_expected[a * n + b] += record.policy[a] * (u[b] - u[a]);
                }
            }
        }
        self.t += 1;
    }

    fn max_off_diag(&self, m: &[f64]) -> f64 {
        let n = self.n;
        let mut best = f64::NEG_INFINITY;
        for (a, row) in m.chunks_exact(n).enumerate() {
            for (b, &x) in row.iter().enumerate() {
                if a != b && x > best {
                    best = x;
                }
            }
        }
        best
    }

    pub fn max_si_sampled(&self) -> f64 {
        self.max_off_diag(&self.si_sampled)
    }

    pub fn max_si_expected(&self) -> f64 {
        self.max_off_diag(&self.si_expected)
    }

    /// Largest deviation from `se(a') = sum_a si(a -> a')` over both ledgers.
    pub fn identity_gap(&self) -> f64 {
        let n = self.n;
        let mut gap: f64 = 0.0;
        for b in 0..n {
            let s: f64 = (0..n).map(|a| self.si_sampled[a * n + b]).sum();
            let e: f64 = (0..n).map(|a| self.si_expected[a * n + b]).sum();
            gap = gap.max((s - self.se_sampled[b]).abs()).max((e - self.se_expected[b]).abs());
        }
        gap
    }
}

pub fn update_ledgers(ledger: &mut RegretLedger, record: &RoundRecord) {
    ledger.update(record)
}

/// `sqrt(2 t ln(n (n - 1)))`
pub fn expected_bound(t: usize, n: usize) -> f64 {
    (2.0 * t as f64 * ((n * (n - 1)) as f64).ln()).sqrt()
}

/// `expected_bound(t) + sqrt(8 t ln(2 n (n - 1) / p))`
pub fn hp_band(t: usize, n: usize, p: f64) -> f64 {
    expected_bound(t, n) + (8.0 * t as f64 * (2.0 * (n * (n - 1)) as f64 / p).ln()).sqrt()
}

/// Both curves for `t = 0..=horizon`, indexed by `t`.
pub fn bound_curves(horizon: usize, n: usize, p: f64) -> (Vec<f64>, Vec<f64>) {
    (0..=horizon).map(|t| (expected_bound(t, n), hp_band(t, n, p))).unzip()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfPlayConfig {
    pub horizon: usize,
    pub schedule_p1: StepsizeSchedule,
    pub schedule_p2: StepsizeSchedule,
    #[serde(default)]
    pub variant: Variant,
    pub seed: u64,
    /// Snapshot every `stride` rounds (and at the last round).
    pub stride: usize,
    /// Keep per-round sets, policies and actions.
    #[serde(default)]
    pub record_rounds: bool,
    #[serde(default = "default_band_p")]
    pub band_p: f64,
    /// Start from random expert weights instead of uniform ones.
    #[serde(default)]
    pub random_init: bool,
}

fn default_band_p() -> f64 {
    0.05
}

impl SelfPlayConfig {
    pub fn new(horizon: usize, schedule: StepsizeSchedule, seed: u64) -> Self {
        SelfPlayConfig {
            horizon,
            schedule_p1: schedule,
            schedule_p2: schedule,
            variant: Variant::Mwu,
            seed,
            stride: (horizon / 200).max(1),
            record_rounds: false,
            band_p: default_band_p(),
            random_init: false,
        }
    }
}

/// What happened in one self-play round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub draw: JointDraw,
    pub policy_p1: Vec<f64>,
    pub policy_p2: Vec<f64>,
    pub action_p1: usize,
    pub action_p2: usize,
}

/// Incremental self-play of two SI-MWU learners.
#[derive(Debug, Clone)]
pub struct SelfPlay<'g> {
    game: &'g GameSpec,
    pub learners: [SiMwuLearner; 2],
    pub ledgers: [RegretLedger; 2],
    policy_sums: [Vec<f64>; 2],
    avail_rngs: [Rng; 2],
    action_rngs: [Rng; 2],
    t: usize,
    payoff_buf: [Vec<f64>; 2],
}

impl<'g> SelfPlay<'g> {
    pub fn new(
        game: &'g GameSpec,
        schedule_p1: StepsizeSchedule,
        schedule_p2: StepsizeSchedule,
        variant: Variant,
        seed: u64,
    ) -> Result<Self> {
        let n1 = game.n_actions(Player::One);
        let n2 = game.n_actions(Player::Two);
        Ok(SelfPlay {
            game,
            learners: [SiMwuLearner::new(n1, schedule_p1, variant)?, SiMwuLearner::new(n2, schedule_p2, variant)?],
            ledgers: [RegretLedger::new(n1), RegretLedger::new(n2)],
            policy_sums: [vec![0.0; n1], vec![0.0; n2]],
            avail_rngs: [stream(seed, 0, Purpose::Availability), stream(seed, 1, Purpose::Availability)],
            action_rngs: [stream(seed, 0, Purpose::Action), stream(seed, 1, Purpose::Action)],
            t: 0,
            payoff_buf: [vec![0.0; n1], vec![0.0; n2]],
        })
    }

    pub fn from_config(game: &'g GameSpec, cfg: &SelfPlayConfig) -> Result<Self> {
        let mut sp = Self::new(game, cfg.schedule_p1, cfg.schedule_p2, cfg.variant, cfg.seed)?;
        if cfg.random_init {
            for (i, l) in sp.learners.iter_mut().enumerate() {
                let mut rng = stream(cfg.seed, i as u8, Purpose::Init);
                let w: Vec<f64> = (0..l.state.pairs().len()).map(|_| rng.gen_range(0.5..1.5)).collect();
                l.state = ExpertState::from_weights(l.state.n_actions(), &w)?;
            }
        }
        Ok(sp)
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn game(&self) -> &GameSpec {
        self.game
    }

    pub fn step(&mut self) -> Result<RoundOutcome> {
        let s1 = self.game.avail_p1.sample(&mut self.avail_rngs[0])?;
        let s2 = self.game.avail_p2.sample(&mut self.avail_rngs[1])?;
        let pi1 = self.learners[0].policy(&s1)?;
        let pi2 = self.learners[1].policy(&s2)?;
        let a1 = sample_from(&pi1, &mut self.action_rngs[0]);
        let a2 = sample_from(&pi2, &mut self.action_rngs[1]);
        self.game.payoff_vector_into(Player::One, a2, &mut self.payoff_buf[0]);
        self.game.payoff_vector_into(Player::Two, a1, &mut self.payoff_buf[1]);
        self.t += 1;
        let r1 = RoundRecord { set: s1, policy: pi1, action: a1, payoff_vec: self.payoff_buf[0].clone() };
        let r2 = RoundRecord { set: s2, policy: pi2, action: a2, payoff_vec: self.payoff_buf[1].clone() };
        for (i, r) in [&r1, &r2].into_iter().enumerate() {
            #[cfg(debug_assertions)]
            self.learners[i].check_mixture_identity(r);
            self.learners[i].observe(r);
            self.ledgers[i].update(r);
            for (s, p) in self.policy_sums[i].iter_mut().zip(&r.policy) {
                *s += p;
            }
        }
        Ok(RoundOutcome {
            draw: JointDraw { s1: r1.set, s2: r2.set, round: self.t },
            policy_p1: r1.policy,
            policy_p2: r2.policy,
            action_p1: a1,
            action_p2: a2,
        })
    }

    /// Time-average of played policies, `(1/t) sum_tau pi^tau(S^tau)`.
    pub fn mean_marginal(&self, player: Player) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.policy_sums[player.index()].iter().map(|x| x / t).collect()
    }

    pub fn snapshot(&self, band_p: f64) -> Snapshot {
        let n = self.game.n_actions(Player::One).max(self.game.n_actions(Player::Two));
        Snapshot {
            t: self.t,
            max_si_sampled: [self.ledgers[0].max_si_sampled(), self.ledgers[1].max_si_sampled()],
            max_si_expected: [self.ledgers[0].max_si_expected(), self.ledgers[1].max_si_expected()],
            expected_bound: expected_bound(self.t, n),
            hp_band: hp_band(self.t, n, band_p),
            marginal_p1: self.mean_marginal(Player::One),
            marginal_p2: self.mean_marginal(Player::Two),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: usize,
    pub max_si_sampled: [f64; 2],
    pub max_si_expected: [f64; 2],
    pub expected_bound: f64,
    pub hp_band: f64,
    pub marginal_p1: Vec<f64>,
    pub marginal_p2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub rounds: Vec<RoundOutcome>,
    pub ledgers: [RegretLedger; 2],
    pub marginal_p1: Vec<f64>,
    pub marginal_p2: Vec<f64>,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let (n1, n2) = (self.marginal_p1.len(), self.marginal_p2.len());
        let mut header: Vec<String> =
            ["t", "max_si_sampled_p1", "max_si_sampled_p2", "expected_bound", "hp_band"].map(String::from).to_vec();
        header.extend((0..n1).map(|a| format!("mu1_{a}")));
        header.extend((0..n2).map(|a| format!("mu2_{a}")));
        w.write_record(&header)?;
        for s in &self.snapshots {
            let mut row = vec![
                s.t.to_string(),
                s.max_si_sampled[0].to_string(),
                s.max_si_sampled[1].to_string(),
                s.expected_bound.to_string(),
                s.hp_band.to_string(),
            ];
            row.extend(s.marginal_p1.iter().chain(&s.marginal_p2).map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs self-play for `cfg.horizon` rounds.
pub fn run_self_play(game: &GameSpec, cfg: &SelfPlayConfig) -> Result<Trajectory> {
    if cfg.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let stride = cfg.stride.max(1);
    let mut sp = SelfPlay::from_config(game, cfg)?;
    let mut snapshots = Vec::new();
    let mut rounds = Vec::new();
    for t in 1..=cfg.horizon {
        let o = sp.step()?;
        if cfg.record_rounds {
            rounds.push(o);
        }
        if t % stride == 0 || t == cfg.horizon {
            snapshots.push(sp.snapshot(cfg.band_p));
        }
    }
    Ok(Trajectory {
        snapshots,
        rounds,
        marginal_p1: sp.mean_marginal(Player::One),
        marginal_p2: sp.mean_marginal(Player::Two),
        ledgers: sp.ledgers,
    })
}
