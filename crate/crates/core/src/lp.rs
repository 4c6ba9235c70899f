//! Exact baselines: the sequence-form LP of a zero-sum game with enumerable
//! availability, restricted-subgame equilibrium solvers, and the general-sum
//! compact-weight learner driven by subgame equilibria.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::compact::{CompactConfig, CompactLearner, TargetMode};
use crate::error::{Error, Result};
use crate::model::{ActionSet, BimatrixGame, GameSpec, PayoffMatrix, Player, DEFAULT_SUPPORT_CAP};
use crate::rng::{stream, Purpose};
use crate::simplex::{self, LpProblem, LpStatus, RowKind};
use crate::strategy::{CompactWeights, ConditionalPolicy};

pub const DEFAULT_MAX_PIVOTS: usize = 1_000_000;

/// The sequence-form program for one maximizing player.
///
/// Variables, in order: `x(S, a)` for every own set `S` and `a in S`
/// (`rho(S) pi(a | S)`); `v'(T) = v(T) + rho(T)` for every opponent set `T`,
/// where `v(T)` is the opponent-type value; and `z' = 1 + sum_T v(T)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceFormLP {
    pub lp: LpProblem,
    pub player: Player,
    pub own_support: Vec<(ActionSet, f64)>,
    pub opp_support: Vec<(ActionSet, f64)>,
    /// `(set index, action)` of each `x` column.
    pub var_index: Vec<(usize, usize)>,
    pub n_actions: usize,
}

impl SequenceFormLP {
    pub fn n_vars(&self) -> usize {
        self.lp.n_vars
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Game value for the maximizing player.
    pub value: f64,
    pub behavioral: ConditionalPolicy,
    pub marginal: Vec<f64>,
    pub iterations: usize,
    pub max_violation: f64,
}

/// Builds the program in which `player` maximizes its guaranteed payoff.
pub fn build_sequence_form(game: &GameSpec, player: Player, cap: usize) -> Result<SequenceFormLP> {
    let own_support = game.availability(player).enumerate_support(cap)?;
    let opp_support = game.availability(player.other()).enumerate_support(cap)?;
    // own payoff, [own action][opponent action]
    let m = match player {
        Player::One => game.payoff.clone(),
        Player::Two => game.payoff.transpose().negated(),
    };
    let mut var_index = Vec::new();
    let mut names = Vec::new();
    for (si, (s, _)) in own_support.iter().enumerate() {
        for a in s.iter() {
            var_index.push((si, a));
            names.push(format!("x_{si}_{a}"));
        }
    }
    let nx = var_index.len();
    let nv = opp_support.len();
    let z = nx + nv;
    names.extend((0..nv).map(|t| format!("v_{t}")));
    names.push("z".into());
    let mut lp = LpProblem::new(nx + nv + 1);
    lp.names = names;
    lp.objective[z] = 1.0;
    for (ti, (t, rt)) in opp_support.iter().enumerate() {
        for b in t.iter() {
            // v'(T) - rho(T) sum x(S,a) u(a,b) <= rho(T)
            let mut coefs = vec![(nx + ti, 1.0)];
            for (j, &(_, a)) in var_index.iter().enumerate() {
                let c = -rt * m.get(a, b);
                if c != 0.0 {
                    coefs.push((j, c));
                }
            }
            lp.add_row(coefs, RowKind::Le, *rt);
        }
    }
    let mut j = 0;
    for (s, r) in &own_support {
        let coefs = (j..j + s.len()).map(|k| (k, 1.0)).collect();
        lp.add_row(coefs, RowKind::Eq, *r);
        j += s.len();
    }
    let mut coefs = vec![(z, 1.0)];
    coefs.extend((nx..nx + nv).map(|k| (k, -1.0)));
    lp.add_row(coefs, RowKind::Eq, 0.0);
    Ok(SequenceFormLP { lp, player, own_support, opp_support, var_index, n_actions: game.n_actions(player) })
}

pub fn solve_lp(slp: &SequenceFormLP, max_iters: usize) -> Result<LpSolution> {
    let r = simplex::solve(&slp.lp, max_iters);
    let violation = slp.lp.max_violation(&r.x);
    match r.status {
        LpStatus::Infeasible => return Err(Error::Lp("infeasible".into())),
        LpStatus::Unbounded => return Err(Error::Lp("unbounded".into())),
        _ => {}
    }
    let n = slp.n_actions;
    let mut policies: Vec<Vec<f64>> = vec![vec![0.0; n]; slp.own_support.len()];
    for (j, &(si, a)) in slp.var_index.iter().enumerate() {
        policies[si][a] = r.x[j].max(0.0);
    }
    let mut behavioral = ConditionalPolicy::new(n);
    let mut marginal = vec![0.0; n];
    for ((s, rho), mut p) in slp.own_support.iter().zip(policies) {
        for (m, x) in marginal.iter_mut().zip(&p) {
            *m += x;
        }
        let tot: f64 = p.iter().sum();
        if tot > 0.0 {
            p.iter_mut().for_each(|x| *x /= tot);
        } else {
            let k = s.len() as f64;
            for a in s.iter() {
                p[a] = 1.0 / k;
            }
        }
        let _ = rho;
        behavioral.insert(s.clone(), p)?;
    }
    Ok(LpSolution {
        status: r.status,
        value: r.x[slp.lp.n_vars - 1] - 1.0,
        behavioral,
        marginal,
        iterations: r.iterations,
        max_violation: violation,
    })
}

/// Both players' optimal behavioral strategies and the value for player 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub p1: LpSolution,
    pub p2: LpSolution,
}

pub fn solve_game(game: &GameSpec) -> Result<GameSolution> {
    let p1 = solve_lp(&build_sequence_form(game, Player::One, DEFAULT_SUPPORT_CAP)?, DEFAULT_MAX_PIVOTS)?;
    let p2 = solve_lp(&build_sequence_form(game, Player::Two, DEFAULT_SUPPORT_CAP)?, DEFAULT_MAX_PIVOTS)?;
    if p1.status != LpStatus::Optimal || p2.status != LpStatus::Optimal {
        return Err(Error::Lp("iteration limit reached".into()));
    }
    Ok(GameSolution { value: p1.value, p1, p2 })
}

/// Mixed maximin strategy of the row player of `m` and its value.
fn maximin(m: &PayoffMatrix) -> Result<(f64, Vec<f64>)> {
    let (r, c) = (m.rows(), m.cols());
    let shift = 1.0 + m.entries().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    // max z s.t. z - sum_i x_i (m_ij + shift) <= 0, sum x = 1
    let mut lp = LpProblem::new(r + 1);
    lp.objective[r] = 1.0;
    for j in 0..c {
        let mut coefs: Vec<(usize, f64)> = (0..r).map(|i| (i, -(m.get(i, j) + shift))).collect();
        coefs.push((r, 1.0));
        lp.add_row(coefs, RowKind::Le, 0.0);
    }
    lp.add_row((0..r).map(|i| (i, 1.0)).collect(), RowKind::Eq, 1.0);
    let s = simplex::solve(&lp, DEFAULT_MAX_PIVOTS);
    if s.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("{:?} in subgame", s.status)));
    }
    let mut x: Vec<f64> = s.x[..r].iter().map(|v| v.max(0.0)).collect();
    let tot: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= tot);
    Ok((s.x[r] - shift, x))
}

/// Zero-sum equilibrium `(value, x, y)` of the matrix game `m` (row maximizes).
pub fn subgame_solve_zero_sum(m: &PayoffMatrix) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (v, x) = maximin(m)?;
    let (_, y) = maximin(&m.transpose().negated())?;
    Ok((v, x, y))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Solves for `p` on `supp` making every `rows` payoff of `mat` equal
/// (`mat[row][supp col]`); returns `(p, common value)`.
fn indifference(mat: &dyn Fn(usize, usize) -> f64, rows: &[usize], supp: &[usize]) -> Option<(Vec<f64>, f64)> {
    let k = supp.len();
    let dim = k + 1;
    let mut a = vec![0.0; dim * dim];
    let mut b = vec![0.0; dim];
    for (r, &i) in rows.iter().enumerate() {
        for (cc, &j) in supp.iter().enumerate() {
            a[r * dim + cc] = mat(i, j);
        }
        a[r * dim + k] = -1.0;
    }
    for cc in 0..k {
        a[k * dim + cc] = 1.0;
    }
    b[k] = 1.0;
    crate::linalg::solve_in_place(&mut a, &mut b, dim, 1e-12)?;
    let v = b[k];
    b.truncate(k);
    Some((b, v))
}

/// One Nash equilibrium of the bimatrix game `(a, b)` by enumerating
/// equal-size supports. Supports are tried smallest first (largest first with
/// `prefer_mixed`), each in lexicographic order.
pub fn subgame_support_enumeration(
    a: &PayoffMatrix,
    b: &PayoffMatrix,
    cap: usize,
    prefer_mixed: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n1, n2) = (a.rows(), a.cols());
    if n1 > cap || n2 > cap {
        return Err(Error::SupportTooLarge { size: n1.max(n2), cap });
    }
    let tol = 1e-9;
    let mut sizes: Vec<usize> = (1..=n1.min(n2)).collect();
    if prefer_mixed {
        sizes.reverse();
    }
    for k in sizes {
        for si in combinations(n1, k) {
            for sj in combinations(n2, k) {
                // y makes player 1 indifferent over si; x makes player 2 indifferent over sj
                let Some((yv, v1)) = indifference(&|i, j| a.get(i, j), &si, &sj) else { continue };
                let Some((xv, v2)) = indifference(&|j, i| b.get(i, j), &sj, &si) else { continue };
                if yv.iter().chain(&xv).any(|&p| p < -tol) {
                    continue;
                }
                let mut x = vec![0.0; n1];
                let mut y = vec![0.0; n2];
                for (&i, &p) in si.iter().zip(&xv) {
                    x[i] = p.max(0.0);
                }
                for (&j, &p) in sj.iter().zip(&yv) {
                    y[j] = p.max(0.0);
                }
                let ay = a.mul_vec(&y);
                let xb = b.vec_mul(&x);
                if ay.iter().all(|&u| u <= v1 + tol) && xb.iter().all(|&u| u <= v2 + tol) {
                    return Ok((x, y));
                }
            }
        }
    }
    Err(Error::NoEquilibrium)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgameConfig {
    pub horizon: usize,
    pub seed: u64,
    pub compact: [CompactConfig; 2],
    /// Largest subgame dimension handed to support enumeration.
    pub support_cap: usize,
    pub prefer_mixed: bool,
}

impl SubgameConfig {
    pub fn new(horizon: usize, seed: u64, k: f64) -> Self {
        let c = CompactConfig { k, target: TargetMode::PerRound, ..CompactConfig::default() };
        SubgameConfig { horizon, seed, compact: [c, c], support_cap: 5, prefer_mixed: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgameResult {
    pub raw: [CompactWeights; 2],
    pub robust: [CompactWeights; 2],
    /// Time-average of the subgame equilibrium policies.
    pub marginal: [Vec<f64>; 2],
}

/// Each round: draw the joint sets, solve the restricted game, and move each
/// player's weights toward its restricted equilibrium policy.
pub fn subgame_self_play(game: &BimatrixGame, cfg: &SubgameConfig) -> Result<SubgameResult> {
    let n = [game.n_actions(Player::One), game.n_actions(Player::Two)];
    let zero_sum = game.is_zero_sum();
    let mut rngs = [stream(cfg.seed, 0, Purpose::Availability), stream(cfg.seed, 1, Purpose::Availability)];
    let mut learners = [CompactLearner::new(n[0], cfg.compact[0])?, CompactLearner::new(n[1], cfg.compact[1])?];
    let mut sums = [vec![0.0; n[0]], vec![0.0; n[1]]];
    let mut cache: HashMap<(ActionSet, ActionSet), [Vec<f64>; 2]> = HashMap::new();
    for round in 1..=cfg.horizon {
        let s1 = game.avail_p1.sample(&mut rngs[0])?;
        let s2 = game.avail_p2.sample(&mut rngs[1])?;
        let key = (s1.clone(), s2.clone());
        if !cache.contains_key(&key) {
            let solved = solve_restricted(game, &s1, &s2, zero_sum, cfg)
                .map_err(|e| Error::SubgameFailed { round, source: Box::new(e) })?;
            cache.insert(key.clone(), solved);
        }
        let policies = &cache[&key];
        for (i, s) in [&s1, &s2].into_iter().enumerate() {
            let target: Vec<f64> = match cfg.compact[i].target {
                TargetMode::PerRound => policies[i].clone(),
                TargetMode::TimeAveraged => {
                    let t = round as f64;
                    sums[i].iter().zip(&policies[i]).map(|(a, b)| (a + b) / t).collect()
                }
            };
            learners[i].step(s, &target);
            for (a, p) in sums[i].iter_mut().zip(&policies[i]) {
                *a += p;
            }
        }
    }
    let t = cfg.horizon.max(1) as f64;
    Ok(SubgameResult {
        raw: [learners[0].weights(), learners[1].weights()],
        robust: [learners[0].robust_weights()?, learners[1].robust_weights()?],
        marginal: sums.map(|s| s.into_iter().map(|x| x / t).collect()),
    })
}

/// Equilibrium of the game restricted to `(s1, s2)`, expanded to full length.
fn solve_restricted(
    game: &BimatrixGame,
    s1: &ActionSet,
    s2: &ActionSet,
    zero_sum: bool,
    cfg: &SubgameConfig,
) -> Result<[Vec<f64>; 2]> {
    let a = game.payoff_p1.restrict(s1.as_slice(), s2.as_slice());
    let (x, y) = if zero_sum {
        let (_, x, y) = subgame_solve_zero_sum(&a)?;
        (x, y)
    } else {
        let b = game.payoff_p2.restrict(s1.as_slice(), s2.as_slice());
        subgame_support_enumeration(&a, &b, cfg.support_cap, cfg.prefer_mixed)?
    };
    let mut p1 = vec![0.0; game.n_actions(Player::One)];
    let mut p2 = vec![0.0; game.n_actions(Player::Two)];
    for (k, a) in s1.iter().enumerate() {
        p1[a] = x[k];
    }
    for (k, b) in s2.iter().enumerate() {
        p2[b] = y[k];
    }
    Ok([p1, p2])
}

/// `2^n + n 2^(n-1) + 1` minus one for the empty availability set, which
/// is never drawn.
pub fn full_power_set_var_count(n: usize) -> usize {
    (1usize << n) + n * (1usize << (n - 1))
}
