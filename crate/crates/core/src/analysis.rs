//! Saddle-point residuals and unilateral deviation gaps.
//!
//! Every quantity here depends on a profile only through the marginals
//! `mu_i`: player `i` facing `mu_{-i}` earns `E_i(a) = (M_i mu_{-i})_a` from
//! action `a`, and its best-response value is `E_{S_i}[max_{a in S_i} E_i(a)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSet, AvailabilityModel, BimatrixGame, GameSpec, PayoffMatrix, Player, DEFAULT_SUPPORT_CAP};
use crate::rng::Rng;
use crate::strategy::{marginal_exact, Strategy};

/// Number of batches behind a sampled standard error.
pub const SPR_BATCHES: usize = 20;
/// Smallest admissible sample count for the sampled regime.
pub const MIN_SPR_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Exact,
    Sampled,
    IndependentClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprEstimate {
    pub regime: Regime,
    pub value: f64,
    pub std_error: Option<f64>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
}

/// Expected payoff of each own action against an opponent strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPayoffs {
    pub e: Vec<f64>,
    pub std_error: Option<Vec<f64>>,
}

/// How availability expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Exact,
    Sampled { n_samples: usize },
}

/// Player `i`'s payoff matrix oriented `[own action][opponent action]`.
fn own_matrix(game: &BimatrixGame, player: Player) -> PayoffMatrix {
    match player {
        Player::One => game.payoff_p1.clone(),
        Player::Two => game.payoff_p2.transpose(),
    }
}

fn require_samples(n: usize) -> Result<()> {
    if n < MIN_SPR_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_SPR_SAMPLES, got: n });
    }
    Ok(())
}

/// Exact marginal of `strategy` under `model`.
pub fn exact_marginal(strategy: &Strategy, model: &AvailabilityModel) -> Result<Vec<f64>> {
    if let Strategy::Marginal(m) = strategy {
        return Ok(m.clone());
    }
    marginal_exact(strategy, &model.enumerate_support(DEFAULT_SUPPORT_CAP)?)
}

/// `E_i(a)` for `player` against `opp`. A marginal input needs no availability
/// expectation at all.
pub fn expected_action_payoffs(
    game: &BimatrixGame,
    player: Player,
    opp: &Strategy,
    eval: Evaluation,
    rng: &mut Rng,
) -> Result<ExpectedPayoffs> {
    let m = own_matrix(game, player);
    let opp_model = game.availability(player.other());
    if let Strategy::Marginal(mu) = opp {
        return Ok(ExpectedPayoffs { e: m.mul_vec(mu), std_error: None });
    }
    match eval {
        Evaluation::Exact => Ok(ExpectedPayoffs { e: m.mul_vec(&exact_marginal(opp, opp_model)?), std_error: None }),
        Evaluation::Sampled { n_samples } => {
            require_samples(n_samples)?;
            let k = m.rows();
            let mut sum = vec![0.0; k];
            let mut sq = vec![0.0; k];
            for _ in 0..n_samples {
                let s = opp_model.sample(rng)?;
                let e = m.mul_vec(&opp.policy_on(&s)?);
                for a in 0..k {
                    sum[a] += e[a];
                    sq[a] += e[a] * e[a];
                }
            }
            let nf = n_samples as f64;
            let e: Vec<f64> = sum.iter().map(|x| x / nf).collect();
            let se = e.iter().zip(&sq).map(|(mu, s2)| ((s2 / nf - mu * mu).max(0.0) / (nf - 1.0)).sqrt()).collect();
            Ok(ExpectedPayoffs { e, std_error: Some(se) })
        }
    }
}

/// Best value on `set`, ties to the lowest index.
pub fn best_on(e: &[f64], set: &ActionSet) -> (usize, f64) {
    set.iter().map(|a| (a, e[a])).fold((usize::MAX, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
}

/// `E_S[max_{a in S} e(a)]` over an enumerated support.
pub fn expected_max_exact(support: &[(ActionSet, f64)], e: &[f64]) -> f64 {
    support.iter().map(|(s, r)| r * best_on(e, s).1).sum()
}

/// `E_S[max_{a in S} e(a)]` when action `a` is present independently with
/// probability `p[a]`, conditioned on `S` nonempty.
///
/// With actions sorted so that `e` is descending, the maximum equals the
/// `j`-th value exactly when actions `1..j-1` are absent and `j` is present.
pub fn expected_max_independent(p: &[f64], e: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..e.len()).collect();
    order.sort_by(|&a, &b| e[b].partial_cmp(&e[a]).unwrap().then(a.cmp(&b)));
    let nonempty = 1.0 - p.iter().map(|x| 1.0 - x).product::<f64>();
    let mut absent = 1.0;
    let mut total = 0.0;
    for a in order {
        total += absent * p[a] * e[a];
        absent *= 1.0 - p[a];
    }
    total / nonempty
}

fn both_marginals(game: &BimatrixGame, s1: &Strategy, s2: &Strategy) -> Result<[Vec<f64>; 2]> {
    Ok([exact_marginal(s1, &game.avail_p1)?, exact_marginal(s2, &game.avail_p2)?])
}

fn best_response_values_exact(game: &BimatrixGame, mu: &[Vec<f64>; 2]) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for (i, pl) in Player::BOTH.into_iter().enumerate() {
        let e = own_matrix(game, pl).mul_vec(&mu[1 - i]);
        let support = game.availability(pl).enumerate_support(DEFAULT_SUPPORT_CAP)?;
        out[i] = expected_max_exact(&support, &e);
    }
    Ok(out)
}

/// Saddle-point residual with all availability expectations enumerated.
pub fn spr_exact(game: &GameSpec, s1: &Strategy, s2: &Strategy) -> Result<SprEstimate> {
    let g = BimatrixGame::from(game);
    let mu = both_marginals(&g, s1, s2)?;
    let br = best_response_values_exact(&g, &mu)?;
    Ok(SprEstimate { regime: Regime::Exact, value: br[0] + br[1], std_error: None, n_samples: None, seed: None })
}

/// Saddle-point residual with availability replaced by `n_samples` draws per
/// player. The value uses all draws; the standard error comes from
/// `SPR_BATCHES` disjoint batches.
pub fn spr_sampled(game: &GameSpec, s1: &Strategy, s2: &Strategy, n_samples: usize, rng: &mut Rng) -> Result<SprEstimate> {
    require_samples(n_samples)?;
    let g = BimatrixGame::from(game);
    let strategies = [s1, s2];
    let n = [game.n_actions(Player::One), game.n_actions(Player::Two)];
    let mut sets: [Vec<ActionSet>; 2] = [Vec::with_capacity(n_samples), Vec::with_capacity(n_samples)];
    let mut batch_mu: [Vec<Vec<f64>>; 2] = [vec![vec![0.0; n[0]]; SPR_BATCHES], vec![vec![0.0; n[1]]; SPR_BATCHES]];
    let batch_of = |k: usize| k * SPR_BATCHES / n_samples;
    for k in 0..n_samples {
        for (i, pl) in Player::BOTH.into_iter().enumerate() {
            let s = g.availability(pl).sample(rng)?;
            if !matches!(strategies[i], Strategy::Marginal(_)) {
                let p = strategies[i].policy_on(&s)?;
                for (m, x) in batch_mu[i][batch_of(k)].iter_mut().zip(p) {
                    *m += x;
                }
            }
            sets[i].push(s);
        }
    }
    let mats = [own_matrix(&g, Player::One), own_matrix(&g, Player::Two)];
    // estimate over draws in `range`, with marginals from `mu`
    let estimate = |mu: &[Vec<f64>; 2], range: std::ops::Range<usize>| -> f64 {
        let len = range.len() as f64;
        let mut v = 0.0;
        for i in 0..2 {
            let e = mats[i].mul_vec(&mu[1 - i]);
            v += sets[i][range.clone()].iter().map(|s| best_on(&e, s).1).sum::<f64>() / len;
        }
        v
    };
    let fixed = |i: usize| match strategies[i] {
        Strategy::Marginal(m) => Some(m.clone()),
        _ => None,
    };
    let mut batch_values = Vec::with_capacity(SPR_BATCHES);
    let mut pooled = [vec![0.0; n[0]], vec![0.0; n[1]]];
    for b in 0..SPR_BATCHES {
        let start = (0..n_samples).find(|&k| batch_of(k) == b).unwrap();
        let end = (start..n_samples).find(|&k| batch_of(k) != b).unwrap_or(n_samples);
        let len = (end - start) as f64;
        let mu = [0, 1].map(|i| {
            fixed(i).unwrap_or_else(|| batch_mu[i][b].iter().map(|x| x / len).collect())
        });
        for i in 0..2 {
            for (p, x) in pooled[i].iter_mut().zip(&batch_mu[i][b]) {
                *p += x;
            }
        }
        batch_values.push(estimate(&mu, start..end));
    }
    let mu = [0, 1].map(|i| fixed(i).unwrap_or_else(|| pooled[i].iter().map(|x| x / n_samples as f64).collect()));
    let value = estimate(&mu, 0..n_samples);
    let bm = batch_values.iter().sum::<f64>() / SPR_BATCHES as f64;
    let var = batch_values.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (SPR_BATCHES - 1) as f64;
    Ok(SprEstimate {
        regime: Regime::Sampled,
        value,
        std_error: Some((var / SPR_BATCHES as f64).sqrt()),
        n_samples: Some(n_samples),
        seed: None,
    })
}

/// Saddle-point residual for independent per-action availability: `E_i` from
/// the given evaluation, then the best-response term in closed form.
pub fn spr_independent(
    game: &GameSpec,
    s1: &Strategy,
    s2: &Strategy,
    eval: Evaluation,
    rng: &mut Rng,
) -> Result<SprEstimate> {
    let g = BimatrixGame::from(game);
    let strategies = [s2, s1];
    let mut value = 0.0;
    for (i, pl) in Player::BOTH.into_iter().enumerate() {
        let AvailabilityModel::IndependentPerAction { p } = g.availability(pl) else {
            return Err(Error::NotIndependent);
        };
        let e = expected_action_payoffs(&g, pl, strategies[i], eval, rng)?;
        value += expected_max_independent(p, &e.e);
    }
    let n_samples = match eval {
        Evaluation::Sampled { n_samples } => Some(n_samples),
        Evaluation::Exact => None,
    };
    Ok(SprEstimate { regime: Regime::IndependentClosedForm, value, std_error: None, n_samples, seed: None })
}

/// Per-player best-response value minus realized expected payoff.
pub fn deviation_gaps_general(game: &BimatrixGame, s1: &Strategy, s2: &Strategy) -> Result<[f64; 2]> {
    let mu = both_marginals(game, s1, s2)?;
    let br = best_response_values_exact(game, &mu)?;
    let realized = [game.payoff_p1.bilinear(&mu[0], &mu[1]), game.payoff_p2.bilinear(&mu[0], &mu[1])];
    Ok([br[0] - realized[0], br[1] - realized[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{example_rps, generate, FamilyTag, GameFamily};
    use crate::rng::{stream, Purpose};
    use crate::strategy::{CompactWeights, ConditionalPolicy};

    fn set(v: &[usize]) -> ActionSet {
        ActionSet::new(v.to_vec())
    }

    fn example_ne() -> (Strategy, Strategy) {
        let mut p1 = ConditionalPolicy::new(3);
        p1.insert(set(&[0, 1, 2]), vec![0.5, 0.5, 0.0]).unwrap();
        p1.insert(set(&[1, 2]), vec![0.0, 0.0, 1.0]).unwrap();
        let mut p2 = ConditionalPolicy::new(3);
        p2.insert(set(&[0, 1]), vec![2.0 / 3.0, 1.0 / 3.0, 0.0]).unwrap();
        p2.insert(set(&[1, 2]), vec![0.0, 1.0 / 3.0, 2.0 / 3.0]).unwrap();
        (Strategy::Conditional(p1), Strategy::Conditional(p2))
    }

    #[test]
    fn expected_payoff_examples() {
        let mp = generate(&GameFamily::new(FamilyTag::MatchingPenniesLambda { lambda: 1.0 }, 2, 0)).unwrap();
        let g = BimatrixGame::from(&mp);
        let mut rng = stream(0, 0, Purpose::Evaluation);
        let e = expected_action_payoffs(&g, Player::One, &Strategy::Marginal(vec![0.5, 0.5]), Evaluation::Exact, &mut rng)
            .unwrap();
        assert_eq!(e.e, vec![0.0, 0.0]);

        let (_, p2) = example_ne();
        let g = BimatrixGame::from(&example_rps().unwrap());
        let e = expected_action_payoffs(&g, Player::One, &p2, Evaluation::Exact, &mut rng).unwrap();
        assert!(e.e.iter().all(|x| x.abs() < 1e-15), "{:?}", e.e);
    }

    #[test]
    fn spr_at_known_equilibria() {
        let g = example_rps().unwrap();
        let (p1, p2) = example_ne();
        assert!(spr_exact(&g, &p1, &p2).unwrap().value.abs() < 1e-10);
        let mut rng = stream(3, 0, Purpose::Evaluation);
        let s = spr_sampled(&g, &p1, &p2, 100_000, &mut rng).unwrap();
        assert!(s.value.abs() < 0.01);

        let mp = generate(&GameFamily::new(FamilyTag::MatchingPenniesLambda { lambda: 1.0 }, 2, 0)).unwrap();
        let u = Strategy::Weights(CompactWeights::uniform(2));
        assert!(spr_exact(&mp, &u, &u).unwrap().value.abs() < 1e-15);

        let mp = generate(&GameFamily::new(FamilyTag::MatchingPenniesLambda { lambda: 0.25 }, 2, 0)).unwrap();
        let mut p1 = ConditionalPolicy::new(2);
        p1.insert(ActionSet::full(2), vec![0.0, 1.0]).unwrap();
        p1.insert(set(&[0]), vec![1.0, 0.0]).unwrap();
        let p2 = Strategy::Marginal(vec![0.0, 1.0]);
        assert!(spr_exact(&mp, &Strategy::Conditional(p1), &p2).unwrap().value.abs() < 1e-15);
    }

    #[test]
    fn sampled_rejects_small_and_is_deterministic() {
        let g = example_rps().unwrap();
        let (p1, p2) = example_ne();
        let mut rng = stream(3, 0, Purpose::Evaluation);
        assert!(matches!(spr_sampled(&g, &p1, &p2, 99, &mut rng), Err(Error::TooFewSamples { .. })));
        let a = spr_sampled(&g, &p1, &p2, 1000, &mut stream(4, 0, Purpose::Evaluation)).unwrap();
        let b = spr_sampled(&g, &p1, &p2, 1000, &mut stream(4, 0, Purpose::Evaluation)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_form_examples() {
        assert!((expected_max_independent(&[0.5, 0.5], &[1.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((expected_max_independent(&[1.0, 1.0, 1.0], &[0.2, 0.7, -0.1]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn independent_requires_independent_model() {
        let g = example_rps().unwrap();
        let (p1, p2) = example_ne();
        let mut rng = stream(3, 0, Purpose::Evaluation);
        assert_eq!(spr_independent(&g, &p1, &p2, Evaluation::Exact, &mut rng), Err(Error::NotIndependent));
    }

    #[test]
    fn gaps_decompose_spr() {
        let g = example_rps().unwrap();
        let w1 = Strategy::Weights(CompactWeights::new(vec![0.2, 0.5, 0.3]).unwrap());
        let w2 = Strategy::Weights(CompactWeights::new(vec![0.6, 0.1, 0.3]).unwrap());
        let gaps = deviation_gaps_general(&BimatrixGame::from(&g), &w1, &w2).unwrap();
        let spr = spr_exact(&g, &w1, &w2).unwrap().value;
        assert!((gaps[0] + gaps[1] - spr).abs() < 1e-12);
        assert!(gaps.iter().all(|&x| x >= -1e-10));
    }
}
