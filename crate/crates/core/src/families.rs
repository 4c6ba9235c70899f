//! Game generators.
//!
//! Actions are 0-based. Where a definition uses 1-based labels, the label `k`
//! becomes action `k - 1`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSet, AvailabilityModel, GameSpec, PayoffMatrix};
use crate::rng::{stream, Purpose, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum FamilyTag {
    /// Uniform payoffs, per-action availability uniform in [0.3, 0.5].
    RandomGSAS,
    /// Random game hiding a rarely-available block behind a 2x2 pennies core.
    RBS,
    /// Parity matching pennies; player 1 sees one odd action plus all even ones.
    CheckerboardMP,
    /// Cyclic rock-paper-scissors where player 1 is sometimes stuck on action 0.
    BiasedRPS,
    /// Identity-payoff matching pennies with two overlapping player-1 windows.
    BiasedMP,
    /// The 3x3 rock-scissors-paper variant with two sets per player.
    ExampleRPS,
    /// Matching pennies where player 1 loses T with probability `1 - lambda`.
    MatchingPenniesLambda { lambda: f64 },
}

/// A generator configuration. `n` is ignored by the fixed-size families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameFamily {
    #[serde(flatten)]
    pub tag: FamilyTag,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GameFamily {
    pub fn new(tag: FamilyTag, n: usize, seed: u64) -> Self {
        GameFamily { tag, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        match self.tag {
            FamilyTag::ExampleRPS => Ok(()),
            FamilyTag::MatchingPenniesLambda { lambda } => {
                if (0.0..=1.0).contains(&lambda) {
                    Ok(())
                } else {
                    Err(Error::InvalidFamily(format!("lambda {lambda} outside [0, 1]")))
                }
            }
            FamilyTag::CheckerboardMP if n < 2 || n % 2 == 1 => {
                Err(Error::InvalidFamily(format!("CheckerboardMP needs an even n >= 2, got {n}")))
            }
            // both cyclic neighbours must differ, and both windows must be nonempty
            FamilyTag::BiasedRPS | FamilyTag::BiasedMP if n < 3 => {
                Err(Error::InvalidFamily(format!("{:?} needs n >= 3, got {n}", self.tag)))
            }
            _ if n < 2 => Err(Error::InvalidFamily(format!("n must be at least 2, got {n}"))),
            _ => Ok(()),
        }
    }
}

fn uniform_payoff(n: usize, rng: &mut Rng) -> PayoffMatrix {
    PayoffMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0))
}

fn uniform_probs(n: usize, lo: f64, hi: f64, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Builds the game described by `family`. Deterministic in `(family, seed)`.
pub fn generate(family: &GameFamily) -> Result<GameSpec> {
    family.validate()?;
    let n = family.n;
    let mut rng = stream(family.seed, 0xff, Purpose::Generate);
    match family.tag {
        FamilyTag::RandomGSAS => {
            let payoff = uniform_payoff(n, &mut rng);
            let p1 = uniform_probs(n, 0.3, 0.5, &mut rng);
            let p2 = uniform_probs(n, 0.3, 0.5, &mut rng);
            GameSpec::new(
                payoff,
                AvailabilityModel::IndependentPerAction { p: p1 },
                AvailabilityModel::IndependentPerAction { p: p2 },
            )
        }
        FamilyTag::RBS => {
            let mut rows = uniform_payoff(n, &mut rng).to_rows();
            rows[0][0] = 1.0;
            rows[1][1] = 1.0;
            rows[0][1] = 0.0;
            rows[1][0] = 0.0;
            let mut probs = || {
                let mut p = uniform_probs(2, 0.3, 0.5, &mut rng);
                p.extend(uniform_probs(n - 2, 0.01, 0.02, &mut rng));
                p
            };
            let p1 = probs();
            let p2 = probs();
            GameSpec::new(
                PayoffMatrix::from_rows(rows)?,
                AvailabilityModel::IndependentPerAction { p: p1 },
                AvailabilityModel::IndependentPerAction { p: p2 },
            )
        }
        FamilyTag::CheckerboardMP => {
            let payoff = PayoffMatrix::from_fn(n, n, |i, j| if i % 2 == j % 2 { 1.0 } else { -1.0 });
            let evens: Vec<usize> = (0..n).step_by(2).collect();
            let sets: Vec<ActionSet> = (1..n)
                .step_by(2)
                .map(|odd| {
                    let mut s = evens.clone();
                    s.push(odd);
                    ActionSet::new(s)
                })
                .collect();
            let k = sets.len();
            GameSpec::new(
                payoff,
                AvailabilityModel::Enumerated { sets, probs: vec![1.0 / k as f64; k] },
                AvailabilityModel::always(n),
            )
        }
        FamilyTag::BiasedRPS => {
            let payoff = PayoffMatrix::from_fn(n, n, |i, j| {
                if j == (i + 1) % n {
                    -1.0
                } else if (j + 1) % n == i {
                    1.0
                } else {
                    0.0
                }
            });
            let stuck = 2.0 / n as f64;
            GameSpec::new(
                payoff,
                AvailabilityModel::Enumerated {
                    sets: vec![ActionSet::new(vec![0]), ActionSet::full(n)],
                    probs: vec![stuck, 1.0 - stuck],
                },
                AvailabilityModel::always(n),
            )
        }
        FamilyTag::BiasedMP => {
            let payoff = PayoffMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
            // 1-based labels {1..floor(3n/5)} and {floor(2n/5)..n}
            let hi = 3 * n / 5;
            let lo = 2 * n / 5;
            let low_window = ActionSet::new((0..hi).collect());
            let high_window = ActionSet::new((lo - 1..n).collect());
            GameSpec::new(
                payoff,
                AvailabilityModel::Enumerated { sets: vec![low_window, high_window], probs: vec![0.8, 0.2] },
                AvailabilityModel::always(n),
            )
        }
        FamilyTag::ExampleRPS => example_rps(),
        FamilyTag::MatchingPenniesLambda { lambda } => {
            let payoff = PayoffMatrix::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]])?;
            let support: Vec<(ActionSet, f64)> =
                [(ActionSet::full(2), lambda), (ActionSet::new(vec![0]), 1.0 - lambda)]
                    .into_iter()
                    .filter(|(_, p)| *p > 0.0)
                    .collect();
            GameSpec::new(payoff, AvailabilityModel::enumerated(support), AvailabilityModel::always(2))
        }
    }
}

/// Rock (0), scissors (1), paper (2) where paper only wins and loses half.
pub fn example_rps() -> Result<GameSpec> {
    let payoff = PayoffMatrix::from_rows(vec![
        vec![0.0, 1.0, -1.0],
        vec![-1.0, 0.0, 1.0],
        vec![0.5, -0.5, 0.0],
    ])?;
    GameSpec::new(
        payoff,
        AvailabilityModel::Enumerated {
            sets: vec![ActionSet::new(vec![0, 1, 2]), ActionSet::new(vec![1, 2])],
            probs: vec![0.5, 0.5],
        },
        AvailabilityModel::Enumerated {
            sets: vec![ActionSet::new(vec![0, 1]), ActionSet::new(vec![1, 2])],
            probs: vec![0.5, 0.5],
        },
    )
}

/// Matching pennies where player 1 draws {H}, {T} or {H, T} uniformly and
/// player 2 always has both actions.
pub fn omwu_lower_bound_game() -> Result<GameSpec> {
    let payoff = PayoffMatrix::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]])?;
    GameSpec::new(
        payoff,
        AvailabilityModel::Enumerated {
            sets: vec![ActionSet::new(vec![0]), ActionSet::new(vec![1]), ActionSet::full(2)],
            probs: vec![1.0 / 3.0; 3],
        },
        AvailabilityModel::always(2),
    )
}
