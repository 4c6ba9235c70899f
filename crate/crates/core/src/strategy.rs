//! Strategy representations: conditional policies, compact weights and marginals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSet, AvailabilityModel};
use crate::rng::Rng;

/// Uniform mass mixed in by the optional zero-mass floor.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// A single simplex vector whose restriction to any available set,
/// renormalized, is the policy on that set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompactWeights(pub Vec<f64>);

impl CompactWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Config("weights must be finite and nonnegative".into()));
        }
        let s: f64 = w.iter().sum();
        if s <= 0.0 {
            return Err(Error::Config("weights must have positive mass".into()));
        }
        Ok(CompactWeights(w.into_iter().map(|x| x / s).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        CompactWeights(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Restriction of `w` to `set`, renormalized. Output has length `n` and is zero
/// off `set`. With `floor` set, a vanishing restriction falls back to mixing
/// `WEIGHT_FLOOR` uniform mass instead of failing.
pub fn policy_from_weights(w: &CompactWeights, set: &ActionSet, floor: bool) -> Result<Vec<f64>> {
    let n = w.len();
    let mut p = vec![0.0; n];
    let mass: f64 = set.iter().map(|a| w.0[a]).sum();
    if mass > 0.0 {
        for a in set.iter() {
            p[a] = w.0[a] / mass;
        }
        return Ok(p);
    }
    if !floor {
        return Err(Error::ZeroMassRestriction(set.as_slice().to_vec()));
    }
    let k = set.len() as f64;
    let total = mass + WEIGHT_FLOOR;
    for a in set.iter() {
        p[a] = (w.0[a] + WEIGHT_FLOOR / k) / total;
    }
    Ok(p)
}

/// A policy per availability set. Vectors have length `n` and vanish off their set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionalPolicy {
    pub n_actions: usize,
    map: BTreeMap<ActionSet, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PolicyEntry {
    set: ActionSet,
    policy: Vec<f64>,
}

impl Serialize for ConditionalPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<PolicyEntry> =
            self.map.iter().map(|(k, v)| PolicyEntry { set: k.clone(), policy: v.clone() }).collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConditionalPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<PolicyEntry>::deserialize(d)?;
        let n = entries.iter().map(|e| e.policy.len()).max().unwrap_or(0);
        let mut cp = ConditionalPolicy::new(n);
        for e in entries {
            cp.insert(e.set, e.policy).map_err(serde::de::Error::custom)?;
        }
        Ok(cp)
    }
}

impl ConditionalPolicy {
    pub fn new(n_actions: usize) -> Self {
        ConditionalPolicy { n_actions, map: BTreeMap::new() }
    }

    /// Inserts a policy; it must be a distribution supported within `set`.
    pub fn insert(&mut self, set: ActionSet, policy: Vec<f64>) -> Result<()> {
        if policy.len() != self.n_actions {
            return Err(Error::Config(format!("policy length {} for {} actions", policy.len(), self.n_actions)));
        }
        let off: f64 = policy.iter().enumerate().filter(|(a, _)| !set.contains(*a)).map(|(_, p)| p.abs()).sum();
        let total: f64 = policy.iter().sum();
        if off > 1e-9 || (total - 1.0).abs() > 1e-9 || policy.iter().any(|p| *p < -1e-12) {
            return Err(Error::Config(format!("policy for {:?} is not a distribution on the set", set.as_slice())));
        }
        self.map.insert(set, policy);
        Ok(())
    }

    pub fn get(&self, set: &ActionSet) -> Result<&[f64]> {
        self.map.get(set).map(|v| v.as_slice()).ok_or_else(|| Error::MissingPolicy(set.as_slice().to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ActionSet, &Vec<f64>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Policy induced by `w` on every set in `support`.
    pub fn from_weights(w: &CompactWeights, support: &[(ActionSet, f64)]) -> Result<Self> {
        let mut cp = ConditionalPolicy::new(w.len());
        for (s, _) in support {
            cp.map.insert(s.clone(), policy_from_weights(w, s, false)?);
        }
        Ok(cp)
    }

    /// `sum_S rho(S) pi(.|S)` over an enumerated support.
    pub fn marginal(&self, support: &[(ActionSet, f64)]) -> Result<Vec<f64>> {
        let mut mu = vec![0.0; self.n_actions];
        for (s, r) in support {
            for (m, p) in mu.iter_mut().zip(self.get(s)?) {
                *m += r * p;
            }
        }
        Ok(mu)
    }
}

/// Any of the three strategy representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Strategy {
    Conditional(ConditionalPolicy),
    Weights(CompactWeights),
    Marginal(Vec<f64>),
}

impl Strategy {
    pub fn n_actions(&self) -> usize {
        match self {
            Strategy::Conditional(c) => c.n_actions,
            Strategy::Weights(w) => w.len(),
            Strategy::Marginal(m) => m.len(),
        }
    }

    /// Policy played on `set`.
    pub fn policy_on(&self, set: &ActionSet) -> Result<Vec<f64>> {
        match self {
            Strategy::Conditional(c) => c.get(set).map(|p| p.to_vec()),
            Strategy::Weights(w) => policy_from_weights(w, set, false),
            Strategy::Marginal(_) => {
                Err(Error::Config("a marginal does not determine per-set play".into()))
            }
        }
    }
}

/// A marginal with optional per-entry standard errors (Monte Carlo only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub mu: Vec<f64>,
    pub std_error: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
}

/// Exact marginal of a strategy under an enumerated support.
pub fn marginal_exact(strategy: &Strategy, support: &[(ActionSet, f64)]) -> Result<Vec<f64>> {
    if let Strategy::Marginal(m) = strategy {
        return Ok(m.clone());
    }
    let mut mu = vec![0.0; strategy.n_actions()];
    for (s, r) in support {
        for (m, p) in mu.iter_mut().zip(strategy.policy_on(s)?) {
            *m += r * p;
        }
    }
    Ok(mu)
}

/// Monte Carlo marginal with per-entry standard errors.
pub fn marginal_monte_carlo(
    strategy: &Strategy,
    model: &AvailabilityModel,
    n_samples: usize,
    rng: &mut Rng,
) -> Result<MarginalEstimate> {
    if let Strategy::Marginal(m) = strategy {
        return Ok(MarginalEstimate { mu: m.clone(), std_error: None, n_samples: None });
    }
    if n_samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n_samples });
    }
    let n = strategy.n_actions();
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for _ in 0..n_samples {
        let s = model.sample(rng)?;
        for (a, p) in strategy.policy_on(&s)?.into_iter().enumerate() {
            sum[a] += p;
            sq[a] += p * p;
        }
    }
    let m = n_samples as f64;
    let mu: Vec<f64> = sum.iter().map(|x| x / m).collect();
    let se = mu.iter().zip(&sq).map(|(mean, s2)| ((s2 / m - mean * mean).max(0.0) / (m - 1.0)).sqrt()).collect();
    Ok(MarginalEstimate { mu, std_error: Some(se), n_samples: Some(n_samples) })
}

/// Marginal of the weight policy: exact when the support enumerates within
/// `cap`, Monte Carlo with `n_samples` draws otherwise.
pub fn marginal_from_weights(
    w: &CompactWeights,
    model: &AvailabilityModel,
    cap: usize,
    n_samples: usize,
    rng: &mut Rng,
) -> Result<MarginalEstimate> {
    let strategy = Strategy::Weights(w.clone());
    match model.enumerate_support(cap) {
        Ok(support) => Ok(MarginalEstimate { mu: marginal_exact(&strategy, &support)?, std_error: None, n_samples: None }),
        Err(Error::SupportTooLarge { .. }) | Err(Error::NotEnumerable) => {
            marginal_monte_carlo(&strategy, model, n_samples, rng)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::example_rps;
    use crate::linalg::linf;
    use crate::rng::{stream, Purpose};

    fn set(v: &[usize]) -> ActionSet {
        ActionSet::new(v.to_vec())
    }

    #[test]
    fn weight_policy_examples() {
        let w = CompactWeights::new(vec![0.5, 1.0 / 6.0, 1.0 / 3.0]).unwrap();
        let p = policy_from_weights(&w, &set(&[1, 2]), false).unwrap();
        assert!(linf(&p, &[0.0, 1.0 / 3.0, 2.0 / 3.0]) < 1e-15);
        let p = policy_from_weights(&w, &ActionSet::full(3), false).unwrap();
        assert!(linf(&p, w.as_slice()) < 1e-15);
    }

    #[test]
    fn zero_mass_restriction() {
        let w = CompactWeights::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(policy_from_weights(&w, &set(&[1, 2]), false), Err(Error::ZeroMassRestriction(vec![1, 2])));
        let p = policy_from_weights(&w, &set(&[1, 2]), true).unwrap();
        assert!(linf(&p, &[0.0, 0.5, 0.5]) < 1e-15);
    }

    #[test]
    fn example_marginal() {
        let g = example_rps().unwrap();
        let w = CompactWeights::new(vec![0.5, 1.0 / 6.0, 1.0 / 3.0]).unwrap();
        let mut rng = stream(0, 0, Purpose::Evaluation);
        let m = marginal_from_weights(&w, &g.avail_p1, 64, 100, &mut rng).unwrap();
        assert!(linf(&m.mu, &[0.25, 0.25, 0.5]) < 1e-15);
        assert!(m.std_error.is_none());
        let m = marginal_from_weights(&w, &AvailabilityModel::always(3), 64, 100, &mut rng).unwrap();
        assert!(linf(&m.mu, w.as_slice()) < 1e-15);
    }

    #[test]
    fn monte_carlo_marginal_matches_exact() {
        let model = AvailabilityModel::IndependentPerAction { p: vec![0.3, 0.6, 0.5, 0.9] };
        let w = CompactWeights::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let support = model.enumerate_support(64).unwrap();
        let exact = marginal_exact(&Strategy::Weights(w.clone()), &support).unwrap();
        let mut rng = stream(5, 0, Purpose::Evaluation);
        let mc = marginal_monte_carlo(&Strategy::Weights(w), &model, 20_000, &mut rng).unwrap();
        for ((e, m), se) in exact.iter().zip(&mc.mu).zip(mc.std_error.unwrap()) {
            assert!((e - m).abs() <= 3.0 * se + 1e-12, "{e} vs {m} (se {se})");
        }
    }

    #[test]
    fn conditional_policy_json_roundtrip() {
        let mut cp = ConditionalPolicy::new(3);
        cp.insert(set(&[1, 2]), vec![0.0, 0.25, 0.75]).unwrap();
        cp.insert(set(&[0]), vec![1.0, 0.0, 0.0]).unwrap();
        assert!(cp.insert(set(&[0]), vec![0.5, 0.5, 0.0]).is_err());
        let s = serde_json::to_string(&cp).unwrap();
        let back: ConditionalPolicy = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cp);
        assert_eq!(serde_json::to_string(&CompactWeights(vec![0.5, 0.5])).unwrap(), "[0.5,0.5]");
    }
}
