//! Game model: action sets, availability regimes and the zero-sum / bimatrix
//! game containers, plus their JSON interchange format.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Rejection-sampling cap for the empty-set redraw.
pub const REDRAW_CAP: usize = 1_000_000;

/// Tolerance on the sum of enumerated probabilities.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

/// A set of available actions in canonical form: sorted, duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct ActionSet(Vec<usize>);

impl ActionSet {
    pub fn new(mut actions: Vec<usize>) -> Self {
        actions.sort_unstable();
        actions.dedup();
        ActionSet(actions)
    }

    pub fn full(n: usize) -> Self {
        ActionSet((0..n).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        ActionSet((0..64).filter(|a| mask >> a & 1 == 1).collect())
    }

    pub fn contains(&self, action: usize) -> bool {
        self.0.binary_search(&action).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &a in &self.0 {
            m[a] = true;
        }
        m
    }

    pub fn max_action(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl From<Vec<usize>> for ActionSet {
    fn from(v: Vec<usize>) -> Self {
        ActionSet::new(v)
    }
}

impl From<ActionSet> for Vec<usize> {
    fn from(s: ActionSet) -> Self {
        s.0
    }
}

/// Dense row-major payoff matrix; row = player-1 action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PayoffMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        PayoffMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidGame("empty payoff matrix".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidGame("ragged payoff matrix".into()));
        }
        let n = rows.len();
        Ok(PayoffMatrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(|c| c.to_vec()).collect()
    }

    pub fn transpose(&self) -> PayoffMatrix {
        PayoffMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn negated(&self) -> PayoffMatrix {
        PayoffMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }

    /// `A y`
    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().zip(y).map(|(a, b)| a * b).sum()).collect()
    }

    /// `x^T A`
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    /// Restriction to the given rows and columns.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> PayoffMatrix {
        PayoffMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

impl TryFrom<Vec<Vec<f64>>> for PayoffMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        PayoffMatrix::from_rows(rows)
    }
}

impl From<PayoffMatrix> for Vec<Vec<f64>> {
    fn from(m: PayoffMatrix) -> Self {
        m.to_rows()
    }
}

/// A caller-supplied availability sampler.
#[derive(Clone)]
pub struct ExternalSampler {
    pub n_actions: usize,
    sampler: Arc<dyn Fn(&mut Rng) -> ActionSet + Send + Sync>,
}

impl ExternalSampler {
    pub fn new(n_actions: usize, f: impl Fn(&mut Rng) -> ActionSet + Send + Sync + 'static) -> Self {
        ExternalSampler { n_actions, sampler: Arc::new(f) }
    }
}

impl fmt::Debug for ExternalSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalSampler").field("n_actions", &self.n_actions).finish_non_exhaustive()
    }
}

/// Distribution of one player's available action set.
#[derive(Debug, Clone)]
pub enum AvailabilityModel {
    /// Explicit support with probabilities.
    Enumerated { sets: Vec<ActionSet>, probs: Vec<f64> },
    /// Each action present independently with probability `p[a]`; the whole
    /// set is redrawn when it comes out empty.
    IndependentPerAction { p: Vec<f64> },
    External(ExternalSampler),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum AvailabilityRepr {
    Enumerated { sets: Vec<ActionSet>, probs: Vec<f64> },
    Independent { p: Vec<f64> },
}

impl Serialize for AvailabilityModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AvailabilityModel::Enumerated { sets, probs } => {
                AvailabilityRepr::Enumerated { sets: sets.clone(), probs: probs.clone() }.serialize(s)
            }
            AvailabilityModel::IndependentPerAction { p } => AvailabilityRepr::Independent { p: p.clone() }.serialize(s),
            AvailabilityModel::External(_) => Err(serde::ser::Error::custom("external samplers are not serializable")),
        }
    }
}

impl<'de> Deserialize<'de> for AvailabilityModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match AvailabilityRepr::deserialize(d)? {
            AvailabilityRepr::Enumerated { sets, probs } => AvailabilityModel::Enumerated { sets, probs },
            AvailabilityRepr::Independent { p } => AvailabilityModel::IndependentPerAction { p },
        })
    }
}

impl AvailabilityModel {
    pub fn always(n: usize) -> Self {
        AvailabilityModel::Enumerated { sets: vec![ActionSet::full(n)], probs: vec![1.0] }
    }

    pub fn enumerated(support: Vec<(ActionSet, f64)>) -> Self {
        let (sets, probs) = support.into_iter().unzip();
        AvailabilityModel::Enumerated { sets, probs }
    }

    pub fn validate(&self, n_actions: usize) -> Result<()> {
        match self {
            AvailabilityModel::Enumerated { sets, probs } => {
                if sets.is_empty() || sets.len() != probs.len() {
                    return Err(Error::InvalidAvailability("sets and probabilities must be nonempty and aligned".into()));
                }
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p) || p.is_nan()) {
                    return Err(Error::InvalidAvailability("probabilities must lie in [0,1]".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::InvalidAvailability(format!("probabilities sum to {total}")));
                }
                for s in sets {
                    if s.is_empty() {
                        return Err(Error::InvalidAvailability("empty availability set".into()));
                    }
                    if s.max_action().unwrap() >= n_actions {
                        return Err(Error::InvalidAvailability(format!("set {:?} out of range", s.as_slice())));
                    }
                }
                let mut sorted = sets.clone();
                sorted.sort();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidAvailability("duplicate sets".into()));
                }
                Ok(())
            }
            AvailabilityModel::IndependentPerAction { p } => {
                if p.len() != n_actions {
                    return Err(Error::InvalidAvailability(format!(
                        "{} inclusion probabilities for {} actions",
                        p.len(),
                        n_actions
                    )));
                }
                if p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                    return Err(Error::InvalidAvailability("inclusion probabilities must lie in (0,1]".into()));
                }
                Ok(())
            }
            AvailabilityModel::External(ext) => {
                if ext.n_actions != n_actions {
                    return Err(Error::InvalidAvailability("external sampler dimension mismatch".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_enumerable(&self) -> bool {
        !matches!(self, AvailabilityModel::External(_))
    }

    /// Draws one nonempty available set.
    pub fn sample(&self, rng: &mut Rng) -> Result<ActionSet> {
        match self {
            AvailabilityModel::Enumerated { sets, probs } => {
                let r: f64 = rng.gen();
                let mut acc = 0.0;
                for (s, &p) in sets.iter().zip(probs) {
                    acc += p;
                    if r < acc {
                        return Ok(s.clone());
                    }
                }
                // r landed in the rounding gap above the cumulative sum
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(sets.len() - 1);
                Ok(sets[last].clone())
            }
            AvailabilityModel::IndependentPerAction { p } => {
                let mut buf = Vec::with_capacity(p.len());
                for _ in 0..REDRAW_CAP {
                    buf.clear();
                    buf.extend(p.iter().enumerate().filter(|(_, &pa)| rng.gen::<f64>() < pa).map(|(a, _)| a));
                    if !buf.is_empty() {
                        return Ok(ActionSet(buf));
                    }
                }
                Err(Error::RedrawLimit(REDRAW_CAP))
            }
            AvailabilityModel::External(ext) => {
                let s = (ext.sampler)(rng);
                if s.is_empty() {
                    return Err(Error::AvailabilityContract("external sampler returned an empty set".into()));
                }
                if s.max_action().unwrap() >= ext.n_actions {
                    return Err(Error::AvailabilityContract(format!(
                        "external sampler returned out-of-range set {:?}",
                        s.as_slice()
                    )));
                }
                Ok(s)
            }
        }
    }

    /// Exhaustive support with exact probabilities. Zero-probability subsets
    /// of an independent model are omitted.
    pub fn enumerate_support(&self, cap: usize) -> Result<Vec<(ActionSet, f64)>> {
        match self {
            AvailabilityModel::Enumerated { sets, probs } => {
                if sets.len() > cap {
                    return Err(Error::SupportTooLarge { size: sets.len(), cap });
                }
                Ok(sets.iter().cloned().zip(probs.iter().copied()).collect())
            }
            AvailabilityModel::IndependentPerAction { p } => {
                let n = p.len();
                let size = if n >= 63 { usize::MAX } else { (1usize << n) - 1 };
                if size > cap {
                    return Err(Error::SupportTooLarge { size, cap });
                }
                let empty: f64 = p.iter().map(|x| 1.0 - x).product();
                let norm = 1.0 - empty;
                let mut out = Vec::new();
                for mask in 1u64..(1u64 << n) {
                    let prob: f64 = p
                        .iter()
                        .enumerate()
                        .map(|(a, &pa)| if mask >> a & 1 == 1 { pa } else { 1.0 - pa })
                        .product();
                    if prob > 0.0 {
                        out.push((ActionSet::from_mask(mask), prob / norm));
                    }
                }
                Ok(out)
            }
            AvailabilityModel::External(_) => Err(Error::NotEnumerable),
        }
    }

    /// Probability that the set is nonempty before the redraw, for independent models.
    pub fn nonempty_mass(&self) -> Option<f64> {
        match self {
            AvailabilityModel::IndependentPerAction { p } => Some(1.0 - p.iter().map(|x| 1.0 - x).product::<f64>()),
            _ => None,
        }
    }
}

/// Free-function form of [`AvailabilityModel::sample`].
pub fn sample_availability(model: &AvailabilityModel, rng: &mut Rng) -> Result<ActionSet> {
    model.sample(rng)
}

/// Free-function form of [`AvailabilityModel::enumerate_support`].
pub fn enumerate_support(model: &AvailabilityModel, cap: usize) -> Result<Vec<(ActionSet, f64)>> {
    model.enumerate_support(cap)
}

/// Default cap on enumerated supports.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 16;

/// A two-player zero-sum game with stochastic action sets. Only player 1's
/// payoff is stored; player 2 receives its negation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GameFile", into = "GameFile")]
pub struct GameSpec {
    pub payoff: PayoffMatrix,
    pub avail_p1: AvailabilityModel,
    pub avail_p2: AvailabilityModel,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    payoff: PayoffMatrix,
    avail_p1: AvailabilityModel,
    avail_p2: AvailabilityModel,
}

impl TryFrom<GameFile> for GameSpec {
    type Error = Error;
    fn try_from(f: GameFile) -> Result<Self> {
        GameSpec::new(f.payoff, f.avail_p1, f.avail_p2)
    }
}

impl From<GameSpec> for GameFile {
    fn from(g: GameSpec) -> Self {
        GameFile { payoff: g.payoff, avail_p1: g.avail_p1, avail_p2: g.avail_p2 }
    }
}

fn check_payoff_range(m: &PayoffMatrix) -> Result<()> {
    if let Some(x) = m.entries().iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::InvalidGame(format!("payoff entry {x} outside [-1, 1]")));
    }
    Ok(())
}

impl GameSpec {
    pub fn new(payoff: PayoffMatrix, avail_p1: AvailabilityModel, avail_p2: AvailabilityModel) -> Result<Self> {
        check_payoff_range(&payoff)?;
        if payoff.rows() < 2 || payoff.cols() < 2 {
            return Err(Error::InvalidGame("each player needs at least two actions".into()));
        }
        avail_p1.validate(payoff.rows())?;
        avail_p2.validate(payoff.cols())?;
        Ok(GameSpec { payoff, avail_p1, avail_p2 })
    }

    pub fn n_actions(&self, player: Player) -> usize {
        match player {
            Player::One => self.payoff.rows(),
            Player::Two => self.payoff.cols(),
        }
    }

    pub fn availability(&self, player: Player) -> &AvailabilityModel {
        match player {
            Player::One => &self.avail_p1,
            Player::Two => &self.avail_p2,
        }
    }

    /// Writes `u_i(., a_{-i})` for `player` into `out`.
    pub fn payoff_vector_into(&self, player: Player, opp_action: usize, out: &mut [f64]) {
        match player {
            Player::One => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.payoff.get(i, opp_action);
                }
            }
            Player::Two => {
                for (o, &a) in out.iter_mut().zip(self.payoff.row(opp_action)) {
                    *o = -a;
                }
            }
        }
    }

    pub fn payoff_vector(&self, player: Player, opp_action: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_actions(player)];
        self.payoff_vector_into(player, opp_action, &mut v);
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidGame(e.to_string()))
    }
}

/// A general-sum two-player game with stochastic action sets. Both payoff
/// matrices are indexed `[a1][a2]`.
#[derive(Debug, Clone)]
pub struct BimatrixGame {
    pub payoff_p1: PayoffMatrix,
    pub payoff_p2: PayoffMatrix,
    pub avail_p1: AvailabilityModel,
    pub avail_p2: AvailabilityModel,
}

impl BimatrixGame {
    pub fn new(
        payoff_p1: PayoffMatrix,
        payoff_p2: PayoffMatrix,
        avail_p1: AvailabilityModel,
        avail_p2: AvailabilityModel,
    ) -> Result<Self> {
        if payoff_p1.rows() != payoff_p2.rows() || payoff_p1.cols() != payoff_p2.cols() {
            return Err(Error::InvalidGame("payoff matrices differ in shape".into()));
        }
        check_payoff_range(&payoff_p1)?;
        check_payoff_range(&payoff_p2)?;
        avail_p1.validate(payoff_p1.rows())?;
        avail_p2.validate(payoff_p1.cols())?;
        Ok(BimatrixGame { payoff_p1, payoff_p2, avail_p1, avail_p2 })
    }

    pub fn n_actions(&self, player: Player) -> usize {
        match player {
            Player::One => self.payoff_p1.rows(),
            Player::Two => self.payoff_p1.cols(),
        }
    }

    pub fn availability(&self, player: Player) -> &AvailabilityModel {
        match player {
            Player::One => &self.avail_p1,
            Player::Two => &self.avail_p2,
        }
    }

    pub fn is_zero_sum(&self) -> bool {
        self.payoff_p1.entries().iter().zip(self.payoff_p2.entries()).all(|(a, b)| (a + b).abs() < 1e-12)
    }
}

impl From<&GameSpec> for BimatrixGame {
    fn from(g: &GameSpec) -> Self {
        BimatrixGame {
            payoff_p1: g.payoff.clone(),
            payoff_p2: g.payoff.negated(),
            avail_p1: g.avail_p1.clone(),
            avail_p2: g.avail_p2.clone(),
        }
    }
}

/// One round's joint availability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDraw {
    pub s1: ActionSet,
    pub s2: ActionSet,
    pub round: usize,
}
