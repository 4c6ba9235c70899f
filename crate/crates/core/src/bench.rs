//! Experiment presets producing plot-ready tables.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::analysis::{exact_marginal, expected_max_exact, expected_max_independent};
use crate::compact::{CompactConfig, CompactLearner, TargetMode, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::families::{example_rps, generate, omwu_lower_bound_game, FamilyTag, GameFamily};
use crate::lp::{build_sequence_form, solve_lp, DEFAULT_MAX_PIVOTS};
use crate::model::{ActionSet, AvailabilityModel, GameSpec, Player, DEFAULT_SUPPORT_CAP};
use crate::regret::{
    expected_bound, hp_band, RegretLedger, RoundRecord, SelfPlay, SelfPlayConfig, StepsizeSchedule, Variant,
};
use crate::rng::{stream, Purpose};
use crate::strategy::{marginal_monte_carlo, CompactWeights, Strategy};

/// Per-family stepsize constants `(H, K)` for SI-MWU and the weight learner
/// on `n = 100` instances.
pub fn tuned_constants(tag: FamilyTag) -> (f64, f64) {
    match tag {
        FamilyTag::CheckerboardMP => (32.0, 10.0),
        FamilyTag::RBS => (3.0, 10.0),
        FamilyTag::ExampleRPS => (1.0, 2f64.sqrt()),
        FamilyTag::BiasedRPS => (12.0, 10.0),
        FamilyTag::BiasedMP => (8.0, 10.0),
        FamilyTag::RandomGSAS | FamilyTag::MatchingPenniesLambda { .. } => (1.0, 10.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Exp1Runtime,
    Exp2Regret,
    Exp2SprMarginals,
    Exp2SprWeights,
    Example47Weights,
    OmwuLowerBound,
    SeCounterexample,
    LambdaRegimes,
}

/// A rectangular result with string cells, written verbatim as CSV.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| fmt_num(*x)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Shortest round-trip decimal, independent of locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() && x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, table.to_csv_string()?)?;
    Ok(())
}

/// Linear-interpolation quantile of sorted data (numpy's default).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Combines same-shaped per-seed tables: the first `key_cols` columns are
/// copied from the first table; every other column becomes mean, 2.5% and
/// 97.5% quantile columns.
pub fn aggregate(tables: &[Table], key_cols: usize) -> Result<Table> {
    let first = tables.first().ok_or_else(|| Error::Config("nothing to aggregate".into()))?;
    if tables.iter().any(|t| t.columns != first.columns || t.rows.len() != first.rows.len()) {
        return Err(Error::Config("per-seed tables differ in shape".into()));
    }
    let mut columns: Vec<String> = first.columns[..key_cols].to_vec();
    for c in &first.columns[key_cols..] {
        columns.extend([format!("{c}_mean"), format!("{c}_q025"), format!("{c}_q975")]);
    }
    let mut out = Table::new(columns);
    for (i, row) in first.rows.iter().enumerate() {
        let mut cells: Vec<String> = row[..key_cols].to_vec();
        for j in key_cols..first.columns.len() {
            let mut vals: Vec<f64> = tables.iter().map(|t| t.rows[i][j].parse::<f64>().unwrap_or(f64::NAN)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            cells.extend([fmt_num(mean), fmt_num(quantile(&vals, 0.025)), fmt_num(quantile(&vals, 0.975))]);
        }
        out.rows.push(cells);
    }
    Ok(out)
}

/// Saddle-point residual of a marginal profile, with the best-response terms
/// enumerated when possible and in closed form for large independent models.
pub fn spr_of_marginals(game: &GameSpec, mu1: &[f64], mu2: &[f64]) -> Result<f64> {
    let e1 = game.payoff.mul_vec(mu2);
    let e2: Vec<f64> = game.payoff.vec_mul(mu1).into_iter().map(|x| -x).collect();
    let term = |model: &AvailabilityModel, e: &[f64]| -> Result<f64> {
        match model {
            AvailabilityModel::IndependentPerAction { p } if p.len() > 12 => Ok(expected_max_independent(p, e)),
            _ => Ok(expected_max_exact(&model.enumerate_support(DEFAULT_SUPPORT_CAP)?, e)),
        }
    };
    Ok(term(&game.avail_p1, &e1)? + term(&game.avail_p2, &e2)?)
}

/// Marginal of a weight policy; Monte Carlo above the enumeration threshold.
pub fn weights_marginal(w: &CompactWeights, model: &AvailabilityModel, seed: u64) -> Result<Vec<f64>> {
    let s = Strategy::Weights(w.clone());
    match model {
        AvailabilityModel::IndependentPerAction { p } if p.len() > 12 => {
            let mut rng = stream(seed, 0xfe, Purpose::Evaluation);
            Ok(marginal_monte_carlo(&s, model, 20_000, &mut rng)?.mu)
        }
        _ => exact_marginal(&s, model),
    }
}

/// Value of player 1 at a marginal profile.
pub fn profile_value(game: &GameSpec, mu1: &[f64], mu2: &[f64]) -> f64 {
    game.payoff.bilinear(mu1, mu2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdRun {
    /// First round of the sustained window, or `None` if the cap was hit.
    pub rounds: Option<usize>,
    pub rounds_played: usize,
    pub seconds: f64,
    pub marginal: [Vec<f64>; 2],
}

/// Self-play until both players' max sampled SI-regret per round stays at or
/// below `threshold` for `window + 1` consecutive rounds.
pub fn run_until_threshold(
    game: &GameSpec,
    schedule: StepsizeSchedule,
    seed: u64,
    threshold: f64,
    window: usize,
    cap: usize,
) -> Result<ThresholdRun> {
    let start = Instant::now();
    let mut sp = SelfPlay::new(game, schedule, schedule, Variant::Mwu, seed)?;
    let mut run_start: Option<usize> = None;
    let mut found = None;
    for t in 1..=cap {
        sp.step()?;
        let ok = sp.ledgers.iter().all(|l| l.max_si_sampled() / t as f64 <= threshold);
        if ok {
            let s = *run_start.get_or_insert(t);
            if t - s >= window {
                found = Some(s);
                break;
            }
        } else {
            run_start = None;
        }
    }
    Ok(ThresholdRun {
        rounds: found,
        rounds_played: sp.rounds(),
        seconds: start.elapsed().as_secs_f64(),
        marginal: [sp.mean_marginal(Player::One), sp.mean_marginal(Player::Two)],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpTiming {
    pub n_vars: usize,
    pub seconds: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Solves player 1's sequence-form program, timing the solver phase only.
pub fn timed_lp(game: &GameSpec) -> Result<LpTiming> {
    let slp = build_sequence_form(game, Player::One, DEFAULT_SUPPORT_CAP)?;
    let start = Instant::now();
    let sol = solve_lp(&slp, DEFAULT_MAX_PIVOTS)?;
    Ok(LpTiming { n_vars: slp.n_vars(), seconds: start.elapsed().as_secs_f64(), value: sol.value, iterations: sol.iterations })
}

/// Full-power-set random game with every action present with probability
/// in [0.3, 0.5].
pub fn exp1_game(n: usize, seed: u64) -> Result<GameSpec> {
    generate(&GameFamily::new(FamilyTag::RandomGSAS, n, seed))
}

pub fn exp1_row(n: usize, seed: u64, cap: usize) -> Result<Vec<f64>> {
    let g = exp1_game(n, seed)?;
    let lp = timed_lp(&g)?;
    let run = run_until_threshold(&g, StepsizeSchedule::SqrtExperiment { h: 1.0 }, seed, 0.01, 1000, cap)?;
    Ok(vec![
        n as f64,
        seed as f64,
        lp.n_vars as f64,
        lp.seconds,
        lp.value,
        run.rounds.map_or(f64::NAN, |r| r as f64),
        run.seconds,
        profile_value(&g, &run.marginal[0], &run.marginal[1]),
    ])
}

pub const EXP1_COLUMNS: [&str; 8] =
    ["n", "seed", "lp_vars", "lp_seconds", "lp_value", "simwu_rounds", "simwu_seconds", "simwu_value"];

fn names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |a| format!("{prefix}_{a}"))
}

/// Per-snapshot regret curves of one self-play run.
pub fn exp2_regret(game: &GameSpec, schedule: StepsizeSchedule, horizon: usize, stride: usize, seed: u64) -> Result<Table> {
    let n = game.n_actions(Player::One).max(game.n_actions(Player::Two));
    let mut sp = SelfPlay::new(game, schedule, schedule, Variant::Mwu, seed)?;
    let mut t = Table::new(
        ["t", "max_si_sampled_p1", "max_si_sampled_p2", "max_si_expected_p1", "max_si_expected_p2", "expected_bound", "hp_band"]
            .map(String::from)
            .to_vec(),
    );
    for r in 1..=horizon {
        sp.step()?;
        if r % stride == 0 || r == horizon {
            t.push_numbers(&[
                r as f64,
                sp.ledgers[0].max_si_sampled(),
                sp.ledgers[1].max_si_sampled(),
                sp.ledgers[0].max_si_expected(),
                sp.ledgers[1].max_si_expected(),
                expected_bound(r, n),
                hp_band(r, n, 0.05),
            ]);
        }
    }
    Ok(t)
}

/// SPR of the time-average marginals over time.
pub fn exp2_spr_marginals(game: &GameSpec, schedule: StepsizeSchedule, horizon: usize, stride: usize, seed: u64) -> Result<Table> {
    let mut sp = SelfPlay::new(game, schedule, schedule, Variant::Mwu, seed)?;
    let mut t = Table::new(vec!["t".into(), "spr".into()]);
    for r in 1..=horizon {
        sp.step()?;
        if r % stride == 0 || r == horizon {
            let spr = spr_of_marginals(game, &sp.mean_marginal(Player::One), &sp.mean_marginal(Player::Two))?;
            t.push_numbers(&[r as f64, spr]);
        }
    }
    Ok(t)
}

/// Self-play feeding the weight learners, reporting weight trajectories and
/// the SPR of the marginals and of both weight policies.
pub fn weights_trajectory(
    game: &GameSpec,
    schedule: StepsizeSchedule,
    compact: CompactConfig,
    horizon: usize,
    stride: usize,
    seed: u64,
    with_spr: bool,
) -> Result<Table> {
    let n = [game.n_actions(Player::One), game.n_actions(Player::Two)];
    let mut sp = SelfPlay::new(game, schedule, schedule, Variant::Mwu, seed)?;
    let mut learners = [CompactLearner::new(n[0], compact)?, CompactLearner::new(n[1], compact)?];
    let mut cols = vec!["t".to_string()];
    for (i, &k) in n.iter().enumerate() {
        cols.extend(names(&format!("raw{}", i + 1), k));
        cols.extend(names(&format!("robust{}", i + 1), k));
    }
    if with_spr {
        cols.extend(["spr_marginals", "spr_raw", "spr_robust"].map(String::from));
    }
    let mut table = Table::new(cols);
    for r in 1..=horizon {
        let o = sp.step()?;
        let sets = [&o.draw.s1, &o.draw.s2];
        let pols = [&o.policy_p1, &o.policy_p2];
        for (i, pl) in Player::BOTH.into_iter().enumerate() {
            match compact.target {
                TargetMode::TimeAveraged => learners[i].step(sets[i], &sp.mean_marginal(pl)),
                TargetMode::PerRound => learners[i].step(sets[i], pols[i]),
            };
        }
        if r % stride == 0 || r == horizon {
            let raw = [learners[0].weights(), learners[1].weights()];
            let robust = [
                learners[0].robust_weights().unwrap_or_else(|_| raw[0].clone()),
                learners[1].robust_weights().unwrap_or_else(|_| raw[1].clone()),
            ];
            let mut row = vec![r as f64];
            for i in 0..2 {
                row.extend(raw[i].as_slice());
                row.extend(robust[i].as_slice());
            }
            if with_spr {
                let m = [sp.mean_marginal(Player::One), sp.mean_marginal(Player::Two)];
                row.push(spr_of_marginals(game, &m[0], &m[1])?);
                for w in [&raw, &robust] {
                    let m1 = weights_marginal(&w[0], &game.avail_p1, seed)?;
                    let m2 = weights_marginal(&w[1], &game.avail_p2, seed)?;
                    row.push(spr_of_marginals(game, &m1, &m2)?);
                }
            }
            table.push_numbers(&row);
        }
    }
    Ok(table)
}

/// Mean over seeds of player 1's final max SI-regret (policy-weighted ledger)
/// under SI-OMWU with constant stepsize `1/sqrt(T)` from a random start.
pub fn omwu_regret(horizon: usize, seeds: &[u64]) -> Result<f64> {
    let g = omwu_lower_bound_game()?;
    let mut total = 0.0;
    for &seed in seeds {
        let mut cfg = SelfPlayConfig::new(horizon, StepsizeSchedule::Constant { eta: 1.0 / (horizon as f64).sqrt() }, seed);
        cfg.variant = Variant::Omwu;
        cfg.random_init = true;
        cfg.stride = horizon;
        let tr = crate::regret::run_self_play(&g, &cfg)?;
        total += tr.ledgers[0].max_si_expected();
    }
    Ok(total / seeds.len() as f64)
}

/// The single-player ledger example: payoffs `(1, 2, 100)`, sets `{0, 1}` and
/// `{1, 2}` equally likely, uniform play on the first and action 2 on the second.
pub fn se_counterexample(horizon: usize, stride: usize, seed: u64) -> Result<(Table, RegretLedger)> {
    let u = vec![1.0, 2.0, 100.0];
    let sets = [ActionSet::new(vec![0, 1]), ActionSet::new(vec![1, 2])];
    let policies = [vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]];
    let mut avail = stream(seed, 0, Purpose::Availability);
    let mut act = stream(seed, 0, Purpose::Action);
    let mut ledger = RegretLedger::new(3);
    let mut cols = vec!["t".to_string()];
    cols.extend(names("se_expected", 3));
    cols.extend(names("se_sampled", 3));
    cols.extend(["si_expected_0_1", "si_sampled_0_1", "identity_gap"].map(String::from));
    let mut table = Table::new(cols);
    let mut worst_gap: f64 = 0.0;
    for t in 1..=horizon {
        let k = usize::from(avail.gen::<bool>());
        let action = crate::regret::sample_from(&policies[k], &mut act);
        ledger.update(&RoundRecord { set: sets[k].clone(), policy: policies[k].clone(), action, payoff_vec: u.clone() });
        worst_gap = worst_gap.max(ledger.identity_gap());
        if t % stride == 0 || t == horizon {
            let mut row = vec![t as f64];
            row.extend(&ledger.se_expected);
            row.extend(&ledger.se_sampled);
            row.extend([ledger.si_expected[1], ledger.si_sampled[1], worst_gap]);
            table.push_numbers(&row);
        }
    }
    Ok((table, ledger))
}

/// LP solutions of the lambda-parameterized matching pennies.
pub fn lambda_regimes(lambdas: &[f64]) -> Result<Table> {
    let mut t = Table::new(
        ["lambda", "value", "p1_tails_given_both", "p1_tails_marginal", "p2_tails"].map(String::from).to_vec(),
    );
    for &l in lambdas {
        let g = generate(&GameFamily::new(FamilyTag::MatchingPenniesLambda { lambda: l }, 2, 0))?;
        let s = crate::lp::solve_game(&g)?;
        let both = s.p1.behavioral.get(&ActionSet::full(2)).map(|p| p[1]).unwrap_or(f64::NAN);
        t.push_numbers(&[l, s.value, both, s.p1.marginal[1], s.p2.marginal[1]]);
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    #[serde(default)]
    pub game: Option<GameFamily>,
    #[serde(default, rename = "T")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// SI-MWU schedule; defaults to the family's tuned constant.
    #[serde(default)]
    pub schedule: Option<StepsizeSchedule>,
    /// Weight-learner constant; defaults to the family's tuned constant.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub stride: Option<usize>,
    pub output_dir: PathBuf,
    /// Use n = 100 games instead of the desk-scale n = 10.
    #[serde(default)]
    pub large: bool,
}

impl ExperimentConfig {
    pub fn new(preset: Preset, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            preset,
            game: None,
            horizon: None,
            seeds: Vec::new(),
            schedule: None,
            k: None,
            sizes: Vec::new(),
            lambdas: Vec::new(),
            stride: None,
            output_dir: output_dir.into(),
            large: false,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..20).collect()
        } else {
            self.seeds.clone()
        }
    }

    fn default_n(&self) -> usize {
        if self.large {
            100
        } else {
            10
        }
    }

    pub fn game_family(&self) -> GameFamily {
        let mut f = self.game.unwrap_or(GameFamily::new(FamilyTag::CheckerboardMP, self.default_n(), 0));
        if f.n == 0 {
            f.n = self.default_n();
        }
        f
    }

    /// The tuned `H` values are calibrated for `n = 100`; desk-scale runs use `H = 1`.
    pub fn schedule_for(&self, tag: FamilyTag) -> StepsizeSchedule {
        let h = if self.large { tuned_constants(tag).0 } else { 1.0 };
        self.schedule.unwrap_or(StepsizeSchedule::SqrtExperiment { h })
    }

    pub fn compact_for(&self, tag: FamilyTag) -> CompactConfig {
        CompactConfig { k: self.k.unwrap_or(tuned_constants(tag).1), burn_in: DEFAULT_BURN_IN, target: TargetMode::TimeAveraged }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == Some(0) {
            return Err(Error::Config("T: must be at least 1".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride: must be at least 1".into()));
        }
        if let Some(s) = &self.schedule {
            s.validate().map_err(|e| Error::Config(format!("schedule: {e}")))?;
        }
        if let Some(k) = self.k {
            if k.is_nan() || k <= 0.0 {
                return Err(Error::Config("k: must be positive".into()));
            }
        }
        match self.preset {
            Preset::Exp1Runtime => {
                if self.sizes.iter().any(|&n| !(2..=12).contains(&n)) {
                    return Err(Error::Config("sizes: full-power-set programs need 2 <= n <= 12".into()));
                }
            }
            Preset::Exp2Regret | Preset::Exp2SprMarginals | Preset::Exp2SprWeights => {
                self.game_family().validate().map_err(|e| Error::Config(format!("game: {e}")))?;
            }
            Preset::LambdaRegimes => {
                if self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
                    return Err(Error::Config("lambdas: must lie in [0, 1]".into()));
                }
            }
            Preset::OmwuLowerBound | Preset::Example47Weights | Preset::SeCounterexample => {}
        }
        Ok(())
    }
}

/// Maps `f` over seeds, in parallel when the `parallel` feature is on. Results
/// keep seed order.
pub fn map_seeds<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| f(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| f(s)).collect()
    }
}

fn write_per_seed(dir: &Path, stem: &str, seeds: &[u64], tables: &[Table], key_cols: usize) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (s, t) in seeds.iter().zip(tables) {
        let p = dir.join(format!("{stem}_seed{s}.csv"));
        emit_csv(t, &p)?;
        out.push(p);
    }
    let p = dir.join(format!("{stem}_aggregate.csv"));
    emit_csv(&aggregate(tables, key_cols)?, &p)?;
    out.push(p);
    Ok(out)
}

/// Runs a preset and writes its files, returning their paths.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    let seeds = cfg.seeds();
    match cfg.preset {
        Preset::Exp1Runtime => {
            let sizes = if cfg.sizes.is_empty() { (3..=8).collect() } else { cfg.sizes.clone() };
            let cap = cfg.horizon.unwrap_or(1_000_000);
            let mut table = Table::new(EXP1_COLUMNS.map(String::from).to_vec());
            for &n in &sizes {
                // timings stay sequential so runs do not compete for cores
                for &seed in &seeds {
                    table.push_numbers(&exp1_row(n, seed, cap)?);
                }
            }
            let p = dir.join("exp1_runtime.csv");
            emit_csv(&table, &p)?;
            Ok(vec![p])
        }
        Preset::Exp2Regret | Preset::Exp2SprMarginals | Preset::Exp2SprWeights => {
            let fam = cfg.game_family();
            let game = generate(&fam)?;
            let horizon = cfg.horizon.unwrap_or(100_000);
            let stride = cfg.stride.unwrap_or((horizon / 100).max(1));
            let sched = cfg.schedule_for(fam.tag);
            let (stem, tables) = match cfg.preset {
                Preset::Exp2Regret => ("exp2_regret", map_seeds(&seeds, |s| exp2_regret(&game, sched, horizon, stride, s))?),
                Preset::Exp2SprMarginals => {
                    ("exp2_spr_marginals", map_seeds(&seeds, |s| exp2_spr_marginals(&game, sched, horizon, stride, s))?)
                }
                _ => {
                    let compact = cfg.compact_for(fam.tag);
                    let tables = map_seeds(&seeds, |s| weights_trajectory(&game, sched, compact, horizon, stride, s, true))?;
                    ("exp2_spr_weights", tables)
                }
            };
            write_per_seed(dir, stem, &seeds, &tables, 1)
        }
        Preset::Example47Weights => {
            let game = example_rps()?;
            let horizon = cfg.horizon.unwrap_or(100_000);
            let stride = cfg.stride.unwrap_or((horizon / 200).max(1));
            let sched = cfg.schedule_for(FamilyTag::ExampleRPS);
            let compact = cfg.compact_for(FamilyTag::ExampleRPS);
            let tables = map_seeds(&seeds, |s| weights_trajectory(&game, sched, compact, horizon, stride, s, false))?;
            write_per_seed(dir, "example_weights", &seeds, &tables, 1)
        }
        Preset::OmwuLowerBound => {
            let base = cfg.horizon.unwrap_or(10_000);
            let horizons = [base, 4 * base, 16 * base];
            let mut t = Table::new(["T", "mean_max_si_expected_p1", "ratio_to_previous"].map(String::from).to_vec());
            let mut prev = f64::NAN;
            for &h in &horizons {
                let r = omwu_regret(h, &seeds)?;
                t.push_numbers(&[h as f64, r, r / prev]);
                prev = r;
            }
            let p = dir.join("omwu_lower_bound.csv");
            emit_csv(&t, &p)?;
            Ok(vec![p])
        }
        Preset::SeCounterexample => {
            let horizon = cfg.horizon.unwrap_or(10_000);
            let stride = cfg.stride.unwrap_or((horizon / 100).max(1));
            let tables = map_seeds(&seeds, |s| Ok(se_counterexample(horizon, stride, s)?.0))?;
            write_per_seed(dir, "se_counterexample", &seeds, &tables, 1)
        }
        Preset::LambdaRegimes => {
            let lambdas = if cfg.lambdas.is_empty() { (0..=20).map(|i| i as f64 / 20.0).collect() } else { cfg.lambdas.clone() };
            let p = dir.join("lambda_regimes.csv");
            emit_csv(&lambda_regimes(&lambdas)?, &p)?;
            Ok(vec![p])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_format_plainly() {
        assert_eq!(fmt_num(3.0), "3");
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(-1e-20), "-0.00000000000000000001");
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }

    #[test]
    fn quantiles_match_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile(&v, 0.025) - 1.075).abs() < 1e-12);
    }

    #[test]
    fn aggregate_means() {
        let mut a = Table::new(vec!["t".into(), "x".into()]);
        a.push_numbers(&[1.0, 2.0]);
        let mut b = a.clone();
        b.rows[0][1] = "4".into();
        let agg = aggregate(&[a, b], 1).unwrap();
        assert_eq!(agg.columns, vec!["t", "x_mean", "x_q025", "x_q975"]);
        assert_eq!(agg.rows[0][..2], ["1".to_string(), "3".to_string()]);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(vec!["t".into(), "spr".into()]);
        assert_eq!(t.to_csv_string().unwrap(), "t,spr\n");
    }

    #[test]
    fn lambda_table() {
        let t = lambda_regimes(&[0.25, 0.75]).unwrap();
        let v = t.column("value").unwrap();
        assert!((v[0] + 0.5).abs() < 1e-9);
        assert!(v[1].abs() < 1e-9);
        let p2 = t.column("p2_tails").unwrap();
        assert!((p2[0] - 1.0).abs() < 1e-9);
        let eff = t.column("p1_tails_marginal").unwrap();
        assert!((eff[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn config_validation_names_field() {
        let mut c = ExperimentConfig::new(Preset::Exp1Runtime, "out");
        c.sizes = vec![20];
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("sizes"));
        let mut c = ExperimentConfig::new(Preset::Exp2Regret, "out");
        c.game = Some(GameFamily::new(FamilyTag::CheckerboardMP, 5, 0));
        assert!(c.validate().unwrap_err().to_string().contains("game"));
    }
}
