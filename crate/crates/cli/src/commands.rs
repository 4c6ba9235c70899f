use std::io::Write;
use std::path::{Path, PathBuf};

use gsas_core::analysis::{spr_exact, spr_sampled, SprEstimate};
use gsas_core::bench::{fmt_num, run_experiment, ExperimentConfig, Table};
use gsas_core::compact::{run_compact_pipeline, sinkhorn_oracle, CompactConfig, ScalingResult, TargetMode, DEFAULT_BURN_IN};
use gsas_core::lp::{solve_game, LpSolution};
use gsas_core::model::DEFAULT_SUPPORT_CAP;
use gsas_core::regret::{run_self_play, SelfPlayConfig, Snapshot, StepsizeSchedule};
use gsas_core::rng::{stream, Purpose};
use gsas_core::strategy::{CompactWeights, Strategy};
use gsas_core::{generate, ActionSet, GameFamily, GameSpec, Player};
use serde::{Deserialize, Serialize};

use crate::config::{
    parse_family, CompactArgs, ExperimentArgs, Format, GameArgs, GenArgs, GlobalArgs, LpArgs, RunArgs, SprArgs,
};
use crate::error::{CliError, Result};

const SCALING_TOL: f64 = 1e-10;
const SCALING_MAX_ITER: usize = 100_000;

/// One strategy per player. Reports from `run`, `compact` and `lp` embed one
/// under `"strategies"`, so they can be fed straight to `spr`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub p1: Strategy,
    pub p2: Strategy,
}

impl Profile {
    pub fn load(path: &Path) -> Result<Profile> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::json(path.display(), e))?;
        if let Some(inner) = value.get_mut("strategies") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| CliError::json(path.display(), e))
    }
}

/// Where a command writes its single result.
pub struct Sink {
    out: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn new(global: &GlobalArgs) -> Sink {
        Sink { out: global.out.clone(), format: global.format.unwrap_or(Format::Json) }
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
                }
                std::fs::write(p, text).map_err(|e| CliError::io(p.display(), e))
            }
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e)),
        }
    }

    /// Writes `report` as JSON or the table built by `csv`.
    fn emit<T: Serialize>(&self, report: &T, csv: impl FnOnce() -> Result<String>) -> Result<()> {
        let text = match self.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::json("report", e))?;
                s.push('\n');
                s
            }
            Format::Csv => csv()?,
        };
        self.write(&text)
    }
}

fn seed(global: &GlobalArgs) -> u64 {
    global.seed.unwrap_or(0)
}

pub fn load_game(src: &GameArgs, seed: u64) -> Result<GameSpec> {
    match (&src.game, &src.family) {
        (Some(_), Some(_)) => Err(CliError::Config("game: pass either --game or --family, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
            Ok(GameSpec::from_json(&text)?)
        }
        (None, Some(name)) => {
            let tag = parse_family(name, src.lambda)?;
            Ok(generate(&GameFamily::new(tag, src.n.unwrap_or(10), seed))?)
        }
        (None, None) => Err(CliError::Config("game: pass --game FILE or --family NAME".into())),
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |a| format!("{prefix}{a}"))
}

fn set_label(s: &ActionSet) -> String {
    s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn gen(global: &GlobalArgs, args: &GenArgs) -> Result<()> {
    let game = load_game(&args.source, seed(global))?;
    let sink = Sink::new(global);
    match sink.format {
        Format::Json => sink.write(&(game.to_json()? + "\n")),
        Format::Csv => {
            let mut t = Table::new(numbered("c", game.payoff.cols()).collect());
            for i in 0..game.payoff.rows() {
                t.push_numbers(game.payoff.row(i));
            }
            sink.write(&t.to_csv_string()?)
        }
    }
}

#[derive(Serialize)]
struct RunReport {
    horizon: usize,
    seed: u64,
    schedule: StepsizeSchedule,
    max_si_sampled: [f64; 2],
    max_si_expected: [f64; 2],
    strategies: Profile,
    snapshots: Vec<Snapshot>,
}

pub fn run(global: &GlobalArgs, args: &RunArgs) -> Result<()> {
    let game = load_game(&args.source, seed(global))?;
    let mut cfg = SelfPlayConfig::new(args.play.horizon()?, args.play.schedule()?, seed(global));
    if let Some(v) = args.play.variant {
        cfg.variant = v.into();
    }
    if let Some(s) = args.play.stride {
        cfg.stride = s.max(1);
    }
    let traj = run_self_play(&game, &cfg)?;
    let report = RunReport {
        horizon: cfg.horizon,
        seed: cfg.seed,
        schedule: cfg.schedule_p1,
        max_si_sampled: [traj.ledgers[0].max_si_sampled(), traj.ledgers[1].max_si_sampled()],
        max_si_expected: [traj.ledgers[0].max_si_expected(), traj.ledgers[1].max_si_expected()],
        strategies: Profile {
            p1: Strategy::Marginal(traj.marginal_p1.clone()),
            p2: Strategy::Marginal(traj.marginal_p2.clone()),
        },
        snapshots: traj.snapshots.clone(),
    };
    Sink::new(global).emit(&report, || {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    })
}

pub fn spr(global: &GlobalArgs, args: &SprArgs) -> Result<()> {
    let game = load_game(&args.source, seed(global))?;
    let Some(path) = &args.strategies else {
        return Err(CliError::Config("strategies: pass --strategies FILE".into()));
    };
    let profile = Profile::load(path)?;
    let est = match args.samples {
        Some(n) => {
            let mut rng = stream(seed(global), 0xff, Purpose::Evaluation);
            spr_sampled(&game, &profile.p1, &profile.p2, n, &mut rng)?
        }
        None => spr_exact(&game, &profile.p1, &profile.p2)?,
    };
    Sink::new(global).emit(&est, || spr_csv(&est))
}

fn spr_csv(est: &SprEstimate) -> Result<String> {
    let mut t = Table::new(["regime", "value", "std_error", "n_samples"].map(String::from).to_vec());
    t.rows.push(vec![
        format!("{:?}", est.regime),
        fmt_num(est.value),
        est.std_error.map(fmt_num).unwrap_or_default(),
        est.n_samples.map(|n| n.to_string()).unwrap_or_default(),
    ]);
    Ok(t.to_csv_string()?)
}

#[derive(Serialize)]
struct CompactReport {
    horizon: usize,
    seed: u64,
    config: CompactConfig,
    raw: [CompactWeights; 2],
    robust: [CompactWeights; 2],
    marginal: [Vec<f64>; 2],
    strategies: Profile,
}

#[derive(Serialize)]
struct ScalingReport {
    epsilon: f64,
    p1: ScalingResult,
    p2: ScalingResult,
    strategies: Profile,
}

pub fn compact(global: &GlobalArgs, args: &CompactArgs) -> Result<()> {
    let game = load_game(&args.source, seed(global))?;
    if let Some(target) = &args.target {
        return compact_by_scaling(global, args, &game, target);
    }
    let mut sp = SelfPlayConfig::new(args.play.horizon()?, args.play.schedule()?, seed(global));
    if let Some(v) = args.play.variant {
        sp.variant = v.into();
    }
    if let Some(s) = args.play.stride {
        sp.stride = s.max(1);
    }
    let cfg = CompactConfig {
        k: args.k.unwrap_or(10.0),
        burn_in: args.burn_in.unwrap_or(DEFAULT_BURN_IN),
        target: TargetMode::TimeAveraged,
    };
    let run = run_compact_pipeline(&game, &sp, [cfg, cfg])?;
    let report = CompactReport {
        horizon: sp.horizon,
        seed: sp.seed,
        config: cfg,
        raw: run.raw.clone(),
        robust: run.robust.clone(),
        marginal: run.marginal.clone(),
        strategies: Profile { p1: Strategy::Weights(run.robust[0].clone()), p2: Strategy::Weights(run.robust[1].clone()) },
    };
    Sink::new(global).emit(&report, || {
        let (n1, n2) = (run.raw[0].len(), run.raw[1].len());
        let mut cols = vec!["t".to_string()];
        cols.extend(numbered("raw1_", n1).chain(numbered("raw2_", n2)));
        cols.extend(numbered("robust1_", n1).chain(numbered("robust2_", n2)));
        let mut t = Table::new(cols);
        for s in &run.snapshots {
            let mut row = vec![s.t.to_string()];
            row.extend(s.raw.iter().flatten().map(|&x| fmt_num(x)));
            match &s.robust {
                Some(r) => row.extend(r.iter().flatten().map(|&x| fmt_num(x))),
                // averaging has not started yet
                None => row.extend(std::iter::repeat_n(String::new(), n1 + n2)),
            }
            t.rows.push(row);
        }
        Ok(t.to_csv_string()?)
    })
}

fn compact_by_scaling(global: &GlobalArgs, args: &CompactArgs, game: &GameSpec, target: &Path) -> Result<()> {
    let eps = args.epsilon.unwrap_or(1e-3);
    let profile = Profile::load(target)?;
    let mut results = Vec::with_capacity(2);
    for (pl, s) in Player::BOTH.into_iter().zip([&profile.p1, &profile.p2]) {
        let Strategy::Conditional(policy) = s else {
            return Err(CliError::Config("target: matrix scaling needs conditional policies".into()));
        };
        let support = game.availability(pl).enumerate_support(DEFAULT_SUPPORT_CAP)?;
        results.push(sinkhorn_oracle(&support, policy, eps, SCALING_TOL, SCALING_MAX_ITER)?);
    }
    let p2 = results.pop().expect("two players");
    let p1 = results.pop().expect("two players");
    let strategies = Profile { p1: Strategy::Weights(p1.w.clone()), p2: Strategy::Weights(p2.w.clone()) };
    let report = ScalingReport { epsilon: eps, p1, p2, strategies };
    Sink::new(global).emit(&report, || {
        let mut t = Table::new(["player", "action", "w", "iterations", "residual"].map(String::from).to_vec());
        for (i, r) in [&report.p1, &report.p2].into_iter().enumerate() {
            for (a, &w) in r.w.as_slice().iter().enumerate() {
                t.rows.push(vec![
                    (i + 1).to_string(),
                    a.to_string(),
                    fmt_num(w),
                    r.iterations.to_string(),
                    fmt_num(r.residual),
                ]);
            }
        }
        Ok(t.to_csv_string()?)
    })
}

#[derive(Serialize)]
struct LpReport<'a> {
    value: f64,
    p1: &'a LpSolution,
    p2: &'a LpSolution,
    strategies: Profile,
}

pub fn lp(global: &GlobalArgs, args: &LpArgs) -> Result<()> {
    let game = load_game(&args.source, seed(global))?;
    let sol = solve_game(&game)?;
    let report = LpReport {
        value: sol.value,
        p1: &sol.p1,
        p2: &sol.p2,
        strategies: Profile {
            p1: Strategy::Conditional(sol.p1.behavioral.clone()),
            p2: Strategy::Conditional(sol.p2.behavioral.clone()),
        },
    };
    Sink::new(global).emit(&report, || {
        let n = sol.p1.marginal.len().max(sol.p2.marginal.len());
        let mut cols = vec!["player".to_string(), "set".to_string()];
        cols.extend(numbered("a", n));
        let mut t = Table::new(cols);
        let pad = |v: &[f64]| (0..n).map(|a| v.get(a).map(|&x| fmt_num(x)).unwrap_or_default()).collect::<Vec<_>>();
        for (i, s) in [&sol.p1, &sol.p2].into_iter().enumerate() {
            for (set, p) in s.behavioral.iter() {
                let mut row = vec![(i + 1).to_string(), set_label(set)];
                row.extend(pad(p));
                t.rows.push(row);
            }
            let mut row = vec![(i + 1).to_string(), "marginal".to_string()];
            row.extend(pad(&s.marginal));
            t.rows.push(row);
        }
        Ok(t.to_csv_string()?)
    })
}

/// Builds the preset configuration; `--seed` alone pins a single run seed.
pub fn experiment_config(global: &GlobalArgs, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let Some(preset) = args.preset else {
        return Err(CliError::Config("preset: pass --preset NAME".into()));
    };
    let mut cfg = ExperimentConfig::new(preset, global.out.clone().unwrap_or_else(|| PathBuf::from("results")));
    if args.source.game.is_some() {
        return Err(CliError::Config("game: presets take a generator --family, not a game file".into()));
    }
    if let Some(name) = &args.source.family {
        let tag = parse_family(name, args.source.lambda)?;
        cfg.game = Some(GameFamily::new(tag, args.source.n.unwrap_or(0), seed(global)));
    }
    cfg.horizon = args.horizon;
    cfg.seeds = match (&args.seeds, global.seed) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => vec![s],
        (None, None) => Vec::new(),
    };
    cfg.sizes = args.sizes.clone().unwrap_or_default();
    cfg.lambdas = args.lambdas.clone().unwrap_or_default();
    cfg.schedule = args.h.map(|h| StepsizeSchedule::SqrtExperiment { h });
    cfg.k = args.k;
    cfg.stride = args.stride;
    cfg.large = args.large.unwrap_or(false);
    Ok(cfg)
}

/// Writes the preset's CSV files and lists their paths on stdout.
pub fn experiment(global: &GlobalArgs, args: &ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(global, args)?;
    let files = run_experiment(&cfg)?;
    let text = match global.format.unwrap_or(Format::Json) {
        Format::Json => {
            let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            serde_json::to_string_pretty(&names).map_err(|e| CliError::json("report", e))? + "\n"
        }
        Format::Csv => {
            let mut t = Table::new(vec!["file".to_string()]);
            t.rows.extend(files.iter().map(|p| vec![p.display().to_string()]));
            t.to_csv_string()?
        }
    };
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
}
