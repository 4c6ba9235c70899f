//! Command-line arguments and the JSON config file they overlay.
//!
//! Every option is optional on both sides; a flag given on the command line
//! wins over the same key in the file, and built-in defaults apply last.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gsas_core::bench::Preset;
use gsas_core::families::FamilyTag;
use gsas_core::regret::{StepsizeSchedule, Variant};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Field-wise `or`: values already set in `self` are kept.
macro_rules! overlay {
    ($ty:ident { $($f:ident),* $(,)? }) => {
        impl $ty {
            pub fn overlay(self, base: $ty) -> $ty {
                $ty { $($f: self.$f.or(base.$f)),* }
            }
        }
    };
}

#[derive(Parser, Debug)]
#[command(name = "gsas", version, about = "Equilibria of zero-sum games with stochastic action sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Master seed for generation and sampling [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file, or output directory for `experiment` [default: stdout / results]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format [default: json]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for runs across seeds [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with defaults for any of these options
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

overlay!(GlobalArgs { seed, out, format, threads, config });

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a game from a named family
    Gen(GenArgs),
    /// Run SI-MWU self-play and report regret and time-average marginals
    Run(RunArgs),
    /// Saddle-point residual of a strategy profile
    Spr(SprArgs),
    /// Learn compact weights by self-play, or from target policies by matrix scaling
    Compact(CompactArgs),
    /// Solve the sequence-form linear program
    Lp(LpArgs),
    /// Run an experiment preset and write its CSV tables
    Experiment(ExperimentArgs),
}

/// Where a game comes from: a JSON file or a generator.
#[derive(Args, Debug, Default, Clone, Deserialize)]
pub struct GameArgs {
    /// Game in the JSON interchange format
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Generator family, e.g. CheckerboardMP or MatchingPenniesLambda
    #[arg(long)]
    pub family: Option<String>,
    /// Number of actions for sized families [default: 10]
    #[arg(long)]
    pub n: Option<usize>,
    /// Availability of T in MatchingPenniesLambda
    #[arg(long)]
    pub lambda: Option<f64>,
}

overlay!(GameArgs { game, family, n, lambda });

#[derive(Args, Debug, Default, Deserialize)]
pub struct GenArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GameArgs,
}

impl GenArgs {
    pub fn overlay(self, base: GenArgs) -> GenArgs {
        GenArgs { source: self.source.overlay(base.source) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// scale * sqrt(2 ln n / t)
    Theorem,
    /// H * sqrt(ln(n(n-1)) / t)
    Experiment,
    /// fixed eta
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Mwu,
    Omwu,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Mwu => Variant::Mwu,
            VariantArg::Omwu => Variant::Omwu,
        }
    }
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
pub struct PlayArgs {
    /// Number of rounds [default: 10000]
    #[arg(short = 'T', long = "horizon")]
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    /// Stepsize family [default: experiment]
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleKind>,
    /// Constant of the stepsize family: scale, H, or eta [default: 1]
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Rounds between reported snapshots [default: T / 200]
    #[arg(long)]
    pub stride: Option<usize>,
}

overlay!(PlayArgs { horizon, schedule, eta, variant, stride });

impl PlayArgs {
    pub fn horizon(&self) -> Result<usize> {
        match self.horizon.unwrap_or(10_000) {
            0 => Err(CliError::Config("T: must be at least 1".into())),
            t => Ok(t),
        }
    }

    pub fn schedule(&self) -> Result<StepsizeSchedule> {
        let c = self.eta.unwrap_or(1.0);
        let s = match self.schedule.unwrap_or(ScheduleKind::Experiment) {
            ScheduleKind::Theorem => StepsizeSchedule::SqrtTheorem { scale: c },
            ScheduleKind::Experiment => StepsizeSchedule::SqrtExperiment { h: c },
            ScheduleKind::Constant => StepsizeSchedule::Constant { eta: c },
        };
        s.validate().map_err(|e| CliError::Config(format!("eta: {e}")))?;
        Ok(s)
    }
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct RunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GameArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub play: PlayArgs,
}

impl RunArgs {
    pub fn overlay(self, base: RunArgs) -> RunArgs {
        RunArgs { source: self.source.overlay(base.source), play: self.play.overlay(base.play) }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct SprArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GameArgs,
    /// Profile as {"p1": strategy, "p2": strategy}; output of run, compact and lp is accepted
    #[arg(long)]
    pub strategies: Option<PathBuf>,
    /// Estimate availability expectations from this many draws instead of enumerating
    #[arg(long)]
    pub samples: Option<usize>,
}

impl SprArgs {
    pub fn overlay(self, base: SprArgs) -> SprArgs {
        SprArgs {
            source: self.source.overlay(base.source),
            strategies: self.strategies.or(base.strategies),
            samples: self.samples.or(base.samples),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct CompactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GameArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub play: PlayArgs,
    /// Weight-learner stepsize constant K [default: 10]
    #[arg(long)]
    pub k: Option<f64>,
    /// Rounds before robust averaging starts [default: 500]
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Conditional-policy profile to compress by matrix scaling instead of self-play
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Smoothing of the scaling target [default: 0.001]
    #[arg(long)]
    pub epsilon: Option<f64>,
}

impl CompactArgs {
    pub fn overlay(self, base: CompactArgs) -> CompactArgs {
        CompactArgs {
            source: self.source.overlay(base.source),
            play: self.play.overlay(base.play),
            k: self.k.or(base.k),
            burn_in: self.burn_in.or(base.burn_in),
            target: self.target.or(base.target),
            epsilon: self.epsilon.or(base.epsilon),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct LpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GameArgs,
}

impl LpArgs {
    pub fn overlay(self, base: LpArgs) -> LpArgs {
        LpArgs { source: self.source.overlay(base.source) }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GameArgs,
    #[arg(short = 'T', long = "horizon")]
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    /// Comma-separated run seeds [default: 0..20, or --seed alone]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated game sizes for Exp1Runtime
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Comma-separated lambdas for LambdaRegimes
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// SI-MWU constant H [default: 1, or the tuned value with --large]
    #[arg(long)]
    pub h: Option<f64>,
    /// Weight-learner constant K [default: tuned per family]
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Use n = 100 games
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub large: Option<bool>,
}

impl ExperimentArgs {
    pub fn overlay(self, base: ExperimentArgs) -> ExperimentArgs {
        ExperimentArgs {
            preset: self.preset.or(base.preset),
            source: self.source.overlay(base.source),
            horizon: self.horizon.or(base.horizon),
            seeds: self.seeds.or(base.seeds),
            sizes: self.sizes.or(base.sizes),
            lambdas: self.lambdas.or(base.lambdas),
            h: self.h.or(base.h),
            k: self.k.or(base.k),
            stride: self.stride.or(base.stride),
            large: self.large.or(base.large),
        }
    }
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        "expected one of Exp1Runtime, Exp2Regret, Exp2SprMarginals, Exp2SprWeights, \
         Example47Weights, OmwuLowerBound, SeCounterexample, LambdaRegimes"
            .to_string()
    })
}

/// Resolves a family name, case-insensitively.
pub fn parse_family(name: &str, lambda: Option<f64>) -> Result<FamilyTag> {
    let tag = match name.to_ascii_lowercase().as_str() {
        "randomgsas" => FamilyTag::RandomGSAS,
        "rbs" => FamilyTag::RBS,
        "checkerboardmp" => FamilyTag::CheckerboardMP,
        "biasedrps" => FamilyTag::BiasedRPS,
        "biasedmp" => FamilyTag::BiasedMP,
        "examplerps" => FamilyTag::ExampleRPS,
        "matchingpennieslambda" => match lambda {
            Some(lambda) => FamilyTag::MatchingPenniesLambda { lambda },
            None => return Err(CliError::Config("lambda: required by MatchingPenniesLambda".into())),
        },
        other => return Err(CliError::Config(format!("family: unknown family {other:?}"))),
    };
    Ok(tag)
}

const GAME_KEYS: &[&str] = &["game", "family", "n", "lambda"];
const PLAY_KEYS: &[&str] = &["T", "schedule", "eta", "variant", "stride"];

fn section_keys(section: &str) -> Option<Vec<&'static str>> {
    let extra: &[&str] = match section {
        "gen" | "lp" => &[],
        "run" => PLAY_KEYS,
        "spr" => &["strategies", "samples"],
        "compact" => &["T", "schedule", "eta", "variant", "stride", "k", "burn_in", "target", "epsilon"],
        "experiment" => &["preset", "T", "seeds", "sizes", "lambdas", "h", "k", "stride", "large"],
        _ => return None,
    };
    Some(GAME_KEYS.iter().chain(extra).copied().collect())
}

/// Contents of a `--config` file: global keys plus one section per subcommand.
/// Section fields are flattened, so unknown keys are rejected by hand.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub gen: GenArgs,
    pub run: RunArgs,
    pub spr: SprArgs,
    pub compact: CompactArgs,
    pub lp: LpArgs,
    pub experiment: ExperimentArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        FileConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn parse(text: &str) -> Result<FileConfig> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::json("config", e))?;
        if let Some(obj) = value.as_object() {
            for (name, section) in obj {
                let (Some(allowed), Some(fields)) = (section_keys(name), section.as_object()) else { continue };
                if let Some(bad) = fields.keys().find(|k| !allowed.contains(&k.as_str())) {
                    return Err(CliError::Config(format!("{name}.{bad}: unknown key")));
                }
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Applies the config file under the command line.
pub fn resolve(cli: Cli) -> Result<(GlobalArgs, Command)> {
    let Some(path) = cli.global.config.clone() else {
        return Ok((cli.global, cli.command));
    };
    let file = FileConfig::load(&path)?;
    let base = GlobalArgs { seed: file.seed, out: file.out, format: file.format, threads: file.threads, config: None };
    let global = cli.global.overlay(base);
    let command = match cli.command {
        Command::Gen(a) => Command::Gen(a.overlay(file.gen)),
        Command::Run(a) => Command::Run(a.overlay(file.run)),
        Command::Spr(a) => Command::Spr(a.overlay(file.spr)),
        Command::Compact(a) => Command::Compact(a.overlay(file.compact)),
        Command::Lp(a) => Command::Lp(a.overlay(file.lp)),
        Command::Experiment(a) => Command::Experiment(a.overlay(file.experiment)),
    };
    Ok((global, command))
}
