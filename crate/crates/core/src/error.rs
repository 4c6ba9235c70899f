use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid availability model: {0}")]
    InvalidAvailability(String),
    #[error("invalid game family parameters: {0}")]
    InvalidFamily(String),
    #[error("availability contract violated: {0}")]
    AvailabilityContract(String),
    #[error("empty-set redraw exceeded {0} attempts")]
    RedrawLimit(usize),
    #[error("support of size {size} exceeds cap {cap}")]
    SupportTooLarge { size: usize, cap: usize },
    #[error("availability model is not enumerable")]
    NotEnumerable,
    #[error("stationary solve did not converge (residual {residual:e})")]
    StationaryNotConverged { residual: f64 },
    #[error("weights vanish on the available set {0:?}")]
    ZeroMassRestriction(Vec<usize>),
    #[error("policy has no entry for set {0:?}")]
    MissingPolicy(Vec<usize>),
    #[error("matrix scaling did not converge after {iterations} iterations (residual {residual:e})")]
    ScalingNotConverged { iterations: usize, residual: f64 },
    #[error("robust averager queried before any accumulation")]
    NoData,
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("regime requires independent per-action availability")]
    NotIndependent,
    #[error("linear program is {0}")]
    Lp(String),
    #[error("no equilibrium found by support enumeration within cap")]
    NoEquilibrium,
    #[error("subgame solver failed at round {round}: {source}")]
    SubgameFailed { round: usize, source: Box<Error> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
