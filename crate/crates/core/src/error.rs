use thiserror::Error;

/// Machine-readable code attached to every configuration issue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ConfigCode {
    /// First field coordinate can leave [-1, 1].
    B1Range,
    /// Dimension, resolution, horizon or path count out of range.
    NonPositive,
    /// No RNG seed in the config.
    SeedMissing,
    /// Parameter vector lengths do not match the dimension.
    FieldShape,
    /// Start point length does not match the dimension.
    StartShape,
    /// A parameter is NaN or infinite.
    NonFinite,
}

impl ConfigCode {
    pub fn name(self) -> &'static str {
        match self {
            ConfigCode::B1Range => "B1_RANGE",
            ConfigCode::NonPositive => "NONPOSITIVE",
            ConfigCode::SeedMissing => "SEED_MISSING",
            ConfigCode::FieldShape => "FIELD_SHAPE",
            ConfigCode::StartShape => "START_SHAPE",
            ConfigCode::NonFinite => "NON_FINITE",
        }
    }
}

/// One validation failure; `validate` reports all of them at once.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConfigIssue {
    pub code: ConfigCode,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(code: ConfigCode, message: impl Into<String>) -> Self {
        ConfigIssue { code, message: message.into() }
    }
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code.name(), self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("NON_FINITE: {0}")]
    NonFinite(String),
    #[error("NEGATIVE_START: reflected pair requires y1 >= 0, got {0}")]
    NegativeStart(f64),
    #[error("NONPOSITIVE_EPS: occupation window must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("HORIZON_EXCEEDS_PATH: horizon {horizon} but path ends at {path_end}")]
    HorizonExceedsPath { horizon: f64, path_end: f64 },
    #[error("EMPTY_ENSEMBLE: weighted expectation over zero samples")]
    EmptyEnsemble,
    #[error("DEGENERATE_WEIGHTS: effective sample size {ess:.3} below {min}")]
    DegenerateWeights { ess: f64, min: f64 },
    #[error("DIMENSION_TOO_LARGE: exact law supports d <= 2, got {0}")]
    DimensionTooLarge(usize),
    #[error("BUDGET_EXCEEDED: {0}")]
    BudgetExceeded(String),
    #[error("ALPHA_RANGE: skew parameter must lie in [0, 1], got {0}")]
    AlphaRange(f64),
    #[error("CONSTRAINT_VIOLATION: {detail} at x = ({x1}, {x2})")]
    ConstraintViolation { detail: String, x1: f64, x2: f64 },
    #[error("EMPTY_SAMPLE: statistic requires at least one observation")]
    EmptySample,
    #[error("UNKNOWN_SUITE: {0}")]
    UnknownSuite(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
