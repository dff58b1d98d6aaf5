use std::path::PathBuf;

/// Errors raised by the simulator, solvers and checks.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: &'static str, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("probabilities do not form a simplex (sum = {sum}, min = {min})")]
    NotASimplex { sum: f64, min: f64 },

    #[error("population fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),

    #[error("arm {arm} is not playable{}", agent.map(|a| format!(" by agent {a}")).unwrap_or_default())]
    InvalidArm { agent: Option<usize>, arm: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("custom reward does not declare {0}")]
    UndeclaredRewardProperty(&'static str),

    #[error("integration overshoot {overshoot:e} at t = {t}; reduce dt")]
    Unstable { t: f64, overshoot: f64 },

    #[error("trace is thinned (snapshot stride {0}); full snapshots are required")]
    ThinnedTrace(usize),

    #[error("exploration weight eta = 1 makes the cumulative state-change bound undefined")]
    FullExploration,

    #[error("mean-field equilibrium did not converge (residual {residual:e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
