use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids ({0})")]
    GridMismatch(&'static str),

    #[error("zero frequency is not admissible here")]
    ZeroFrequency,

    #[error(
        "anisotropic weight is singular at mode ({xi1}, {xi2}) which carries nonzero amplitude"
    )]
    SingularWeight { xi1: f64, xi2: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time mesh too coarse: {samples} samples (need at least {required})")]
    MeshTooCoarse { samples: usize, required: usize },

    #[error("snapshots are not uniformly spaced in time (step {index})")]
    NonUniformSpacing { index: usize },

    #[error("CFL violation at t = {t}: dt * max|u| * max|xi| = {number:.3e} > {limit}; try dt <= {suggested_dt:.3e}")]
    Cfl {
        t: f64,
        number: f64,
        limit: f64,
        suggested_dt: f64,
    },

    #[error("non-finite value detected in {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },

    #[error("RK4 oracle unstable: dt * max(eta xi1^2 + nu xi2^2) = {0:.3e} > 1")]
    OracleUnstable(f64),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("fit needs {required} positive samples inside the window, found {found}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("nonpositive value {value} at sample {index} in a logarithmic fit")]
    NonPositive { index: usize, value: f64 },

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema mismatch in column {column}: expected `{expected}`, found `{found}`")]
    Schema {
        column: usize,
        expected: String,
        found: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Errors a driver should report as numerical failures rather than
    /// configuration mistakes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cfl { .. } | Error::NonFinite { .. } | Error::OracleUnstable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
