use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside the domain of the formula: {0}")]
    Domain(String),

    #[error("amplitude |a| = {amplitude} exceeds the asymptotic cap {cap}")]
    AmplitudeCap { amplitude: f64, cap: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("eigenvalue iteration failed to converge (block {lo}..={hi} after {iterations} sweeps)")]
    EigenFailure { lo: usize, hi: usize, iterations: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no sign change in bracket: lower endpoint {lower}, upper endpoint {upper}")]
    NoSignChange { lower: String, upper: String },

    #[error("no unstable point found in the scanned range [{lo}, {hi}]")]
    NoUnstablePoint { lo: f64, hi: f64 },

    #[error("symmetry defect {defect:e} exceeds the allowed {allowed:e}")]
    SymmetryDefect { defect: f64, allowed: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::SingularJacobian { .. }
                | Error::EigenFailure { .. }
                | Error::NoSignChange { .. }
                | Error::NoUnstablePoint { .. }
                | Error::SymmetryDefect { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
