use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QfError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix not in GL2+: det = {det}")]
    NotInGroup { det: f64 },

    #[error("invalid section at (u={u}, t={t}): {reason}")]
    InvalidSection { u: f64, t: f64, reason: String },

    #[error("{what} did not converge (best residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("sharp transitivity violated: {candidates} candidate solutions for {what}")]
    SharpTransitivity { what: String, candidates: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("parameter violations: {}", .0.join("; "))]
    Violations(Vec<String>),

    #[error("inconsistent verdicts: {0}")]
    Inconsistent(String),

    #[error("malformed input: {0}")]
    Input(String),
}

pub type Result<T, E = QfError> = std::result::Result<T, E>;
