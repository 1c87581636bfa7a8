use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("no guided mode in the admissible propagation-constant bracket")]
    NoGuidedMode,
    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(&'static str),
    #[error("effective potential for m = {m} has no trapping well")]
    NoWell { m: i64 },
    #[error("dispersion table has no entry for m = {m}")]
    MissingEntry { m: i64 },
    #[error("packet window [{m_min}, {m_max}] is not covered by the dispersion table")]
    WindowOutsideTable { m_min: i64, m_max: i64 },
    #[error("radial states do not share a common grid")]
    GridMismatch,
    #[error("trace sampled too coarsely: {0}")]
    InsufficientSampling(&'static str),
}
