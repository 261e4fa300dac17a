use thiserror::Error;

/// Every failure the library can report.
///
/// Numeric failures (solver, tuning, branch tracking) are ordinary values: a
/// raster or a hunt records them and moves on rather than aborting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("not in slice: h(passive)={passive:.6e} >= h(active)={active:.6e}")]
    NotInSlice { active: f64, passive: f64 },

    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("ill-conditioned jacobian (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("multiplier tuning failed: {0}")]
    TuneFailed(String),

    #[error("not a hyperbolic Cantor parameter: {0}")]
    NotHyperbolicCantor(String),

    #[error("power iteration did not converge, increase depth: {0}")]
    IncreaseDepth(String),

    #[error("no estimate: {0}")]
    NoEstimate(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
