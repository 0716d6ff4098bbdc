use thiserror::Error;

/// Errors produced by the solvers and validators.
///
/// Newton and continuation failures are recoverable signals: callers such as
/// the continuation driver react to them by shrinking the step.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },
    #[error("newton stalled after {iterations} iterations (residual {residual:e})")]
    NewtonStalled { iterations: usize, residual: f64 },
    #[error("ellipticity lost at iteration {iteration} (min ellipticity {min_ellipticity:e})")]
    EllipticityLost { iteration: usize, min_ellipticity: f64 },
    #[error("continuation stalled at t = {t} (step {step:e})")]
    ContinuationStalled { t: f64, step: f64 },
    #[error("hypothesis violated at t = {t}: {detail}")]
    HypothesisViolated { t: f64, detail: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
