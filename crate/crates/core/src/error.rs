//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by model assembly, orthant evaluation, moment assembly,
/// estimation and simulation.
#[derive(Error, Debug)]
pub enum Error {
    /// Scenario construction or validation failed.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Source index outside `0..D`.
    #[error("source index {index} out of range for D = {count}")]
    SourceIndexOutOfRange { index: usize, count: usize },

    /// Power parameters must lie in the positive orthant.
    #[error("power levels must be strictly positive and finite")]
    NonPositivePower,

    /// A pairwise correlation left `[-1, 1]`.
    #[error("correlation {value} outside [-1, 1]")]
    CorrelationOutOfRange { value: f64 },

    /// A correlation matrix failed the positive-semidefiniteness check.
    #[error("correlation matrix not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    IndefiniteCorrelation { min_eig: f64 },

    /// Adaptive quadrature hit its evaluation cap before reaching tolerance.
    #[error(
        "quadrature did not reach tolerance {tol:.1e} within {budget} evaluations \
         (error estimate {err:.3e})"
    )]
    QuadratureBudget { tol: f64, budget: usize, err: f64 },

    /// A fourth-moment evaluation failed; identifies the offending index set.
    #[error("fourth moment failed for index set ({i}, {j}, {k}, {l}): {source}")]
    FourthMoment {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        #[source]
        source: Box<Error>,
    },

    /// `|[Sigma_y]_ij|` reached the arcsine-derivative clamp; with positive
    /// noise power this indicates a degenerate model, not a rounding issue.
    #[error("correlation magnitude {value} at pair ({i}, {j}) reached the derivative clamp")]
    ClampActivated { i: usize, j: usize, value: f64 },

    /// Symmetric factorization failed (after the one permitted ridge retry).
    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    /// The Fisher matrix is singular at the given iterate.
    #[error("Fisher matrix singular at theta = {theta:?}")]
    SingularFisher { theta: Vec<f64> },

    /// Binary data contained an entry other than -1 or +1.
    #[error("window entries must be -1 or +1")]
    NonBinaryData,

    /// Catch-all for argument validation.
    #[error("{0}")]
    InvalidInput(String),

    /// More than 1% of Monte-Carlo trials failed; the report is invalid.
    #[error("{failed} of {total} Monte-Carlo trials failed; report invalid")]
    TooManyTrialFailures { failed: usize, total: usize },

    /// Moment-table cache file is malformed or inconsistent.
    #[error("moment table cache: {0}")]
    MomentCache(String),

    /// I/O failure while reading or writing a cache file.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
