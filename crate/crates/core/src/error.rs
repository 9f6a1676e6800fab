use thiserror::Error;

/// Errors raised by the numerical kernels and the bound checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series range exceeded: argument {0} is beyond the supported range")]
    SeriesRange(f64),

    #[error("maximal function did not converge after {levels} refinement levels (best estimate {estimate:e}, last change {change:e})")]
    MaximalNotConverged { levels: usize, estimate: f64, change: f64 },

    #[error("step refinement exhausted after {levels} levels (defect {defect:e} per unit time)")]
    RefinementExhausted { levels: usize, defect: f64 },

    #[error("potential is not Hermitian at t = {t}: defect {defect:e}")]
    NonHermitian { t: f64, defect: f64 },

    #[error("evolution at Im k = {0} < 0 requires explicit opt-in")]
    GrowingFlow(f64),

    #[error("fixed-point iteration does not contract (ratio {ratio:.3}); increase Im k")]
    NonContracting { ratio: f64 },

    #[error("underflow in rescaled determinant flow at y = {0}")]
    Underflow(f64),

    #[error("point z = {0} is not on the unit circle")]
    NotUnimodular(f64),

    #[error("potential must have zero mean (mode 0 present)")]
    NonZeroMean,

    #[error("exponential series did not converge: tail {tail:e} after {terms} terms")]
    SeriesNotConverged { terms: usize, tail: f64 },

    #[error("gap condition violated: lambda_{i} = lambda_{j}")]
    GapViolated { i: usize, j: usize },

    #[error("wrong multiplicity pattern around index {0}")]
    Multiplicity(usize),

    #[error("truncation too small: sensitivity {sensitivity:e} exceeds {limit:e}; increase N_max")]
    Truncation { sensitivity: f64, limit: f64 },

    #[error("degenerate frequency k = 0")]
    DegenerateFrequency,

    #[error("expansion overflow: |Q| = {0} exceeds 30")]
    ExpansionOverflow(f64),

    #[error("exponential overflow: log-norm {0} too large")]
    ExpOverflow(f64),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
