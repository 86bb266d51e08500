use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),

    #[error("grid of {grid} points aliases a series of order {order} (need at least {required})")]
    Aliasing {
        grid: usize,
        order: usize,
        required: usize,
    },

    #[error("weight is not positive: minimum sample {min:e}")]
    NonPositiveWeight { min: f64 },

    #[error("coefficients are not Hermitian: asymmetry {asymmetry:e}")]
    NonRealWeight { asymmetry: f64 },

    #[error("function not resolved on grids up to {max_grid} points (tail {tail:e})")]
    BandwidthExceeded { max_grid: usize, tail: f64 },

    #[error("mean of the integrand is {mean}, expected 1")]
    MeanNotOne { mean: f64 },

    #[error("weight is not normalized: mean of 1/a is {mean}")]
    NotNormalized { mean: f64 },

    #[error("matrix has eigenvalue {value:e} below the semidefinite floor")]
    NegativeEigenvalue { value: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolverFailure(String),

    #[error("estimator did not converge: gap {gap:e} for value {value:e}")]
    EstimatorDivergence { value: f64, gap: f64 },

    #[error("zeta function has a pole at 1")]
    PoleAtOne,

    #[error("argument {0} is outside the supported range")]
    UnsupportedArgument(f64),

    #[error("index tuple does not sum to zero (sum {0})")]
    NonZeroSum(i64),

    #[error("lattice sum needs {needed} tuple evaluations, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("no witness mode with positive Rayleigh defect up to n = {searched}")]
    NoWitness { searched: usize },

    #[error("map derivative vanishes on the boundary (min |Phi'| = {min:e})")]
    VanishingDerivative { min: f64 },

    #[error("invalid Moebius parameter |w| = {0} (must be < 1)")]
    InvalidMoebius(f64),

    #[error("unknown gallery entry `{0}`")]
    UnknownGallery(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
