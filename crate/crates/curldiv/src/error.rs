use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree must be between 1 and 8, got {0}")]
    DegreeOutOfRange(usize),

    #[error("derivative order {order} not supported for degree {degree}")]
    DerivativeOrder { degree: usize, order: usize },

    #[error("quadrature point count must be between 1 and 32, got {0}")]
    QuadratureOrder(usize),

    #[error("basis index {index} out of range, space has {count} functions")]
    BasisIndex { index: usize, count: usize },

    #[error("evaluation point {0} outside [0, 1]")]
    PointOutOfDomain(f64),

    #[error("degree {p} needs at least {min} mesh intervals, got n = {n}")]
    MeshTooCoarse { p: usize, n: usize, min: usize },

    #[error("spatial dimension must be 2 or 3, got {0}")]
    BadDimension(usize),

    #[error("coefficients must be positive, got alpha = {alpha}, beta = {beta}")]
    NonPositiveCoefficients { alpha: f64, beta: f64 },

    #[error("mesh anisotropy entries must be positive and finite")]
    BadAnisotropy,

    #[error("vector length {got} does not match operator size {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("dense export of size {size} exceeds the {guard} entry-per-side guard")]
    DenseTooLarge { size: usize, guard: usize },

    #[error("half-bandwidth {w} does not fit a matrix of size {m}")]
    BandTooWide { m: usize, w: usize },

    #[error("zero pivot at elimination step {0} of a banded factorization")]
    SingularBand(usize),

    #[error("singular matrix at elimination step {0}")]
    SingularDense(usize),

    #[error("matrix is not symmetric: |a({i},{j}) - a({j},{i})| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("eigenvalue iteration failed to converge at index {0}")]
    EigenNoConvergence(usize),

    #[error(
        "grid size m = {m} per direction is not 2^k - 1 (k >= 2); \
         nearest admissible n for degree {p} are {lo} and {hi}"
    )]
    NotCoarsenable { m: usize, p: usize, lo: usize, hi: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
