use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical core. Offending values are reported as
/// `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix shape: {0}")]
    Shape(String),

    #[error("{func} is undefined at {value}")]
    Domain { func: String, value: f64 },

    #[error("operator is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("negative power {power} of a singular operator (eigenvalue {eigenvalue:e})")]
    SingularPower { power: f64, eigenvalue: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("objective evaluation failed at {point:?}: {source}")]
    Evaluation {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("spectrum of axis {axis} operator {index} leaves [{lo}, {hi}] (eigenvalue {eigenvalue})")]
    SpectrumOutsideBox {
        axis: usize,
        index: usize,
        lo: f64,
        hi: f64,
        eigenvalue: f64,
    },

    #[error("affine envelope violated at {violations} grid nodes (worst gap {worst_gap:e})")]
    EnvelopeViolated { violations: usize, worst_gap: f64 },

    #[error("g changes sign on the box (range [{min}, {max}])")]
    SignChange { min: f64, max: f64 },

    #[error("g must be strictly positive on the box (minimum {min})")]
    NotPositive { min: f64 },

    #[error("gradient magnitude vanishes on the box (minimum {min:e})")]
    VanishingGradient { min: f64 },

    #[error("invalid Sobolev exponents: {0}")]
    InvalidExponents(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn at_point<T: crate::Real>(self, point: &[T]) -> Self {
        match self {
            e @ Error::Evaluation { .. } => e,
            e => Error::Evaluation {
                point: point.iter().map(|x| x.as_f64()).collect(),
                source: Box::new(e),
            },
        }
    }
}
