use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension must be positive")]
    EmptyDimension,

    #[error("empty operator list")]
    EmptyList,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (‖M − M†‖_max = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("trace is not 1 (got {re} + {im}i)")]
    InvalidTrace { re: f64, im: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("expectation value has imaginary part {im:e}; observable is not Hermitian")]
    ComplexExpectation { im: f64 },

    #[error("zero vector cannot be normalised")]
    ZeroKet,

    #[error("factor dimensions {dims:?} do not multiply to {dim}")]
    FactorDims { dims: Vec<usize>, dim: usize },

    #[error("state has no tensor-factor structure")]
    MissingFactorDims,

    #[error("invalid subsystem selection {keep:?} for {parties} parties")]
    InvalidSubsystems { keep: Vec<usize>, parties: usize },

    #[error("inverted or non-finite bounds: a_min = {a_min}, a_max = {a_max}")]
    InvertedBounds { a_min: f64, a_max: f64 },

    #[error("{side} bound {bound} violates the spectrum (eigenvalue {eigenvalue})")]
    InvalidBounds {
        side: BoundSide,
        bound: f64,
        eigenvalue: f64,
    },

    #[error("probability {value} lies outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("dilation is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("expected {expected} parties, found {found}")]
    PartyCount { expected: usize, found: usize },

    #[error("missing correlation probability for subset {mask:#b}")]
    MissingSubset { mask: usize },

    #[error("setting index {index} out of range ({available} settings)")]
    SettingIndex { index: usize, available: usize },

    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl std::fmt::Display for BoundSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundSide::Lower => f.write_str("lower"),
            BoundSide::Upper => f.write_str("upper"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
