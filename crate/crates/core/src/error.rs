use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown identifier `{given}`; supported identifiers: {supported}")]
    UnknownIdentifier { given: String, supported: String },

    #[error("Weyl group closure exceeded {cap} elements; the root data is malformed")]
    WeylClosureOverflow { cap: usize },

    #[error("simple roots are linearly dependent")]
    SingularSimpleRoots,

    #[error("the parameter set is empty")]
    EmptyParameterSet,

    #[error("parameter is not in the closed dominant chamber (min simple pairing {min_pairing:e})")]
    NotDominant { min_pairing: f64 },

    #[error("expected a real parameter, imaginary part has norm {im_norm:e}")]
    ComplexParameter { im_norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not in SL({n}, R): det = {det}")]
    NotUnimodular { n: usize, det: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("numerically singular element (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("vector lies outside the closed chamber (min root value {min_root:e})")]
    OutsideChamber { min_root: f64 },

    #[error("`{op}` is not supported for {what}")]
    Unsupported { op: &'static str, what: String },

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("no exponent convention passed the calibration checks: {0}")]
    Calibration(String),

    #[error("convex hull tests disagree for lambda={lambda:?}, mu={mu:?} (fast: {fast}, brute force: {brute})")]
    HullDisagreement {
        lambda: Vec<f64>,
        mu: Vec<f64>,
        fast: bool,
        brute: bool,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
