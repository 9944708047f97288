use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("gram matrix is not symmetric")]
    NotSymmetric,

    #[error("gram matrix is not positive definite (leading minor {index} = {minor:e})")]
    NotPositiveDefinite { index: usize, minor: f64 },

    #[error("sphere block {block} is zero; radial projection undefined")]
    ZeroSphereBlock { block: usize },

    #[error("point is off the manifold: constraint residual {residual:e} exceeds {tol:e}")]
    OffManifold { residual: f64, tol: f64 },

    #[error("point belongs to manifold `{found}`, expected `{expected}`")]
    ManifoldMismatch { expected: String, found: String },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("integrator failure at t = {t}: step size {step:e} underflowed")]
    IntegratorFailure { t: f64, step: f64 },

    #[error(
        "quotient solve did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("quotient solution norm {norm} exceeds trust radius {radius}")]
    TrustRegion { norm: f64, radius: f64 },

    #[error("factorization exceeded the step budget of {steps}")]
    StepBudget { steps: usize },

    #[error("frame is rank deficient (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },

    #[error("vector is not tangent: normal residual {residual:e}")]
    NotTangent { residual: f64 },

    #[error("matrix is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error("matrix is not orthogonal: residual {residual:e}")]
    NotOrthogonal { residual: f64 },

    #[error("orientation-reversing matrix (det = {det})")]
    OrientationReversing { det: f64 },

    #[error("candidate pair is not a morphism: residual {residual:e}")]
    NotMorphism { residual: f64 },

    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
