use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {dim}")]
    UnsupportedDimension { dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid subsystem set: {0}")]
    InvalidSubsystems(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("not a projector (max deviation {deviation:.3e})")]
    NotProjector { deviation: f64 },

    #[error("pure state is not normalized (norm² = {norm_sqr})")]
    UnnormalizedState { norm_sqr: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("alpha = {alpha} violates α ≤ β canonical form")]
    NonCanonicalAlpha { alpha: f64 },

    #[error("populations sum to {trace}, expected 1")]
    TraceNotUnit { trace: f64 },

    #[error("negative entry {name} = {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("not positive semidefinite: {coherence}² = {squared} exceeds {bound}")]
    NotPositive {
        coherence: &'static str,
        squared: f64,
        bound: f64,
    },

    #[error("principal-subspace assumption violated: r11·r44 = {outer} ≤ r22·r33 = {inner}")]
    PrincipalSubspace { outer: f64, inner: f64 },

    #[error("non-canonical ordering: r11 = {r11} > r44 = {r44}")]
    NonCanonicalOrdering { r11: f64, r44: f64 },

    #[error("extraction impossible, zero ratio")]
    ExtractionImpossible,

    #[error("non-canonical ordering: extraction ratio {ratio} > 1")]
    RatioAboveOne { ratio: f64 },

    #[error("outcome probabilities sum to {total}, expected 1")]
    ProbabilityLeak { total: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
