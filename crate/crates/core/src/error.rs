use thiserror::Error;

/// Errors raised by the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("state matrix is not asymptotically stable (spectral abscissa {abscissa:e})")]
    NotStable { abscissa: f64 },

    #[error("Sylvester operator is singular: spectra of A and -B overlap")]
    SingularPencil,

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e}, admissible down to {threshold:e})")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("breakpoint t={breakpoint} is not a multiple of the grid step {step}")]
    GridMisaligned { breakpoint: f64, step: f64 },

    #[error("input does not vanish after its last breakpoint and is not square integrable")]
    Unbounded,

    #[error("reduced order {requested} exceeds the numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("projection matrices are not biorthogonal (||W^T V - I||_F = {defect:e})")]
    NotBiorthogonal { defect: f64 },

    #[error("-alpha = {alpha:e} is numerically an eigenvalue of the reduced state matrix")]
    AlphaResonance { alpha: f64 },

    #[error("initial-value basis X0 is zero")]
    ZeroX0,

    #[error("initial-value coefficient z0 is zero")]
    ZeroZ0,

    #[error("system dimension {actual} is below the required {required}")]
    DimensionTooSmall { required: usize, actual: usize },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
