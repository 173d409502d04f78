use thiserror::Error;

pub type Result<T> = std::result::Result<T, StiefelError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StiefelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not on the Stiefel manifold (residual {residual:.3e} > tolerance {tol:.3e})")]
    NotOnManifold { residual: f64, tol: f64 },

    #[error("matrix is not skew-symmetric (asymmetry {asymmetry:.3e})")]
    NotSkew { asymmetry: f64 },

    #[error("skew matrix has nonzero entries outside the selected rows (largest {magnitude:.3e})")]
    OutsideSubspace { magnitude: f64 },

    #[error("no full-rank row subset: smallest singular value {smallest:.3e} <= {tol:.3e}")]
    RankDeficient { smallest: f64, tol: f64 },

    #[error("expected {expected} skew coordinates, got {got}")]
    CoordinateCount { expected: usize, got: usize },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("direction is not tangent (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("linear system for the skew coordinates is singular; reselect the row set")]
    SingularSystem,

    #[error("{name} is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { name: String, asymmetry: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
