use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("A not invertible")]
    SingularDiffusion,
    #[error("zero matrix has no antieigenvalue")]
    ZeroMatrix,
    #[error("eigensolver failed: {0}")]
    Eigensolve(String),
    #[error("matrix is not skew-symmetric (max |S + S^T| = {0:e})")]
    NotSkew(f64),
    #[error("not simultaneously diagonalizable")]
    NotSimultaneouslyDiagonalizable,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("internal residual {residual:e} exceeds tolerance for {what}")]
    Residual { what: String, residual: f64 },
    #[error("orbit degenerate (Gram condition {0:e})")]
    OrbitDegenerate(f64),
    #[error("step {step} at t = {t}: {reason}")]
    Step { step: usize, t: f64, reason: String },
    #[error("factorization breakdown at target {0}; retry with a perturbed target")]
    Factorization(String),
    #[error("below spectral bound: Re lambda + b0 = {0}")]
    BelowSpectralBound(f64),
    #[error("too few usable radial shells ({0}, need 10)")]
    TooFewShells(usize),
    #[error("ambiguous kernel: Ritz distance {distance:e} straddles tolerance {tol:e}; tighten solver settings")]
    AmbiguousKernel { distance: f64, tol: f64 },
    #[error("unknown initial condition kind '{0}'")]
    UnknownKind(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
