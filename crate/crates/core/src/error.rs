//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AcError>;

#[derive(Debug, Error)]
pub enum AcError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("empty distance source")]
    EmptyDistanceSource,

    #[error("inconsistent side declaration: {0}")]
    InconsistentSide(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("quadrature did not converge (achieved {achieved:.3e}, requested {requested:.3e})")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("epsilon must be positive (got {0})")]
    NonPositiveEps(f64),

    #[error("not a critical point; identity not applicable (residual {residual:.3e} > {tol:.3e})")]
    NotCritical { residual: f64, tol: f64 },

    #[error("ball of radius {0} exceeds the injectivity radius of the torus")]
    BallTooLarge(f64),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),

    #[error("saddle not certified: {0}")]
    SaddleNotCertified(String),

    #[error("degenerate critical point: converged to the constant {0}")]
    DegenerateCriticalPoint(f64),

    #[error("all candidate paths degenerate")]
    AllPathsDegenerate,

    #[error("eigensolver did not converge: best residuals {0:?}")]
    EigenNonConvergence(Vec<f64>),

    #[error("empty subdomain mask")]
    EmptyMask,

    #[error("cap precondition violated: endpoint slice distance changes sign")]
    CapPrecondition,

    #[error("empty level set: level {level} outside field range [{min}, {max}]")]
    EmptyLevelSet { level: f64, min: f64, max: f64 },

    #[error("degenerate level split: side volume {0:.3e} below threshold")]
    DegenerateLevelSplit(f64),

    #[error("path too coarse: node averages jump by {0:.3} across zero")]
    PathTooCoarse(f64),

    #[error("discrete sweepout clause {clause} failed: lhs {lhs:.6e} vs rhs {rhs:.6e}")]
    SweepoutClauseFailed {
        clause: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {file} line {line}: {message}")]
    ParseFormat {
        file: String,
        line: usize,
        message: String,
    },

    #[error("missing files: {0:?}")]
    MissingFiles(Vec<String>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
