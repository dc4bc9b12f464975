use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid rational literal {0:?}")]
    ParseRational(String),

    #[error("points span an affine space of dimension {rank} inside R^{dim}")]
    DegenerateSpan { rank: usize, dim: usize },

    #[error("the origin is not an interior point of the polytope")]
    OriginNotInterior,

    #[error("configuration is not centered at the origin")]
    NotCentered,

    #[error("configuration is not admissible")]
    NotAdmissible,

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("point is not in the Siegel set (support {support:?})")]
    NotInSiegelSet { support: Vec<usize> },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}, p = {p})")]
    NonConvergence {
        p: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("face {0:?} is not in the complex")]
    FaceNotInComplex(Vec<usize>),

    #[error("map is not a bijection of [m]")]
    NotABijection,

    #[error("map is not a simplicial isomorphism")]
    NotAnIsomorphism,

    #[error("boundary complex of the polytope does not match K_A")]
    BoundaryMismatch,

    #[error("inconsistent linear system (relative residual {0:e})")]
    Inconsistent(f64),

    #[error("ground set of size {0} exceeds the supported limit of 64")]
    TooLarge(usize),

    #[error("point lies off the requested stratum (distance {0:e})")]
    OffStratum(f64),

    #[error("unknown suite {0:?}")]
    UnknownSuite(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
