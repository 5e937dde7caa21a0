use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dilation exponents: {0}")]
    InvalidDilation(String),
    #[error("fields are not homogeneous of degree 1: {0}")]
    NotHomogeneous(String),
    #[error("lie closure did not stabilise within depth {0}")]
    ClosureDepthExceeded(usize),
    #[error("hormander rank condition fails at {point:?}: rank {rank} < {n}")]
    RankDeficient { point: Vec<f64>, rank: usize, n: usize },
    #[error("invalid catalog entry: {0}")]
    InvalidCatalog(String),
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("point outside domain: {0:?}")]
    OutOfDomain(Vec<f64>),
    #[error("unreachable point: {0:?}")]
    Unreachable(Vec<f64>),
    #[error("ball clipped by the domain boundary (center {center:?}, radius {radius})")]
    Clipped { center: Vec<f64>, radius: f64 },
    #[error("no lift available for system '{0}'")]
    NoLift(String),
    #[error("lift verification failed: {0}")]
    LiftInvalid(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("ellipticity violated: {0}")]
    Ellipticity(String),
    #[error("no closed-form fundamental solution for this lift")]
    NoFundamentalSolution,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("grid margin exhausted: {0}")]
    MarginExhausted(String),
    #[error("compute budget exceeded: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
