use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("direction is not a unit vector (|u| = {0})")]
    NonUnitDirection(f64),

    #[error("singular pair: |x - y| = {0:e} is below the kernel guard")]
    SingularPoint(f64),

    #[error("evaluation point lies outside the integration ball B_R")]
    OutsideBall,

    #[error("evaluation point ({0}, {1}, {2}) is not inside the domain")]
    OutsideDomain(f64, f64, f64),

    #[error("evaluation point is too close to the boundary (distance {0:e})")]
    NearBoundary(f64),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("field `{0}` has no analytic divergence")]
    MissingDivergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
