use crate::lattice::BaseSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("base set {0} has zero mass")]
    ZeroMassBaseSet(BaseSet),
    #[error("base family is empty")]
    EmptyBase,
    #[error("zero mass")]
    ZeroMass,
    #[error("exponent {name} = {value} out of range")]
    ExponentOutOfRange { name: &'static str, value: f64 },
    #[error("overflow in {0}; rescale the input")]
    OverflowGuard(&'static str),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("incompatible base: {0}")]
    IncompatibleBase(String),
    #[error("incompatible oscillation spec: {0}")]
    IncompatibleSpec(String),
    #[error("series did not converge after {0} terms")]
    NonConvergence(usize),
    #[error("input is identically zero")]
    ZeroInput,
    #[error("set {0} is not dyadic")]
    NotDyadic(BaseSet),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("sequence has no nonzero coefficients")]
    EmptySequence,
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("every corpus entry is degenerate")]
    AllDegenerate,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
