use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("picard iteration did not converge on [{start}, {end}] after {iterations} iterations (last distance {distance:e})")]
    Iteration {
        start: f64,
        end: f64,
        iterations: usize,
        distance: f64,
    },
    #[error("degenerate flow: {0}")]
    Degenerate(String),
    #[error("path generation failed: {0}")]
    Generation(String),
    #[error("{failed} of {total} ensemble members failed: {first}")]
    Ensemble { failed: usize, total: usize, first: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
