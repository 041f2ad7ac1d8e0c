use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("enumeration bound exceeded: {what} requires {lo} <= n <= {hi}, got n = {n}")]
    Bound {
        what: &'static str,
        n: usize,
        lo: usize,
        hi: usize,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("term is not admissible under {map}: {detail}")]
    Inadmissible { map: &'static str, detail: String },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("{file}:{line}: {message}")]
    Input {
        file: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn check_bound(what: &'static str, n: usize, lo: usize, hi: usize) -> Result<()> {
    if n < lo || n > hi {
        return Err(Error::Bound { what, n, lo, hi });
    }
    Ok(())
}
