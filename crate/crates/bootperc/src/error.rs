use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {0} appears more than once")]
    DuplicateVertex(u32),
    #[error("expected {expected} vertices, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("vertex {vertex} out of range for n = {n}")]
    OutOfRange { vertex: u32, n: u32 },
    #[error("instance exceeds desk-scale cap: {0}")]
    TooLarge(String),
    #[error("k and r must both be at least 2")]
    BadArity,
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("invalid (eps, delta) pairing: {0}")]
    BadPairing(String),
    #[error("chi below mu/(1-mu)")]
    BadChi,
    #[error("offspring mean must satisfy 0 < mu < 1")]
    BadMu,
    #[error("increment list is empty")]
    EmptyIncrements,
    #[error("verbose trace data missing")]
    MissingTrace,
}

pub type Result<T> = std::result::Result<T, Error>;
