use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("retrieval build failed after {attempts} attempts (non-empty 2-core every time)")]
    BuildFailed { attempts: u32 },

    #[error("hypergraph has no segment layout")]
    MissingLayout,

    #[error("peel result carries no per-round trace")]
    NoRoundTrace,

    #[error("round {requested} out of range (peeling ran {rounds} rounds)")]
    RoundOutOfRange { requested: usize, rounds: usize },

    #[error("f has no positive fixed point for k={k}, c={c}")]
    NoFixedPoints { k: usize, c: f64 },

    #[error("could not decide between {lower} and {upper}")]
    Undecided { lower: f64, upper: f64 },

    #[error(transparent)]
    Format(#[from] crate::retrieval::FormatError),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
