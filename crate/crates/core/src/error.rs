use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { pos: usize, name: String },

    /// The worst-case diffusion coefficient is not bounded away from zero.
    #[error("problem is not coercive: a0 - |b0| sum |a_k| = {floor:.6e} at ({x}, {y})")]
    NonCoercive { floor: f64, x: f64, y: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("too many basis functions: {count} exceeds the cap {cap}")]
    BasisOverflow { count: usize, cap: usize },

    #[error("matrix is rank deficient (numerical rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sample solve failed at node {node:?}: {source}")]
    Sample {
        node: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid user input rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Syntax { .. }
                | Error::UnknownSymbol { .. }
                | Error::NonCoercive { .. }
                | Error::BasisOverflow { .. }
                | Error::Domain(_)
                | Error::DimensionMismatch(_)
        )
    }
}
