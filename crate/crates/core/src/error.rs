use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate channel: column {column} has residual norm {norm:e}")]
    DegenerateChannel { column: usize, norm: f64 },

    #[error("paired-column structure violated: |r[k][k+1]| = {0:e}")]
    ZeroStructure(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("exhaustive search over {0} points exceeds the enumeration limit")]
    Capacity(u128),
}
