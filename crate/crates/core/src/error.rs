use thiserror::Error;

/// Errors surfaced by the simulation and estimation pipeline.
#[derive(Debug, Error)]
pub enum ApcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pilot matrix is ill-conditioned: P P^H is not invertible (Q={q_len}, N_tx={n_tx})")]
    IllConditionedPilots { n_tx: usize, q_len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("estimation failed at trajectory point {point_index}: {source}")]
    AtPoint {
        point_index: usize,
        #[source]
        source: Box<ApcError>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ApcError>;
