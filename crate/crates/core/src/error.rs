use std::path::PathBuf;

/// Errors produced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold edge ({0}, {1}) is shared by {2} triangles")]
    NonManifoldEdge(usize, usize, usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0} unknowns exceed the dense assembly cap of {1}")]
    DenseCapExceeded(usize, usize),

    #[error("ACA did not converge on a {rows}x{cols} far block within rank {rank}")]
    AcaNotConverged { rows: usize, cols: usize, rank: usize },

    #[error("singular pivot block at leaf {leaf}")]
    SingularPivot { leaf: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
