use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate tetrahedron {tet} (signed volume {volume:e})")]
    DegenerateTet { tet: usize, volume: f64 },

    #[error("face {face} has normal {normal:?} that matches no cub6 face class")]
    UnclassifiableFace { face: usize, normal: [f64; 3] },

    #[error("point {point:?} lies outside tetrahedron {tet}")]
    PointOutsideTet { tet: usize, point: [f64; 3] },

    #[error("matrix is {kind} singular at pivot {pivot}")]
    Singular { kind: &'static str, pivot: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("GMRES breakdown at iteration {iteration}")]
    Breakdown { iteration: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
