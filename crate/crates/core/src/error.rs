use crate::solve::SolveReport;
use crate::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape parameters: {0}")]
    InvalidShape(String),

    #[error("point ({}, {}, {}) is within the medial-axis guard of the surface", .0.x, .0.y, .0.z)]
    MedialAxisPoint(Vec3),

    #[error("triangle {index} is degenerate (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("triangle {index} is oriented against the exact outward normal")]
    InvertedTriangle { index: usize },

    #[error("{} non-manifold or inconsistently oriented edge(s), first {:?}", .edges.len(), .edges.first())]
    NonManifoldEdge { edges: Vec<[usize; 2]> },

    #[error("cut surface topology is inconsistent: {0}")]
    InconsistentTopology(String),

    #[error("surface has no elements")]
    EmptySurface,

    #[error("operation not applicable: {0}")]
    NotApplicable(&'static str),

    #[error(
        "conjugate gradient did not converge: {} iterations, relative residual {:e}",
        .0.iterations,
        .0.relative_residual
    )]
    NoConvergence(SolveReport),

    #[error("matrix is numerically singular (pivot {pivot:e} at row {row})")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-positive input to {0}")]
    NonPositiveInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
