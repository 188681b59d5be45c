use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("singular linear system: pivot {pivot:e} in column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate total density u = {0} (must be positive)")]
    DegenerateDensity(f64),

    #[error("mesh is not uniform (max/min element ratio {ratio})")]
    NonUniformMesh { ratio: f64 },

    #[error(
        "fixed-point iteration did not converge at t = {time} after {iterations} iterations \
         (last increment {residual:e})"
    )]
    NotConverged {
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("drift field does not vanish on the boundary: q({time}, {x}) = {value}")]
    DriftOnBoundary { time: f64, x: f64, value: f64 },

    #[error("fraction r left the admissible band at t = {time}: [{min}, {max}]")]
    FractionOutOfBand { time: f64, min: f64, max: f64 },

    #[error("integration blew up at t = {0}")]
    BlowUp(f64),
}
