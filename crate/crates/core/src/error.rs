//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {0} out of range (graph has {1} vertices)")]
    VertexOutOfRange(usize, usize),

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),

    #[error("edge {u}-{v} has non-positive weight {weight}")]
    NonPositiveWeight { u: usize, v: usize, weight: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("distribution sums to {0}, expected 1 within 1e-12")]
    NotNormalized(f64),

    #[error("negative probability {prob} at vertex {vertex}")]
    NegativeProbability { vertex: usize, prob: f64 },

    #[error("graph has total weight 0")]
    EmptyGraph,

    #[error("operation requires a non-empty marked set")]
    NoMarkedVertices,

    #[error("source vertex {0} has no path to the marked set")]
    DisconnectedSource(usize),

    #[error("flow violates conservation at vertex {vertex} (residual {residual:e})")]
    InvalidFlow { vertex: usize, residual: f64 },

    #[error("support of sigma is not contained in part A")]
    SupportOutsideA,

    #[error("graph carries no bipartition; double it first")]
    MissingPartition,

    #[error("state is not normalized (norm {0})")]
    UnnormalizedState(f64),

    #[error("precision {0} outside (0, pi]")]
    InvalidPrecision(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance needs {0} basis states, exceeding the limit of {1}")]
    ScaleExceeded(usize, usize),

    #[error("input is outside the declared domain")]
    InputOutsideDomain,

    #[error("no positive inputs provided")]
    NoPositiveInputs,

    #[error("input has no {0}-collision")]
    NoCollision(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
