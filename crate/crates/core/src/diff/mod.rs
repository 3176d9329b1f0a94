//! Dense small-tensor arithmetic with recorded reverse-mode differentiation.
//!
//! A [`Tape`] records every operation of a forward computation; calling
//! [`Tape::backward`] on a scalar root walks the record once in reverse and
//! accumulates gradients into the [`ParameterStore`] leaves that participated.
//! One tape is built per training sample and dropped afterwards; parameters
//! persist across tapes in the store.

mod nn;
mod store;
mod tape;

pub use nn::{Linear, Mlp};
pub use store::{Group, ParamId, ParameterStore, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, DEFAULT_LEARNING_RATE};
pub use tape::{Aggregator, NodeId, Tape};

/// Scalar type used by all numeric code. 64-bit by default; the `f32`
/// build option trades gradient-check headroom for speed and memory.
#[cfg(not(feature = "f32"))]
pub type Real = f64;
#[cfg(feature = "f32")]
pub type Real = f32;

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("dimension mismatch in aggregate: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input to {0}")]
    EmptyInput(&'static str),
    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),
    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("no gradients populated for group {0:?}")]
    MissingGradients(Group),
}
