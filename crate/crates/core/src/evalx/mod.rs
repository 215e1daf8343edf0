//! Retrieval evaluation and the negative-composition ablation harness.

mod ablation;
mod evaluate;
mod metrics;
mod store;

pub use ablation::*;
pub use evaluate::*;
pub use metrics::*;
pub use store::*;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("memory store is empty")]
    EmptyStore,
    #[error("duplicate memory entry {0}")]
    DuplicateEntry(String),
    #[error("query {0} has no evidence")]
    EmptyEvidence(String),
    #[error("unknown ablation config {0:?} (expected one of H, HE, HM, EMH)")]
    UnknownAblation(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Sampling(#[from] crate::hns::HnsError),
    #[error(transparent)]
    Training(#[from] crate::train::TrainError),
}
