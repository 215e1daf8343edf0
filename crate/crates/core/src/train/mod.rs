//! Contrastive training of the encoder.

mod gradient;
mod loss;
mod schedule;
mod trainer;

pub use gradient::*;
pub use loss::*;
pub use schedule::*;
pub use trainer::*;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("InfoNCE needs at least one negative")]
    NoNegatives,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite loss at step {step} (triplet {qid})")]
    NonFinite { step: usize, qid: String },
    #[error(transparent)]
    Checkpoint(#[from] crate::embed::EmbedError),
}
