//! Hierarchical negative sampling.
//!
//! For a query with evidence set V, target person P and topic τ, the three
//! tiers are
//!
//! * hard: same conversation, not in V, topic τ, speaker ≠ P (at most 2|V|),
//! * medium: same conversation, not in V, not in the sampled hard set
//!   (at most |V|),
//! * easy: any message of another conversation in the same batch
//!   (at most |V|).
//!
//! Each (query, positive) pair then draws a fixed budget from the pool
//! according to a [`RatioSpec`].

mod batch;
mod dataset;
mod draw;
mod pool;
mod ratio;
mod triplets;

pub use batch::*;
pub use dataset::*;
pub use draw::*;
pub use pool::*;
pub use ratio::*;
pub use triplets::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HnsError {
    #[error("invalid ratio spec: {0}")]
    InvalidRatio(String),
    #[error("no negatives available for {0}")]
    NoNegatives(String),
    #[error("query {0} has no evidence")]
    EmptyEvidence(String),
    #[error("unknown message {0}")]
    UnknownMessage(String),
    #[error("no conversation {0}")]
    MissingConversation(String),
    #[error("no topic clustering for {0}")]
    MissingTopics(String),
    #[error("{qid}: inputs disagree ({detail})")]
    Mismatch { qid: String, detail: String },
}
