//! Hierarchical negative sampling for conversational memory retrieval.
//!
//! The crate covers the whole pipeline: persona-grounded dialogue synthesis
//! through a chat-completion provider ([`llmgen`]), easy/medium/hard negative
//! pools and training triplets ([`hns`]), a feature-hashed linear encoder
//! ([`embed`]) trained with InfoNCE ([`train`]), and retrieval evaluation
//! with an ablation harness ([`evalx`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod corpus;
pub mod embed;
pub mod evalx;
pub mod hns;
pub mod llmgen;
pub mod scalar;
pub mod seed;
pub mod text;
pub mod train;

pub use scalar::Scalar;

/// Encoder with 64-bit weights, the default precision.
pub type Encoder = embed::EncoderParams<f64>;
/// Encoder with 32-bit weights.
pub type EncoderF32 = embed::EncoderParams<f32>;
