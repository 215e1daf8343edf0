//! Data model, persistence and structural validation for every stage.

mod jsonl;
mod personas;
mod types;
mod validate;

pub use jsonl::*;
pub use personas::*;
pub use types::*;
pub use validate::*;
