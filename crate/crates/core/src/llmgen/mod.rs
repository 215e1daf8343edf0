//! Prompted generation of briefs, events, dialogues, topic clusters and
//! queries through a pluggable chat-completion provider.

mod generate;
pub mod mock;
mod parse;
mod provider;
pub mod synthesize;
mod templates;
pub mod wordbank;

pub use generate::*;
pub use mock::MockProvider;
pub use parse::*;
pub use provider::*;
pub use templates::*;
