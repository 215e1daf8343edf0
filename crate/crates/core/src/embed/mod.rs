//! Feature-hashed linear text encoder.

mod encoder;
mod features;

pub use encoder::*;
pub use features::*;
