//! Command implementations behind the `geckit` binary. Kept as a
//! library so integration tests can drive the same code paths the CLI
//! uses.

pub mod mix;
pub mod pipeline;
pub mod score;
pub mod setup;
pub mod stats;
