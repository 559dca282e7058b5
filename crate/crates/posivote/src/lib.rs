//! Positionality-weighted cumulative voting.
//!
//! Re-exports the engine ([`posivote_core`]) and the session service
//! ([`service`]), and hosts the `posivote` command line ([`cli`]).
//! The `examples/` directory has one runnable program per capability.

pub mod cli;

pub use posivote_core::*;
pub use posivote_service as service;
