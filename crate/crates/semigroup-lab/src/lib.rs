//! Command-line laboratory over the semigroup core: extract generator
//! bundles from model files, evolve states, unravel the jump process,
//! answer counting questions, run the which-way interferometer, and
//! validate the whole invariant battery.
//!
//! The library exposes the entry point [`run_cli`] so integration tests
//! drive the exact code path the binary runs.

pub mod checks;
pub mod cli;
pub mod commands;
pub mod error;
pub mod io;

pub use cli::run_cli;
pub use error::LabError;
