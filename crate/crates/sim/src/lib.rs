//! Configuration, parameter sweeps, CSV output and the command line for the
//! hybrid Fredkin gate simulator built on `fredkin-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;

pub use error::{Result, SimError};
