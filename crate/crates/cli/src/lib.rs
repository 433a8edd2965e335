//! Standard-library companion to `phonon-tc-core`: run configuration,
//! parallel scenario execution, and the CSV/JSON output formats behind the
//! `phonon-tc` command.

pub mod config;
pub mod elimination;
pub mod failure;
pub mod formats;
pub mod runner;

pub use config::{Format, Overrides, RatesArg, RunConfig};
pub use failure::Failure;
pub use runner::{run, simulate_member, RunOutcome, RunSettings};
