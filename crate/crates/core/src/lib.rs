//! Fock-basis simulation of a dissipative phonon time crystal in a pair of
//! trapped ions.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the whole numerical
//! pipeline: laser parameters are turned into effective gain and two-phonon
//! damping rates by adiabatic elimination ([`params`], [`adiabatic`]), the
//! resulting phonon master equation is integrated in a truncated Fock space
//! ([`master_eq`]), the mean-field Van der Pol limit is integrated alongside
//! ([`classical`]), and the usual observables are extracted
//! ([`observables`]). File formats, the CLI and parallel sweeps live in the
//! companion `phonon-tc` crate.
//!
//! Units: every rate is an angular rate in rad/ms and every time is in ms.
//! Configuration surfaces quote ordinary frequencies in kHz; see [`units`].

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adiabatic;
pub mod analysis;
pub mod classical;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod master_eq;
pub mod observables;
pub mod ode;
pub mod params;
pub mod presets;
pub mod units;
pub mod warning;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, FockSpace};
pub use linalg::{CMatrix, Operator, C64};
pub use warning::{Warned, Warning};
