//! Non-fatal diagnostics.
//!
//! The core crate has no logger. Functions that can succeed with a caveat
//! (truncation tails, out-of-range trap frequencies) return [`Warned`] and the
//! caller decides whether to print, record or ignore the warnings.

use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Coherent amplitude large compared with the cutoff.
    CoherentTruncation { abs2_alpha: f64, cutoff: usize, tail_mass: f64 },
    /// Thermal distribution mass beyond the cutoff, before renormalisation.
    ThermalTail { n_bar0: f64, cutoff: usize, tail_mass: f64 },
    /// Trap frequency outside the accessible interval [0.1, 10] MHz.
    TrapFrequencyRange { nu_mhz: f64 },
    /// Husimi grid boundary carries non-negligible weight.
    HusimiBoundary { boundary_max: f64, global_max: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::CoherentTruncation { abs2_alpha, cutoff, tail_mass } => write!(
                f,
                "coherent state |α|² = {abs2_alpha} with cutoff {cutoff}: truncated tail mass {tail_mass:e}"
            ),
            Warning::ThermalTail { n_bar0, cutoff, tail_mass } => write!(
                f,
                "thermal state n̄₀ = {n_bar0} with cutoff {cutoff}: truncated tail mass {tail_mass:e}"
            ),
            Warning::TrapFrequencyRange { nu_mhz } => {
                write!(f, "trap frequency {nu_mhz} MHz outside [0.1, 10] MHz")
            }
            Warning::HusimiBoundary { boundary_max, global_max } => write!(
                f,
                "Husimi grid boundary value {boundary_max:e} exceeds 1e-4 of the maximum {global_max:e}"
            ),
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Clone, Debug)]
pub struct Warned<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Warned<T> {
    pub fn clean(value: T) -> Self {
        Self { value, warnings: Vec::new() }
    }

    pub fn with(value: T, warnings: Vec<Warning>) -> Self {
        Self { value, warnings }
    }

    pub fn into_inner(self) -> T {
        self.value
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Warned<U> {
        Warned { value: f(self.value), warnings: self.warnings }
    }
}
