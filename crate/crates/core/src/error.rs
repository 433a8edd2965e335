use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which density-matrix invariant was violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    Trace,
    Hermiticity,
    Positivity,
    Purity,
    Finite,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::Trace => "trace",
            Invariant::Hermiticity => "hermiticity",
            Invariant::Positivity => "positivity",
            Invariant::Purity => "purity",
            Invariant::Finite => "finiteness",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Fock cutoff below 2.
    InvalidCutoff(usize),
    /// Fock index outside `0..dim`.
    IndexOutOfRange { index: usize, dim: usize },
    /// Operands with incompatible dimensions.
    DimensionMismatch { expected: usize, found: usize },
    /// A scalar argument outside its domain.
    Domain(String),
    /// Lamb-Dicke series evaluated where n̄η² ≥ 1.
    DivergentSeries { n_bar: f64, eta: f64 },
    /// The excited block of H_NH has no usable inverse.
    SingularRestriction { smallest: f64, largest: f64 },
    /// A partitioned model violates its block structure.
    InvalidPartition(String),
    /// Matrix rejected as a density matrix.
    NotADensityMatrix { invariant: Invariant, value: f64, tolerance: f64 },
    /// Invariant budget exceeded during time integration.
    InvariantBreach { time: f64, invariant: Invariant, value: f64, budget: f64 },
    /// Adaptive step size fell below the floor.
    StepSizeUnderflow { time: f64, step: f64 },
    /// Step budget exhausted before reaching the target time.
    TooManySteps { time: f64, steps: usize },
    /// Time grid not strictly increasing or empty.
    InvalidTimeGrid,
    /// Regime classification reached neither criterion within the horizon.
    Indeterminate { horizon: f64 },
    /// Preset lookup failed.
    UnknownPreset { name: String, valid: &'static [&'static str] },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidCutoff(d) => write!(f, "Fock cutoff must be at least 2, got {d}"),
            Error::IndexOutOfRange { index, dim } => {
                write!(f, "index {index} out of range for dimension {dim}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DivergentSeries { n_bar, eta } => write!(
                f,
                "Lamb-Dicke series outside its convergence guard: n̄η² = {} ≥ 1 (n̄ = {n_bar}, η = {eta})",
                n_bar * eta * eta
            ),
            Error::SingularRestriction { smallest, largest } => write!(
                f,
                "excited-block restriction is singular: smallest singular value {smallest:e} vs largest {largest:e}"
            ),
            Error::InvalidPartition(msg) => write!(f, "invalid partitioned model: {msg}"),
            Error::NotADensityMatrix { invariant, value, tolerance } => write!(
                f,
                "not a density matrix: {invariant} violation {value:e} exceeds tolerance {tolerance:e}"
            ),
            Error::InvariantBreach { time, invariant, value, budget } => write!(
                f,
                "{invariant} invariant breached at t = {time} ms: {value:e} beyond budget {budget:e}"
            ),
            Error::StepSizeUnderflow { time, step } => {
                write!(f, "step size underflow at t = {time} ms (h = {step:e})")
            }
            Error::TooManySteps { time, steps } => {
                write!(f, "step budget of {steps} exhausted at t = {time} ms")
            }
            Error::InvalidTimeGrid => f.write_str("time grid must be non-empty and strictly increasing"),
            Error::Indeterminate { horizon } => write!(
                f,
                "regime indeterminate after a horizon of {horizon} ms; retry with a longer horizon"
            ),
            Error::UnknownPreset { name, valid } => {
                write!(f, "unknown preset `{name}`; valid presets: {}", valid.join(", "))
            }
        }
    }
}

impl core::error::Error for Error {}
