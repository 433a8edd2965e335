//! Truncated Fock space, bosonic ladder operators and state constructors.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Invariant, Result};
use crate::linalg::{re, CMatrix, Operator, C64};
use crate::warning::{Warned, Warning};

/// Max entrywise |ρ − ρ†| accepted for a density matrix.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Max |Tr ρ − 1| accepted for a density matrix.
pub const TOL_TRACE: f64 = 1e-8;
/// Per-dimension negative eigenvalue allowance; the bound is `TOL_PSD_PER_DIM · d`.
pub const TOL_PSD_PER_DIM: f64 = 1e-8;
/// Tail mass above which truncated constructors warn.
pub const TAIL_WARN: f64 = 1e-6;

/// Span of |0⟩ … |d−1⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    cutoff: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        Ok(Self { cutoff })
    }

    pub fn dim(&self) -> usize {
        self.cutoff
    }
}

/// a, with a[n−1, n] = √n.
pub fn annihilation_op(space: FockSpace) -> Operator {
    let d = space.dim();
    Operator::from_triplets(d, (1..d).map(|n| (n - 1, n, re((n as f64).sqrt()))))
}

/// a†
pub fn creation_op(space: FockSpace) -> Operator {
    let d = space.dim();
    Operator::from_triplets(d, (1..d).map(|n| (n, n - 1, re((n as f64).sqrt()))))
}

/// a†a = diag(0, 1, …, d−1)
pub fn number_op(space: FockSpace) -> Operator {
    let d = space.dim();
    Operator::from_triplets(d, (1..d).map(|n| (n, n, re(n as f64))))
}

pub fn identity_op(space: FockSpace) -> Operator {
    Operator::identity(space.dim())
}

/// Tolerances used when accepting a matrix as a density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateTolerances {
    pub hermiticity: f64,
    pub trace: f64,
    /// Lowest eigenvalue allowed is `-psd_per_dim · d`.
    pub psd_per_dim: f64,
}

impl Default for StateTolerances {
    fn default() -> Self {
        Self { hermiticity: TOL_HERMITIAN, trace: TOL_TRACE, psd_per_dim: TOL_PSD_PER_DIM }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a truncated space.
///
/// Invariants are checked when the value is built and never again; the
/// matrix is immutable afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validate with the default tolerances.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &StateTolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &StateTolerances) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NotADensityMatrix { invariant: Invariant::Finite, value: f64::NAN, tolerance: 0.0 });
        }
        let herm = m.hermiticity_error();
        if herm > tol.hermiticity {
            return Err(Error::NotADensityMatrix {
                invariant: Invariant::Hermiticity,
                value: herm,
                tolerance: tol.hermiticity,
            });
        }
        let tr = m.trace();
        let drift = (tr - re(1.0)).norm();
        if drift > tol.trace {
            return Err(Error::NotADensityMatrix { invariant: Invariant::Trace, value: drift, tolerance: tol.trace });
        }
        let bound = tol.psd_per_dim * m.dim() as f64;
        if let Some(&lowest) = m.hermitian_eigenvalues().first() {
            if lowest < -bound {
                return Err(Error::NotADensityMatrix {
                    invariant: Invariant::Positivity,
                    value: lowest,
                    tolerance: bound,
                });
            }
        }
        Ok(Self { m })
    }

    /// Diagonal states are Hermitian and PSD by construction when the entries
    /// are non-negative; only the trace needs checking.
    pub(crate) fn from_populations(p: &[f64]) -> Result<Self> {
        if let Some(&bad) = p.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::NotADensityMatrix { invariant: Invariant::Positivity, value: bad, tolerance: 0.0 });
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > TOL_TRACE {
            return Err(Error::NotADensityMatrix {
                invariant: Invariant::Trace,
                value: (total - 1.0).abs(),
                tolerance: TOL_TRACE,
            });
        }
        let d = p.len();
        let mut m = CMatrix::zeros(d);
        for (n, &x) in p.iter().enumerate() {
            m[(n, n)] = re(x);
        }
        Ok(Self { m })
    }

    /// Pure state |ψ⟩⟨ψ| from a normalised vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        Self::new(CMatrix::outer(psi))
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Entrywise reduced state of the last tensor factor of dimension `sub`:
    /// traces out everything to its left.
    pub fn partial_trace_left(&self, sub: usize) -> Result<DensityMatrix> {
        let d = self.dim();
        if sub == 0 || d % sub != 0 {
            return Err(Error::DimensionMismatch { expected: sub, found: d });
        }
        let outer = d / sub;
        let mut r = CMatrix::zeros(sub);
        for k in 0..outer {
            for i in 0..sub {
                for j in 0..sub {
                    r[(i, j)] += self.m[(k * sub + i, k * sub + j)];
                }
            }
        }
        DensityMatrix::new(r)
    }
}

/// |n⟩⟨n|
pub fn fock_state(space: FockSpace, n: usize) -> Result<DensityMatrix> {
    let d = space.dim();
    if n >= d {
        return Err(Error::IndexOutOfRange { index: n, dim: d });
    }
    let mut p = vec![0.0; d];
    p[n] = 1.0;
    DensityMatrix::from_populations(&p)
}

/// Unnormalised projection of the coherent state |α⟩ onto the truncated
/// space, c_n = e^{−|α|²/2} αⁿ/√(n!), n < d.
pub fn coherent_coefficients(space: FockSpace, alpha: C64) -> Vec<C64> {
    let d = space.dim();
    let mut out = Vec::with_capacity(d);
    let mut cur = re((-0.5 * alpha.norm_sqr()).exp());
    out.push(cur);
    for n in 1..d {
        cur = cur * alpha / (n as f64).sqrt();
        out.push(cur);
    }
    out
}

/// Coherent state |α⟩ truncated to the space and renormalised.
///
/// Warns when |α|² > d/2 or when the truncated tail carries more than
/// [`TAIL_WARN`] of the norm.
pub fn coherent_state_vector(space: FockSpace, alpha: C64) -> Warned<Vec<C64>> {
    let mut v = coherent_coefficients(space, alpha);
    let kept: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    let mut warnings = Vec::new();
    let abs2 = alpha.norm_sqr();
    if abs2 > space.dim() as f64 / 2.0 || tail > TAIL_WARN {
        warnings.push(Warning::CoherentTruncation { abs2_alpha: abs2, cutoff: space.dim(), tail_mass: tail });
    }
    let norm = kept.sqrt();
    if norm > 0.0 {
        for z in &mut v {
            *z /= norm;
        }
    } else {
        // Entire amplitude beyond the cutoff; the closest representable state is |d−1⟩.
        v.iter_mut().for_each(|z| *z = C64::zero());
        *v.last_mut().unwrap() = re(1.0);
    }
    Warned::with(v, warnings)
}

/// Thermal populations p_n = n̄₀ⁿ/(n̄₀+1)^{n+1} for n < d, before renormalisation.
pub fn thermal_populations(space: FockSpace, n_bar0: f64) -> Vec<f64> {
    let q = n_bar0 / (n_bar0 + 1.0);
    let mut p = Vec::with_capacity(space.dim());
    let mut cur = 1.0 / (n_bar0 + 1.0);
    for _ in 0..space.dim() {
        p.push(cur);
        cur *= q;
    }
    p
}

/// Thermal state with mean phonon number n̄₀, renormalised on the truncated space.
pub fn thermal_state(space: FockSpace, n_bar0: f64) -> Result<Warned<DensityMatrix>> {
    if !(n_bar0 >= 0.0) || !n_bar0.is_finite() {
        return Err(Error::Domain(alloc::format!("mean phonon number must be finite and ≥ 0, got {n_bar0}")));
    }
    let mut p = thermal_populations(space, n_bar0);
    let kept: f64 = p.iter().sum();
    let tail = (1.0 - kept).max(0.0);
    let mut warnings = Vec::new();
    if tail > TAIL_WARN {
        warnings.push(Warning::ThermalTail { n_bar0, cutoff: space.dim(), tail_mass: tail });
    }
    p.iter_mut().for_each(|x| *x /= kept);
    Ok(Warned::with(DensityMatrix::from_populations(&p)?, warnings))
}
