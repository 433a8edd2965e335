//! Phonon number, purity, Fock populations and the Husimi Q function.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_coefficients, DensityMatrix, FockSpace};
use crate::linalg::{CMatrix, C64};
use crate::warning::{Warned, Warning};

/// ⟨a†a⟩ = Σ_n n ρ_nn.
pub fn phonon_number(rho: &DensityMatrix) -> f64 {
    (0..rho.dim()).map(|n| n as f64 * rho.get(n, n).re).sum()
}

/// Tr(ρ²) as Σ_ij ρ_ij ρ_ji.
pub fn purity(rho: &DensityMatrix) -> f64 {
    purity_of(rho.matrix())
}

pub(crate) fn purity_of(m: &CMatrix) -> f64 {
    let d = m.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += (m[(i, j)] * m[(j, i)]).re;
        }
    }
    s
}

/// Tr(ρ²) as Σ_ij |ρ_ij|²; agrees with [`purity`] for Hermitian ρ.
pub fn purity_entrywise(rho: &DensityMatrix) -> f64 {
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// Diagonal p_0..p_K.
pub fn fock_populations(rho: &DensityMatrix, k_max: usize) -> Result<Vec<f64>> {
    if k_max >= rho.dim() {
        return Err(Error::IndexOutOfRange { index: k_max, dim: rho.dim() });
    }
    Ok((0..=k_max).map(|n| rho.get(n, n).re).collect())
}

/// Q(α) = ⟨α|ρ|α⟩/π with |α⟩ projected onto the truncated space without
/// renormalisation, which is the exact Q of ρ embedded in the full space.
pub fn husimi_q(rho: &DensityMatrix, alpha: C64) -> f64 {
    let space = FockSpace::new(rho.dim()).expect("density matrices have dim ≥ 2");
    quad_form(rho.matrix(), &coherent_coefficients(space, alpha)) / PI
}

/// c†ρc for Hermitian ρ, using the upper triangle only.
fn quad_form(m: &CMatrix, c: &[C64]) -> f64 {
    let d = m.dim();
    let mut diag = 0.0;
    let mut off = C64::new(0.0, 0.0);
    for i in 0..d {
        let row = m.row(i);
        diag += row[i].re * c[i].norm_sqr();
        let mut acc = C64::new(0.0, 0.0);
        for j in i + 1..d {
            acc += row[j] * c[j];
        }
        off += c[i].conj() * acc;
    }
    diag + 2.0 * off.re
}

/// Square-grid layout in phase space, α = q + ip. Nodes include both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub resolution: usize,
}

impl HusimiSpec {
    /// Square window [−half_width, half_width]² with `resolution` nodes per axis.
    pub fn centered(half_width: f64, resolution: usize) -> Self {
        Self { q_min: -half_width, q_max: half_width, p_min: -half_width, p_max: half_width, resolution }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.resolution >= 2
            && self.q_min.is_finite()
            && self.q_max.is_finite()
            && self.p_min.is_finite()
            && self.p_max.is_finite()
            && self.q_max > self.q_min
            && self.p_max > self.p_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("Husimi grid needs ≥ 2 nodes per axis and nonempty ranges".into()))
        }
    }

    pub fn q_axis(&self) -> Vec<f64> {
        axis(self.q_min, self.q_max, self.resolution)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        axis(self.p_min, self.p_max, self.resolution)
    }

    pub fn cell_area(&self) -> f64 {
        let n = (self.resolution - 1) as f64;
        (self.q_max - self.q_min) / n * (self.p_max - self.p_min) / n
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Q sampled on a grid; `values[ip * resolution + iq]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiGrid {
    pub spec: HusimiSpec,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.values[ip * self.spec.resolution + iq]
    }

    /// Riemann sum of Q over the window.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn boundary_max(&self) -> f64 {
        let n = self.spec.resolution;
        let mut m = f64::NEG_INFINITY;
        for k in 0..n {
            m = m.max(self.at(k, 0)).max(self.at(k, n - 1)).max(self.at(0, k)).max(self.at(n - 1, k));
        }
        m
    }
}

/// One grid row (fixed p) of Q; rows are independent and may be computed in
/// parallel by callers.
pub fn husimi_row(rho: &DensityMatrix, spec: &HusimiSpec, ip: usize) -> Vec<f64> {
    let space = FockSpace::new(rho.dim()).expect("density matrices have dim ≥ 2");
    let p = spec.p_min + (spec.p_max - spec.p_min) * ip as f64 / (spec.resolution - 1) as f64;
    spec.q_axis()
        .into_iter()
        .map(|q| quad_form(rho.matrix(), &coherent_coefficients(space, C64::new(q, p))) / PI)
        .collect()
}

/// Assemble a grid from precomputed rows and attach the boundary warning.
pub fn husimi_from_rows(spec: HusimiSpec, rows: Vec<Vec<f64>>) -> Warned<HusimiGrid> {
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let grid = HusimiGrid { spec, values };
    let (b, g) = (grid.boundary_max(), grid.max());
    let mut w = Vec::new();
    if g > 0.0 && b > 1e-4 * g {
        w.push(Warning::HusimiBoundary { boundary_max: b, global_max: g });
    }
    Warned::with(grid, w)
}

/// Q on the whole grid. Warns when the window boundary carries more than
/// 1e-4 of the peak value.
pub fn husimi_q_grid(rho: &DensityMatrix, spec: &HusimiSpec) -> Result<Warned<HusimiGrid>> {
    spec.validate()?;
    let rows = (0..spec.resolution).map(|ip| husimi_row(rho, spec, ip)).collect();
    Ok(husimi_from_rows(*spec, rows))
}
