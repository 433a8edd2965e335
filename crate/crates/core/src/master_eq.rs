//! Lindblad master equation: model construction, right-hand side, the
//! effective phonon model and time integration with an invariant monitor.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Invariant, Result};
use crate::fock::{annihilation_op, creation_op, number_op, DensityMatrix, FockSpace, StateTolerances};
use crate::linalg::{re, CMatrix, Operator, C64, I};
use crate::observables;
use crate::ode::{check_grid, Dopri5, OdeOptions, OdeSystem, StepStats};
use crate::params::{EffectiveRates, ExperimentParams};

/// Dissipator `rate · D[jump]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub rate: f64,
    pub jump: Operator,
}

/// ρ̇ = −i[H, ρ] + Σ_k rate_k D[L_k]ρ with D[L]ρ = LρL† − ½{L†L, ρ}.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    hamiltonian: Operator,
    channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, channels: Vec<Channel>) -> Result<Self> {
        let d = hamiltonian.dim();
        let tol = 1e-12 * hamiltonian.max_abs().max(1.0);
        let herm = hamiltonian.hermiticity_error();
        if herm > tol {
            return Err(Error::Domain(format!("Hamiltonian is not Hermitian (error {herm:.3e})")));
        }
        for ch in &channels {
            if ch.jump.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: ch.jump.dim() });
            }
            if !(ch.rate >= 0.0) || !ch.rate.is_finite() {
                return Err(Error::Domain(format!("channel rate must be finite and ≥ 0, got {}", ch.rate)));
            }
        }
        Ok(Self { hamiltonian, channels })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Precomputed form used for fast right-hand-side evaluation.
    pub fn liouvillian(&self) -> Liouvillian {
        let mut h_eff = self.hamiltonian.clone();
        let mut jumps = Vec::with_capacity(self.channels.len());
        for ch in &self.channels {
            if ch.rate == 0.0 {
                continue;
            }
            let ldl = ch.jump.dagger().matmul(&ch.jump);
            h_eff = &h_eff - &ldl.scale(I * (0.5 * ch.rate));
            jumps.push(ch.jump.scale_re(ch.rate.sqrt()));
        }
        Liouvillian { dim: self.dim(), h_eff, jumps, scratch: vec![C64::new(0.0, 0.0); self.dim() * self.dim()] }
    }
}

/// ρ̇ = −i(H_eff ρ − ρ H_eff†) + Σ_k L_k ρ L_k† with H_eff = H − (i/2)Σ L_k†L_k
/// and each L_k pre-scaled by √rate. Operates on row-major vectorised ρ.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    h_eff: Operator,
    jumps: Vec<Operator>,
    scratch: Vec<C64>,
}

impl Liouvillian {
    /// `out = L(ρ)` for Hermitian ρ; the result is exactly Hermitian.
    pub fn apply(&mut self, rho: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        self.h_eff.left_mul_acc(rho, out, -I);
        self.h_eff.right_mul_dagger_acc(rho, out, I);
        for l in &self.jumps {
            self.scratch.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            l.left_mul_acc(rho, &mut self.scratch, re(1.0));
            l.right_mul_dagger_acc(&self.scratch, out, re(1.0));
        }
        // Rounding would otherwise feed an anti-Hermitian component that the
        // integrator accumulates; mirror so Hermitian input gives Hermitian output.
        let d = self.dim;
        for i in 0..d {
            out[i * d + i].im = 0.0;
            for j in i + 1..d {
                let a = (out[i * d + j] + out[j * d + i].conj()) * 0.5;
                out[i * d + j] = a;
                out[j * d + i] = a.conj();
            }
        }
    }
}

impl OdeSystem for Liouvillian {
    fn dim(&self) -> usize {
        self.dim * self.dim
    }
    fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(y, dy);
    }
}

/// D[L]ρ = LρL† − ½{L†L, ρ}.
pub fn dissipator(jump: &Operator, rho: &CMatrix) -> CMatrix {
    let l = jump.to_dense();
    let ld = l.dagger();
    let ldl = &ld * &l;
    let a = &(&l * rho) * &ld;
    let b = &(&ldl * rho) + &(rho * &ldl);
    &a - &b.scale(re(0.5))
}

/// Right-hand side of the master equation at ρ.
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<CMatrix> {
    let d = model.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
    }
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    model.liouvillian().apply(rho.matrix().as_slice(), &mut out);
    CMatrix::from_vec(d, out)
}

/// H_a = −Δ a†a + ε a† + ε* a in the frame rotating with the drive.
pub fn phonon_hamiltonian(delta: f64, epsilon: C64, space: FockSpace) -> Operator {
    let a = annihilation_op(space);
    let ad = creation_op(space);
    let n = number_op(space);
    &(&n.scale_re(-delta) + &ad.scale(epsilon)) + &a.scale(epsilon.conj())
}

/// Effective phonon model: linear gain g·D[a†], two-phonon damping κ·D[a²],
/// detuning Δ and drive ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhononModel {
    pub cutoff: usize,
    pub g: f64,
    pub kappa: f64,
    pub delta: f64,
    pub epsilon: C64,
}

impl PhononModel {
    pub fn from_rates(space: FockSpace, params: &ExperimentParams, rates: &EffectiveRates) -> Self {
        Self { cutoff: space.dim(), g: rates.g, kappa: rates.kappa, delta: params.delta, epsilon: params.epsilon }
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.cutoff)
    }

    pub fn lindblad(&self) -> Result<LindbladModel> {
        let space = self.space()?;
        let a = annihilation_op(space);
        let ad = creation_op(space);
        LindbladModel::new(
            phonon_hamiltonian(self.delta, self.epsilon, space),
            vec![Channel { rate: self.g, jump: ad }, Channel { rate: self.kappa, jump: a.matmul(&a) }],
        )
    }
}

/// Tr{ρ̇ a} minus the mean-field closure (g/2 + iΔ)⟨a⟩ − κ⟨a†a²⟩ − iε.
///
/// Vanishes exactly in infinite dimension; in a truncated space the gain term
/// leaks at the top Fock level.
pub fn mean_field_residual(model: &PhononModel, rho: &DensityMatrix) -> Result<C64> {
    let space = model.space()?;
    let lind = model.lindblad()?;
    let rhs = lindblad_rhs(&lind, rho)?;
    let a = annihilation_op(space);
    let ad = creation_op(space);
    let lhs = a.expectation(&rhs);
    let mean_a = a.expectation(rho.matrix());
    let ada2 = ad.matmul(&a).matmul(&a).expectation(rho.matrix());
    let closure = (re(0.5 * model.g) + I * model.delta) * mean_a - ada2 * model.kappa - I * model.epsilon;
    Ok(lhs - closure)
}

/// Banded right-hand side for [`PhononModel`], touching only the five
/// diagonals the model couples. The state is the packed upper triangle of ρ,
/// row by row. Optionally works in the frame rotating at Δ·a†a, where
/// ρ = e^{iΔNt} ρ̃ e^{−iΔNt}, the detuning drops out and the drive becomes
/// ε e^{−iΔt}. Both dissipators are invariant under that rotation.
#[derive(Clone, Debug)]
pub struct PhononKernel {
    map: StateMap,
    epsilon: C64,
    delta: f64,
    g: f64,
    /// Diagonal of H_eff, without the detuning in the rotating frame.
    h: Vec<C64>,
    /// √k for k = 0..=d.
    sq: Vec<f64>,
    /// √κ·√((k+1)(k+2)), zero where a² leaves the space.
    c2: Vec<f64>,
    /// Upper triangle and first subdiagonal of ρ inside a zero border, so
    /// neighbour reads never leave the buffer.
    padded: Vec<C64>,
}

const PAD: usize = 3;

impl PhononKernel {
    pub fn new(model: &PhononModel, rotating: bool) -> Result<Self> {
        let d = model.space()?.dim();
        let det = if rotating { 0.0 } else { model.delta };
        // truncated a a† has a zero in the top corner
        let h = (0..d)
            .map(|m| {
                let aad = if m + 1 < d { (m + 1) as f64 } else { 0.0 };
                let nn1 = (m * m.saturating_sub(1)) as f64;
                C64::new(-det * m as f64, -0.5 * (model.g * aad + model.kappa * nn1))
            })
            .collect();
        let sq = (0..=d).map(|k| (k as f64).sqrt()).collect();
        let c2 = (0..d)
            .map(|k| if k + 2 < d { (model.kappa * ((k + 1) * (k + 2)) as f64).sqrt() } else { 0.0 })
            .collect();
        let map = StateMap { d, frame: if rotating { model.delta } else { 0.0 } };
        let padded = vec![C64::new(0.0, 0.0); (d + PAD) * (d + PAD)];
        Ok(Self { map, epsilon: model.epsilon, delta: model.delta, g: model.g, h, sq, c2, padded })
    }

    pub fn map(&self) -> StateMap {
        self.map
    }

    fn drive_at(&self, t: f64) -> C64 {
        if self.map.frame != 0.0 {
            self.epsilon * C64::from_polar(1.0, -self.delta * t)
        } else {
            self.epsilon
        }
    }

    /// `out = L(ρ)` at time `t`, both packed.
    pub fn apply(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.map.d;
        let p = d + PAD;
        for m in 0..d {
            let (o, base) = (packed_offset(d, m), (m + 1) * p + 1);
            self.padded[base + m..base + d].copy_from_slice(&rho[o..o + d - m]);
            if m + 1 < d {
                // (m+1, m) is read by the hopping terms on the diagonal
                self.padded[base + p + m] = rho[o + 1].conj();
            }
        }
        let eps = self.drive_at(t);
        let eps_c = eps.conj();
        let (sq, c2, h, y) = (&self.sq, &self.c2, &self.h, &self.padded);
        for m in 0..d {
            let hm = h[m];
            let (sm, sm1, c2m, gm) = (sq[m], sq[m + 1], c2[m], self.g * sq[m]);
            let base = (m + 1) * p + 1;
            let row = &y[base - 1..base + d + 1];
            let up = &y[base - p - 1..base - p + d];
            let dn = &y[base + p..base + p + d];
            let dn2 = &y[base + 2 * p + 2..base + 2 * p + 2 + d];
            let o = packed_offset(d, m);
            let out_row = &mut out[o..o + d - m];
            for (j, n) in (m..d).enumerate() {
                let hop = eps * sm * up[n + 1] + eps_c * sm1 * dn[n]
                    - eps_c * sq[n] * row[n]
                    - eps * sq[n + 1] * row[n + 2];
                let acc = (hm - h[n].conj()) * row[n + 1] + hop;
                // −i·acc plus the two sandwich terms
                out_row[j] = C64::new(acc.im, -acc.re) + up[n] * (gm * sq[n]) + dn2[n] * (c2m * c2[n]);
            }
            out_row[0].im = 0.0;
        }
    }
}

impl OdeSystem for PhononKernel {
    fn dim(&self) -> usize {
        self.map.packed_len()
    }
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(t, y, dy);
    }
}

fn packed_offset(d: usize, m: usize) -> usize {
    m * d - m * m.saturating_sub(1) / 2
}

/// Conversion between a dense row-major ρ in the drive frame and the packed
/// upper-triangle state of [`PhononKernel`] in its own frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMap {
    pub d: usize,
    /// Rotation frequency of the integration frame; zero for the drive frame.
    pub frame: f64,
}

impl StateMap {
    pub fn packed_len(&self) -> usize {
        self.d * (self.d + 1) / 2
    }

    pub fn pack(&self, t: f64, dense: &[C64]) -> Vec<C64> {
        let d = self.d;
        let ph = self.phases(-t);
        let mut out = Vec::with_capacity(self.packed_len());
        for m in 0..d {
            for n in m..d {
                out.push(dense[m * d + n] * ph[n - m].conj());
            }
        }
        out
    }

    pub fn unpack(&self, t: f64, packed: &[C64]) -> Vec<C64> {
        let d = self.d;
        let ph = self.phases(t);
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        let mut k = 0;
        for m in 0..d {
            for n in m..d {
                // ρ_mn ← e^{iΔ(m−n)t} ρ̃_mn
                let v = packed[k] * ph[n - m].conj();
                out[m * d + n] = v;
                out[n * d + m] = v.conj();
                k += 1;
            }
        }
        out
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        (0..self.d).map(|k| C64::from_polar(1.0, self.frame * t * k as f64)).collect()
    }
}

/// Tolerances checked at every sampled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantBudget {
    pub trace: f64,
    pub hermiticity: f64,
    /// Per-dimension bound on the most negative eigenvalue.
    pub psd_per_dim: f64,
    pub purity: f64,
}

impl Default for InvariantBudget {
    fn default() -> Self {
        Self { trace: 1e-8, hermiticity: 1e-10, psd_per_dim: 1e-8, purity: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub ode: OdeOptions,
    pub budget: InvariantBudget,
    /// Record Fock populations p_0..p_K; `None` disables.
    pub populations: Option<usize>,
    /// Number of evenly spaced samples at which the smallest eigenvalue is
    /// computed (the final sample is always included).
    pub eigen_checks: usize,
    /// Sample times at which the full state is kept.
    pub snapshots: Vec<f64>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), budget: InvariantBudget::default(), populations: None, eigen_checks: 20, snapshots: Vec::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue over the checked samples.
    pub min_eigenvalue: Option<f64>,
    pub min_purity: f64,
    pub max_purity: f64,
    pub eigen_checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: DensityMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub purity: Vec<f64>,
    /// Named expectation values Tr(Oρ).
    pub expectations: BTreeMap<String, Vec<C64>>,
    /// Per-sample Fock populations p_0..p_K, when requested.
    pub populations: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub monitor: MonitorReport,
    pub stats: StepStats,
}

impl Trajectory {
    /// Real part of a recorded expectation value.
    pub fn real(&self, name: &str) -> Option<Vec<f64>> {
        self.expectations.get(name).map(|v| v.iter().map(|z| z.re).collect())
    }

    pub fn snapshot(&self, time: f64) -> Option<&DensityMatrix> {
        self.snapshots.iter().find(|s| time_matches(s.time, time)).map(|s| &s.state)
    }
}

fn time_matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn eigen_schedule(n: usize, checks: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    if n == 0 {
        return mask;
    }
    if checks > 0 {
        let stride = (n as f64 / checks as f64).max(1.0);
        let mut x = 0.0;
        while (x as usize) < n {
            mask[x as usize] = true;
            x += stride;
        }
    }
    mask[n - 1] = true;
    mask
}

/// Integrate from `rho0` at `t_grid[0]` through every grid point, recording
/// purity, the requested expectations and populations, and checking the
/// invariant budget at every sample.
pub fn integrate(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    let d = model.dim();
    check_dim(d, rho0.dim())?;
    let mut liouv = model.liouvillian();
    let y0 = rho0.matrix().as_slice().to_vec();
    drive(&mut liouv, d, y0, |_, y| y.to_vec(), rho0, t_grid, observables, opts)
}

/// [`integrate`] for the phonon model using the banded kernel in the frame
/// rotating at Δ. Recorded quantities and snapshots are in the drive frame.
pub fn integrate_phonon(
    model: &PhononModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    let mut kernel = PhononKernel::new(model, true)?;
    let map = kernel.map();
    check_dim(map.d, rho0.dim())?;
    let y0 = map.pack(t_grid.first().copied().unwrap_or(0.0), rho0.matrix().as_slice());
    drive(&mut kernel, map.d, y0, |t, y| map.unpack(t, y), rho0, t_grid, observables, opts)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Shared driver. `y0` is the initial ODE state and `dense` maps an ODE
/// state at time t back to row-major ρ in the drive frame.
#[allow(clippy::too_many_arguments)]
fn drive<S: OdeSystem>(
    sys: &mut S,
    d: usize,
    y0: Vec<C64>,
    dense: impl Fn(f64, &[C64]) -> Vec<C64>,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    check_dim(d, rho0.dim())?;
    for (_, op) in observables {
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
        }
    }
    let mut snap_idx = Vec::new();
    for &ts in &opts.snapshots {
        match t_grid.iter().position(|&t| time_matches(t, ts)) {
            Some(i) => snap_idx.push(i),
            None => return Err(Error::Domain(format!("snapshot time {ts} is not on the time grid"))),
        }
    }
    // Expectations are stored in key order; keep the operators aligned.
    let mut sorted: Vec<&(String, Operator)> = observables.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Domain("duplicate observable name".into()));
    }
    let observables = &sorted;
    let eig_mask = eigen_schedule(t_grid.len(), opts.eigen_checks);

    let mut traj = Trajectory {
        times: Vec::with_capacity(t_grid.len()),
        purity: Vec::with_capacity(t_grid.len()),
        expectations: observables.iter().map(|(n, _)| (n.clone(), Vec::with_capacity(t_grid.len()))).collect(),
        populations: Vec::new(),
        snapshots: Vec::new(),
        monitor: MonitorReport { min_purity: f64::INFINITY, max_purity: f64::NEG_INFINITY, ..Default::default() },
        stats: StepStats::default(),
    };

    let budget = opts.budget;
    let record = |idx: usize, t: f64, y: &[C64], traj: &mut Trajectory| -> Result<()> {
        let m = CMatrix::from_vec(d, dense(t, y))?;
        if !m.is_finite() {
            return Err(Error::InvariantBreach { time: t, invariant: Invariant::Finite, value: f64::NAN, budget: 0.0 });
        }
        let drift = (m.trace() - re(1.0)).norm();
        let herm = m.hermiticity_error();
        let pur = observables::purity_of(&m);
        let mon = &mut traj.monitor;
        mon.max_trace_drift = mon.max_trace_drift.max(drift);
        mon.max_hermiticity_error = mon.max_hermiticity_error.max(herm);
        mon.min_purity = mon.min_purity.min(pur);
        mon.max_purity = mon.max_purity.max(pur);
        if drift > budget.trace {
            return Err(Error::InvariantBreach { time: t, invariant: Invariant::Trace, value: drift, budget: budget.trace });
        }
        if herm > budget.hermiticity {
            return Err(Error::InvariantBreach {
                time: t,
                invariant: Invariant::Hermiticity,
                value: herm,
                budget: budget.hermiticity,
            });
        }
        let lo = 1.0 / d as f64 - budget.purity;
        if pur > 1.0 + budget.purity || pur < lo {
            return Err(Error::InvariantBreach { time: t, invariant: Invariant::Purity, value: pur, budget: budget.purity });
        }
        if eig_mask[idx] {
            let lowest = m.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
            mon.eigen_checked += 1;
            mon.min_eigenvalue = Some(mon.min_eigenvalue.map_or(lowest, |x: f64| x.min(lowest)));
            let bound = budget.psd_per_dim * d as f64;
            if lowest < -bound {
                return Err(Error::InvariantBreach { time: t, invariant: Invariant::Positivity, value: lowest, budget: bound });
            }
        }
        traj.times.push(t);
        traj.purity.push(pur);
        for ((_, op), (_, series)) in observables.iter().map(|o| (&o.0, &o.1)).zip(traj.expectations.iter_mut()) {
            series.push(op.expectation(&m));
        }
        if let Some(k) = opts.populations {
            traj.populations.push((0..=k.min(d - 1)).map(|n| m[(n, n)].re).collect());
        }
        if snap_idx.contains(&idx) {
            let tol = StateTolerances {
                hermiticity: budget.hermiticity,
                trace: budget.trace,
                psd_per_dim: budget.psd_per_dim,
            };
            traj.snapshots.push(Snapshot { time: t, state: DensityMatrix::with_tolerances(m, &tol)? });
        }
        Ok(())
    };

    let mut stepper = Dopri5::new(sys, t_grid[0], y0, opts.ode)?;
    record(0, t_grid[0], stepper.y(), &mut traj)?;
    for (i, &t) in t_grid.iter().enumerate().skip(1) {
        stepper.advance_to(t)?;
        record(i, t, stepper.y(), &mut traj)?;
    }
    traj.stats = stepper.stats();
    Ok(traj)
}

/// Number-operator observable list used by phonon runs: `N` and `a`.
pub fn phonon_observables(space: FockSpace) -> Vec<(String, Operator)> {
    vec![("N".into(), number_op(space)), ("a".into(), annihilation_op(space))]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fock_state, thermal_state};

    fn model(d: usize, g: f64, kappa: f64, delta: f64, eps: C64) -> PhononModel {
        PhononModel { cutoff: d, g, kappa, delta, epsilon: eps }
    }

    #[test]
    fn rhs_matches_dense_formula() {
        let m = model(6, 0.7, 0.3, 1.1, C64::new(0.4, -0.2));
        let lind = m.lindblad().unwrap();
        let space = m.space().unwrap();
        let rho = thermal_state(space, 0.8).unwrap().value;
        let fast = lindblad_rhs(&lind, &rho).unwrap();
        let h = lind.hamiltonian().to_dense();
        let r = rho.matrix();
        let comm = &(&h * r) - &(r * &h);
        let mut slow = comm.scale(-I);
        for ch in lind.channels() {
            slow = &slow + &dissipator(&ch.jump, r).scale(re(ch.rate));
        }
        assert!(fast.max_abs_diff(&slow) < 1e-13);
        assert!(fast.trace().norm() < 1e-13);
        assert!(fast.hermiticity_error() < 1e-13);
    }

    #[test]
    fn banded_kernel_matches_generic() {
        let m = model(9, 0.7, 0.3, 1.1, C64::new(0.4, -0.2));
        let space = m.space().unwrap();
        let rho = thermal_state(space, 1.5).unwrap().value;
        let generic = lindblad_rhs(&m.lindblad().unwrap(), &rho).unwrap();
        let mut k = PhononKernel::new(&m, false).unwrap();
        let map = k.map();
        let mut out = vec![C64::new(0.0, 0.0); map.packed_len()];
        k.apply(0.3, &map.pack(0.0, rho.matrix().as_slice()), &mut out);
        let banded = CMatrix::from_vec(9, map.unpack(0.0, &out)).unwrap();
        assert!(banded.max_abs_diff(&generic) < 1e-14);
    }

    #[test]
    fn rotating_frame_agrees_with_lab_frame() {
        let m = model(12, 0.5, 0.2, 2.3, C64::new(0.3, 0.1));
        let space = m.space().unwrap();
        let psi = crate::fock::coherent_state_vector(space, C64::new(0.5, -0.3)).value;
        let rho0 = DensityMatrix::from_pure(&psi).unwrap();
        let grid = [0.0, 0.4, 1.1];
        let opts = IntegrationOptions { snapshots: vec![1.1], ..Default::default() };
        let obs = phonon_observables(space);
        let a = integrate(&m.lindblad().unwrap(), &rho0, &grid, &obs, &opts).unwrap();
        let b = integrate_phonon(&m, &rho0, &grid, &obs, &opts).unwrap();
        for k in ["N", "a"] {
            for (x, y) in a.expectations[k].iter().zip(&b.expectations[k]) {
                assert!((x - y).norm() < 1e-7);
            }
        }
        let (sa, sb) = (a.snapshot(1.1).unwrap().matrix(), b.snapshot(1.1).unwrap().matrix());
        assert!(sa.max_abs_diff(sb) < 1e-7);
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let space = FockSpace::new(4).unwrap();
        assert!(LindbladModel::new(annihilation_op(space), vec![]).is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let m = model(5, 1.0, 1.0, 0.0, C64::new(0.0, 0.0));
        let rho = fock_state(FockSpace::new(4).unwrap(), 0).unwrap();
        assert!(lindblad_rhs(&m.lindblad().unwrap(), &rho).is_err());
    }

    #[test]
    fn vacuum_gain_only() {
        // pure gain from vacuum: d⟨N⟩/dt = g(⟨N⟩+1) → ⟨N⟩ = e^{gt} − 1
        let g = 0.3;
        let m = model(60, g, 0.0, 0.0, C64::new(0.0, 0.0));
        let space = m.space().unwrap();
        let rho0 = fock_state(space, 0).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0];
        let tr = integrate(&m.lindblad().unwrap(), &rho0, &grid, &phonon_observables(space), &IntegrationOptions::default())
            .unwrap();
        let n = tr.real("N").unwrap();
        for (t, v) in grid.iter().zip(&n) {
            assert!((v - ((g * t).exp() - 1.0)).abs() < 1e-7, "t={t} n={v}");
        }
    }

    #[test]
    fn snapshot_must_be_on_grid() {
        let m = model(4, 0.1, 0.1, 0.0, C64::new(0.0, 0.0));
        let space = m.space().unwrap();
        let rho0 = fock_state(space, 0).unwrap();
        let opts = IntegrationOptions { snapshots: vec![0.25], ..Default::default() };
        assert!(integrate(&m.lindblad().unwrap(), &rho0, &[0.0, 0.5], &[], &opts).is_err());
        let opts = IntegrationOptions { snapshots: vec![0.5], ..Default::default() };
        let tr = integrate(&m.lindblad().unwrap(), &rho0, &[0.0, 0.5], &[], &opts).unwrap();
        assert!(tr.snapshot(0.5).is_some());
    }
}
