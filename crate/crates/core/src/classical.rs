//! Mean-field limit: the driven quantum Van der Pol equation
//! α̇ = (g/2 + iΔ − κ|α|²)α − iε, its Hopf threshold and regime classifier.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, I};
use crate::master_eq::PhononModel;
use crate::ode::{check_grid, linspace, Dopri5, OdeOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    pub g: f64,
    pub kappa: f64,
    pub delta: f64,
    pub epsilon: C64,
}

impl From<&PhononModel> for ClassicalParams {
    fn from(m: &PhononModel) -> Self {
        Self { g: m.g, kappa: m.kappa, delta: m.delta, epsilon: m.epsilon }
    }
}

impl ClassicalParams {
    /// Undriven limit-cycle radius √(g/2κ).
    pub fn limit_cycle_radius(&self) -> f64 {
        (self.g / (2.0 * self.kappa)).sqrt()
    }
}

pub fn vdp_rhs(alpha: C64, p: &ClassicalParams) -> C64 {
    (C64::new(0.5 * p.g - p.kappa * alpha.norm_sqr(), p.delta)) * alpha - I * p.epsilon
}

/// Tolerances used by [`integrate_classical`].
pub const CLASSICAL_ODE: OdeOptions = OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: None, h_max: None, max_steps: 50_000_000 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub alphas: Vec<C64>,
}

pub fn integrate_classical(alpha0: C64, p: &ClassicalParams, t_grid: &[f64]) -> Result<ClassicalTrajectory> {
    integrate_classical_with(alpha0, p, t_grid, CLASSICAL_ODE)
}

pub fn integrate_classical_with(alpha0: C64, p: &ClassicalParams, t_grid: &[f64], opts: OdeOptions) -> Result<ClassicalTrajectory> {
    check_grid(t_grid)?;
    let p = *p;
    let mut sys = (1usize, move |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = vdp_rhs(y[0], &p));
    let mut st = Dopri5::new(&mut sys, t_grid[0], vec![alpha0], opts)?;
    let mut alphas = Vec::with_capacity(t_grid.len());
    alphas.push(alpha0);
    for &t in &t_grid[1..] {
        st.advance_to(t)?;
        alphas.push(st.y()[0]);
    }
    Ok(ClassicalTrajectory { times: t_grid.to_vec(), alphas })
}

/// Drive strength ε√κ at the Hopf bifurcation, √(g(g² + 4Δ²))/4.
pub fn hopf_threshold(g: f64, delta: f64) -> f64 {
    (g * (g * g + 4.0 * delta * delta)).sqrt() / 4.0
}

/// Drive strength ε√κ at which the trace of the Jacobian at the fixed point
/// vanishes: the fixed-point intensity R = κ|α|² reaches g/4, giving
/// √(g(g² + 16Δ²))/8. Unique fixed point requires Δ > g/√12.
pub fn hopf_threshold_exact(g: f64, delta: f64) -> f64 {
    (g * (g * g + 16.0 * delta * delta)).sqrt() / 8.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    FixedPoint,
    LimitCycle,
}

fn at_rest(alpha: C64, p: &ClassicalParams) -> bool {
    vdp_rhs(alpha, p).norm() < 1e-6 * p.epsilon.norm() + 1e-9
}

/// Tail of a trajectory settled onto a periodic orbit: at least three
/// oscillations of Re α whose successive maxima, and per-cycle extreme radii,
/// agree within 1%.
fn settled_cycle(alphas: &[C64]) -> bool {
    let re: Vec<f64> = alphas.iter().map(|a| a.re).collect();
    let peaks: Vec<usize> = (1..re.len().saturating_sub(1)).filter(|&i| re[i] > re[i - 1] && re[i] >= re[i + 1]).collect();
    if peaks.len() < 4 {
        return false;
    }
    let (lo, hi) = re.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let amp = hi - lo;
    let rmax = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if amp <= 1e-6 * (1.0 + rmax) {
        return false;
    }
    let peak_vals: Vec<f64> = peaks.iter().map(|&i| re[i]).collect();
    if spread(&peak_vals) > 0.01 * amp {
        return false;
    }
    let mut cyc_max = Vec::new();
    let mut cyc_min = Vec::new();
    for w in peaks.windows(2) {
        let r: Vec<f64> = alphas[w[0]..=w[1]].iter().map(|a| a.norm()).collect();
        cyc_max.push(r.iter().copied().fold(0.0, f64::max));
        cyc_min.push(r.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let scale = cyc_max.iter().sum::<f64>() / cyc_max.len() as f64;
    spread(&cyc_max) <= 0.01 * scale && spread(&cyc_min) <= 0.01 * scale
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    hi - lo
}

fn classify_from(alpha0: C64, p: &ClassicalParams, horizon: f64) -> Result<Option<Regime>> {
    let turns = horizon * p.delta.abs().max(p.g) / core::f64::consts::TAU;
    let n = ((turns * 64.0) as usize).clamp(4000, 2_000_000);
    let grid = linspace(0.0, horizon, n);
    let tr = integrate_classical(alpha0, p, &grid)?;
    let end = *tr.alphas.last().expect("grid is nonempty");
    if at_rest(end, p) {
        return Ok(Some(Regime::FixedPoint));
    }
    let tail = &tr.alphas[(n * 4) / 5..];
    Ok(settled_cycle(tail).then_some(Regime::LimitCycle))
}

/// Classify the long-time behaviour by integrating from α = 0 and from a
/// perturbed start. Either start settling on an orbit means the fixed point
/// is unstable. Fails with [`Error::Indeterminate`] when neither start
/// settles within `horizon`.
pub fn classify_regime(p: &ClassicalParams, horizon: f64) -> Result<Regime> {
    if !(horizon > 0.0) || !(p.g > 0.0) || !(p.kappa > 0.0) {
        return Err(Error::Domain("classification needs g, κ and horizon > 0".into()));
    }
    let kick = 0.1 * p.limit_cycle_radius().max(1.0) * C64::new(1.0, 1.0) / 2f64.sqrt();
    let a = classify_from(C64::new(0.0, 0.0), p, horizon)?;
    let b = classify_from(kick, p, horizon)?;
    match (a, b) {
        (Some(Regime::LimitCycle), _) | (_, Some(Regime::LimitCycle)) => Ok(Regime::LimitCycle),
        (Some(Regime::FixedPoint), Some(Regime::FixedPoint)) => Ok(Regime::FixedPoint),
        _ => Err(Error::Indeterminate { horizon }),
    }
}

/// [`classify_regime`], doubling the horizon up to `max_doublings` times
/// while the result is indeterminate.
pub fn classify_regime_adaptive(p: &ClassicalParams, horizon: f64, max_doublings: u32) -> Result<Regime> {
    let mut h = horizon;
    for _ in 0..=max_doublings {
        match classify_regime(p, h) {
            Err(Error::Indeterminate { .. }) => h *= 2.0,
            other => return other,
        }
    }
    Err(Error::Indeterminate { horizon: h / 2.0 })
}

/// Bracket of the drive strength ε√κ at which the regime changes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfBracket {
    /// Largest ε√κ seen to give a limit cycle.
    pub cycle: f64,
    /// Smallest ε√κ seen to give a fixed point.
    pub fixed: f64,
    /// False when bisection stopped early because every probe inside the
    /// bracket was too close to the bifurcation to settle.
    pub resolved: bool,
}

impl HopfBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.cycle + self.fixed)
    }

    pub fn width(&self) -> f64 {
        self.fixed - self.cycle
    }
}

/// Bisect in the real drive strength ε√κ between a limit-cycle value `lo`
/// and a fixed-point value `hi` until the bracket is narrower than
/// `rel_tol` of its midpoint. An indeterminate midpoint is replaced by the
/// quarter points; if those are indeterminate too the bracket is returned
/// unresolved.
pub fn locate_hopf_crossing(g: f64, kappa: f64, delta: f64, lo: f64, hi: f64, horizon: f64, rel_tol: f64) -> Result<HopfBracket> {
    let at = |f: f64| ClassicalParams { g, kappa, delta, epsilon: C64::new(f / kappa.sqrt(), 0.0) };
    let probe = |f: f64| match classify_regime_adaptive(&at(f), horizon, 4) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Indeterminate { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    if probe(lo)? != Some(Regime::LimitCycle) {
        return Err(Error::Domain("lower bracket end is not in the limit-cycle regime".into()));
    }
    if probe(hi)? != Some(Regime::FixedPoint) {
        return Err(Error::Domain("upper bracket end is not in the fixed-point regime".into()));
    }
    let mut b = HopfBracket { cycle: lo, fixed: hi, resolved: true };
    while b.width() > rel_tol * b.midpoint() {
        let w = b.width();
        let mut moved = false;
        for f in [b.midpoint(), b.cycle + 0.25 * w, b.fixed - 0.25 * w] {
            match probe(f)? {
                Some(Regime::LimitCycle) => b.cycle = f,
                Some(Regime::FixedPoint) => b.fixed = f,
                None => continue,
            }
            moved = true;
            break;
        }
        if !moved {
            b.resolved = false;
            break;
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let p = ClassicalParams { g: 1.0, kappa: 0.5, delta: 0.0, epsilon: C64::new(0.0, 0.0) };
        assert_eq!(vdp_rhs(C64::new(1.0, 0.0), &p), C64::new(0.0, 0.0));
        let p = ClassicalParams { g: 1.0, kappa: 1.0, delta: 0.0, epsilon: C64::new(0.0, 0.0) };
        assert_eq!(vdp_rhs(C64::new(0.0, 0.0), &p), C64::new(0.0, 0.0));
    }

    #[test]
    fn threshold_values() {
        assert!((hopf_threshold(1.0, 0.0) - 0.25).abs() < 1e-15);
        assert!((hopf_threshold(0.54, 5.0) - 1.8398).abs() < 1e-3);
        let (g, d) = (0.54, 5.0);
        assert!((hopf_threshold(g, d) / hopf_threshold_exact(g, d) - 1.0).abs() < 0.01);
    }

    #[test]
    fn undriven_radius() {
        let p = ClassicalParams { g: 1.0, kappa: 0.5, delta: 2.0, epsilon: C64::new(0.0, 0.0) };
        let grid = linspace(0.0, 40.0, 401);
        let tr = integrate_classical(C64::new(0.1, 0.0), &p, &grid).unwrap();
        assert!((tr.alphas.last().unwrap().norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn undriven_is_limit_cycle() {
        let p = ClassicalParams { g: 1.0, kappa: 0.5, delta: 3.0, epsilon: C64::new(0.0, 0.0) };
        assert_eq!(classify_regime(&p, 60.0).unwrap(), Regime::LimitCycle);
    }

    #[test]
    fn strong_drive_is_fixed_point() {
        let (g, kappa, delta) = (1.0, 0.5, 3.0);
        let eps = 2.0 * hopf_threshold_exact(g, delta) / kappa.sqrt();
        let p = ClassicalParams { g, kappa, delta, epsilon: C64::new(eps, 0.0) };
        assert_eq!(classify_regime(&p, 200.0).unwrap(), Regime::FixedPoint);
    }
}
