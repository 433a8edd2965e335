//! Adaptive Dormand–Prince 5(4) integrator over complex state vectors.

use alloc::vec;
use alloc::vec::Vec;


#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// First-order system y' = f(t, y).
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

impl<F: FnMut(f64, &[C64], &mut [C64])> OdeSystem for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated from the initial derivative when absent.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_init: None, h_max: None, max_steps: 50_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Stepper holding the current state. Steps are clipped so that every
/// requested target time is hit exactly.
pub struct Dopri5<'s, S: OdeSystem> {
    sys: &'s mut S,
    opts: OdeOptions,
    t: f64,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    h: f64,
    err_old: f64,
    stats: StepStats,
}

impl<'s, S: OdeSystem> Dopri5<'s, S> {
    pub fn new(sys: &'s mut S, t0: f64, y0: Vec<C64>, opts: OdeOptions) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y0.len() });
        }
        if !(opts.rtol > 0.0) || !(opts.atol >= 0.0) {
            return Err(Error::Domain("ODE tolerances must be positive".into()));
        }
        let k = core::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
        let mut s = Self {
            sys,
            opts,
            t: t0,
            y: y0,
            k,
            ytmp: vec![C64::new(0.0, 0.0); n],
            ynew: vec![C64::new(0.0, 0.0); n],
            h: 0.0,
            err_old: 1e-4,
            stats: StepStats::default(),
        };
        s.sys.rhs(t0, &s.y, &mut s.k[0]);
        s.stats.rhs_evals += 1;
        s.h = match opts.h_init {
            Some(h) if h > 0.0 => h,
            _ => s.initial_step(),
        };
        if let Some(hm) = opts.h_max {
            s.h = s.h.min(hm);
        }
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Current step-size proposal.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    fn scale(&self, i: usize, a: C64, b: C64) -> f64 {
        let _ = i;
        self.opts.atol + self.opts.rtol * a.norm_sqr().max(b.norm_sqr()).sqrt()
    }

    fn weighted_rms(&self, v: &[C64], y: &[C64]) -> f64 {
        let n = v.len().max(1);
        let s: f64 = v
            .iter()
            .zip(y)
            .enumerate()
            .map(|(i, (vi, yi))| {
                let sc = self.scale(i, *yi, *yi);
                vi.norm_sqr() / (sc * sc)
            })
            .sum();
        (s / n as f64).sqrt()
    }

    fn initial_step(&mut self) -> f64 {
        let d0 = self.weighted_rms(&self.y, &self.y);
        let d1 = self.weighted_rms(&self.k[0], &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + self.k[0][i] * h0;
        }
        let (head, tail) = self.k.split_at_mut(1);
        let _ = head;
        self.sys.rhs(self.t + h0, &self.ytmp, &mut tail[0]);
        self.stats.rhs_evals += 1;
        let diff: Vec<C64> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = self.weighted_rms(&diff, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1)
    }

    /// Attempt one step of size `h`; on acceptance the state is advanced and
    /// the returned error norm is ≤ 1.
    fn try_step(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        let t = self.t;
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($a:expr, $j:expr)),*]) => {{
                for i in 0..n {
                    let mut acc = self.y[i];
                    $( acc += self.k[$j][i] * (h * $a); )*
                    self.ytmp[i] = acc;
                }
                let (lo, hi) = self.k.split_at_mut($dst);
                let _ = lo;
                self.sys.rhs(t + $c * h, &self.ytmp, &mut hi[0]);
            }};
        }
        stage!(1, C2, [(A21, 0)]);
        stage!(2, C3, [(A31, 0), (A32, 1)]);
        stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
        stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
        stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
        for i in 0..n {
            self.ynew[i] = self.y[i]
                + (self.k[0][i] * B1 + self.k[2][i] * B3 + self.k[3][i] * B4 + self.k[4][i] * B5 + self.k[5][i] * B6) * h;
        }
        {
            let (lo, hi) = self.k.split_at_mut(6);
            let _ = lo;
            self.sys.rhs(t + h, &self.ynew, &mut hi[0]);
        }
        self.stats.rhs_evals += 6;
        let mut s = 0.0;
        for i in 0..n {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let sc = self.scale(i, self.y[i], self.ynew[i]);
            s += e.norm_sqr() / (sc * sc);
        }
        let err = (s / n.max(1) as f64).sqrt();
        if err.is_nan() {
            f64::INFINITY
        } else {
            err
        }
    }

    /// Integrate up to exactly `t_end`, calling `on_step(t, y)` after every
    /// accepted step.
    pub fn advance_to_with(&mut self, t_end: f64, mut on_step: impl FnMut(f64, &[C64]) -> Result<()>) -> Result<()> {
        if t_end < self.t {
            return Err(Error::InvalidTimeGrid);
        }
        let expo = 0.2 - BETA * 0.75;
        let mut last_rejected = false;
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(Error::TooManySteps { time: self.t, steps: self.opts.max_steps });
            }
            let remaining = t_end - self.t;
            let clipped = self.h >= remaining;
            let h = if clipped { remaining } else { self.h };
            let floor = 16.0 * f64::EPSILON * self.t.abs().max(t_end.abs()).max(1e-300);
            if h < floor && !clipped {
                return Err(Error::StepSizeUnderflow { time: self.t, step: h });
            }
            let err = self.try_step(h);
            let fac11 = err.powf(expo);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                self.err_old = err.max(1e-4);
                self.t = if clipped { t_end } else { self.t + h };
                core::mem::swap(&mut self.y, &mut self.ynew);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                if !clipped || h_new > self.h {
                    self.h = h_new;
                }
                if let Some(hm) = self.opts.h_max {
                    self.h = self.h.min(hm);
                }
                last_rejected = false;
                on_step(self.t, &self.y)?;
            } else {
                let fac = (fac11 / SAFETY).min(1.0 / FAC_MIN);
                self.h = h / fac;
                self.stats.rejected += 1;
                last_rejected = true;
                if !self.h.is_finite() || self.h <= 0.0 {
                    return Err(Error::StepSizeUnderflow { time: self.t, step: self.h });
                }
            }
        }
        Ok(())
    }

    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        self.advance_to_with(t_end, |_, _| Ok(()))
    }
}

/// Integrate and return the state at each time in `grid`. The first grid point
/// is the initial time.
pub fn solve<S: OdeSystem>(sys: &mut S, y0: Vec<C64>, grid: &[f64], opts: OdeOptions) -> Result<(Vec<Vec<C64>>, StepStats)> {
    check_grid(grid)?;
    let mut st = Dopri5::new(sys, grid[0], y0, opts)?;
    let mut out = Vec::with_capacity(grid.len());
    out.push(st.y().to_vec());
    for &t in &grid[1..] {
        st.advance_to(t)?;
        out.push(st.y().to_vec());
    }
    Ok((out, st.stats()))
}

/// Nonempty, finite, strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimeGrid);
    }
    Ok(())
}

/// `n` evenly spaced points from `t0` to `t1` inclusive.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    #[test]
    fn harmonic_rotation() {
        let w = 3.0;
        let mut sys = (1usize, move |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = -I * w * y[0]);
        let grid = linspace(0.0, 10.0, 11);
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let (ys, stats) = solve(&mut sys, vec![C64::new(1.0, 0.0)], &grid, opts).unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            let exact = (-I * w * *t).exp();
            assert!((y[0] - exact).norm() < 1e-8, "t={t}");
        }
        assert!(stats.accepted > 10);
    }

    #[test]
    fn decay_hits_grid_exactly() {
        let mut sys = (2usize, |_t: f64, y: &[C64], dy: &mut [C64]| {
            dy[0] = -y[0];
            dy[1] = -2.0 * y[1];
        });
        let grid = [0.0, 0.1, 0.35, 2.0];
        let (ys, _) = solve(&mut sys, vec![C64::new(1.0, 0.0); 2], &grid, OdeOptions::default()).unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0].re - (-t).exp()).abs() < 1e-7);
            assert!((y[1].re - (-2.0 * t).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn time_dependent_rhs() {
        let mut sys = (1usize, |t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(t.cos(), 0.0));
        let (ys, _) = solve(&mut sys, vec![C64::new(0.0, 0.0)], &[0.0, 2.0], OdeOptions::default()).unwrap();
        assert!((ys[1][0].re - 2f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn bad_grids() {
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[1.0, 0.5]).is_err());
        assert!(check_grid(&[0.0, f64::NAN]).is_err());
        assert!(check_grid(&[0.0]).is_ok());
    }

    #[test]
    fn step_budget_enforced() {
        let mut sys = (1usize, |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = -I * 100.0 * y[0]);
        let opts = OdeOptions { max_steps: 5, ..Default::default() };
        let r = solve(&mut sys, vec![C64::new(1.0, 0.0)], &[0.0, 100.0], opts);
        assert!(matches!(r, Err(Error::TooManySteps { .. })));
    }
}
