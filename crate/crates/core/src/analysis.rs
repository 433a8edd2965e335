//! Time-series and phase-space helpers: level crossings, periods, window
//! statistics, period averages, monotone segments, harmonic least-squares
//! fits and radial profiles of Q.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::C64;
use crate::observables::HusimiGrid;

/// Times at which `x` crosses `level` upwards, linearly interpolated.
pub fn upward_crossings(t: &[f64], x: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..t.len().min(x.len()) {
        let (a, b) = (x[i - 1] - level, x[i] - level);
        if a < 0.0 && b >= 0.0 {
            let f = a / (a - b);
            out.push(t[i - 1] + f * (t[i] - t[i - 1]));
        }
    }
    out
}

/// Mean spacing of upward crossings of the series mean. Needs at least
/// three crossings.
pub fn mean_crossing_period(t: &[f64], x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c = upward_crossings(t, x, mean);
    (c.len() >= 3).then(|| (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
}

/// Indices of the samples inside [t0, t1].
pub fn window(t: &[f64], t0: f64, t1: f64) -> core::ops::Range<usize> {
    let lo = t.partition_point(|&x| x < t0);
    let hi = t.partition_point(|&x| x <= t1);
    lo..hi.max(lo)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl WindowStats {
    pub fn peak_to_peak(&self) -> f64 {
        self.max - self.min
    }
}

pub fn window_stats(x: &[f64]) -> Option<WindowStats> {
    if x.is_empty() {
        return None;
    }
    let (min, max) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    Some(WindowStats { min, max, mean: x.iter().sum::<f64>() / x.len() as f64 })
}

/// Statistics of consecutive windows of length `width` covering [t0, t1].
pub fn windowed_stats(t: &[f64], x: &[f64], t0: f64, t1: f64, width: f64) -> Vec<(f64, WindowStats)> {
    let mut out = Vec::new();
    let mut a = t0;
    while a + width <= t1 + 1e-12 * width {
        if let Some(s) = window_stats(&x[window(t, a, a + width)]) {
            out.push((a + 0.5 * width, s));
        }
        a += width;
    }
    out
}

pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1]).collect()
}

pub fn local_minima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] < x[i - 1] && x[i] <= x[i + 1]).collect()
}

/// Linear interpolation of a sampled series; `None` outside [t₀, t_end].
pub fn interp(t: &[f64], x: &[f64], at: f64) -> Option<f64> {
    let n = t.len().min(x.len());
    if n == 0 || !(at >= t[0] && at <= t[n - 1]) {
        return None;
    }
    let i = t[..n].partition_point(|&s| s <= at).clamp(1, n - 1);
    if t[i] == t[i - 1] {
        return Some(x[i]);
    }
    let f = (at - t[i - 1]) / (t[i] - t[i - 1]);
    Some(x[i - 1] + f * (x[i] - x[i - 1]))
}

/// Trapezoid average of the piecewise-linear interpolant over [a, b].
pub fn interval_mean(t: &[f64], x: &[f64], a: f64, b: f64) -> Option<f64> {
    if !(b > a) {
        return None;
    }
    let (xa, xb) = (interp(t, x, a)?, interp(t, x, b)?);
    let r = window(t, a, b);
    let mut prev = (a, xa);
    let mut area = 0.0;
    for i in r.filter(|&i| t[i] > a && t[i] < b).chain(core::iter::once(usize::MAX)) {
        let next = if i == usize::MAX { (b, xb) } else { (t[i], x[i]) };
        area += 0.5 * (prev.1 + next.1) * (next.0 - prev.0);
        prev = next;
    }
    Some(area / (b - a))
}

/// Averages over consecutive windows [t0 + kT, t0 + (k+1)T] that fit inside
/// the samples. Exact windows of one period remove the oscillation without
/// the jitter of counting samples.
pub fn period_means(t: &[f64], x: &[f64], t0: f64, period: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(period > 0.0) {
        return out;
    }
    let mut k = 0.0;
    while let Some(m) = interval_mean(t, x, t0 + k * period, t0 + (k + 1.0) * period) {
        out.push(m);
        k += 1.0;
    }
    out
}

/// Maximal run of samples over which a series moves in one direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneSegment {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub rising: bool,
}

/// Splits a series at every change of direction. Flat steps continue the
/// current segment.
pub fn monotone_segments(x: &[f64]) -> Vec<MonotoneSegment> {
    let mut out: Vec<MonotoneSegment> = Vec::new();
    for i in 1..x.len() {
        let d = x[i] - x[i - 1];
        match out.last_mut() {
            Some(s) if d == 0.0 || (d > 0.0) == s.rising => s.end = i,
            _ if d == 0.0 => {}
            _ => out.push(MonotoneSegment { start: out.last().map_or(i - 1, |s| s.end), end: i, rising: d > 0.0 }),
        }
    }
    out
}

/// Least-squares fit x(t) ≈ c₀ + c₁t + Σ_{h=1..H} (a_h cos hωt + b_h sin hωt).
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicFit {
    pub omega: f64,
    pub offset: f64,
    pub slope: f64,
    /// Amplitude √(a_h² + b_h²) of each harmonic.
    pub amplitudes: Vec<f64>,
    pub residual_rms: f64,
}

impl HarmonicFit {
    /// Half the peak-to-peak excursion of the fitted periodic part, sampled
    /// finely over one period.
    pub fn fundamental(&self) -> f64 {
        self.amplitudes.first().copied().unwrap_or(0.0)
    }
}

pub fn harmonic_fit(t: &[f64], x: &[f64], omega: f64, harmonics: usize) -> Option<HarmonicFit> {
    let n = t.len().min(x.len());
    let cols = 2 + 2 * harmonics;
    if n < cols + 1 {
        return None;
    }
    let t0 = t[0];
    let a = DMatrix::from_fn(n, cols, |i, j| {
        let s = t[i] - t0;
        match j {
            0 => 1.0,
            1 => s,
            _ => {
                let h = ((j - 2) / 2 + 1) as f64;
                if (j - 2) % 2 == 0 {
                    (h * omega * s).cos()
                } else {
                    (h * omega * s).sin()
                }
            }
        }
    });
    let b = DVector::from_iterator(n, x[..n].iter().copied());
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).ok()?;
    let resid = &b - &a * &coef;
    let residual_rms = (resid.norm_squared() / n as f64).sqrt();
    let amplitudes = (0..harmonics).map(|h| coef[2 + 2 * h].hypot(coef[3 + 2 * h])).collect();
    Some(HarmonicFit { omega, offset: coef[0], slope: coef[1], amplitudes, residual_rms })
}

/// Bilinear interpolation of Q at α; `None` outside the grid.
pub fn husimi_interp(grid: &HusimiGrid, alpha: C64) -> Option<f64> {
    let s = &grid.spec;
    let n = s.resolution;
    let fq = (alpha.re - s.q_min) / (s.q_max - s.q_min) * (n - 1) as f64;
    let fp = (alpha.im - s.p_min) / (s.p_max - s.p_min) * (n - 1) as f64;
    if !(fq >= 0.0 && fp >= 0.0 && fq <= (n - 1) as f64 && fp <= (n - 1) as f64) {
        return None;
    }
    let (iq, ip) = ((fq.floor() as usize).min(n - 2), (fp.floor() as usize).min(n - 2));
    let (u, v) = (fq - iq as f64, fp - ip as f64);
    Some(
        grid.at(iq, ip) * (1.0 - u) * (1.0 - v)
            + grid.at(iq + 1, ip) * u * (1.0 - v)
            + grid.at(iq, ip + 1) * (1.0 - u) * v
            + grid.at(iq + 1, ip + 1) * u * v,
    )
}

/// Radius along the ray from `center` at angle `theta` where Q peaks,
/// scanning `samples` points out to `r_max`.
pub fn ray_peak_radius(grid: &HusimiGrid, center: C64, theta: f64, r_max: f64, samples: usize) -> Option<f64> {
    let dir = C64::from_polar(1.0, theta);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=samples {
        let r = r_max * k as f64 / samples as f64;
        if let Some(q) = husimi_interp(grid, center + dir * r) {
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((r, q));
            }
        }
    }
    best.map(|(r, _)| r)
}

/// Distance from `center` at which a closed orbit crosses the ray at angle
/// `theta`. The orbit is treated as a polygon through the samples.
pub fn orbit_radius_at(orbit: &[C64], center: C64, theta: f64) -> Option<f64> {
    let dir = C64::from_polar(1.0, theta);
    let mut best: Option<f64> = None;
    let m = orbit.len();
    for i in 0..m {
        let (p, q) = (orbit[i] - center, orbit[(i + 1) % m] - center);
        // solve p + s(q − p) = r·dir with s ∈ [0, 1], r > 0
        let e = q - p;
        let den = e.re * dir.im - e.im * dir.re;
        if den.abs() < 1e-300 {
            continue;
        }
        let s = (p.im * dir.re - p.re * dir.im) / den;
        if !(0.0..=1.0).contains(&s) {
            continue;
        }
        let hit = p + e * s;
        let r = hit.re * dir.re + hit.im * dir.im;
        if r > 0.0 {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best
}

/// Mean of the samples of a closed orbit.
pub fn centroid(orbit: &[C64]) -> C64 {
    orbit.iter().sum::<C64>() / orbit.len().max(1) as f64
}

/// Evenly spaced angles in [0, 2π).
pub fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}
