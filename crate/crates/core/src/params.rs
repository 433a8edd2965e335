//! Laser, trap and drive parameters; effective Lamb-Dicke series; derived
//! gain and damping rates; and the adiabatic-chain validator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::units::{khz, mhz, to_khz};
use crate::warning::{Warned, Warning};

/// Default relative termination tolerance for the Lamb-Dicke series.
pub const SERIES_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 200;

/// Laser, trap and drive parameters. All rates are angular, in rad/ms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Excited-state decay γ.
    pub gamma: f64,
    /// 854 nm Rabi frequency Ω_e.
    pub omega_e_rabi: f64,
    /// 729 nm Rabi frequency Ω₁ (gain laser).
    pub omega1_rabi: f64,
    /// 729 nm Rabi frequency Ω₂ (two-phonon damping laser).
    pub omega2_rabi: f64,
    /// Lamb-Dicke parameter η.
    pub eta: f64,
    /// Mode frequency ω_r.
    pub omega_r: f64,
    /// Electric-field drive frequency ω_e.
    pub omega_e_drive: f64,
    /// Drive detuning Δ = ω_e − ω_r.
    pub delta: f64,
    /// Drive strength ε (the field phase is carried by the complex value).
    pub epsilon: C64,
    pub phi1: f64,
    pub phi2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl ExperimentParams {
    /// Working point of the ⁴⁰Ca⁺ scheme: γ/2π = 22.4 MHz, Ω_e/2π = 1.34 MHz,
    /// Ω₁/2π = 100 kHz, Ω₂/2π = 300 kHz, η = 0.07, ω_r/2π = 1 MHz,
    /// Δ/2π = 5 kHz, undriven. Laser phases and detunings select the gain and
    /// two-phonon sidebands: φ₁ = 0, δ₁ = ω_e, φ₂ = π/2, δ₂ = −2ω_e.
    pub fn reference() -> Self {
        Self::from_khz(22_400.0, 1_340.0, 100.0, 300.0, 0.07, 1_000.0, 5.0)
    }

    /// Build from ordinary frequencies in kHz with sideband-selecting laser
    /// phases and detunings and ε = 0.
    pub fn from_khz(
        gamma: f64,
        omega_e_rabi: f64,
        omega1_rabi: f64,
        omega2_rabi: f64,
        eta: f64,
        omega_r: f64,
        delta: f64,
    ) -> Self {
        let omega_r = khz(omega_r);
        let delta = khz(delta);
        let drive = omega_r + delta;
        Self {
            gamma: khz(gamma),
            omega_e_rabi: khz(omega_e_rabi),
            omega1_rabi: khz(omega1_rabi),
            omega2_rabi: khz(omega2_rabi),
            eta,
            omega_r,
            omega_e_drive: drive,
            delta,
            epsilon: C64::new(0.0, 0.0),
            phi1: 0.0,
            phi2: FRAC_PI_2,
            delta1: drive,
            delta2: -2.0 * drive,
        }
    }

    pub fn with_epsilon(mut self, epsilon: C64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_omega2(mut self, omega2_rabi: f64) -> Self {
        self.omega2_rabi = omega2_rabi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gamma", self.gamma),
            ("omega_e_rabi", self.omega_e_rabi),
            ("omega1_rabi", self.omega1_rabi),
            ("omega2_rabi", self.omega2_rabi),
            ("omega_r", self.omega_r),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::Domain(format!("eta must be finite and ≥ 0, got {}", self.eta)));
        }
        let implied = self.omega_e_drive - self.omega_r;
        let scale = self.omega_e_drive.abs().max(self.omega_r.abs()).max(1.0);
        if (implied - self.delta).abs() > 1e-12 * scale {
            return Err(Error::Domain(format!(
                "delta ({}) must equal omega_e_drive − omega_r ({implied})",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Rates fed into the phonon master equation. Angular, rad/ms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    /// Effective metastable decay Γ = Ω_e²/γ.
    #[serde(rename = "Gamma")]
    pub big_gamma: f64,
    pub eta1_tilde: f64,
    pub eta2_tilde: f64,
    /// Linear gain g = η̃₁²Ω₁²/Γ.
    pub g: f64,
    /// Two-phonon damping κ = η̃₂²Ω₂²/Γ.
    pub kappa: f64,
}

/// Where the effective Lamb-Dicke parameters come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaTilde {
    /// Evaluate both series at mean phonon number `n_bar`.
    Series { n_bar: f64 },
    /// Use fixed values.
    Fixed { eta1: f64, eta2: f64 },
}

impl Default for EtaTilde {
    fn default() -> Self {
        EtaTilde::Series { n_bar: 0.0 }
    }
}

fn check_series_args(eta: f64, n_bar: f64, tol: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::Domain(format!("mean phonon number must be ≥ 0, got {n_bar}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("series tolerance must be positive, got {tol}")));
    }
    if n_bar * eta * eta >= 1.0 {
        return Err(Error::DivergentSeries { n_bar, eta });
    }
    Ok(())
}

/// Sum `first · Σ_k r_k` where `term_{k+1} = term_k · ratio(k)`, stopping once
/// |term| < tol·|sum|.
fn sum_series(first: f64, tol: f64, ratio: impl Fn(usize) -> f64) -> f64 {
    let mut sum = first;
    let mut term = first;
    for k in 0..SERIES_MAX_TERMS {
        term *= ratio(k);
        if term.abs() < tol * sum.abs() {
            break;
        }
        sum += term;
    }
    sum
}

/// First-order effective Lamb-Dicke parameter
/// η̃₁ = Σ_k (−n̄)^k η^{2k+1} C(2k+1, k)/(2k+1)! = η Σ_k (−n̄η²)^k/(k!(k+1)!).
pub fn eta_tilde_1(eta: f64, n_bar: f64, tol: f64) -> Result<f64> {
    check_series_args(eta, n_bar, tol)?;
    let x = n_bar * eta * eta;
    Ok(sum_series(eta, tol, |k| -x / (((k + 1) * (k + 2)) as f64)))
}

/// Second-order effective Lamb-Dicke parameter
/// η̃₂ = Σ_{k≥1} (−n̄)^{k−1} η^{2k} C(2k, k−1)/(2k)! = η² Σ_j (−n̄η²)^j/(j!(j+2)!).
///
/// Sign convention: positive at n̄ = 0 (η̃₂ = η²/2); only η̃₂² enters κ.
pub fn eta_tilde_2(eta: f64, n_bar: f64, tol: f64) -> Result<f64> {
    check_series_args(eta, n_bar, tol)?;
    let x = n_bar * eta * eta;
    Ok(sum_series(eta * eta / 2.0, tol, |j| -x / (((j + 1) * (j + 3)) as f64)))
}

/// Mean phonon number at which a series reaches `target`, by bisection on
/// `[0, 1/η²)`. `None` when the target lies outside the series' range there.
pub fn n_bar_for_target(series: fn(f64, f64, f64) -> Result<f64>, eta: f64, target: f64) -> Option<f64> {
    let f = |n: f64| series(eta, n, SERIES_TOL).map(|v| v - target);
    let mut lo = 0.0;
    let mut hi = (1.0 - 1e-12) / (eta * eta);
    let (flo, fhi) = (f(lo).ok()?, f(hi).ok()?);
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid).ok()?;
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Reference Lamb-Dicke parameter of a single ion at ω_t/2π = 1 MHz.
pub const ETA_SINGLE_ION_1MHZ: f64 = 0.1;

fn check_trap(omega_t: f64) -> Result<Vec<Warning>> {
    if !(omega_t > 0.0) || !omega_t.is_finite() {
        return Err(Error::Domain(format!("trap frequency must be positive, got {omega_t}")));
    }
    let nu_mhz = to_khz(omega_t) / 1e3;
    let mut w = Vec::new();
    if !(0.1 - 1e-12..=10.0 + 1e-12).contains(&nu_mhz) {
        w.push(Warning::TrapFrequencyRange { nu_mhz });
    }
    Ok(w)
}

/// Single-ion Lamb-Dicke parameter η ∝ 1/√ω_t anchored at 0.1 for 1 MHz.
pub fn lamb_dicke_single_ion(omega_t: f64) -> Result<Warned<f64>> {
    let w = check_trap(omega_t)?;
    Ok(Warned::with(ETA_SINGLE_ION_1MHZ * (mhz(1.0) / omega_t).sqrt(), w))
}

/// Centre-of-mass Lamb-Dicke parameter of two ions: the single-ion value
/// reduced by 1/√N with N = 2.
pub fn lamb_dicke_two_ion(omega_t: f64) -> Result<Warned<f64>> {
    Ok(lamb_dicke_single_ion(omega_t)?.map(|eta| eta / 2f64.sqrt()))
}

/// Γ = Ω_e²/γ.
pub fn effective_decay(params: &ExperimentParams) -> Result<f64> {
    if params.gamma == 0.0 {
        return Err(Error::Domain("excited-state decay γ must be nonzero".into()));
    }
    Ok(params.omega_e_rabi * params.omega_e_rabi / params.gamma)
}

/// Rates with η̃ evaluated from the series at mean phonon number `n_bar`.
pub fn derive_rates(params: &ExperimentParams, n_bar: f64) -> Result<EffectiveRates> {
    derive_rates_using(params, EtaTilde::Series { n_bar })
}

pub fn derive_rates_using(params: &ExperimentParams, eta_tilde: EtaTilde) -> Result<EffectiveRates> {
    params.validate()?;
    let big_gamma = effective_decay(params)?;
    let (eta1, eta2) = match eta_tilde {
        EtaTilde::Series { n_bar } => {
            (eta_tilde_1(params.eta, n_bar, SERIES_TOL)?, eta_tilde_2(params.eta, n_bar, SERIES_TOL)?)
        }
        EtaTilde::Fixed { eta1, eta2 } => (eta1, eta2),
    };
    if big_gamma == 0.0 {
        return Err(Error::Domain("effective decay Γ vanishes (Ω_e = 0)".into()));
    }
    let c1 = eta1 * params.omega1_rabi;
    let c2 = eta2 * params.omega2_rabi;
    Ok(EffectiveRates {
        big_gamma,
        eta1_tilde: eta1,
        eta2_tilde: eta2,
        g: c1 * c1 / big_gamma,
        kappa: c2 * c2 / big_gamma,
    })
}

/// One inequality `lhs ≫ rhs` of the adiabatic chain. Frequencies in kHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Reported but not part of the overall verdict.
    #[serde(default)]
    pub advisory: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub threshold: f64,
    pub links: Vec<ChainLink>,
    pub pass: bool,
}

impl ValidationReport {
    /// Non-advisory link with the smallest ratio.
    pub fn binding_link(&self) -> Option<&ChainLink> {
        self.links.iter().filter(|l| !l.advisory).min_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }

    /// Non-advisory links whose ratio is below `floor`.
    pub fn below(&self, floor: f64) -> impl Iterator<Item = &ChainLink> {
        self.links.iter().filter(move |l| !l.advisory && l.ratio < floor)
    }

    pub fn link(&self, name: &str) -> Option<&ChainLink> {
        self.links.iter().find(|l| l.name == name)
    }
}

/// Check γ ≫ Ω_e, ω_r ≫ Γ ≫ η̃_kΩ_k ≫ ε, κ, g with "≫" read as ratio ≥ `ratio`.
///
/// Each η̃_kΩ_k is compared against the rate it produces (g for k = 1, κ for
/// k = 2). Links against the drive |ε| are advisory. Links whose right-hand
/// side vanishes are omitted.
pub fn validate_chain(params: &ExperimentParams, rates: &EffectiveRates, ratio: f64) -> Result<ValidationReport> {
    if !(ratio > 1.0) {
        return Err(Error::Domain(format!("chain threshold must exceed 1, got {ratio}")));
    }
    let c1 = rates.eta1_tilde * params.omega1_rabi;
    let c2 = rates.eta2_tilde * params.omega2_rabi;
    let eps = params.epsilon.norm();
    let candidates: [(&str, f64, f64, bool); 10] = [
        ("gamma >> Omega_e", params.gamma, params.omega_e_rabi, false),
        ("gamma >> omega_r", params.gamma, params.omega_r, false),
        ("Omega_e >> Gamma", params.omega_e_rabi, rates.big_gamma, false),
        ("omega_r >> Gamma", params.omega_r, rates.big_gamma, false),
        ("Gamma >> eta1*Omega1", rates.big_gamma, c1, false),
        ("Gamma >> eta2*Omega2", rates.big_gamma, c2, false),
        ("eta1*Omega1 >> g", c1, rates.g, false),
        ("eta2*Omega2 >> kappa", c2, rates.kappa, false),
        ("eta1*Omega1 >> |epsilon|", c1, eps, true),
        ("eta2*Omega2 >> |epsilon|", c2, eps, true),
    ];
    let links: Vec<ChainLink> = candidates
        .iter()
        .filter(|(_, _, rhs, _)| *rhs != 0.0)
        .map(|&(name, lhs, rhs, advisory)| {
            let r = lhs / rhs;
            ChainLink { name: name.into(), lhs: to_khz(lhs), rhs: to_khz(rhs), ratio: r, pass: r >= ratio, advisory }
        })
        .collect();
    let pass = links.iter().all(|l| l.advisory || l.pass);
    Ok(ValidationReport { threshold: ratio, links, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_at_zero_occupation() {
        assert_eq!(eta_tilde_1(0.07, 0.0, SERIES_TOL).unwrap(), 0.07);
        assert_eq!(eta_tilde_2(0.07, 0.0, SERIES_TOL).unwrap(), 0.07 * 0.07 / 2.0);
        assert!((eta_tilde_2(0.07, 0.0, SERIES_TOL).unwrap() - 0.00245).abs() < 1e-15);
    }

    #[test]
    fn series_guards() {
        assert!(matches!(eta_tilde_1(0.1, 100.0, SERIES_TOL), Err(Error::DivergentSeries { .. })));
        assert!(matches!(eta_tilde_2(0.1, 150.0, SERIES_TOL), Err(Error::DivergentSeries { .. })));
        assert!(eta_tilde_1(0.0, 1.0, SERIES_TOL).is_err());
        assert!(eta_tilde_1(0.1, -1.0, SERIES_TOL).is_err());
        assert!(eta_tilde_1(0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn lamb_dicke_scaling() {
        let at1 = lamb_dicke_two_ion(mhz(1.0)).unwrap();
        assert!(at1.is_clean());
        assert!((at1.value - 0.0707).abs() < 1e-4);
        assert!((lamb_dicke_single_ion(mhz(1.0)).unwrap().value - 0.1).abs() < 1e-15);
        let lo = lamb_dicke_two_ion(mhz(10.0)).unwrap().value;
        let hi = lamb_dicke_two_ion(mhz(0.1)).unwrap().value;
        assert!((lo - 0.022).abs() < 5e-4, "{lo}");
        assert!((hi - 0.22).abs() < 5e-3, "{hi}");
        assert!(!lamb_dicke_two_ion(mhz(20.0)).unwrap().is_clean());
        assert!(lamb_dicke_two_ion(0.0).is_err());
        assert!(lamb_dicke_two_ion(-1.0).is_err());
    }

    #[test]
    fn reference_decay_rate() {
        let p = ExperimentParams::reference();
        let gamma = effective_decay(&p).unwrap();
        assert!((to_khz(gamma) - 80.16).abs() < 0.01);
    }

    #[test]
    fn gain_from_quoted_eta() {
        // η̃₁ = 0.066, Ω₁/2π = 100 kHz, Γ/2π = 80 kHz → g/2π = 0.5445 kHz
        let mut p = ExperimentParams::reference();
        p.omega_e_rabi = (khz(80.0) * p.gamma).sqrt();
        let r = derive_rates_using(&p, EtaTilde::Fixed { eta1: 0.066, eta2: 0.0018 }).unwrap();
        assert!((to_khz(r.big_gamma) - 80.0).abs() < 1e-9);
        assert!((to_khz(r.g) - 0.5445).abs() < 1e-9);
        // κ/2π = (0.0018·300)²/80 kHz = 3.645 Hz
        assert!((to_khz(r.kappa) - 0.003645).abs() < 1e-12);
    }

    #[test]
    fn zero_decay_rejected() {
        let mut p = ExperimentParams::reference();
        p.gamma = 0.0;
        assert!(derive_rates(&p, 0.0).is_err());
    }

    #[test]
    fn rates_are_homogeneous() {
        let p = ExperimentParams::reference();
        let r = derive_rates(&p, 0.0).unwrap();
        let s = 3.7;
        let mut q = p.clone();
        for x in [&mut q.gamma, &mut q.omega_e_rabi, &mut q.omega1_rabi, &mut q.omega2_rabi, &mut q.omega_r, &mut q.omega_e_drive, &mut q.delta] {
            *x *= s;
        }
        let rs = derive_rates(&q, 0.0).unwrap();
        assert!((rs.big_gamma / r.big_gamma - s).abs() < 1e-12);
        assert!((rs.g / r.g - s).abs() < 1e-12);
        assert!((rs.kappa / r.kappa - s).abs() < 1e-12);
        assert_eq!(rs.eta1_tilde, r.eta1_tilde);
        assert_eq!(rs.eta2_tilde, r.eta2_tilde);
    }

    #[test]
    fn delta_must_match_drive() {
        let mut p = ExperimentParams::reference();
        assert!(p.validate().is_ok());
        p.delta += 1.0;
        assert!(p.validate().is_err());
    }

    fn reference_report(threshold: f64) -> ValidationReport {
        let p = ExperimentParams::reference();
        let r = derive_rates_using(&p, EtaTilde::Fixed { eta1: 0.066, eta2: 0.0018 }).unwrap();
        validate_chain(&p, &r, threshold).unwrap()
    }

    #[test]
    fn reference_chain_ratios() {
        let rep = reference_report(10.0);
        assert!(rep.pass);
        let ratio = |n: &str| rep.link(n).unwrap().ratio;
        assert!((ratio("gamma >> Omega_e") - 22.4 / 1.34).abs() < 1e-9);
        assert!((ratio("omega_r >> Gamma") - 12.47).abs() < 0.01);
        assert!((ratio("Gamma >> eta1*Omega1") - 80.16 / 6.6).abs() < 0.01);
        assert!(!reference_report(20.0).pass);
        assert_eq!(rep.binding_link().unwrap().name, "Gamma >> eta1*Omega1");
        // undriven: no epsilon links
        assert!(rep.links.iter().all(|l| !l.advisory));
    }

    #[test]
    fn equal_decay_and_rabi_fails() {
        let mut p = ExperimentParams::reference();
        p.omega_e_rabi = p.gamma;
        let r = derive_rates(&p, 0.0).unwrap();
        let rep = validate_chain(&p, &r, 10.0).unwrap();
        assert!(!rep.pass);
        let link = rep.link("gamma >> Omega_e").unwrap();
        assert_eq!(link.ratio, 1.0);
        assert!(!link.pass);
    }

    #[test]
    fn drive_links_are_advisory() {
        let p = ExperimentParams::reference().with_epsilon(C64::new(khz(15.0), 0.0));
        let r = derive_rates_using(&p, EtaTilde::Fixed { eta1: 0.066, eta2: 0.0018 }).unwrap();
        let rep = validate_chain(&p, &r, 10.0).unwrap();
        let eps_link = rep.link("eta2*Omega2 >> |epsilon|").unwrap();
        assert!(eps_link.advisory && !eps_link.pass);
        assert!(rep.pass);
    }

    #[test]
    fn threshold_must_exceed_one() {
        let p = ExperimentParams::reference();
        let r = derive_rates(&p, 0.0).unwrap();
        assert!(validate_chain(&p, &r, 1.0).is_err());
    }
}
