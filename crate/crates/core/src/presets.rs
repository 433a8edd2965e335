//! Canonical scenarios: the reference working point with figure-specific
//! sweeps, and a scaled parameter set for checking adiabatic elimination.
//!
//! Scenarios are plain serde data; every frequency is an ordinary frequency
//! in kHz. [`Scenario::members`] turns a scenario into concrete, angular-unit
//! models.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_state_vector, fock_state, thermal_state, DensityMatrix, FockSpace};
use crate::linalg::C64;
use crate::master_eq::PhononModel;
use crate::ode::linspace;
use crate::params::{derive_rates_using, EffectiveRates, EtaTilde, ExperimentParams};
use crate::units::{khz, to_khz};
use crate::warning::Warned;

pub const PRESET_NAMES: &[&str] = &["fig2", "fig3", "fig4", "fig5", "oracle-small"];

/// Drive strength ε√κ quoted for the time-crystal figures, in kHz^{3/2}.
pub const EPS_SQRT_KAPPA: f64 = 14.27;

/// Effective Lamb-Dicke parameters quoted alongside the working point.
pub const QUOTED_ETA_TILDE: EtaTilde = EtaTilde::Fixed { eta1: 0.066, eta2: 0.0018 };

/// Laser and trap settings in kHz. Laser phases and detunings are fixed to
/// the sideband-selecting choice of [`ExperimentParams::from_khz`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSpec {
    pub gamma_khz: f64,
    pub omega_e_rabi_khz: f64,
    pub omega1_rabi_khz: f64,
    pub omega2_rabi_khz: f64,
    pub eta: f64,
    pub omega_r_khz: f64,
    pub delta_khz: f64,
    pub eta_tilde: EtaTilde,
}

impl PhysicalSpec {
    pub fn reference() -> Self {
        Self {
            gamma_khz: 22_400.0,
            omega_e_rabi_khz: 1_340.0,
            omega1_rabi_khz: 100.0,
            omega2_rabi_khz: 300.0,
            eta: 0.07,
            omega_r_khz: 1_000.0,
            delta_khz: 5.0,
            eta_tilde: QUOTED_ETA_TILDE,
        }
    }

    pub fn params(&self) -> ExperimentParams {
        ExperimentParams::from_khz(
            self.gamma_khz,
            self.omega_e_rabi_khz,
            self.omega1_rabi_khz,
            self.omega2_rabi_khz,
            self.eta,
            self.omega_r_khz,
            self.delta_khz,
        )
    }
}

/// Scaled stage-2 set for the elimination check. For chain ratio r the
/// couplings are η̃₁Ω₁ = Γ/r and η̃₂Ω₂ = √(κΓ), so g = Γ/r²; Δ, ε and κ are
/// fixed multiples of g and the horizon is fixed in units of 1/g.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub gamma_khz: f64,
    pub eta: f64,
    pub ratios: Vec<f64>,
    pub kappa_over_g: f64,
    pub delta_over_g: f64,
    pub epsilon_over_g: f64,
    /// Integration horizon in units of 1/g.
    pub horizon_g: f64,
}

impl OracleSpec {
    /// Parameters at chain ratio `r`. The stage-1 scales are set so that
    /// every stage-1 link also equals r.
    pub fn params(&self, r: f64) -> Result<(ExperimentParams, EffectiveRates)> {
        if !(r > 1.0) {
            return Err(Error::Domain(format!("chain ratio must exceed 1, got {r}")));
        }
        let big_gamma = khz(self.gamma_khz);
        let eta1 = self.eta;
        let eta2 = self.eta * self.eta / 2.0;
        let g = big_gamma / (r * r);
        let kappa = self.kappa_over_g * g;
        let delta = self.delta_over_g * g;
        let omega_r = r * big_gamma;
        let p = ExperimentParams {
            gamma: r * r * big_gamma,
            omega_e_rabi: r * big_gamma,
            omega1_rabi: big_gamma / (r * eta1),
            omega2_rabi: (kappa * big_gamma).sqrt() / eta2,
            eta: self.eta,
            omega_r,
            omega_e_drive: omega_r + delta,
            delta,
            epsilon: C64::new(self.epsilon_over_g * g, 0.0),
            phi1: 0.0,
            phi2: core::f64::consts::FRAC_PI_2,
            delta1: omega_r + delta,
            delta2: -2.0 * (omega_r + delta),
        };
        let rates = derive_rates_using(&p, EtaTilde::Series { n_bar: 0.0 })?;
        Ok((p, rates))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Physical(PhysicalSpec),
    /// Effective rates given directly.
    Rates { g_khz: f64, kappa_khz: f64, delta_khz: f64 },
    Oracle(OracleSpec),
}

/// How a quoted ε√κ value is turned into ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitReading {
    /// ε and κ angular (rad/ms): ε = X/√κ.
    Angular,
    /// ε/2π and κ/2π in kHz: ε/2π = X/√(κ/2π).
    Ordinary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSpec {
    Off,
    /// ε/2π in kHz with phase φ.
    Amplitude { epsilon_khz: f64, phase: f64 },
    /// ε from a fixed ε√κ product.
    FromThreshold { eps_sqrt_kappa: f64, reading: UnitReading, phase: f64 },
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec::Off
    }
}

/// ε resolved against κ, with both readings of a threshold-style value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveResolution {
    /// ε/2π in kHz actually used.
    pub epsilon_khz: f64,
    pub phase: f64,
    pub reading: Option<UnitReading>,
    /// ε/2π in kHz under the angular reading.
    pub epsilon_khz_angular: Option<f64>,
    /// ε/2π in kHz under the ordinary-frequency reading.
    pub epsilon_khz_ordinary: Option<f64>,
}

impl DriveResolution {
    pub fn epsilon(&self) -> C64 {
        C64::from_polar(khz(self.epsilon_khz), self.phase)
    }
}

impl DriveSpec {
    /// Resolve against the angular damping rate κ.
    pub fn resolve(&self, kappa: f64) -> Result<DriveResolution> {
        match *self {
            DriveSpec::Off => Ok(DriveResolution {
                epsilon_khz: 0.0,
                phase: 0.0,
                reading: None,
                epsilon_khz_angular: None,
                epsilon_khz_ordinary: None,
            }),
            DriveSpec::Amplitude { epsilon_khz, phase } => Ok(DriveResolution {
                epsilon_khz,
                phase,
                reading: None,
                epsilon_khz_angular: None,
                epsilon_khz_ordinary: None,
            }),
            DriveSpec::FromThreshold { eps_sqrt_kappa, reading, phase } => {
                if !(kappa > 0.0) {
                    return Err(Error::Domain("ε√κ drive needs κ > 0".into()));
                }
                let angular = to_khz(eps_sqrt_kappa / kappa.sqrt());
                let ordinary = eps_sqrt_kappa / to_khz(kappa).sqrt();
                let used = match reading {
                    UnitReading::Angular => angular,
                    UnitReading::Ordinary => ordinary,
                };
                Ok(DriveResolution {
                    epsilon_khz: used,
                    phase,
                    reading: Some(reading),
                    epsilon_khz_angular: Some(angular),
                    epsilon_khz_ordinary: Some(ordinary),
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Vacuum,
    Thermal { n_bar0: f64 },
    Coherent { re: f64, im: f64 },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Vacuum
    }
}

impl InitialState {
    pub fn build(&self, space: FockSpace) -> Result<Warned<DensityMatrix>> {
        match *self {
            InitialState::Vacuum => Ok(Warned::clean(fock_state(space, 0)?)),
            InitialState::Thermal { n_bar0 } => thermal_state(space, n_bar0),
            InitialState::Coherent { re, im } => {
                let v = coherent_state_vector(space, C64::new(re, im));
                let w = v.warnings;
                Ok(Warned::with(DensityMatrix::from_pure(&v.value)?, w))
            }
        }
    }
}

/// Parameter varied across the members of a scenario. Each member may carry
/// its own Fock cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    Omega2 { values_khz: Vec<f64>, cutoffs: Vec<usize> },
    NBar0 { values: Vec<f64>, cutoffs: Vec<usize> },
}

impl Sweep {
    fn len(&self) -> usize {
        match self {
            Sweep::Omega2 { values_khz, .. } => values_khz.len(),
            Sweep::NBar0 { values, .. } => values.len(),
        }
    }

    fn cutoffs(&self) -> &[usize] {
        match self {
            Sweep::Omega2 { cutoffs, .. } | Sweep::NBar0 { cutoffs, .. } => cutoffs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Trajectory files carry p_0..p_K.
    pub populations: usize,
    pub husimi_times: Vec<f64>,
    pub husimi_resolution: usize,
    /// Half-width of the square Husimi window; 2√(g/2κ) when absent.
    pub husimi_half_width: Option<f64>,
    pub classical: bool,
    /// Times at which the full population vector p_0..p_{d−1} is written.
    pub fock_times: Vec<f64>,
    /// Window over which populations are summarised.
    pub fock_window: Option<[f64; 2]>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            populations: 15,
            husimi_times: Vec::new(),
            husimi_resolution: 201,
            husimi_half_width: None,
            classical: true,
            fock_times: Vec::new(),
            fock_window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub rtol: f64,
    pub atol: f64,
    pub eigen_checks: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, eigen_checks: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub cutoff: usize,
    /// Ignored by oracle scenarios, whose members set their own horizon.
    pub t_end_ms: f64,
    pub samples: usize,
    /// Chain-validation threshold.
    pub chain_ratio: f64,
    pub model: ModelSpec,
    pub drive: DriveSpec,
    pub initial: InitialState,
    pub sweep: Option<Sweep>,
    pub outputs: OutputSpec,
    pub integrator: IntegratorSpec,
}

/// One concrete run of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub label: String,
    pub cutoff: usize,
    /// Absent for scenarios that give rates directly.
    pub params: Option<ExperimentParams>,
    pub rates: EffectiveRates,
    pub phonon: PhononModel,
    pub drive: DriveResolution,
    pub initial: InitialState,
    /// Ω₂/2π in kHz, used to rescale N_a.
    pub omega2_khz: Option<f64>,
    /// Chain ratio, for oracle members.
    pub chain_ratio: Option<f64>,
    /// Integration end; oracle members run to `horizon_g / g`.
    pub t_end_ms: f64,
}

fn fmt_value(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "p")
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 2 {
            return Err(Error::InvalidCutoff(self.cutoff));
        }
        if !(self.t_end_ms > 0.0) || self.samples < 2 {
            return Err(Error::Domain("need t_end_ms > 0 and at least two samples".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.len() == 0 {
                return Err(Error::Domain("sweep has no values".into()));
            }
            if !sw.cutoffs().is_empty() && sw.cutoffs().len() != sw.len() {
                return Err(Error::Domain("sweep cutoffs must match its values".into()));
            }
        }
        for &t in self.outputs.husimi_times.iter().chain(&self.outputs.fock_times) {
            if !(0.0..=self.t_end_ms).contains(&t) {
                return Err(Error::Domain(format!("output time {t} outside [0, {}]", self.t_end_ms)));
            }
        }
        Ok(())
    }

    /// Uniform samples plus every requested output time, sorted.
    pub fn time_grid(&self) -> Vec<f64> {
        let mut t = linspace(0.0, self.t_end_ms, self.samples);
        t.extend(self.outputs.husimi_times.iter().chain(&self.outputs.fock_times));
        t.sort_by(f64::total_cmp);
        let tol = 1e-9 * self.t_end_ms;
        t.dedup_by(|a, b| (*a - *b).abs() <= tol);
        t
    }

    /// Sample times for one member: [`Scenario::time_grid`], or a uniform
    /// grid to the member's own horizon for oracle members.
    pub fn member_grid(&self, member: &Member) -> Vec<f64> {
        match self.model {
            ModelSpec::Oracle(_) => linspace(0.0, member.t_end_ms, self.samples),
            _ => self.time_grid(),
        }
    }

    /// Grid value closest to `time`.
    pub fn grid_time(&self, time: f64) -> f64 {
        let g = self.time_grid();
        g.into_iter().min_by(|a, b| (a - time).abs().total_cmp(&(b - time).abs())).unwrap_or(time)
    }

    pub fn members(&self) -> Result<Vec<Member>> {
        self.validate()?;
        match &self.model {
            ModelSpec::Oracle(o) => o
                .ratios
                .iter()
                .map(|&r| {
                    let (p, rates) = o.params(r)?;
                    let phonon = PhononModel { cutoff: self.cutoff, g: rates.g, kappa: rates.kappa, delta: p.delta, epsilon: p.epsilon };
                    Ok(Member {
                        label: format!("ratio_{}", fmt_value(r)),
                        cutoff: self.cutoff,
                        params: Some(p.clone()),
                        rates,
                        phonon,
                        drive: DriveSpec::Amplitude { epsilon_khz: to_khz(p.epsilon.re), phase: 0.0 }.resolve(rates.kappa)?,
                        initial: self.initial,
                        omega2_khz: Some(to_khz(p.omega2_rabi)),
                        chain_ratio: Some(r),
                        t_end_ms: o.horizon_g / rates.g,
                    })
                })
                .collect(),
            ModelSpec::Rates { g_khz, kappa_khz, delta_khz } => {
                let rates = EffectiveRates { big_gamma: 0.0, eta1_tilde: 0.0, eta2_tilde: 0.0, g: khz(*g_khz), kappa: khz(*kappa_khz) };
                let drive = self.drive.resolve(rates.kappa)?;
                self.expand(|initial, _omega2, cutoff, label| {
                    let phonon = PhononModel { cutoff, g: rates.g, kappa: rates.kappa, delta: khz(*delta_khz), epsilon: drive.epsilon() };
                    Ok(Member {
                        label,
                        cutoff,
                        params: None,
                        rates,
                        phonon,
                        drive,
                        initial,
                        omega2_khz: None,
                        chain_ratio: None,
                        t_end_ms: self.t_end_ms,
                    })
                })
            }
            ModelSpec::Physical(phys) => self.expand(|initial, omega2, cutoff, label| {
                let mut spec = phys.clone();
                if let Some(w) = omega2 {
                    spec.omega2_rabi_khz = w;
                }
                let base = spec.params();
                let rates = derive_rates_using(&base, spec.eta_tilde)?;
                let drive = self.drive.resolve(rates.kappa)?;
                let params = base.with_epsilon(drive.epsilon());
                let phonon = PhononModel::from_rates(FockSpace::new(cutoff)?, &params, &rates);
                Ok(Member {
                    label,
                    cutoff,
                    params: Some(params),
                    rates,
                    phonon,
                    drive,
                    initial,
                    omega2_khz: Some(spec.omega2_rabi_khz),
                    chain_ratio: None,
                    t_end_ms: self.t_end_ms,
                })
            }),
        }
    }

    fn expand(&self, mut make: impl FnMut(InitialState, Option<f64>, usize, String) -> Result<Member>) -> Result<Vec<Member>> {
        let cut = |cutoffs: &[usize], i: usize| cutoffs.get(i).copied().unwrap_or(self.cutoff);
        match &self.sweep {
            None => Ok(vec![make(self.initial, None, self.cutoff, self.name.clone())?]),
            Some(Sweep::Omega2 { values_khz, cutoffs }) => values_khz
                .iter()
                .enumerate()
                .map(|(i, &w)| make(self.initial, Some(w), cut(cutoffs, i), format!("omega2_{}khz", fmt_value(w))))
                .collect(),
            Some(Sweep::NBar0 { values, cutoffs }) => values
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    make(InitialState::Thermal { n_bar0: n }, None, cut(cutoffs, i), format!("nbar0_{}", fmt_value(n)))
                })
                .collect(),
        }
    }

    /// Override the cutoff of every member.
    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        match &mut self.sweep {
            Some(Sweep::Omega2 { cutoffs, .. }) | Some(Sweep::NBar0 { cutoffs, .. }) => cutoffs.clear(),
            None => {}
        }
        self
    }
}

fn reference_scenario(name: &str, description: &str) -> Scenario {
    Scenario {
        name: name.to_string(),
        description: description.to_string(),
        cutoff: 192,
        t_end_ms: 5.0,
        samples: 501,
        chain_ratio: 10.0,
        model: ModelSpec::Physical(PhysicalSpec::reference()),
        drive: DriveSpec::FromThreshold { eps_sqrt_kappa: EPS_SQRT_KAPPA, reading: UnitReading::Angular, phase: 0.0 },
        initial: InitialState::Vacuum,
        sweep: None,
        outputs: OutputSpec::default(),
        integrator: IntegratorSpec::default(),
    }
}

/// Look up a built-in scenario.
pub fn preset(name: &str) -> Result<Scenario> {
    let s = match name {
        "fig2" => Scenario {
            t_end_ms: 10.0,
            samples: 2001,
            sweep: Some(Sweep::Omega2 { values_khz: vec![300.0, 500.0, 700.0], cutoffs: vec![192, 128, 96] }),
            ..reference_scenario("fig2", "Rescaled phonon number and purity from vacuum for three damping-laser strengths")
        },
        "fig3" => Scenario {
            outputs: OutputSpec { husimi_times: vec![0.0, 5.0], ..OutputSpec::default() },
            ..reference_scenario("fig3", "Husimi Q function from vacuum at the start and after 5 ms")
        },
        "fig4" => Scenario {
            t_end_ms: 6.0,
            samples: 1201,
            sweep: Some(Sweep::NBar0 { values: vec![1.0, 5.0, 10.0], cutoffs: vec![192, 192, 192] }),
            ..reference_scenario("fig4", "Rescaled phonon number from thermal states of three mean occupations")
        },
        "fig5" => Scenario {
            t_end_ms: 4.0,
            samples: 1601,
            initial: InitialState::Thermal { n_bar0: 5.0 },
            outputs: OutputSpec {
                populations: 40,
                fock_times: linspace(2.5, 2.75, 6),
                fock_window: Some([2.0, 3.0]),
                ..OutputSpec::default()
            },
            ..reference_scenario("fig5", "Fock populations from a thermal state with mean occupation 5")
        },
        "oracle-small" => Scenario {
            name: "oracle-small".into(),
            description: "Scaled two-ion model, full versus eliminated, at chain ratios 10 and 30".into(),
            cutoff: 6,
            t_end_ms: 1.0,
            samples: 201,
            chain_ratio: 10.0,
            model: ModelSpec::Oracle(OracleSpec {
                gamma_khz: 1.0,
                eta: 0.07,
                ratios: vec![10.0, 30.0],
                kappa_over_g: 0.5,
                delta_over_g: 0.5,
                epsilon_over_g: 0.2,
                horizon_g: 5.0,
            }),
            drive: DriveSpec::Off,
            initial: InitialState::Vacuum,
            sweep: None,
            outputs: OutputSpec { populations: 5, husimi_resolution: 51, classical: false, ..OutputSpec::default() },
            integrator: IntegratorSpec { rtol: 1e-10, atol: 1e-12, eigen_checks: 20 },
        },
        _ => return Err(Error::UnknownPreset { name: name.to_string(), valid: PRESET_NAMES }),
    };
    Ok(s)
}
