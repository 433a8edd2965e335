//! Scenario execution: chain validation, per-member integration in parallel,
//! observables, and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use phonon_tc_core::adiabatic::{stage2_embed, stage2_full_model};
use phonon_tc_core::classical::{integrate_classical, ClassicalParams, ClassicalTrajectory};
use phonon_tc_core::fock::{number_op, DensityMatrix, FockSpace};
use phonon_tc_core::master_eq::{integrate, integrate_phonon, phonon_observables, IntegrationOptions, MonitorReport, Trajectory};
use phonon_tc_core::observables::{fock_populations, husimi_from_rows, husimi_row, HusimiGrid, HusimiSpec};
use phonon_tc_core::ode::{OdeOptions, StepStats};
use phonon_tc_core::params::{validate_chain, EffectiveRates, ExperimentParams, ValidationReport};
use phonon_tc_core::presets::{DriveResolution, InitialState, Member, ModelSpec, Scenario};
use phonon_tc_core::units::to_khz;
use phonon_tc_core::{Warned, Warning};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Format;
use crate::failure::Failure;
use crate::formats::{write_classical, write_csv, write_husimi, write_json, write_trajectory};

/// Links below this ratio abort a run unless forced.
pub const HARD_CHAIN_RATIO: f64 = 2.0;

/// Steady-state bound on the top Fock population.
pub const TAIL_RULE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RunSettings {
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub parallel: usize,
    pub force: bool,
}

impl RunSettings {
    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct MemberValidation {
    pub label: String,
    pub report: ValidationReport,
    /// Non-advisory links below [`HARD_CHAIN_RATIO`].
    pub hard_failures: Vec<String>,
}

/// Chain report for every member with laser parameters.
pub fn validate_members(scenario: &Scenario, members: &[Member]) -> Result<Vec<MemberValidation>, Failure> {
    members
        .iter()
        .filter_map(|m| m.params.as_ref().map(|p| (m, p)))
        .map(|(m, p)| {
            let report = validate_chain(p, &m.rates, scenario.chain_ratio)?;
            let hard_failures = report.below(HARD_CHAIN_RATIO).map(|l| l.name.clone()).collect();
            Ok(MemberValidation { label: m.label.clone(), report, hard_failures })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OracleOutput {
    /// ⟨a†a⟩ of the full two-ion model on the member grid.
    pub n_full: Vec<f64>,
    /// sup_t |N_eff − N_full| / max_t N_eff.
    pub sup_rel_error: f64,
}

#[derive(Clone, Debug)]
pub struct MemberOutput {
    pub member: Member,
    pub trajectory: Trajectory,
    pub initial_warnings: Vec<Warning>,
    pub husimi: Vec<(f64, Warned<HusimiGrid>)>,
    /// Full population vectors at the requested Fock times.
    pub fock: Vec<(f64, Vec<f64>)>,
    pub oracle: Option<OracleOutput>,
    /// p_{d−1} at the final sample.
    pub final_tail: f64,
}

fn integration_options(s: &Scenario, m: &Member, snapshots: Vec<f64>) -> IntegrationOptions {
    IntegrationOptions {
        ode: OdeOptions { rtol: s.integrator.rtol, atol: s.integrator.atol, ..OdeOptions::default() },
        populations: Some(s.outputs.populations.min(m.cutoff - 1)),
        eigen_checks: s.integrator.eigen_checks,
        snapshots,
        ..IntegrationOptions::default()
    }
}

/// Half-width of the default Husimi window: twice the undriven limit-cycle
/// radius, or a window sized from ⟨N⟩ when κ = 0.
fn husimi_half_width(s: &Scenario, m: &Member, tr: &Trajectory) -> f64 {
    if let Some(w) = s.outputs.husimi_half_width {
        return w;
    }
    if m.rates.kappa > 0.0 {
        2.0 * (m.rates.g / (2.0 * m.rates.kappa)).sqrt()
    } else {
        let n_max = tr.real("N").map_or(0.0, |n| n.into_iter().fold(0.0, f64::max));
        3.0 * n_max.sqrt() + 4.0
    }
}

/// Q on a grid with rows computed in parallel.
pub fn husimi_parallel(rho: &DensityMatrix, spec: &HusimiSpec) -> Result<Warned<HusimiGrid>, Failure> {
    spec.validate()?;
    let rows = (0..spec.resolution).into_par_iter().map(|ip| husimi_row(rho, spec, ip)).collect();
    Ok(husimi_from_rows(*spec, rows))
}

fn oracle_run(s: &Scenario, m: &Member, rho0: &DensityMatrix, grid: &[f64], eff: &Trajectory) -> Result<Option<OracleOutput>, Failure> {
    let (ModelSpec::Oracle(o), Some(r)) = (&s.model, m.chain_ratio) else { return Ok(None) };
    let (p, rates) = o.params(r)?;
    let space = FockSpace::new(m.cutoff)?;
    let full = stage2_full_model(&p, &rates, space)?;
    let rho_f = DensityMatrix::new(stage2_embed(rho0.matrix()))?;
    let mut opts = integration_options(s, m, Vec::new());
    opts.populations = None;
    let tr = integrate(&full, &rho_f, grid, &[("N".into(), number_op(space).embed(4, 1))], &opts)?;
    let n_full = tr.real("N").expect("recorded");
    let n_eff = eff.real("N").expect("recorded");
    let peak = n_eff.iter().copied().fold(0.0, f64::max);
    let sup = n_eff.iter().zip(&n_full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Some(OracleOutput { n_full, sup_rel_error: sup / peak }))
}

/// Integrate one member and extract every requested observable. No I/O.
pub fn simulate_member(s: &Scenario, m: &Member) -> Result<MemberOutput, Failure> {
    let space = FockSpace::new(m.cutoff)?;
    let Warned { value: rho0, warnings: initial_warnings } = m.initial.build(space)?;
    let grid = s.member_grid(m);
    let t_end = *grid.last().expect("validated grid");
    let husimi_times: Vec<f64> = s.outputs.husimi_times.iter().map(|&t| s.grid_time(t)).collect();
    let fock_times: Vec<f64> = s.outputs.fock_times.iter().map(|&t| s.grid_time(t)).collect();
    let mut snaps: Vec<f64> = husimi_times.iter().chain(&fock_times).copied().collect();
    snaps.push(t_end);
    let opts = integration_options(s, m, snaps);

    let tr = integrate_phonon(&m.phonon, &rho0, &grid, &phonon_observables(space), &opts)?;
    let snapshot = |t: f64| tr.snapshot(t).ok_or_else(|| Failure::Validation(format!("no state kept at t = {t}")));

    let half = husimi_half_width(s, m, &tr);
    let spec = HusimiSpec::centered(half, s.outputs.husimi_resolution);
    let husimi = husimi_times
        .iter()
        .map(|&t| Ok((t, husimi_parallel(snapshot(t)?, &spec)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let fock = fock_times
        .iter()
        .map(|&t| Ok((t, fock_populations(snapshot(t)?, m.cutoff - 1)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let final_tail = snapshot(t_end)?.get(m.cutoff - 1, m.cutoff - 1).re;
    let oracle = oracle_run(s, m, &rho0, &grid, &tr)?;
    Ok(MemberOutput { member: m.clone(), trajectory: tr, initial_warnings, husimi, fock, oracle, final_tail })
}

/// Mean-field trajectory for a member, started from ⟨a⟩ of its initial state.
pub fn classical_for(s: &Scenario, m: &Member) -> Result<ClassicalTrajectory, Failure> {
    let alpha0 = match m.initial {
        InitialState::Coherent { re, im } => phonon_tc_core::C64::new(re, im),
        InitialState::Vacuum | InitialState::Thermal { .. } => phonon_tc_core::C64::new(0.0, 0.0),
    };
    Ok(integrate_classical(alpha0, &ClassicalParams::from(&m.phonon), &s.member_grid(m))?)
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ParamsEcho {
    /// Angular values, rad/ms.
    pub angular: ExperimentParams,
    /// Ordinary frequencies ν = ω/2π in kHz.
    pub nu_khz: BTreeMap<&'static str, f64>,
}

impl ParamsEcho {
    fn new(p: &ExperimentParams) -> Self {
        let nu_khz = BTreeMap::from([
            ("gamma", to_khz(p.gamma)),
            ("omega_e_rabi", to_khz(p.omega_e_rabi)),
            ("omega1_rabi", to_khz(p.omega1_rabi)),
            ("omega2_rabi", to_khz(p.omega2_rabi)),
            ("omega_r", to_khz(p.omega_r)),
            ("omega_e_drive", to_khz(p.omega_e_drive)),
            ("delta", to_khz(p.delta)),
            ("epsilon_abs", to_khz(p.epsilon.norm())),
        ]);
        Self { angular: p.clone(), nu_khz }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatesEcho {
    pub angular: EffectiveRates,
    pub big_gamma_khz: f64,
    pub g_khz: f64,
    pub kappa_khz: f64,
    pub delta_angular: f64,
    pub delta_khz: f64,
    /// Real and imaginary parts of ε, rad/ms.
    pub epsilon_angular: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct HusimiRecord {
    pub time_ms: f64,
    pub file: Option<String>,
    pub axes_file: Option<String>,
    pub half_width: f64,
    pub resolution: usize,
    pub integral: f64,
    pub max: f64,
    pub boundary_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRecord {
    pub final_top_population: f64,
    pub rule: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberRecord {
    pub label: String,
    pub cutoff: usize,
    pub t_end_ms: f64,
    pub samples: usize,
    pub params: Option<ParamsEcho>,
    pub rates: RatesEcho,
    pub drive: DriveResolution,
    pub initial: InitialState,
    pub omega2_khz: Option<f64>,
    pub chain_ratio: Option<f64>,
    pub chain_pass: Option<bool>,
    pub integrator: IntegrationOptions,
    pub monitor: MonitorReport,
    pub steps: StepStats,
    pub tail: TailRecord,
    pub husimi: Vec<HusimiRecord>,
    pub oracle_sup_rel_error: Option<f64>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub total_s: f64,
    pub members_s: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub program: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    pub members: Vec<MemberRecord>,
    pub classical_file: Option<String>,
    pub validation_file: Option<String>,
    pub forced: bool,
    /// Wall-clock figures; the only part of the manifest that varies
    /// between identical runs.
    pub timing: Timing,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub outputs: Vec<MemberOutput>,
}

fn fmt_time(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

fn write_member(dir: &Path, settings: &RunSettings, out: &MemberOutput) -> Result<(Vec<String>, Vec<HusimiRecord>), Failure> {
    let m = &out.member;
    let mut files = Vec::new();
    let csv = settings.wants(Format::Csv);
    let json = settings.wants(Format::Json);
    if csv {
        let name = format!("{}_trajectory.csv", m.label);
        write_trajectory(&dir.join(&name), &out.trajectory, m.omega2_khz)?;
        files.push(name);
        if !out.fock.is_empty() {
            let name = format!("{}_fock.csv", m.label);
            let mut header = vec!["t_ms".to_string()];
            header.extend((0..m.cutoff).map(|n| format!("p{n}")));
            let rows = out.fock.iter().map(|(t, p)| std::iter::once(*t).chain(p.iter().copied()).collect());
            write_csv(&dir.join(&name), &header, rows)?;
            files.push(name);
        }
        if let Some(o) = &out.oracle {
            let name = format!("{}_oracle.csv", m.label);
            let header: Vec<String> = ["t_ms", "Na_effective", "Na_full"].iter().map(|s| s.to_string()).collect();
            let n_eff = out.trajectory.real("N").expect("recorded");
            let rows = (0..n_eff.len()).map(|i| vec![out.trajectory.times[i], n_eff[i], o.n_full[i]]);
            write_csv(&dir.join(&name), &header, rows)?;
            files.push(name);
        }
    }
    let mut records = Vec::new();
    for (t, grid) in &out.husimi {
        let g = &grid.value;
        let stem = format!("{}_husimi_t{}", m.label, fmt_time(*t));
        let file = csv.then(|| format!("{stem}.csv"));
        let axes_file = json.then(|| format!("{stem}_axes.json"));
        if let Some(f) = &file {
            write_husimi(&dir.join(f), g)?;
            files.push(f.clone());
        }
        if let Some(f) = &axes_file {
            #[derive(Serialize)]
            struct Axes<'a> {
                time_ms: f64,
                layout: &'static str,
                q: &'a [f64],
                p: &'a [f64],
                spec: HusimiSpec,
            }
            let (q, p) = (g.spec.q_axis(), g.spec.p_axis());
            let axes = Axes { time_ms: *t, layout: "row index = p, column index = q, alpha = q + i p", q: &q, p: &p, spec: g.spec };
            write_json(&dir.join(f), &axes)?;
            files.push(f.clone());
        }
        records.push(HusimiRecord {
            time_ms: *t,
            file,
            axes_file,
            half_width: g.spec.q_max,
            resolution: g.spec.resolution,
            integral: g.integral(),
            max: g.max(),
            boundary_max: g.boundary_max(),
        });
    }
    Ok((files, records))
}

fn member_record(s: &Scenario, out: &MemberOutput, chain_pass: Option<bool>, files: Vec<String>, husimi: Vec<HusimiRecord>) -> MemberRecord {
    let m = &out.member;
    let mut warnings: Vec<String> = out.initial_warnings.iter().map(|w| w.to_string()).collect();
    warnings.extend(out.husimi.iter().flat_map(|(_, g)| g.warnings.iter().map(|w| w.to_string())));
    let tail_pass = out.final_tail < TAIL_RULE;
    if !tail_pass {
        warnings.push(format!("final top Fock population {:e} exceeds {TAIL_RULE:e}; raise the cutoff", out.final_tail));
    }
    let snaps: Vec<f64> = out.trajectory.snapshots.iter().map(|x| x.time).collect();
    MemberRecord {
        label: m.label.clone(),
        cutoff: m.cutoff,
        t_end_ms: *out.trajectory.times.last().expect("nonempty"),
        samples: out.trajectory.times.len(),
        params: m.params.as_ref().map(ParamsEcho::new),
        rates: RatesEcho {
            angular: m.rates,
            big_gamma_khz: to_khz(m.rates.big_gamma),
            g_khz: to_khz(m.rates.g),
            kappa_khz: to_khz(m.rates.kappa),
            delta_angular: m.phonon.delta,
            delta_khz: to_khz(m.phonon.delta),
            epsilon_angular: [m.phonon.epsilon.re, m.phonon.epsilon.im],
        },
        drive: m.drive,
        initial: m.initial,
        omega2_khz: m.omega2_khz,
        chain_ratio: m.chain_ratio,
        chain_pass,
        integrator: integration_options(s, m, snaps),
        monitor: out.trajectory.monitor.clone(),
        steps: out.trajectory.stats,
        tail: TailRecord { final_top_population: out.final_tail, rule: TAIL_RULE, pass: tail_pass },
        husimi,
        oracle_sup_rel_error: out.oracle.as_ref().map(|o| o.sup_rel_error),
        warnings,
        files,
    }
}

/// Run every member of `scenario`, write all files under `settings.out` and
/// return the manifest.
pub fn run(scenario: &Scenario, settings: &RunSettings) -> Result<RunOutcome, Failure> {
    let started = Instant::now();
    let members = scenario.members()?;
    let validation = validate_members(scenario, &members)?;
    for v in &validation {
        if !v.report.pass {
            warn!("{}: parameter chain below ratio {} (binding link {:?})", v.label, v.report.threshold, v.report.binding_link().map(|l| &l.name));
        }
        if !v.hard_failures.is_empty() && !settings.force {
            return Err(Failure::Validation(format!(
                "{}: chain links below ratio {HARD_CHAIN_RATIO}: {}; pass --force to run anyway",
                v.label,
                v.hard_failures.join(", ")
            )));
        }
    }
    let dir = &settings.out;
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.parallel.max(1))
        .build()
        .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    let results: Vec<Result<(MemberOutput, Vec<String>, Vec<HusimiRecord>, f64), Failure>> = pool.install(|| {
        members
            .par_iter()
            .map(|m| {
                let t0 = Instant::now();
                info!("{}: integrating d = {} to {} ms", m.label, m.cutoff, m.t_end_ms);
                let out = simulate_member(scenario, m)?;
                let (files, husimi) = write_member(dir, settings, &out)?;
                let secs = t0.elapsed().as_secs_f64();
                info!("{}: done in {secs:.1} s", m.label);
                Ok((out, files, husimi, secs))
            })
            .collect()
    });

    let classical_file = match (scenario.outputs.classical, members.first()) {
        (true, Some(first)) if settings.wants(Format::Csv) => {
            let tr = classical_for(scenario, first)?;
            let name = "classical.csv".to_string();
            write_classical(&dir.join(&name), &tr, first.omega2_khz)?;
            Some(name)
        }
        _ => None,
    };
    let validation_file = if settings.wants(Format::Json) && !validation.is_empty() {
        let name = "validation.json".to_string();
        write_json(&dir.join(&name), &validation)?;
        Some(name)
    } else {
        None
    };

    let mut records = Vec::new();
    let mut outputs = Vec::new();
    let mut members_s = BTreeMap::new();
    for r in results {
        let (out, files, husimi, secs) = r?;
        let chain_pass = validation.iter().find(|v| v.label == out.member.label).map(|v| v.report.pass);
        records.push(member_record(scenario, &out, chain_pass, files, husimi));
        members_s.insert(out.member.label.clone(), secs);
        outputs.push(out);
    }
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.clone(),
        members: records,
        classical_file,
        validation_file,
        forced: settings.force,
        timing: Timing { total_s: started.elapsed().as_secs_f64(), members_s },
    };
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    Ok(RunOutcome { manifest, manifest_path, outputs })
}
