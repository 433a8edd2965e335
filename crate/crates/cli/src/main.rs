use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phonon_tc::config::{rates_scenario, Format, Overrides, RatesArg, RunConfig};
use phonon_tc::elimination::eliminate_member;
use phonon_tc::failure::Failure;
use phonon_tc::formats::{num, write_json};
use phonon_tc::runner::{run, validate_members, RunSettings};
use phonon_tc_core::presets::{preset, Scenario, UnitReading};

#[derive(Parser)]
#[command(name = "phonon-tc", version, about = "Trapped-ion phonon time-crystal simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectories, Husimi grids and a manifest.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Output directory [default: runs/<scenario name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep members and Husimi rows.
        #[arg(long)]
        parallel: Option<usize>,
        /// Run even when a parameter-chain link is below ratio 2.
        #[arg(long)]
        force: bool,
        /// Comma-separated subset of csv,json.
        #[arg(long, value_delimiter = ',')]
        formats: Option<Vec<Format>>,
    },
    /// Print the parameter-chain report; exit 0 iff every member passes.
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Also write validation.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both adiabatic-elimination stages and compare with closed forms.
    Eliminate {
        #[command(flatten)]
        source: Source,
        /// Fock dimension of the elimination (small: the joint space is 9d).
        #[arg(long, default_value_t = 5)]
        fock_dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset as a config file with an inline scenario.
    DumpPreset {
        name: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Args)]
struct Source {
    /// Built-in scenario: fig2, fig3, fig4, fig5 or oracle-small.
    #[arg(long, conflicts_with_all = ["config", "rates"])]
    preset: Option<String>,
    /// TOML run configuration.
    #[arg(long, conflicts_with = "rates")]
    config: Option<PathBuf>,
    /// Effective rates as ν in kHz: g=..,kappa=..,delta=..
    #[arg(long)]
    rates: Option<RatesArg>,
    /// Set ε from a fixed ε√κ value (with --rates).
    #[arg(long, requires = "rates")]
    epsilon_from_threshold: Option<f64>,
    /// Units of the --epsilon-from-threshold value: rad/ms or kHz based.
    #[arg(long, value_enum, default_value_t = Reading::Angular)]
    reading: Reading,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reading {
    Angular,
    Ordinary,
}

#[derive(Args)]
struct OverrideArgs {
    /// Fock dimension for every member.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Relative tolerance; the absolute tolerance is tol/100.
    #[arg(long)]
    tol: Option<f64>,
    /// Uniform output samples including both ends.
    #[arg(long)]
    samples: Option<usize>,
    /// Integration end in ms.
    #[arg(long = "t-end")]
    t_end_ms: Option<f64>,
    /// Comma-separated times in ms for Husimi grids.
    #[arg(long, value_delimiter = ',')]
    husimi_at: Option<Vec<f64>>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides { cutoff: a.cutoff, tol: a.tol, samples: a.samples, t_end_ms: a.t_end_ms, husimi_at: a.husimi_at }
    }
}

impl Source {
    fn config(&self) -> Result<RunConfig, Failure> {
        match (&self.preset, &self.config, &self.rates) {
            (Some(name), None, None) => Ok(RunConfig { preset: Some(name.clone()), ..RunConfig::default() }),
            (None, Some(path), None) => RunConfig::load(path),
            (None, None, Some(r)) => {
                let reading = match self.reading {
                    Reading::Angular => UnitReading::Angular,
                    Reading::Ordinary => UnitReading::Ordinary,
                };
                Ok(RunConfig::inline(rates_scenario(*r, self.epsilon_from_threshold, reading)))
            }
            _ => Err(Failure::Validation("give exactly one of --preset, --config or --rates".into())),
        }
    }
}

fn do_run(source: Source, overrides: Overrides, out: Option<PathBuf>, parallel: Option<usize>, force: bool, formats: Option<Vec<Format>>) -> Result<(), Failure> {
    let cfg = source.config()?;
    let scenario = cfg.scenario(&overrides)?;
    let settings = RunSettings {
        out: out.or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("runs").join(&scenario.name)),
        formats: formats.or(cfg.formats.clone()).unwrap_or_else(|| vec![Format::Csv, Format::Json]),
        parallel: parallel.or(cfg.parallel).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        force: force || cfg.force.unwrap_or(false),
    };
    let outcome = run(&scenario, &settings)?;
    for m in &outcome.manifest.members {
        for w in &m.warnings {
            log::warn!("{}: {w}", m.label);
        }
    }
    println!("{}", outcome.manifest_path.display());
    Ok(())
}

fn print_validation(scenario: &Scenario, out: Option<PathBuf>) -> Result<bool, Failure> {
    let members = scenario.members()?;
    let reports = validate_members(scenario, &members)?;
    if reports.is_empty() {
        println!("{}: no laser parameters to validate", scenario.name);
    }
    for v in &reports {
        let verdict = if v.report.pass { "PASS" } else { "FAIL" };
        println!("{} [{verdict}, threshold {}]", v.label, num(v.report.threshold));
        for l in &v.report.links {
            let tag = if l.advisory { " (advisory)" } else { "" };
            let ok = if l.pass { "ok" } else { "LOW" };
            println!("  {:<26} {:>14} kHz / {:>14} kHz = ratio {:>12} {ok}{tag}", l.name, num(l.lhs), num(l.rhs), num(l.ratio));
        }
        if let Some(b) = v.report.binding_link() {
            println!("  binding link: {} (ratio {})", b.name, num(b.ratio));
        }
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        write_json(&dir.join("validation.json"), &reports)?;
    }
    Ok(reports.iter().all(|v| v.report.pass))
}

fn execute(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Run { source, overrides, out, parallel, force, formats } => {
            do_run(source, overrides.into(), out, parallel, force, formats)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { source, overrides, out } => {
            let scenario = source.config()?.scenario(&overrides.into())?;
            Ok(if print_validation(&scenario, out)? { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Eliminate { source, fock_dim, out } => {
            let scenario = source.config()?.scenario(&Overrides::default())?;
            let reports = scenario.members()?.iter().map(|m| eliminate_member(m, fock_dim)).collect::<Result<Vec<_>, _>>()?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
                    write_json(&dir.join("eliminate.json"), &reports)?;
                }
                None => println!("{}", serde_json::to_string_pretty(&reports).expect("plain data serialises")),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpPreset { name, overrides } => {
            let scenario = Overrides::from(overrides).apply(preset(&name)?)?;
            print!("{}", RunConfig::inline(scenario).to_toml()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
