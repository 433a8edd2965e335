//! Run configuration files.
//!
//! A configuration is a TOML document: flat `key = value` pairs followed by
//! `[section]` tables. It names either a built-in preset or carries a full
//! inline `[scenario]`, never both:
//!
//! ```toml
//! preset = "fig3"            # or an inline [scenario] table
//! out = "runs/fig3"
//! formats = ["csv", "json"]
//! parallel = 4
//! force = false
//!
//! [overrides]
//! cutoff = 128
//! tol = 1e-8                 # rtol; atol is tol/100
//! samples = 501
//! t_end_ms = 5.0
//! husimi_at = [0.0, 5.0]
//! ```
//!
//! Frequencies inside `[scenario]` are ordinary frequencies ν in kHz.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use phonon_tc_core::presets::{preset, DriveSpec, InitialState, IntegratorSpec, ModelSpec, OutputSpec, Scenario, UnitReading};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub cutoff: Option<usize>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub t_end_ms: Option<f64>,
    pub husimi_at: Option<Vec<f64>>,
}

impl Overrides {
    /// Fields set in `other` win.
    pub fn merged(&self, other: &Overrides) -> Overrides {
        Overrides {
            cutoff: other.cutoff.or(self.cutoff),
            tol: other.tol.or(self.tol),
            samples: other.samples.or(self.samples),
            t_end_ms: other.t_end_ms.or(self.t_end_ms),
            husimi_at: other.husimi_at.clone().or_else(|| self.husimi_at.clone()),
        }
    }

    pub fn apply(&self, mut s: Scenario) -> Result<Scenario, Failure> {
        if let Some(d) = self.cutoff {
            s = s.with_cutoff(d);
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(Failure::Validation(format!("tolerance must be positive, got {tol}")));
            }
            s.integrator.rtol = tol;
            s.integrator.atol = tol * 1e-2;
        }
        if let Some(n) = self.samples {
            s.samples = n;
        }
        if let Some(t) = self.t_end_ms {
            s.t_end_ms = t;
        }
        if let Some(times) = &self.husimi_at {
            s.outputs.husimi_times = times.clone();
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub parallel: Option<usize>,
    pub force: Option<bool>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub overrides: Overrides,
    pub scenario: Option<Scenario>,
}

fn is_default(o: &Overrides) -> bool {
    *o == Overrides::default()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, Failure> {
        toml::to_string(self).map_err(|e| Failure::Validation(format!("config serialisation: {e}")))
    }

    /// Config holding a full inline scenario, equivalent to the preset.
    pub fn inline(scenario: Scenario) -> Self {
        Self { scenario: Some(scenario), ..Self::default() }
    }

    /// The scenario named or carried by this config, with `extra` overrides
    /// applied on top of the config's own.
    pub fn scenario(&self, extra: &Overrides) -> Result<Scenario, Failure> {
        let base = match (&self.preset, &self.scenario) {
            (Some(name), None) => preset(name)?,
            (None, Some(s)) => s.clone(),
            (Some(_), Some(_)) => {
                return Err(Failure::Validation("config sets both `preset` and `[scenario]`".into()));
            }
            (None, None) => return Err(Failure::Validation("config needs `preset` or `[scenario]`".into())),
        };
        self.overrides.merged(extra).apply(base)
    }
}

/// `g=..,kappa=..,delta=..` with ν-values in kHz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatesArg {
    pub g_khz: f64,
    pub kappa_khz: f64,
    pub delta_khz: f64,
}

impl FromStr for RatesArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (mut g, mut kappa, mut delta) = (None, None, None);
        for part in s.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let v: f64 = value.trim().parse().map_err(|_| format!("bad number {value:?} for {key}"))?;
            match key.trim() {
                "g" => g = Some(v),
                "kappa" => kappa = Some(v),
                "delta" => delta = Some(v),
                other => return Err(format!("unknown rate {other:?} (expected g, kappa, delta)")),
            }
        }
        match (g, kappa, delta) {
            (Some(g_khz), Some(kappa_khz), Some(delta_khz)) => Ok(RatesArg { g_khz, kappa_khz, delta_khz }),
            _ => Err("rates need all of g, kappa and delta".into()),
        }
    }
}

/// Scenario built from effective rates given directly, vacuum start.
pub fn rates_scenario(rates: RatesArg, eps_sqrt_kappa: Option<f64>, reading: UnitReading) -> Scenario {
    let drive = match eps_sqrt_kappa {
        Some(x) => DriveSpec::FromThreshold { eps_sqrt_kappa: x, reading, phase: 0.0 },
        None => DriveSpec::Off,
    };
    Scenario {
        name: "custom".into(),
        description: "Effective rates given on the command line".into(),
        cutoff: 192,
        t_end_ms: 5.0,
        samples: 501,
        chain_ratio: 10.0,
        model: ModelSpec::Rates { g_khz: rates.g_khz, kappa_khz: rates.kappa_khz, delta_khz: rates.delta_khz },
        drive,
        initial: InitialState::Vacuum,
        sweep: None,
        outputs: OutputSpec::default(),
        integrator: IntegratorSpec::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_arg_parsing() {
        let r: RatesArg = "g=0.54,kappa=0.003645,delta=5".parse().unwrap();
        assert_eq!(r, RatesArg { g_khz: 0.54, kappa_khz: 0.003645, delta_khz: 5.0 });
        assert!("g=1,kappa=2".parse::<RatesArg>().is_err());
        assert!("g=1,kappa=2,delta=x".parse::<RatesArg>().is_err());
        assert!("g=1,kappa=2,delta=3,eps=4".parse::<RatesArg>().is_err());
    }

    #[test]
    fn preset_and_inline_are_exclusive() {
        let both = RunConfig { preset: Some("fig3".into()), scenario: Some(preset("fig3").unwrap()), ..Default::default() };
        assert!(both.scenario(&Overrides::default()).is_err());
        assert!(RunConfig::default().scenario(&Overrides::default()).is_err());
    }

    #[test]
    fn inline_round_trip() {
        for name in phonon_tc_core::presets::PRESET_NAMES {
            let cfg = RunConfig::inline(preset(name).unwrap());
            let back = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
    }

    #[test]
    fn overrides_layer() {
        let cfg = RunConfig::parse("preset = \"fig3\"\n[overrides]\ncutoff = 40\nsamples = 11\n").unwrap();
        let s = cfg.scenario(&Overrides { samples: Some(21), tol: Some(1e-6), ..Default::default() }).unwrap();
        assert_eq!((s.cutoff, s.samples), (40, 21));
        assert_eq!((s.integrator.rtol, s.integrator.atol), (1e-6, 1e-8));
        let bad = Overrides { husimi_at: Some(vec![7.0]), ..Default::default() };
        assert!(cfg.scenario(&bad).is_err());
        assert!(RunConfig::parse("preset = \"fig3\"\nbogus = 1\n").is_err());
    }
}
