//! Experiment file schema.
//!
//! The file is TOML. Top-level keys select the run; sections describe the
//! scenario. Unknown keys are rejected so that typos surface as errors.

use std::fmt;
use std::path::Path;

use aoi_core::dynamic::DynamicConfig;
use aoi_core::selector::RemoteControlScenario;
use aoi_core::sim::{DEFAULT_HORIZON, DEFAULT_REPLICATIONS, DEFAULT_WARMUP};
use aoi_core::{DispersionForm, StrategyKind, SystemConfig};
use clap::ValueEnum;
use serde::Deserialize;

use crate::ConfigError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REALIZATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    Simulate,
    Compare,
    AlphaThreshold,
    BetaThreshold,
    Dynamic,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::AlphaThreshold => "alpha-threshold",
            Mode::BetaThreshold => "beta-threshold",
            Mode::Dynamic => "dynamic",
        }
    }

    fn allowed_sweeps(self) -> &'static [SweepParam] {
        use SweepParam::*;
        match self {
            Mode::Analytic | Mode::Simulate | Mode::Compare => &[R, Lambda, N, Alpha],
            Mode::AlphaThreshold => &[R, Lambda, N],
            Mode::BetaThreshold => &[Lambda],
            Mode::Dynamic => &[Lambda, Beta],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParam {
    R,
    #[serde(rename = "lambda")]
    Lambda,
    N,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "beta")]
    Beta,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::R => "R",
            SweepParam::Lambda => "lambda",
            SweepParam::N => "N",
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub strategies: Option<Vec<StrategyKind>>,
    pub system: Option<SystemSection>,
    pub sim: Option<SimSection>,
    pub sweep: Option<SweepSection>,
    pub dynamic: Option<DynamicSection>,
    pub remote: Option<RemoteSection>,
}

/// Either the homogeneous shorthand (`n_ues`, `bits`, `coding_rate`, `snr`,
/// `alpha`) or explicit per-UE vectors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub gen_rate: f64,
    pub overhead: f64,
    pub n_ues: Option<usize>,
    pub bits: Option<f64>,
    pub coding_rate: Option<f64>,
    pub snr: Option<f64>,
    pub alpha: Option<f64>,
    pub per_ue_bits: Option<Vec<f64>>,
    pub per_ue_blocklength: Option<Vec<f64>>,
    pub per_ue_snr: Option<Vec<f64>>,
    pub broadcast_bits: Option<f64>,
    pub broadcast_blocklength: Option<f64>,
    #[serde(default)]
    pub dispersion: DispersionForm,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            horizon: DEFAULT_HORIZON,
            warmup_fraction: DEFAULT_WARMUP,
        }
    }
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_warmup() -> f64 {
    DEFAULT_WARMUP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Annulus scenario. `outer_snr` or `ref_snr`, `mean_population` or
/// `ue_intensity`, and `beta` or `individual_bits` are alternatives.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicSection {
    #[serde(default = "one")]
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub pathloss_exp: f64,
    pub outer_snr: Option<f64>,
    pub ref_snr: Option<f64>,
    pub mean_population: Option<f64>,
    pub ue_intensity: Option<f64>,
    pub overhead: f64,
    pub common_bits: f64,
    pub individual_bits: Option<f64>,
    pub beta: Option<f64>,
    pub rate_backoff: Option<f64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
}

fn one() -> f64 {
    1.0
}

fn default_realizations() -> usize {
    DEFAULT_REALIZATIONS
}

/// Homogeneous remote-control system, from a link description
/// (`bits`, `coding_rate`, `overhead`) or directly (`cycle`, `tx_ratio`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSection {
    pub n_ues: usize,
    pub gen_rate: f64,
    pub bits: Option<f64>,
    pub coding_rate: Option<f64>,
    pub overhead: Option<f64>,
    pub cycle: Option<f64>,
    pub tx_ratio: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub horizon: Option<f64>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub seed: u64,
    pub strategies: Vec<StrategyKind>,
    pub sim: SimSection,
    pub sweep: Option<SweepSection>,
    pub system: Option<SystemSection>,
    pub dynamic: Option<DynamicSection>,
    pub remote: Option<RemoteSection>,
}

impl ExperimentSpec {
    pub fn load(path: &Path, mode: Mode, overrides: Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, mode, overrides)
    }

    pub fn parse(text: &str, mode: Mode, overrides: Overrides) -> Result<Self, ConfigError> {
        let file: ExperimentFile = toml::from_str(text).map_err(|e| ConfigError::new(e.to_string()))?;
        Self::from_file(file, mode, overrides)
    }

    pub fn from_file(file: ExperimentFile, mode: Mode, overrides: Overrides) -> Result<Self, ConfigError> {
        if let Some(m) = file.mode {
            if m != mode {
                return Err(ConfigError::field("mode", format!("file says `{m}` but `{mode}` was requested")));
            }
        }
        let mut sim = file.sim.unwrap_or_default();
        if let Some(r) = overrides.replications {
            sim.replications = r;
        }
        if let Some(h) = overrides.horizon {
            sim.horizon = h;
        }
        let spec = Self {
            mode,
            seed: overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            strategies: file.strategies.unwrap_or_else(|| StrategyKind::SIMULATED.to_vec()),
            sim,
            sweep: file.sweep,
            system: file.system,
            dynamic: file.dynamic,
            remote: file.remote,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(sw) = &self.sweep {
            if !self.mode.allowed_sweeps().contains(&sw.param) {
                return Err(ConfigError::field(
                    "sweep.param",
                    format!("`{}` cannot be swept in {} mode", sw.param.label(), self.mode),
                ));
            }
            if sw.values.is_empty() {
                return Err(ConfigError::field("sweep.values", "grid is empty"));
            }
            if sw.values.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::field("sweep.values", "grid values must be finite"));
            }
            if sw.values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::field("sweep.values", "grid must be strictly increasing"));
            }
            if sw.param == SweepParam::N && sw.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
                return Err(ConfigError::field("sweep.values", "N must be a positive integer"));
            }
        }
        match self.mode {
            Mode::Analytic | Mode::Simulate | Mode::Compare => {
                if self.strategies.is_empty() {
                    return Err(ConfigError::field("strategies", "list is empty"));
                }
                let sys = self.system.as_ref().ok_or_else(|| ConfigError::field("system", "section is required"))?;
                let homogeneous = sys.per_ue_bits.is_none();
                if let Some(sw) = &self.sweep {
                    if !homogeneous && sw.param != SweepParam::Lambda {
                        return Err(ConfigError::field(
                            "sweep.param",
                            "explicit per-UE systems can only sweep `lambda`",
                        ));
                    }
                }
                self.system_at(None).map_err(|e| e.within("system"))?;
                if self.mode != Mode::Analytic {
                    if self.sim.replications < 2 {
                        return Err(ConfigError::field("sim.replications", "need at least 2"));
                    }
                    if !(self.sim.horizon.is_finite() && self.sim.horizon > 0.0) {
                        return Err(ConfigError::field("sim.horizon", "must be finite and > 0"));
                    }
                    if !(0.0..1.0).contains(&self.sim.warmup_fraction) {
                        return Err(ConfigError::field("sim.warmup_fraction", "must lie in [0, 1)"));
                    }
                }
            }
            Mode::AlphaThreshold => {
                self.remote_at(None).map_err(|e| e.within("remote"))?;
            }
            Mode::BetaThreshold | Mode::Dynamic => {
                self.dynamic_at(None).map_err(|e| e.within("dynamic"))?;
                let realizations = self.dynamic.as_ref().map_or(0, |d| d.realizations);
                if self.mode == Mode::Dynamic && realizations < 100 {
                    return Err(ConfigError::field("dynamic.realizations", "need at least 100"));
                }
            }
        }
        Ok(())
    }

    /// Grid as `(param, value)` pairs, or one unswept point.
    pub fn grid(&self) -> Vec<Option<(SweepParam, f64)>> {
        match &self.sweep {
            Some(sw) => sw.values.iter().map(|&v| Some((sw.param, v))).collect(),
            None => vec![None],
        }
    }

    pub fn system_at(&self, point: Option<(SweepParam, f64)>) -> Result<SystemConfig, ConfigError> {
        let s = self.system.as_ref().ok_or_else(|| ConfigError::new("section is required"))?;
        let mut gen_rate = s.gen_rate;
        if let Some((SweepParam::Lambda, v)) = point {
            gen_rate = v;
        }
        let cfg = if let Some(bits) = &s.per_ue_bits {
            let need = |name: &'static str, v: &Option<Vec<f64>>| {
                v.clone().ok_or_else(|| ConfigError::field(name, "required with per_ue_bits"))
            };
            let cfg = SystemConfig {
                gen_rate,
                per_ue_bits: bits.clone(),
                per_ue_blocklength: need("per_ue_blocklength", &s.per_ue_blocklength)?,
                per_ue_snr: need("per_ue_snr", &s.per_ue_snr)?,
                overhead: s.overhead,
                broadcast_bits: s
                    .broadcast_bits
                    .ok_or_else(|| ConfigError::field("broadcast_bits", "required with per_ue_bits"))?,
                broadcast_blocklength: s
                    .broadcast_blocklength
                    .ok_or_else(|| ConfigError::field("broadcast_blocklength", "required with per_ue_bits"))?,
                dispersion: s.dispersion,
            };
            cfg.validate().map_err(|e| ConfigError::new(e.to_string()))?;
            cfg
        } else {
            let need = |name: &'static str, v: Option<f64>| {
                v.ok_or_else(|| ConfigError::field(name, "required unless per_ue_bits is given"))
            };
            let mut n = s.n_ues.ok_or_else(|| ConfigError::field("n_ues", "required unless per_ue_bits is given"))?;
            let mut rate = need("coding_rate", s.coding_rate)?;
            let mut alpha = s.alpha.unwrap_or(1.0);
            match point {
                Some((SweepParam::R, v)) => rate = v,
                Some((SweepParam::N, v)) => n = v as usize,
                Some((SweepParam::Alpha, v)) => alpha = v,
                _ => {}
            }
            let mut cfg = SystemConfig::homogeneous(
                n,
                gen_rate,
                need("bits", s.bits)?,
                rate,
                need("snr", s.snr)?,
                s.overhead,
                alpha,
            )
            .map_err(|e| ConfigError::new(e.to_string()))?;
            cfg.dispersion = s.dispersion;
            cfg
        };
        Ok(cfg)
    }

    pub fn remote_at(&self, point: Option<(SweepParam, f64)>) -> Result<RemoteControlScenario, ConfigError> {
        let r = self.remote.as_ref().ok_or_else(|| ConfigError::new("section is required"))?;
        let mut n = r.n_ues;
        let mut gen_rate = r.gen_rate;
        let mut rate = r.coding_rate;
        match point {
            Some((SweepParam::N, v)) => n = v as usize,
            Some((SweepParam::Lambda, v)) => gen_rate = v,
            Some((SweepParam::R, v)) => rate = Some(v),
            _ => {}
        }
        let sc = match (r.cycle, r.tx_ratio) {
            (Some(cycle), Some(rho)) => {
                if r.bits.is_some() || r.coding_rate.is_some() || r.overhead.is_some() {
                    return Err(ConfigError::new("give either cycle/tx_ratio or bits/coding_rate/overhead"));
                }
                if matches!(point, Some((SweepParam::R, _))) {
                    return Err(ConfigError::field("sweep.param", "sweeping R needs bits/coding_rate/overhead"));
                }
                // The cycle scales with N at a fixed per-UE serving time.
                let per_ue = cycle / r.n_ues as f64;
                RemoteControlScenario::new(n, gen_rate, per_ue * n as f64, rho)
            }
            (None, None) => {
                let bits = r.bits.ok_or_else(|| ConfigError::field("bits", "required"))?;
                let rate = rate.ok_or_else(|| ConfigError::field("coding_rate", "required"))?;
                let overhead = r.overhead.ok_or_else(|| ConfigError::field("overhead", "required"))?;
                RemoteControlScenario::from_link(n, gen_rate, bits, rate, overhead)
            }
            _ => return Err(ConfigError::new("cycle and tx_ratio go together")),
        };
        sc.map_err(|e| ConfigError::new(e.to_string()))
    }

    pub fn dynamic_at(&self, point: Option<(SweepParam, f64)>) -> Result<DynamicConfig, ConfigError> {
        let d = self.dynamic.as_ref().ok_or_else(|| ConfigError::new("section is required"))?;
        let exactly_one = |a: Option<f64>, b: Option<f64>, names: &str| match (a, b) {
            (Some(_), Some(_)) | (None, None) => Err(ConfigError::new(format!("give exactly one of {names}"))),
            _ => Ok(()),
        };
        exactly_one(d.outer_snr, d.ref_snr, "outer_snr / ref_snr")?;
        exactly_one(d.mean_population, d.ue_intensity, "mean_population / ue_intensity")?;
        exactly_one(d.beta, d.individual_bits, "beta / individual_bits")?;
        let mut beta_bits = d.individual_bits.unwrap_or_else(|| d.beta.unwrap_or(0.0) * d.common_bits);
        if let Some((SweepParam::Beta, v)) = point {
            beta_bits = v * d.common_bits;
        }
        let mut cfg = DynamicConfig {
            ue_intensity: d.ue_intensity.unwrap_or(0.0),
            inner_radius: d.inner_radius,
            outer_radius: d.outer_radius,
            pathloss_exp: d.pathloss_exp,
            ref_snr: d.ref_snr.unwrap_or(1.0),
            overhead: d.overhead,
            common_bits: d.common_bits,
            individual_bits: beta_bits,
            rate_backoff: d.rate_backoff,
        };
        if let Some(g) = d.outer_snr {
            cfg = cfg.with_outer_snr(g);
        }
        if let Some(pop) = d.mean_population {
            cfg = cfg.with_mean_population(pop);
        }
        if let Some((SweepParam::Lambda, v)) = point {
            cfg = cfg.with_mean_population(v);
        }
        cfg.validate().map_err(|e| ConfigError::new(e.to_string()))?;
        Ok(cfg)
    }
}
