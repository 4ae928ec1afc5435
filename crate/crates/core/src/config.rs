//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "kind": "rdja-scan",
//!   "spectrum": "default",
//!   "rabi_mhz": 5.37,
//!   "grid": { "start": 0, "stop": 800, "step": 10 },
//!   "method": "quadrature:64",
//!   "output": { "path": "rdja.csv", "format": "csv" }
//! }
//! ```
//!
//! `spectrum` is `"default"`, `{"point_mass": {"detuning_mhz": 0}}`,
//! `{"single_mode": {"center_mhz": 0, "envelope_ns": 1382}}` or
//! `{"modes": [{"weight": 1, "center_mhz": 0, "sigma_mhz": 0.16}]}`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bath::{paper_default_spectrum, BathSpectrum, Mode, PolarizationModel, DEFAULT_ENVELOPE_NS};
use crate::dsl::{parse_dsl, DslDocument};
use crate::error::{Error, Result};
use crate::protocols::DEFAULT_RABI_MHZ;
use crate::pulse::{EnsembleMethod, SignalModel};

/// Upper bound on grid points, to catch unit mistakes before a long run.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RdjaScan,
    EchoScan,
    TraceDistance,
    NonMarkovianity,
    Fit,
    MarkovTransition,
    Rabi,
    RunSeq,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::RdjaScan => "rdja-scan",
            ExperimentKind::EchoScan => "echo-scan",
            ExperimentKind::TraceDistance => "trace-distance",
            ExperimentKind::NonMarkovianity => "non-markovianity",
            ExperimentKind::Fit => "fit",
            ExperimentKind::MarkovTransition => "markov-transition",
            ExperimentKind::Rabi => "rabi",
            ExperimentKind::RunSeq => "run-seq",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumConfig {
    #[default]
    Default,
    PointMass { detuning_mhz: f64 },
    SingleMode { center_mhz: f64, envelope_ns: Option<f64> },
    Modes(Vec<Mode>),
}

impl SpectrumConfig {
    pub fn build(&self) -> Result<BathSpectrum> {
        match self {
            SpectrumConfig::Default => Ok(paper_default_spectrum()),
            SpectrumConfig::PointMass { detuning_mhz } => {
                if !detuning_mhz.is_finite() {
                    return Err(Error::Config("point-mass detuning must be finite".into()));
                }
                Ok(BathSpectrum::point_mass(*detuning_mhz))
            }
            SpectrumConfig::SingleMode { center_mhz, envelope_ns } => {
                let t = envelope_ns.unwrap_or(DEFAULT_ENVELOPE_NS);
                if !(t.is_finite() && t > 0.0 && center_mhz.is_finite()) {
                    return Err(Error::Config("single mode needs a finite center and envelope > 0".into()));
                }
                Ok(BathSpectrum::single_mode(*center_mhz, t))
            }
            SpectrumConfig::Modes(modes) => BathSpectrum::new(modes.clone()),
        }
    }
}

/// Uniform grid `start, start + step, ...` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::Config(format!("grid step {} must be > 0", self.step)));
        }
        if self.stop <= self.start {
            return Err(Error::Config(format!("grid stop {} must exceed start {}", self.stop, self.start)));
        }
        if self.count() > MAX_GRID_POINTS {
            return Err(Error::Config(format!("grid has {} points; limit is {MAX_GRID_POINTS}", self.count())));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        ((self.stop - self.start) / self.step * (1.0 + 1e-12) + 1e-9).floor() as usize + 1
    }

    /// Points computed as `start + i·step` so no error accumulates.
    pub fn points(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            _ => Err(Error::Config(format!("unknown output format `{s}`; expected csv, json or both"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Detector model applied to simulated populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub c_max: f64,
    pub c_min: f64,
    pub shots: u64,
    /// Draw Poisson counts; otherwise the expected counts are used.
    #[serde(default)]
    pub noisy: bool,
}

impl SignalConfig {
    pub fn model(&self) -> Result<SignalModel> {
        SignalModel::new(self.c_max, self.c_min, self.shots)
    }
}

/// A sequence from a DSL file, for `run-seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DslSource {
    pub path: PathBuf,
    pub sequence: String,
    /// Spectrum defined in the same file, overriding `spectrum`.
    pub spectrum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default = "default_rabi")]
    pub rabi_mhz: f64,
    /// Scan variable grid in ns: τ, t2, t, or pulse duration depending on `kind`.
    pub grid: Option<GridSpec>,
    #[serde(default, with = "method_string")]
    pub method: EnsembleMethod,
    /// Seed for Monte Carlo sampling and shot noise.
    pub seed: Option<u64>,
    pub signal: Option<SignalConfig>,
    #[serde(default)]
    pub ideal_pulses: bool,
    /// First echo interval for `echo-scan`.
    #[serde(default = "default_t1")]
    pub t1_ns: f64,
    /// Field sweep in mT for `markov-transition`.
    pub fields_mt: Option<GridSpec>,
    #[serde(default)]
    pub polarization: PolarizationModel,
    /// Extremum threshold for the revival sum.
    #[serde(default)]
    pub prominence: f64,
    /// Two-column CSV (`t_ns,value`) to fit instead of a simulated curve.
    pub input: Option<PathBuf>,
    pub dsl: Option<DslSource>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_rabi() -> f64 {
    DEFAULT_RABI_MHZ
}

fn default_t1() -> f64 {
    170.0
}

mod method_string {
    use super::*;

    pub fn serialize<S: Serializer>(m: &EnsembleMethod, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(m)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<EnsembleMethod, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            spectrum: SpectrumConfig::Default,
            rabi_mhz: DEFAULT_RABI_MHZ,
            grid: None,
            method: EnsembleMethod::default(),
            seed: None,
            signal: None,
            ideal_pulses: false,
            t1_ns: default_t1(),
            fields_mt: None,
            polarization: PolarizationModel::default(),
            prominence: 0.0,
            input: None,
            dsl: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Method with the configured seed applied.
    pub fn effective_method(&self) -> EnsembleMethod {
        match self.seed {
            Some(seed) => self.method.with_seed(seed),
            None => self.method,
        }
    }

    pub fn grid_points(&self) -> Result<Vec<f64>> {
        let g = self
            .grid
            .ok_or_else(|| Error::Config(format!("`grid` is required for {}", self.kind.as_str())))?;
        g.validate()?;
        Ok(g.points())
    }

    pub fn load_dsl(&self) -> Result<(DslSource, DslDocument)> {
        let src = self
            .dsl
            .clone()
            .ok_or_else(|| Error::Config("`dsl` with `path` and `sequence` is required for run-seq".into()))?;
        let text = std::fs::read_to_string(&src.path)
            .map_err(|source| Error::Io { path: src.path.display().to_string(), source })?;
        let doc = parse_dsl(&text)?;
        Ok((src, doc))
    }

    /// Spectrum to simulate: from the DSL file when it names one, else `spectrum`.
    pub fn build_spectrum(&self, dsl: Option<(&DslSource, &DslDocument)>) -> Result<BathSpectrum> {
        if let Some((src, doc)) = dsl {
            if let Some(name) = &src.spectrum {
                return doc.spectrum(name).map_err(|e| Error::Config(e.to_string()));
            }
        }
        self.spectrum.build().map_err(|e| Error::Config(format!("spectrum: {e}")))
    }

    /// Checks everything that can be checked without simulating.
    ///
    /// DSL files are read and parsed here, so their errors surface before any work.
    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_mhz.is_finite() && self.rabi_mhz > 0.0) {
            return Err(Error::Config(format!("rabi_mhz {} must be > 0", self.rabi_mhz)));
        }
        let dsl = match self.kind {
            ExperimentKind::RunSeq => Some(self.load_dsl()?),
            _ => None,
        };
        let spectrum = self.build_spectrum(dsl.as_ref().map(|(s, d)| (s, d)))?;
        self.effective_method().realize(&spectrum).map_err(|e| Error::Config(format!("method: {e}")))?;
        if let Some(sig) = &self.signal {
            sig.model().map_err(|e| Error::Config(format!("signal: {e}")))?;
        }
        if !(self.prominence.is_finite() && self.prominence >= 0.0) {
            return Err(Error::Config("prominence must be >= 0".into()));
        }
        match self.kind {
            ExperimentKind::RunSeq => {
                let (src, doc) = dsl.expect("loaded above");
                if !doc.sequence_names().any(|n| n == src.sequence) {
                    return Err(Error::Config(format!(
                        "sequence `{}` is not defined in {}",
                        src.sequence,
                        src.path.display()
                    )));
                }
            }
            ExperimentKind::Fit if self.input.is_some() => {}
            _ => {
                let g = self.grid_points()?;
                if g[0] < 0.0 {
                    return Err(Error::Config("grid times must be >= 0".into()));
                }
            }
        }
        match self.kind {
            ExperimentKind::EchoScan if !(self.t1_ns.is_finite() && self.t1_ns >= 0.0) => {
                return Err(Error::Config(format!("t1_ns {} must be >= 0", self.t1_ns)));
            }
            ExperimentKind::MarkovTransition => {
                let f = self
                    .fields_mt
                    .ok_or_else(|| Error::Config("`fields_mt` is required for markov-transition".into()))?;
                f.validate()?;
                if f.start < 0.0 {
                    return Err(Error::Config("fields must be >= 0 mT".into()));
                }
                PolarizationModel::new(self.polarization.saturation_field_mt, self.polarization.exponent)
                    .map_err(|e| Error::Config(format!("polarization: {e}")))?;
            }
            _ => {}
        }
        let analysed = matches!(
            self.kind,
            ExperimentKind::TraceDistance
                | ExperimentKind::NonMarkovianity
                | ExperimentKind::Fit
                | ExperimentKind::MarkovTransition
        );
        if analysed && self.grid_points().map(|g| g.len()).unwrap_or(usize::MAX) < 3 {
            return Err(Error::Config("trace-distance analysis needs at least 3 grid points".into()));
        }
        Ok(())
    }
}
