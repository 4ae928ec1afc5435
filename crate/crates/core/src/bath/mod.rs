//! Quasi-static dephasing bath.
//!
//! The bath shifts the qubit frequency by a random detuning δ that stays fixed
//! for one shot. δ is drawn from a weighted sum of Gaussian modes; the default
//! three-mode spectrum comes from the hyperfine coupling to a spin-1 nucleus.
//!
//! Frequencies are cyclic MHz, times are ns.

mod hermite;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hermite::standard_normal_rule;

/// Hyperfine splitting of the default spectrum, MHz.
pub const DEFAULT_SPLITTING_MHZ: f64 = 2.170;
/// Gaussian envelope time constant of the default spectrum, ns.
pub const DEFAULT_ENVELOPE_NS: f64 = 1382.0;
/// Upper bound on quadrature nodes per mode.
pub const MAX_NODES_PER_MODE: usize = 512;

/// Converts MHz × ns into cycles.
pub(crate) const MHZ_NS: f64 = 1e-3;

/// One Gaussian component of the detuning distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub weight: f64,
    pub center_mhz: f64,
    /// Standard deviation of the detuning, MHz. Zero means a point mass.
    pub sigma_mhz: f64,
}

impl Mode {
    pub fn new(weight: f64, center_mhz: f64, sigma_mhz: f64) -> Self {
        Self { weight, center_mhz, sigma_mhz }
    }

    /// Width `w` of the profile written as `exp(−2((δ−c)/w)²)`; equals `2σ`.
    pub fn width_param_mhz(&self) -> f64 {
        2.0 * self.sigma_mhz
    }

    /// Gaussian sigma whose dephasing envelope is `exp(−t²/T²)`.
    pub fn sigma_for_envelope(envelope_ns: f64) -> f64 {
        std::f64::consts::SQRT_2 / (2.0 * PI * envelope_ns * MHZ_NS)
    }
}

/// Normalized mixture of Gaussian detuning modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Mode>", into = "Vec<Mode>")]
pub struct BathSpectrum {
    modes: Vec<Mode>,
}

impl TryFrom<Vec<Mode>> for BathSpectrum {
    type Error = Error;

    fn try_from(modes: Vec<Mode>) -> Result<Self> {
        BathSpectrum::new(modes)
    }
}

impl From<BathSpectrum> for Vec<Mode> {
    fn from(s: BathSpectrum) -> Self {
        s.modes
    }
}

impl BathSpectrum {
    /// Validates the modes and rescales weights to sum to one.
    pub fn new(mut modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidInput("spectrum needs at least one mode".into()));
        }
        for m in &modes {
            if !(m.weight.is_finite() && m.weight >= 0.0) {
                return Err(Error::InvalidInput(format!("mode weight {} must be >= 0", m.weight)));
            }
            if !m.center_mhz.is_finite() {
                return Err(Error::InvalidInput("mode center must be finite".into()));
            }
            if !(m.sigma_mhz.is_finite() && m.sigma_mhz >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "mode sigma {} must be >= 0",
                    m.sigma_mhz
                )));
            }
        }
        let total: f64 = modes.iter().map(|m| m.weight).sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("mode weights sum to zero".into()));
        }
        for m in &mut modes {
            m.weight /= total;
        }
        Ok(Self { modes })
    }

    /// Every shot sees the same detuning.
    pub fn point_mass(delta_mhz: f64) -> Self {
        Self { modes: vec![Mode::new(1.0, delta_mhz, 0.0)] }
    }

    /// A single Gaussian mode with envelope time constant `envelope_ns`.
    pub fn single_mode(center_mhz: f64, envelope_ns: f64) -> Self {
        Self {
            modes: vec![Mode::new(1.0, center_mhz, Mode::sigma_for_envelope(envelope_ns))],
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mean_mhz(&self) -> f64 {
        self.modes.iter().map(|m| m.weight * m.center_mhz).sum()
    }

    /// Number of modes carrying non-zero weight.
    pub fn active_modes(&self) -> usize {
        self.modes.iter().filter(|m| m.weight > 0.0).count()
    }
}

/// Three equally weighted modes at `−Δ, 0, +Δ` whose common envelope is
/// `exp(−t²/T²)`, with `Δ = 2.170 MHz` and `T = 1382 ns`.
pub fn paper_default_spectrum() -> BathSpectrum {
    let sigma = Mode::sigma_for_envelope(DEFAULT_ENVELOPE_NS);
    let w = 1.0 / 3.0;
    BathSpectrum {
        modes: vec![
            Mode::new(w, -DEFAULT_SPLITTING_MHZ, sigma),
            Mode::new(w, 0.0, sigma),
            Mode::new(w, DEFAULT_SPLITTING_MHZ, sigma),
        ],
    }
}

/// `W(t) = E[exp(i 2π δ t)]` over the spectrum, in closed form. Valid for negative `t`.
pub fn coherence_function(s: &BathSpectrum, t_ns: f64) -> Complex64 {
    let t = t_ns * MHZ_NS;
    s.modes
        .iter()
        .map(|m| {
            let env = (-0.5 * (2.0 * PI * m.sigma_mhz * t).powi(2)).exp();
            Complex64::from_polar(m.weight * env, 2.0 * PI * m.center_mhz * t)
        })
        .sum()
}

/// A quasi-static frequency shift, MHz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Detuning(pub f64);

impl Detuning {
    pub fn mhz(self) -> f64 {
        self.0
    }
}

/// Draws one detuning: a mode by weight, then a Gaussian offset.
pub fn sample_detuning<R: Rng + ?Sized>(s: &BathSpectrum, rng: &mut R) -> Detuning {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = s.modes.last().expect("non-empty spectrum");
    for m in &s.modes {
        acc += m.weight;
        if u < acc && m.weight > 0.0 {
            chosen = m;
            break;
        }
    }
    let z: f64 = StandardNormal.sample(rng);
    if chosen.sigma_mhz == 0.0 {
        Detuning(chosen.center_mhz)
    } else {
        Detuning(chosen.center_mhz + chosen.sigma_mhz * z)
    }
}

/// Deterministic weighted detunings: a Gauss-Hermite rule per mode.
///
/// Point-mass and zero-weight modes contribute one node and none respectively.
pub fn quadrature_nodes(s: &BathSpectrum, n_per_mode: usize) -> Result<Vec<(Detuning, f64)>> {
    if n_per_mode == 0 {
        return Err(Error::Config("quadrature needs at least one node per mode".into()));
    }
    if n_per_mode > MAX_NODES_PER_MODE {
        return Err(Error::Config(format!(
            "{n_per_mode} nodes per mode exceeds the limit of {MAX_NODES_PER_MODE}"
        )));
    }
    let (x, w) = standard_normal_rule(n_per_mode);
    let mut nodes = Vec::with_capacity(s.modes.len() * n_per_mode);
    for m in s.modes.iter().filter(|m| m.weight > 0.0) {
        if m.sigma_mhz == 0.0 {
            nodes.push((Detuning(m.center_mhz), m.weight));
        } else {
            nodes.extend(
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| (Detuning(m.center_mhz + m.sigma_mhz * xi), m.weight * wi)),
            );
        }
    }
    Ok(nodes)
}

/// Nuclear polarization versus magnetic field, `p = min(1, (B/B_sat)^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationModel {
    pub saturation_field_mt: f64,
    pub exponent: f64,
}

impl Default for PolarizationModel {
    fn default() -> Self {
        Self { saturation_field_mt: 35.0, exponent: 1.0 }
    }
}

impl PolarizationModel {
    pub fn new(saturation_field_mt: f64, exponent: f64) -> Result<Self> {
        if !(saturation_field_mt.is_finite() && saturation_field_mt > 0.0) {
            return Err(Error::InvalidInput("saturation field must be > 0".into()));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidInput("polarization exponent must be > 0".into()));
        }
        Ok(Self { saturation_field_mt, exponent })
    }

    pub fn polarization(&self, field_mt: f64) -> f64 {
        (field_mt / self.saturation_field_mt).powf(self.exponent).min(1.0)
    }
}

/// Moves weight from every mode into the one nearest zero detuning.
///
/// Side modes keep a fraction `1 − p` of their weight. At full polarization the
/// spectrum has exactly one mode with non-zero weight.
pub fn polarize_spectrum(
    s: &BathSpectrum,
    field_mt: f64,
    model: &PolarizationModel,
) -> Result<BathSpectrum> {
    if !(field_mt.is_finite() && field_mt >= 0.0) {
        return Err(Error::InvalidInput(format!("magnetic field {field_mt} mT must be >= 0")));
    }
    let p = model.polarization(field_mt);
    let dest = s
        .modes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.center_mhz.abs().total_cmp(&b.1.center_mhz.abs()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    let mut modes = s.modes.clone();
    let mut moved = 0.0;
    for (i, m) in modes.iter_mut().enumerate() {
        if i != dest {
            let keep = if p >= 1.0 { 0.0 } else { m.weight * (1.0 - p) };
            moved += m.weight - keep;
            m.weight = keep;
        }
    }
    modes[dest].weight += moved;
    BathSpectrum::new(modes)
}
