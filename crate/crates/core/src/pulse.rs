//! Pulse schedules and their evolution under a quasi-static detuning.
//!
//! In the rotating frame with the rotating-wave approximation a pulse of Rabi
//! frequency Ω and phase φ on a spin detuned by δ has
//! `H = π(Ω cos φ σx + Ω sin φ σy + δ σz)`, a rotation about
//! `(Ω cos φ, Ω sin φ, δ)` at the generalized Rabi frequency `√(Ω² + δ²)`.
//! A delay is the same with Ω = 0.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{quadrature_nodes, sample_detuning, BathSpectrum, Detuning, MHZ_NS};
use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, Su2};

/// Drive axis in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    #[serde(rename = "-X")]
    MinusX,
    #[serde(rename = "-Y")]
    MinusY,
}

impl Axis {
    /// Microwave phase selecting this axis.
    pub fn phase(self) -> f64 {
        match self {
            Axis::X => 0.0,
            Axis::Y => PI / 2.0,
            Axis::MinusX => PI,
            Axis::MinusY => 3.0 * PI / 2.0,
        }
    }

    pub fn from_phase(phase: f64) -> Option<Axis> {
        let p = phase.rem_euclid(2.0 * PI);
        [Axis::X, Axis::Y, Axis::MinusX, Axis::MinusY].into_iter().find(|a| {
            let d = (a.phase() - p).abs();
            d < 1e-9 || 2.0 * PI - d < 1e-9
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::MinusX => "-X",
            Axis::MinusY => "-Y",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" => Ok(Axis::X),
            "Y" => Ok(Axis::Y),
            "-X" => Ok(Axis::MinusX),
            "-Y" => Ok(Axis::MinusY),
            _ => Err(Error::InvalidInput(format!("unknown axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseSegment {
    /// Rectangular drive of finite length.
    Pulse { phase: f64, rabi_mhz: f64, duration_ns: f64 },
    /// Free evolution.
    Delay { duration_ns: f64 },
    /// Idealized zero-length rotation about an equatorial axis, blind to detuning.
    Instant { phase: f64, angle: f64 },
}

impl PulseSegment {
    pub fn delay(duration_ns: f64) -> Result<Self> {
        if !(duration_ns.is_finite() && duration_ns >= 0.0) {
            return Err(Error::InvalidInput(format!("delay {duration_ns} ns must be >= 0")));
        }
        Ok(PulseSegment::Delay { duration_ns })
    }

    pub fn duration_ns(&self) -> f64 {
        match *self {
            PulseSegment::Pulse { duration_ns, .. } | PulseSegment::Delay { duration_ns } => {
                duration_ns
            }
            PulseSegment::Instant { .. } => 0.0,
        }
    }

    /// Nominal rotation angle at zero detuning.
    pub fn nominal_angle(&self) -> f64 {
        match *self {
            PulseSegment::Pulse { rabi_mhz, duration_ns, .. } => {
                2.0 * PI * rabi_mhz * duration_ns * MHZ_NS
            }
            PulseSegment::Delay { .. } => 0.0,
            PulseSegment::Instant { angle, .. } => angle,
        }
    }

    /// The same rotation played instantaneously; delays are kept.
    pub fn instantaneous(&self) -> Self {
        match *self {
            PulseSegment::Pulse { phase, .. } => {
                PulseSegment::Instant { phase, angle: self.nominal_angle() }
            }
            other => other,
        }
    }

    /// Propagator for a spin detuned by `d`.
    pub fn propagator(&self, d: Detuning) -> Su2 {
        match *self {
            PulseSegment::Pulse { phase, rabi_mhz, duration_ns } => {
                let (s, c) = phase.sin_cos();
                precession([rabi_mhz * c, rabi_mhz * s, d.mhz()], duration_ns)
            }
            PulseSegment::Delay { duration_ns } => precession([0.0, 0.0, d.mhz()], duration_ns),
            PulseSegment::Instant { phase, angle } => {
                let (s, c) = phase.sin_cos();
                Su2::from_axis_angle([c, s, 0.0], angle)
            }
        }
    }
}

/// `exp(−iπ t (v·σ))` for a field `v` in MHz and `t` in ns.
fn precession(v: [f64; 3], duration_ns: f64) -> Su2 {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm == 0.0 || duration_ns == 0.0 {
        return Su2::identity();
    }
    let n = [v[0] / norm, v[1] / norm, v[2] / norm];
    Su2::from_axis_angle(n, 2.0 * PI * norm * duration_ns * MHZ_NS)
}

/// Finite rectangular pulse realizing a rotation by `angle` about `axis`.
pub fn rotation_pulse(axis: Axis, angle: f64, rabi_mhz: f64) -> Result<PulseSegment> {
    if !(angle.is_finite() && angle > 0.0) {
        return Err(Error::InvalidInput(format!("rotation angle {angle} must be > 0")));
    }
    if !(rabi_mhz.is_finite() && rabi_mhz > 0.0) {
        return Err(Error::InvalidInput(format!("Rabi frequency {rabi_mhz} MHz must be > 0")));
    }
    Ok(PulseSegment::Pulse {
        phase: axis.phase(),
        rabi_mhz,
        duration_ns: angle / (2.0 * PI * rabi_mhz * MHZ_NS),
    })
}

/// Zero-duration ideal rotation.
pub fn instant_rotation(axis: Axis, angle: f64) -> Result<PulseSegment> {
    if !(angle.is_finite() && angle > 0.0) {
        return Err(Error::InvalidInput(format!("rotation angle {angle} must be > 0")));
    }
    Ok(PulseSegment::Instant { phase: axis.phase(), angle })
}

/// Time-ordered list of segments.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSequence {
    pub label: String,
    pub segments: Vec<PulseSegment>,
}

impl PulseSequence {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), segments: Vec::new() }
    }

    pub fn push(&mut self, seg: PulseSegment) -> &mut Self {
        self.segments.push(seg);
        self
    }

    pub fn then(mut self, seg: PulseSegment) -> Self {
        self.segments.push(seg);
        self
    }

    pub fn extend(mut self, other: &PulseSequence) -> Self {
        self.segments.extend_from_slice(&other.segments);
        self
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(PulseSegment::duration_ns).sum()
    }

    pub fn with_instantaneous_pulses(&self) -> Self {
        Self {
            label: self.label.clone(),
            segments: self.segments.iter().map(PulseSegment::instantaneous).collect(),
        }
    }

    /// Whole-sequence propagator for one detuning.
    pub fn propagator(&self, d: Detuning) -> Su2 {
        self.segments
            .iter()
            .fold(Su2::identity(), |acc, seg| seg.propagator(d).after(&acc))
    }
}

/// Unitary evolution of `rho0` through `seq` at fixed detuning.
pub fn evolve(rho0: &DensityMatrix, seq: &PulseSequence, d: Detuning) -> DensityMatrix {
    rho0.conjugate(&seq.propagator(d))
}

/// How the bath average is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleMethod {
    /// Gauss-Hermite nodes per mode.
    Quadrature { nodes_per_mode: usize },
    /// Seeded Monte Carlo with equal weights.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for EnsembleMethod {
    fn default() -> Self {
        EnsembleMethod::Quadrature { nodes_per_mode: 64 }
    }
}

impl EnsembleMethod {
    /// Weighted detunings realizing this method on `s`.
    pub fn realize(&self, s: &BathSpectrum) -> Result<Vec<(Detuning, f64)>> {
        match *self {
            EnsembleMethod::Quadrature { nodes_per_mode } => quadrature_nodes(s, nodes_per_mode),
            EnsembleMethod::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::Config("Monte Carlo needs at least one sample".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w = 1.0 / samples as f64;
                Ok((0..samples).map(|_| (sample_detuning(s, &mut rng), w)).collect())
            }
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            EnsembleMethod::MonteCarlo { samples, .. } => EnsembleMethod::MonteCarlo { samples, seed },
            q => q,
        }
    }
}

impl std::fmt::Display for EnsembleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnsembleMethod::Quadrature { nodes_per_mode } => write!(f, "quadrature:{nodes_per_mode}"),
            EnsembleMethod::MonteCarlo { samples, seed } => write!(f, "mc:{samples}:{seed}"),
        }
    }
}

impl FromStr for EnsembleMethod {
    type Err = Error;

    /// `quadrature:N`, `mc:N` or `mc:N:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<u64> {
            t.parse::<u64>()
                .map_err(|_| Error::Config(format!("bad number `{t}` in method `{s}`")))
        };
        match parts.as_slice() {
            ["quadrature", n] => Ok(EnsembleMethod::Quadrature { nodes_per_mode: num(n)? as usize }),
            ["mc", n] => Ok(EnsembleMethod::MonteCarlo { samples: num(n)? as usize, seed: 0 }),
            ["mc", n, seed] => Ok(EnsembleMethod::MonteCarlo {
                samples: num(n)? as usize,
                seed: num(seed)?,
            }),
            _ => Err(Error::Config(format!(
                "method `{s}` is not quadrature:N, mc:N or mc:N:SEED"
            ))),
        }
    }
}

/// Weighted average of `f` over the ensemble, reduced in index order.
pub(crate) fn average_states<F>(ensemble: &[(Detuning, f64)], f: F) -> Result<DensityMatrix>
where
    F: Fn(Detuning) -> DensityMatrix + Sync,
{
    let parts: Vec<Matrix2<Complex64>> = ensemble
        .par_iter()
        .map(|&(d, w)| f(d).elements() * Complex64::new(w, 0.0))
        .collect();
    let sum = parts.into_iter().fold(Matrix2::zeros(), |acc, m| acc + m);
    DensityMatrix::from_average(sum)
}

/// Evolution averaged over a pre-realized detuning ensemble.
pub fn ensemble_evolve_with(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    ensemble: &[(Detuning, f64)],
) -> Result<DensityMatrix> {
    average_states(ensemble, |d| evolve(rho0, seq, d))
}

/// Evolution averaged over the bath.
pub fn ensemble_evolve(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    s: &BathSpectrum,
    method: &EnsembleMethod,
) -> Result<DensityMatrix> {
    let ensemble = method.realize(s)?;
    ensemble_evolve_with(rho0, seq, &ensemble)
}

/// Photon-count readout: bright level `c_max`, dark level `c_min` per shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub c_max: f64,
    pub c_min: f64,
    pub shots: u64,
}

impl SignalModel {
    pub fn new(c_max: f64, c_min: f64, shots: u64) -> Result<Self> {
        if !(c_max.is_finite() && c_min.is_finite() && c_min >= 0.0 && c_max > c_min) {
            return Err(Error::InvalidInput(format!(
                "signal levels need c_max > c_min >= 0, got {c_max}, {c_min}"
            )));
        }
        if shots == 0 {
            return Err(Error::InvalidInput("signal model needs at least one shot".into()));
        }
        Ok(Self { c_max, c_min, shots })
    }
}

/// Total counts for a population `p0`; Poisson-distributed when `noisy`.
pub fn counts_from_p0(p0: f64, m: &SignalModel, noisy: bool, seed: u64) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&p0) {
        return Err(Error::InvalidInput(format!("population {p0} outside [0, 1]")));
    }
    let p0 = p0.clamp(0.0, 1.0);
    let mean = (m.c_min + p0 * (m.c_max - m.c_min)) * m.shots as f64;
    if !noisy || mean == 0.0 {
        return Ok(mean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(dist.sample(&mut rng))
}

/// Raw population estimate from counts; not clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub p0: f64,
    /// Set when the estimate falls outside `[−0.05, 1.05]`.
    pub out_of_range: bool,
}

pub fn p0_from_counts(counts: f64, m: &SignalModel) -> PopulationEstimate {
    let p0 = (counts / m.shots as f64 - m.c_min) / (m.c_max - m.c_min);
    PopulationEstimate { p0, out_of_range: !(-0.05..=1.05).contains(&p0) }
}
