//! Experiment builders and runners: the single-qubit Deutsch-Jozsa test with
//! and without a refocusing pulse, the optimal-pair trace-distance probe,
//! tomography, Rabi calibration, and the field sweep that polarizes the bath.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_grid, non_markovianity_integral, non_markovianity_revival_sum, TraceDistanceSeries,
};
use crate::bath::{polarize_spectrum, BathSpectrum, Detuning, PolarizationModel};
use crate::error::{Error, Result};
use crate::pulse::{
    ensemble_evolve_with, rotation_pulse, Axis, EnsembleMethod, PulseSegment, PulseSequence,
};
use crate::quantum::{trace_distance, BlochVector, DensityMatrix, Rotation};

/// Rabi frequency of the reference setup, MHz.
pub const DEFAULT_RABI_MHZ: f64 = 5.37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OracleClass {
    Constant,
    Balanced,
}

/// The four single-bit oracles, realized as `(−π/2)_X (φ)_Y (π/2)_X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Oracle {
    U1,
    U2,
    U3,
    U4,
}

impl Oracle {
    pub const ALL: [Oracle; 4] = [Oracle::U1, Oracle::U2, Oracle::U3, Oracle::U4];

    /// Y-rotation angle: 0, 2π, 3π, π.
    pub fn phase(self) -> f64 {
        match self {
            Oracle::U1 => 0.0,
            Oracle::U2 => 2.0 * PI,
            Oracle::U3 => 3.0 * PI,
            Oracle::U4 => PI,
        }
    }

    pub fn class(self) -> OracleClass {
        match self {
            Oracle::U1 | Oracle::U2 => OracleClass::Constant,
            Oracle::U3 | Oracle::U4 => OracleClass::Balanced,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Oracle::U1 => "U1",
            Oracle::U2 => "U2",
            Oracle::U3 => "U3",
            Oracle::U4 => "U4",
        }
    }

    /// The oracle pulses in time order; the φ = 0 rotation is omitted.
    pub fn pulses(self, rabi_mhz: f64) -> Result<Vec<PulseSegment>> {
        let mut out = vec![rotation_pulse(Axis::X, PI / 2.0, rabi_mhz)?];
        if self.phase() > 0.0 {
            out.push(rotation_pulse(Axis::Y, self.phase(), rabi_mhz)?);
        }
        out.push(rotation_pulse(Axis::MinusX, PI / 2.0, rabi_mhz)?);
        Ok(out)
    }
}

impl FromStr for Oracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "U1" => Ok(Oracle::U1),
            "U2" => Ok(Oracle::U2),
            "U3" => Ok(Oracle::U3),
            "U4" => Ok(Oracle::U4),
            _ => Err(Error::InvalidInput(format!("unknown oracle `{s}`"))),
        }
    }
}

/// `(π/2)_X`, oracle, delay τ, `(π/2)_X`.
pub fn build_rdja_sequence(oracle: Oracle, delay_ns: f64, rabi_mhz: f64) -> Result<PulseSequence> {
    let half = rotation_pulse(Axis::X, PI / 2.0, rabi_mhz)?;
    let mut seq = PulseSequence::new(format!("rdja-{}", oracle.name())).then(half);
    for p in oracle.pulses(rabi_mhz)? {
        seq.push(p);
    }
    Ok(seq.then(PulseSegment::delay(delay_ns)?).then(half))
}

/// `(π/2)_X`, oracle, delay t1, `(π)_X`, delay t2, `(π/2)_X`.
///
/// Without dephasing a constant oracle ends in |0⟩ and a balanced one in |1⟩.
pub fn build_echo_rdja_sequence(
    oracle: Oracle,
    t1_ns: f64,
    t2_ns: f64,
    rabi_mhz: f64,
) -> Result<PulseSequence> {
    let half = rotation_pulse(Axis::X, PI / 2.0, rabi_mhz)?;
    let mut seq = PulseSequence::new(format!("echo-rdja-{}", oracle.name())).then(half);
    for p in oracle.pulses(rabi_mhz)? {
        seq.push(p);
    }
    Ok(seq
        .then(PulseSegment::delay(t1_ns)?)
        .then(rotation_pulse(Axis::X, PI, rabi_mhz)?)
        .then(PulseSegment::delay(t2_ns)?)
        .then(half))
}

fn playback(seq: PulseSequence, ideal_pulses: bool) -> PulseSequence {
    if ideal_pulses {
        seq.with_instantaneous_pulses()
    } else {
        seq
    }
}

fn p0_after(seq: &PulseSequence, ensemble: &[(Detuning, f64)]) -> Result<f64> {
    Ok(ensemble_evolve_with(&DensityMatrix::ground(), seq, ensemble)?.p0())
}

/// Everything needed to reproduce a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub spectrum: BathSpectrum,
    pub rabi_mhz: f64,
    pub method: EnsembleMethod,
    pub ideal_pulses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub values: Vec<f64>,
}

/// Populations versus a scanned time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub variable: String,
    pub grid: Vec<f64>,
    pub curves: Vec<Curve>,
    /// `P0(U3) − P0(U1)` for Deutsch-Jozsa scans, empty otherwise.
    pub contrast: Vec<f64>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    pub fn curve(&self, name: &str) -> Option<&[f64]> {
        self.curves.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }
}

fn check_scan_grid(grid: &[f64]) -> Result<()> {
    check_grid(grid)?;
    if grid.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidInput("scan times must be >= 0".into()));
    }
    Ok(())
}

/// Ensemble `P0` for every oracle and delay.
pub fn run_rdja_scan(
    spectrum: &BathSpectrum,
    rabi_mhz: f64,
    tau_grid: &[f64],
    method: &EnsembleMethod,
    ideal_pulses: bool,
) -> Result<ScanResult> {
    check_scan_grid(tau_grid)?;
    let ensemble = method.realize(spectrum)?;
    let mut curves = Vec::with_capacity(4);
    for oracle in Oracle::ALL {
        let values = tau_grid
            .iter()
            .map(|&tau| {
                let seq = playback(build_rdja_sequence(oracle, tau, rabi_mhz)?, ideal_pulses);
                p0_after(&seq, &ensemble)
            })
            .collect::<Result<Vec<f64>>>()?;
        curves.push(Curve { name: format!("p0_{}", oracle.name().to_lowercase()), values });
    }
    let contrast = curves[2].values.iter().zip(&curves[0].values).map(|(b, c)| b - c).collect();
    Ok(ScanResult {
        variable: "tau_ns".into(),
        grid: tau_grid.to_vec(),
        curves,
        contrast,
        metadata: ScanMetadata {
            spectrum: spectrum.clone(),
            rabi_mhz,
            method: *method,
            ideal_pulses,
        },
    })
}

/// Refocused scan over the second delay. `pos = P0(U1) − P0(U3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoScan {
    pub t1_ns: f64,
    pub t2_ns: Vec<f64>,
    pub p0_constant: Vec<f64>,
    pub p0_balanced: Vec<f64>,
    pub pos: Vec<f64>,
    pub metadata: ScanMetadata,
}

impl EchoScan {
    /// Index of the largest success probability.
    pub fn echo_index(&self) -> usize {
        (0..self.pos.len())
            .max_by(|&a, &b| self.pos[a].total_cmp(&self.pos[b]))
            .unwrap_or(0)
    }
}

pub fn run_echo_scan(
    spectrum: &BathSpectrum,
    rabi_mhz: f64,
    t1_ns: f64,
    t2_grid: &[f64],
    method: &EnsembleMethod,
    ideal_pulses: bool,
) -> Result<EchoScan> {
    check_scan_grid(t2_grid)?;
    let ensemble = method.realize(spectrum)?;
    let run = |oracle: Oracle| -> Result<Vec<f64>> {
        t2_grid
            .iter()
            .map(|&t2| {
                let seq = playback(
                    build_echo_rdja_sequence(oracle, t1_ns, t2, rabi_mhz)?,
                    ideal_pulses,
                );
                p0_after(&seq, &ensemble)
            })
            .collect()
    };
    let p0_constant = run(Oracle::U1)?;
    let p0_balanced = run(Oracle::U3)?;
    let pos = p0_constant.iter().zip(&p0_balanced).map(|(c, b)| c - b).collect();
    Ok(EchoScan {
        t1_ns,
        t2_ns: t2_grid.to_vec(),
        p0_constant,
        p0_balanced,
        pos,
        metadata: ScanMetadata {
            spectrum: spectrum.clone(),
            rabi_mhz,
            method: *method,
            ideal_pulses,
        },
    })
}

/// Success probability of the refocused test at a single `(t1, t2)`.
pub fn echo_pos(
    spectrum: &BathSpectrum,
    rabi_mhz: f64,
    t1_ns: f64,
    t2_ns: f64,
    method: &EnsembleMethod,
    ideal_pulses: bool,
) -> Result<f64> {
    Ok(run_echo_scan(spectrum, rabi_mhz, t1_ns, &[t2_ns], method, ideal_pulses)?.pos[0])
}

/// Trace distance between the two equatorial states `(|0⟩ ∓ i|1⟩)/√2`,
/// prepared by `(±π/2)_X`, after free evolution for each `t`.
pub fn run_trace_distance_experiment(
    spectrum: &BathSpectrum,
    rabi_mhz: f64,
    t_grid: &[f64],
    method: &EnsembleMethod,
    ideal_pulses: bool,
) -> Result<TraceDistanceSeries> {
    check_scan_grid(t_grid)?;
    let ensemble = method.realize(spectrum)?;
    let prep = |axis| -> Result<PulseSequence> {
        Ok(PulseSequence::new("prep").then(rotation_pulse(axis, PI / 2.0, rabi_mhz)?))
    };
    let (p1, p2) = (prep(Axis::X)?, prep(Axis::MinusX)?);
    let values = t_grid
        .iter()
        .map(|&t| {
            let wait = PulseSegment::delay(t)?;
            let s1 = playback(p1.clone().then(wait), ideal_pulses);
            let s2 = playback(p2.clone().then(wait), ideal_pulses);
            let g = DensityMatrix::ground();
            let r1 = ensemble_evolve_with(&g, &s1, &ensemble)?;
            let r2 = ensemble_evolve_with(&g, &s2, &ensemble)?;
            Ok(trace_distance(&r1, &r2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TraceDistanceSeries::new(t_grid.to_vec(), values)?.with_label(if ideal_pulses {
        "optimal-pair/ideal"
    } else {
        "optimal-pair/finite"
    }))
}

/// Reconstructs the state after `prep` from three population readouts.
///
/// z is read directly, x after an ideal `(π/2)_Y`, y after an ideal `(−π/2)_X`;
/// both rotations map the measured component onto `−z`.
pub fn run_qst(
    prep: &PulseSequence,
    spectrum: &BathSpectrum,
    method: &EnsembleMethod,
) -> Result<DensityMatrix> {
    let ensemble = method.realize(spectrum)?;
    let read = |r: Option<Rotation>| -> Result<f64> {
        let mut seq = prep.clone();
        if let Some(r) = r {
            let phase = r.axis()[1].atan2(r.axis()[0]);
            seq.push(PulseSegment::Instant { phase, angle: r.angle() });
        }
        p0_after(&seq, &ensemble)
    };
    let z = 2.0 * read(None)? - 1.0;
    let x = 1.0 - 2.0 * read(Some(Rotation::y(PI / 2.0)))?;
    let y = 1.0 - 2.0 * read(Some(Rotation::equatorial(PI, PI / 2.0)))?;
    DensityMatrix::from_bloch_estimate(BlochVector::new(x, y, z))
}

/// `P0` after a single X pulse of each duration.
pub fn run_rabi_scan(
    spectrum: &BathSpectrum,
    rabi_mhz: f64,
    duration_grid: &[f64],
    method: &EnsembleMethod,
) -> Result<ScanResult> {
    check_scan_grid(duration_grid)?;
    if !(rabi_mhz.is_finite() && rabi_mhz > 0.0) {
        return Err(Error::InvalidInput(format!("Rabi frequency {rabi_mhz} MHz must be > 0")));
    }
    let ensemble = method.realize(spectrum)?;
    let values = duration_grid
        .iter()
        .map(|&d| {
            let seq = PulseSequence::new("rabi").then(PulseSegment::Pulse {
                phase: 0.0,
                rabi_mhz,
                duration_ns: d,
            });
            p0_after(&seq, &ensemble)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        variable: "duration_ns".into(),
        grid: duration_grid.to_vec(),
        curves: vec![Curve { name: "p0".into(), values }],
        contrast: Vec::new(),
        metadata: ScanMetadata {
            spectrum: spectrum.clone(),
            rabi_mhz,
            method: *method,
            ideal_pulses: false,
        },
    })
}

/// One field value of the polarization sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    pub field_mt: f64,
    pub polarization: f64,
    pub n_revival: f64,
    pub n_integral: f64,
    /// Deutsch-Jozsa contrast at zero delay.
    pub contrast_tau0: f64,
}

/// Non-Markovianity and zero-delay contrast as the bath polarizes with field.
#[allow(clippy::too_many_arguments)]
pub fn run_markov_transition(
    spectrum: &BathSpectrum,
    model: &PolarizationModel,
    field_grid_mt: &[f64],
    rabi_mhz: f64,
    t_grid: &[f64],
    method: &EnsembleMethod,
    ideal_pulses: bool,
    min_prominence: f64,
) -> Result<Vec<TransitionPoint>> {
    check_grid(field_grid_mt)?;
    field_grid_mt
        .iter()
        .map(|&b| {
            let s = polarize_spectrum(spectrum, b, model)?;
            let series = run_trace_distance_experiment(&s, rabi_mhz, t_grid, method, ideal_pulses)?;
            let scan = run_rdja_scan(&s, rabi_mhz, &[0.0], method, ideal_pulses)?;
            Ok(TransitionPoint {
                field_mt: b,
                polarization: model.polarization(b),
                n_revival: non_markovianity_revival_sum(&series, min_prominence)?.n_value,
                n_integral: non_markovianity_integral(&series),
                contrast_tau0: scan.contrast[0],
            })
        })
        .collect()
}
