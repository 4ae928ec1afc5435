//! Post-processing of simulated or measured curves.

mod fit;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{fit_trace_distance, trace_distance_model, FitParams};

/// Trace distance sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDistanceSeries {
    pub times_ns: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub label: String,
}

impl TraceDistanceSeries {
    pub fn new(times_ns: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times_ns.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} times but {} values",
                times_ns.len(),
                values.len()
            )));
        }
        check_grid(&times_ns)?;
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0 && **v <= 1.0 + 1e-9)) {
            return Err(Error::InvalidInput(format!("trace distance {v} outside [0, 1]")));
        }
        Ok(Self { times_ns, values, label: String::new() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rejects non-finite or non-increasing grids.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("grid contains a non-finite value".into()));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "grid is not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub index: usize,
    pub time_ns: f64,
    pub value: f64,
    pub kind: ExtremumKind,
    /// First or last sample of the series.
    pub boundary: bool,
}

/// Alternating minima and maxima whose swings exceed `min_prominence`.
///
/// A zigzag pass: a candidate extremum is confirmed once the series retraces
/// from it by more than the threshold, so smaller wiggles are merged into the
/// surrounding swing. With a zero threshold every strict turning point is
/// reported. The first and last confirmed points may be the series endpoints,
/// flagged as boundary extrema. A series that never moves by more than the
/// threshold has no extrema.
pub fn find_local_extrema(series: &TraceDistanceSeries, min_prominence: f64) -> Result<Vec<Extremum>> {
    extrema_of(&series.times_ns, &series.values, min_prominence)
}

pub(crate) fn extrema_of(times: &[f64], values: &[f64], h: f64) -> Result<Vec<Extremum>> {
    if values.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "extrema need at least 3 points, got {}",
            values.len()
        )));
    }
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::InvalidInput(format!("prominence {h} must be >= 0")));
    }
    let n = values.len();
    let make = |i: usize, kind| Extremum {
        index: i,
        time_ns: times[i],
        value: values[i],
        kind,
        boundary: i == 0 || i == n - 1,
    };
    let mut out = Vec::new();

    // undecided until the first swing larger than h
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut rising = None;
    let mut cand = 0usize;
    for i in 1..n {
        let v = values[i];
        match rising {
            None => {
                if v > values[hi] {
                    hi = i;
                }
                if v < values[lo] {
                    lo = i;
                }
                // the first sample to clear the threshold is also the running extreme
                if v - values[lo] > h && lo < i {
                    out.push(make(lo, ExtremumKind::Min));
                    rising = Some(true);
                    cand = i;
                } else if values[hi] - v > h && hi < i {
                    out.push(make(hi, ExtremumKind::Max));
                    rising = Some(false);
                    cand = i;
                }
            }
            Some(true) => {
                if v > values[cand] {
                    cand = i;
                } else if values[cand] - v > h {
                    out.push(make(cand, ExtremumKind::Max));
                    rising = Some(false);
                    cand = i;
                }
            }
            Some(false) => {
                if v < values[cand] {
                    cand = i;
                } else if v - values[cand] > h {
                    out.push(make(cand, ExtremumKind::Min));
                    rising = Some(true);
                    cand = i;
                }
            }
        }
    }
    match rising {
        Some(true) => out.push(make(cand, ExtremumKind::Max)),
        Some(false) => out.push(make(cand, ExtremumKind::Min)),
        None => {}
    }
    Ok(out)
}

/// Non-Markovianity estimate together with the extrema it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmResult {
    pub n_value: f64,
    pub extrema: Vec<Extremum>,
}

/// Sum of every rise, `D_max − D_min`, between consecutive extrema.
///
/// On a series with eight interior turning points this is
/// `D₂ − D₁ + D₄ − D₃ + D₆ − D₅ + D₈ − D₇`.
pub fn non_markovianity_revival_sum(
    series: &TraceDistanceSeries,
    min_prominence: f64,
) -> Result<NmResult> {
    let extrema = find_local_extrema(series, min_prominence)?;
    let n_value = extrema
        .windows(2)
        .filter(|w| w[0].kind == ExtremumKind::Min && w[1].kind == ExtremumKind::Max)
        .map(|w| w[1].value - w[0].value)
        .fold(0.0, |acc, x| acc + x);
    Ok(NmResult { n_value, extrema })
}

/// Discretized integral of the positive part of `dD/dt`.
pub fn non_markovianity_integral(series: &TraceDistanceSeries) -> f64 {
    positive_increments(&series.values)
}

pub(crate) fn positive_increments(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, |acc, x| acc + x)
}

/// Dominant spectral line of a uniformly sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DftPeak {
    pub frequency_mhz: f64,
    /// Amplitude of the equivalent sinusoid.
    pub amplitude: f64,
    /// Set when the mean-subtracted input is identically zero.
    pub flat: bool,
    /// Spacing of the (zero-padded) frequency grid, MHz.
    pub bin_width_mhz: f64,
}

const ZERO_PAD: usize = 8;

/// Largest positive-frequency DFT line of the mean-subtracted series.
///
/// The series is zero-padded to eight times the next power of two before the
/// transform and the peak is refined by a parabola through the three bins
/// around the maximum.
pub fn dft_peak(times_ns: &[f64], values: &[f64]) -> Result<DftPeak> {
    if times_ns.len() != values.len() || values.len() < 4 {
        return Err(Error::InvalidInput("DFT needs at least 4 paired samples".into()));
    }
    check_grid(times_ns)?;
    let dt = (times_ns[times_ns.len() - 1] - times_ns[0]) / (times_ns.len() - 1) as f64;
    if let Some(w) = times_ns.windows(2).find(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::InvalidInput(format!(
            "DFT needs a uniform grid; step {} differs from {dt}",
            w[1] - w[0]
        )));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let padded = n.next_power_of_two() * ZERO_PAD;
    let bin_width_mhz = 1.0 / (padded as f64 * dt * 1e-3);
    if centered.iter().all(|v| v.abs() < 1e-14) {
        return Ok(DftPeak { frequency_mhz: 0.0, amplitude: 0.0, flat: true, bin_width_mhz });
    }

    let mut buf: Vec<Complex64> = centered.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(padded);
    fft.process(&mut buf);
    let mag: Vec<f64> = buf[..=padded / 2].iter().map(|c| c.norm()).collect();

    let k = (1..mag.len())
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .expect("non-empty spectrum");
    let shift = if k + 1 < mag.len() {
        let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
        let denom = l - 2.0 * c + r;
        if denom.abs() > 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let peak = mag[k] - 0.25 * (mag[k - 1] - mag.get(k + 1).copied().unwrap_or(mag[k])) * shift;
    Ok(DftPeak {
        frequency_mhz: (k as f64 + shift) * bin_width_mhz,
        amplitude: 2.0 * peak / n as f64,
        flat: false,
        bin_width_mhz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn series(values: &[f64]) -> TraceDistanceSeries {
        TraceDistanceSeries::new((0..values.len()).map(|i| i as f64).collect(), values.to_vec())
            .unwrap()
    }

    fn closed_form(t_ns: f64) -> f64 {
        let t = t_ns * 1e-3;
        ((1.0 / 3.0 + 2.0 / 3.0 * (2.0 * PI * 2.170 * t).cos()).abs())
            * (-(t_ns / 1382.0).powi(2)).exp()
    }

    fn grid(stop: f64, step: f64) -> Vec<f64> {
        let n = (stop / step).round() as usize;
        (0..=n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn series_validation() {
        assert!(TraceDistanceSeries::new(vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(TraceDistanceSeries::new(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(TraceDistanceSeries::new(vec![0.0, 1.0], vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn monotone_series_has_only_endpoints() {
        let ext = find_local_extrema(&series(&[0.9, 0.7, 0.5, 0.2, 0.1]), 0.0).unwrap();
        assert_eq!(ext.len(), 2);
        assert!(ext.iter().all(|e| e.boundary));
        assert_eq!((ext[0].kind, ext[1].kind), (ExtremumKind::Max, ExtremumKind::Min));
    }

    #[test]
    fn small_example_extrema() {
        let ext = find_local_extrema(&series(&[1.0, 0.2, 0.5, 0.1, 0.3]), 0.0).unwrap();
        let interior: Vec<(usize, ExtremumKind)> =
            ext.iter().filter(|e| !e.boundary).map(|e| (e.index, e.kind)).collect();
        assert_eq!(
            interior,
            vec![(1, ExtremumKind::Min), (2, ExtremumKind::Max), (3, ExtremumKind::Min)]
        );
    }

    #[test]
    fn too_short_is_an_error() {
        let s = TraceDistanceSeries::new(vec![0.0, 1.0], vec![0.5, 0.4]).unwrap();
        assert_eq!(find_local_extrema(&s, 0.0).unwrap_err().code(), "E_INVALID_INPUT");
    }

    #[test]
    fn prominence_merges_small_wiggles() {
        let s = series(&[1.0, 0.5, 0.505, 0.4, 0.8, 0.3]);
        let ext = find_local_extrema(&s, 0.01).unwrap();
        let kinds: Vec<(usize, ExtremumKind)> = ext.iter().map(|e| (e.index, e.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (0, ExtremumKind::Max),
                (3, ExtremumKind::Min),
                (4, ExtremumKind::Max),
                (5, ExtremumKind::Min)
            ]
        );
        for w in ext.windows(2) {
            assert_ne!(w[0].kind, w[1].kind);
        }
    }

    #[test]
    fn default_curve_revivals() {
        let t = grid(1400.0, 1.0);
        let v: Vec<f64> = t.iter().map(|&t| closed_form(t)).collect();
        let s = TraceDistanceSeries::new(t, v).unwrap();
        let maxima: Vec<f64> = find_local_extrema(&s, 0.01)
            .unwrap()
            .into_iter()
            .filter(|e| e.kind == ExtremumKind::Max && !e.boundary)
            .map(|e| e.time_ns)
            .collect();
        // full revivals at k/Δ plus the smaller |a − b| lobes at (k + ½)/Δ
        let period = 1e3 / 2.170;
        for k in 1..=3 {
            let near = k as f64 * period;
            // the envelope pulls each peak slightly early
        assert!(maxima.iter().any(|m| (m - near).abs() <= 0.05 * period), "{maxima:?} lacks {near}");
        }
        assert_eq!(maxima.len(), 6, "{maxima:?}");
    }

    #[test]
    fn revival_sum_examples() {
        let r = non_markovianity_revival_sum(&series(&[1.0, 0.2, 0.5, 0.1, 0.3]), 0.0).unwrap();
        assert!((r.n_value - 0.5).abs() < 1e-15);
        let r = non_markovianity_revival_sum(&series(&[1.0, 0.8, 0.5, 0.1]), 0.0).unwrap();
        assert_eq!(r.n_value, 0.0);
    }

    #[test]
    fn integral_examples() {
        assert!((non_markovianity_integral(&series(&[0.1, 0.2, 0.35, 0.6])) - 0.5).abs() < 1e-15);
        assert_eq!(non_markovianity_integral(&series(&[0.4, 0.4, 0.4])), 0.0);
    }

    #[test]
    fn estimators_agree_on_noiseless_curve() {
        let t = grid(1400.0, 1.0);
        let v: Vec<f64> = t.iter().map(|&t| closed_form(t)).collect();
        let s = TraceDistanceSeries::new(t, v).unwrap();
        let a = non_markovianity_revival_sum(&s, 0.0).unwrap().n_value;
        let b = non_markovianity_integral(&s);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn dft_finds_rabi_tone() {
        let t = grid(2000.0, 2.0);
        let v: Vec<f64> = t.iter().map(|&t| (2.0 * PI * 5.37 * t * 1e-3).cos()).collect();
        let p = dft_peak(&t, &v).unwrap();
        assert!((p.frequency_mhz - 5.37).abs() < 0.01, "{p:?}");
        assert!((p.amplitude - 1.0).abs() < 0.1, "{p:?}");
    }

    #[test]
    fn dft_constant_is_flat() {
        let t = grid(100.0, 1.0);
        let p = dft_peak(&t, &vec![0.7; t.len()]).unwrap();
        assert!(p.flat);
        assert_eq!(p.amplitude, 0.0);
    }

    #[test]
    fn dft_dominant_of_two_tones() {
        let t = grid(2000.0, 2.0);
        let v: Vec<f64> = t
            .iter()
            .map(|&t| {
                let t = t * 1e-3;
                2.0 * (2.0 * PI * 2.17 * t).cos() + (2.0 * PI * 4.34 * t).cos()
            })
            .collect();
        let p = dft_peak(&t, &v).unwrap();
        assert!((p.frequency_mhz - 2.17).abs() < 0.02, "{p:?}");
    }

    #[test]
    fn dft_rejects_uneven_grid() {
        let t = vec![0.0, 1.0, 2.0, 3.5, 4.0];
        assert!(dft_peak(&t, &[0.0, 1.0, 0.0, 1.0, 0.0]).is_err());
    }
}
