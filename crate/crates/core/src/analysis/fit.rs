//! Least-squares fit of `D(t) = |a + b cos(2πΔt)| · exp(−t²/T²)`.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::{dft_peak, TraceDistanceSeries};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub a: f64,
    pub b: f64,
    pub splitting_mhz: f64,
    pub envelope_ns: f64,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Model value at `t_ns` for splitting in MHz and envelope in ns.
pub fn trace_distance_model(a: f64, b: f64, splitting_mhz: f64, envelope_ns: f64, t_ns: f64) -> f64 {
    let t = t_ns * 1e-3;
    let big_t = envelope_ns * 1e-3;
    (a + b * (2.0 * PI * splitting_mhz * t).cos()).abs() * (-(t / big_t).powi(2)).exp()
}

/// Parameters in µs / MHz: (a, b, Δ, T).
type P = Vector4<f64>;

fn residuals(p: &P, t: &[f64], d: &[f64]) -> Vec<f64> {
    t.iter()
        .zip(d)
        .map(|(&t, &d)| {
            (p[0] + p[1] * (2.0 * PI * p[2] * t).cos()).abs() * (-(t / p[3]).powi(2)).exp() - d
        })
        .collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|r| r * r).sum()
}

/// Normal equations `JᵀJ` and `Jᵀr`. At the kinks of `|·|` the sign is taken as +1.
fn normal_equations(p: &P, t: &[f64], r: &[f64]) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for (&t, &ri) in t.iter().zip(r) {
        let (s, c) = (2.0 * PI * p[2] * t).sin_cos();
        let inner = p[0] + p[1] * c;
        let sign = if inner < 0.0 { -1.0 } else { 1.0 };
        let env = (-(t / p[3]).powi(2)).exp();
        let row = Vector4::new(
            sign * env,
            sign * c * env,
            -sign * p[1] * s * 2.0 * PI * t * env,
            inner.abs() * env * 2.0 * t * t / p[3].powi(3),
        );
        jtj += row * row.transpose();
        jtr += row * ri;
    }
    (jtj, jtr)
}

/// Best `(a, b)` at fixed `(Δ, T)`.
///
/// The model is `s · |1 + r cos| · env` for a scale `s` and ratio `r = b/a`; the
/// scale is linear, so `r` is scanned and the scale solved in closed form.
/// The pure cosine `|b cos|` is included as the `a = 0` limit.
fn linear_amplitudes(splitting: f64, envelope: f64, t: &[f64], d: &[f64]) -> (f64, f64) {
    let basis: Vec<(f64, f64)> = t
        .iter()
        .map(|&t| ((2.0 * PI * splitting * t).cos(), (-(t / envelope).powi(2)).exp()))
        .collect();
    let score = |shape: &dyn Fn(f64) -> f64| {
        let (mut gg, mut gd) = (0.0, 0.0);
        for (&(c, env), &d) in basis.iter().zip(d) {
            let g = shape(c) * env;
            gg += g * g;
            gd += g * d;
        }
        if gg > 0.0 {
            let s = gd / gg;
            (s, gg * s * s - 2.0 * s * gd)
        } else {
            (0.0, 0.0)
        }
    };
    let (s, mut best_cost) = score(&|c: f64| c.abs());
    let mut best = (0.0, s);
    for k in 0..=800 {
        let r = -4.0 + 0.01 * k as f64;
        let (s, cost) = score(&|c: f64| (1.0 + r * c).abs());
        if cost < best_cost {
            best_cost = cost;
            best = (s, s * r);
        }
    }
    best
}

/// `T` from a regression of the log of per-period maxima against `t²`.
fn envelope_guess(splitting: f64, t: &[f64], d: &[f64]) -> f64 {
    let span = t[t.len() - 1] - t[0];
    let period = 1.0 / splitting;
    let mut pts = Vec::new();
    let mut start = t[0];
    while start < t[t.len() - 1] {
        let best = t
            .iter()
            .zip(d)
            .filter(|(&ti, _)| ti >= start && ti < start + period)
            .max_by(|a, b| a.1.total_cmp(b.1));
        if let Some((&ti, &di)) = best {
            if di > 0.0 {
                pts.push((ti * ti, di.ln()));
            }
        }
        start += period;
    }
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            if slope < 0.0 {
                return (-1.0 / slope).sqrt();
            }
        }
    }
    10.0 * span
}

/// Removes a least-squares quadratic trend.
fn detrend(t: &[f64], d: &[f64]) -> Vec<f64> {
    let mut m = nalgebra::Matrix3::zeros();
    let mut v = nalgebra::Vector3::zeros();
    for (&t, &d) in t.iter().zip(d) {
        let row = nalgebra::Vector3::new(1.0, t, t * t);
        m += row * row.transpose();
        v += row * d;
    }
    match m.try_inverse() {
        Some(inv) => {
            let c = inv * v;
            t.iter().zip(d).map(|(&t, &d)| d - (c[0] + c[1] * t + c[2] * t * t)).collect()
        }
        None => d.to_vec(),
    }
}

struct Refined {
    p: P,
    cost: f64,
    iterations: usize,
}

fn levenberg_marquardt(mut p: P, t: &[f64], d: &[f64]) -> Result<Refined> {
    let mut r = residuals(&p, t, d);
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut trace = vec![cost];
    for iter in 1..=MAX_ITERATIONS {
        let (jtj, jtr) = normal_equations(&p, t, &r);
        let mut accepted = false;
        let mut step = Vector4::zeros();
        for _ in 0..30 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p + delta;
            trial[3] = trial[3].abs().max(1e-9);
            let tr = residuals(&trial, t, d);
            let tc = sum_sq(&tr);
            if tc <= cost {
                step = trial - p;
                p = trial;
                r = tr;
                cost = tc;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        trace.push(cost);
        let rel = step
            .iter()
            .zip(p.iter())
            .map(|(s, v)| s.abs() / v.abs().max(1e-12))
            .fold(0.0, f64::max);
        if !accepted || rel < REL_TOL {
            // no downhill step left means we sit in a minimum of the non-smooth model
            return Ok(Refined { p, cost, iterations: iter });
        }
    }
    Err(Error::FitDiverged {
        iterations: MAX_ITERATIONS,
        reason: format!("relative parameter change still above {REL_TOL:e}"),
        trace,
    })
}

/// Fits the revival model to a trace-distance curve.
///
/// Start values: Δ from the dominant DFT line of the detrended series (and a half
/// and a third of it, in case the rectified curve puts more power in a harmonic),
/// T from the decay of per-period maxima, and (a, b) from a linear solve at
/// fixed (Δ, T). All starts are refined by Levenberg-Marquardt and the lower
/// cost wins.
pub fn fit_trace_distance(series: &TraceDistanceSeries) -> Result<FitParams> {
    if series.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "fit needs at least 8 points, got {}",
            series.len()
        )));
    }
    let t: Vec<f64> = series.times_ns.iter().map(|t| t * 1e-3).collect();
    let d = &series.values;
    let span = t[t.len() - 1] - t[0];

    let detrended = detrend(&t, d);
    let t_ns: Vec<f64> = series.times_ns.clone();
    let peak = dft_peak(&t_ns, &detrended)?;
    let scale = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak.flat || detrended.iter().all(|v| v.abs() <= 1e-9 * scale) {
        return Err(Error::InvalidInput("series has no oscillation to fit".into()));
    }

    let mut best: Option<Refined> = None;
    let mut last_err = None;
    for splitting in [peak.frequency_mhz, peak.frequency_mhz / 2.0, peak.frequency_mhz / 3.0] {
        let envelope = envelope_guess(splitting, &t, d);
        let (a, b) = linear_amplitudes(splitting, envelope, &t, d);
        match levenberg_marquardt(Vector4::new(a, b, splitting, envelope), &t, d) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.cost < b.cost) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = best else {
        return Err(last_err.expect("at least one start was attempted"));
    };
    let mut p = best.p;
    let periods = p[2].abs() * span;
    if periods < 1.5 {
        return Err(Error::InvalidInput(format!(
            "series spans {periods:.2} oscillation periods; at least 1.5 are needed"
        )));
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[1] = -p[1];
    }
    Ok(FitParams {
        a: p[0],
        b: p[1],
        splitting_mhz: p[2].abs(),
        envelope_ns: p[3].abs() * 1e3,
        residual_rms: (best.cost / t.len() as f64).sqrt(),
        iterations: best.iterations,
    })
}
