//! Runs a validated [`ExperimentConfig`] and collects a numeric table.
//!
//! Column layout per kind:
//!
//! | kind | columns |
//! |---|---|
//! | `rdja-scan` | `tau_ns,p0_u1,p0_u2,p0_u3,p0_u4,contrast` |
//! | `echo-scan` | `t2_ns,p0_constant,p0_balanced,pos` |
//! | `trace-distance` | `t_ns,trace_distance` |
//! | `non-markovianity` | `t_ns,trace_distance` (N in the summary) |
//! | `fit` | `t_ns,trace_distance,model` (parameters in the summary) |
//! | `markov-transition` | `field_mt,polarization,n_revival,n_integral,contrast_tau0` |
//! | `rabi` | `duration_ns,p0` |
//! | `run-seq` | `duration_ns,p0,x,y,z` |

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::{
    fit_trace_distance, find_local_extrema, non_markovianity_integral, non_markovianity_revival_sum,
    trace_distance_model, ExtremumKind, TraceDistanceSeries,
};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::protocols::{run_echo_scan, run_markov_transition, run_rabi_scan, run_rdja_scan, run_trace_distance_experiment};
use crate::pulse::{counts_from_p0, ensemble_evolve, p0_from_counts};
use crate::quantum::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Scalar results and diagnostics that do not fit the table.
    pub summary: Map<String, Value>,
    pub config: ExperimentConfig,
}

impl ExperimentResult {
    pub fn empty(config: ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            kind: config.kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
            config,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    fn push_columns(&mut self, cols: &[&[f64]]) {
        let n = cols.first().map_or(0, |c| c.len());
        for i in 0..n {
            self.rows.push(cols.iter().map(|c| c[i]).collect());
        }
    }
}

/// Passes populations through the configured detector, if any.
///
/// Each point draws its counts from its own seed, `seed + curve·n + i`, so a
/// point's noise does not depend on how many points precede it in other curves.
fn measured(cfg: &ExperimentConfig, curve: usize, p0: &[f64]) -> Result<Vec<f64>> {
    let Some(sig) = &cfg.signal else {
        return Ok(p0.to_vec());
    };
    let model = sig.model()?;
    let base = cfg.seed.unwrap_or(0);
    p0.iter()
        .enumerate()
        .map(|(i, &p)| {
            let seed = base.wrapping_add((curve * p0.len() + i) as u64);
            Ok(p0_from_counts(counts_from_p0(p.clamp(0.0, 1.0), &model, sig.noisy, seed)?, &model).p0)
        })
        .collect()
}

fn read_series_csv(path: &Path) -> Result<TraceDistanceSeries> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Option<(f64, f64)> = match fields.as_slice() {
            [a, b, ..] => a.parse().ok().zip(b.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((a, b)) => {
                t.push(a);
                v.push(b);
            }
            None if i == 0 => {} // header
            None => {
                return Err(Error::InvalidInput(format!("{}:{}: expected `t_ns,value`", path.display(), i + 1)))
            }
        }
    }
    TraceDistanceSeries::new(t, v)
}

fn extrema_json(series: &TraceDistanceSeries, prominence: f64) -> Result<Value> {
    let ext = find_local_extrema(series, prominence)?;
    Ok(Value::Array(
        ext.iter()
            .map(|e| {
                json!({
                    "time_ns": e.time_ns,
                    "value": e.value,
                    "kind": if e.kind == ExtremumKind::Max { "max" } else { "min" },
                    "boundary": e.boundary,
                })
            })
            .collect(),
    ))
}

/// Validates `cfg` and runs it. Nothing is simulated if validation fails.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let method = cfg.effective_method();
    let rabi = cfg.rabi_mhz;
    let ideal = cfg.ideal_pulses;
    let mut cfg_out = cfg.clone();
    cfg_out.method = method;
    match cfg.kind {
        ExperimentKind::RdjaScan => {
            let spectrum = cfg.build_spectrum(None)?;
            let grid = cfg.grid_points()?;
            let scan = run_rdja_scan(&spectrum, rabi, &grid, &method, ideal)?;
            let p: Vec<Vec<f64>> =
                scan.curves.iter().enumerate().map(|(k, c)| measured(cfg, k, &c.values)).collect::<Result<_>>()?;
            let contrast: Vec<f64> = p[2].iter().zip(&p[0]).map(|(b, c)| b - c).collect();
            let mut r = ExperimentResult::empty(cfg_out, &["tau_ns", "p0_u1", "p0_u2", "p0_u3", "p0_u4", "contrast"]);
            r.push_columns(&[&grid, &p[0], &p[1], &p[2], &p[3], &contrast]);
            Ok(r)
        }
        ExperimentKind::EchoScan => {
            let spectrum = cfg.build_spectrum(None)?;
            let grid = cfg.grid_points()?;
            let scan = run_echo_scan(&spectrum, rabi, cfg.t1_ns, &grid, &method, ideal)?;
            let c = measured(cfg, 0, &scan.p0_constant)?;
            let b = measured(cfg, 1, &scan.p0_balanced)?;
            let pos: Vec<f64> = c.iter().zip(&b).map(|(c, b)| c - b).collect();
            let mut r = ExperimentResult::empty(cfg_out, &["t2_ns", "p0_constant", "p0_balanced", "pos"]);
            r.push_columns(&[&grid, &c, &b, &pos]);
            let best = (0..pos.len()).max_by(|&i, &j| pos[i].total_cmp(&pos[j])).unwrap_or(0);
            r.summary.insert("t1_ns".into(), json!(cfg.t1_ns));
            r.summary.insert("best_t2_ns".into(), json!(grid[best]));
            r.summary.insert("best_pos".into(), json!(pos[best]));
            Ok(r)
        }
        ExperimentKind::TraceDistance | ExperimentKind::NonMarkovianity => {
            let spectrum = cfg.build_spectrum(None)?;
            let grid = cfg.grid_points()?;
            let series = run_trace_distance_experiment(&spectrum, rabi, &grid, &method, ideal)?;
            let mut r = ExperimentResult::empty(cfg_out, &["t_ns", "trace_distance"]);
            r.push_columns(&[&series.times_ns, &series.values]);
            if cfg.kind == ExperimentKind::NonMarkovianity {
                let n = non_markovianity_revival_sum(&series, cfg.prominence)?;
                r.summary.insert("n_revival".into(), json!(n.n_value));
                r.summary.insert("n_integral".into(), json!(non_markovianity_integral(&series)));
                r.summary.insert("prominence".into(), json!(cfg.prominence));
                r.summary.insert("extrema".into(), extrema_json(&series, cfg.prominence)?);
            }
            Ok(r)
        }
        ExperimentKind::Fit => {
            let series = match &cfg.input {
                Some(path) => read_series_csv(path)?,
                None => {
                    let spectrum = cfg.build_spectrum(None)?;
                    run_trace_distance_experiment(&spectrum, rabi, &cfg.grid_points()?, &method, ideal)?
                }
            };
            let fit = fit_trace_distance(&series)?;
            let model: Vec<f64> = series
                .times_ns
                .iter()
                .map(|&t| trace_distance_model(fit.a, fit.b, fit.splitting_mhz, fit.envelope_ns, t))
                .collect();
            let mut r = ExperimentResult::empty(cfg_out, &["t_ns", "trace_distance", "model"]);
            r.push_columns(&[&series.times_ns, &series.values, &model]);
            r.summary.insert("a".into(), json!(fit.a));
            r.summary.insert("b".into(), json!(fit.b));
            r.summary.insert("b_over_a".into(), json!(fit.b / fit.a));
            r.summary.insert("splitting_mhz".into(), json!(fit.splitting_mhz));
            r.summary.insert("envelope_ns".into(), json!(fit.envelope_ns));
            r.summary.insert("residual_rms".into(), json!(fit.residual_rms));
            r.summary.insert("iterations".into(), json!(fit.iterations));
            Ok(r)
        }
        ExperimentKind::MarkovTransition => {
            let spectrum = cfg.build_spectrum(None)?;
            let fields = cfg.fields_mt.expect("validated").points();
            let pts = run_markov_transition(
                &spectrum,
                &cfg.polarization,
                &fields,
                rabi,
                &cfg.grid_points()?,
                &method,
                ideal,
                cfg.prominence,
            )?;
            let mut r = ExperimentResult::empty(
                cfg_out,
                &["field_mt", "polarization", "n_revival", "n_integral", "contrast_tau0"],
            );
            r.rows = pts
                .iter()
                .map(|p| vec![p.field_mt, p.polarization, p.n_revival, p.n_integral, p.contrast_tau0])
                .collect();
            Ok(r)
        }
        ExperimentKind::Rabi => {
            let spectrum = cfg.build_spectrum(None)?;
            let grid = cfg.grid_points()?;
            let scan = run_rabi_scan(&spectrum, rabi, &grid, &method)?;
            let p = measured(cfg, 0, &scan.curves[0].values)?;
            let mut r = ExperimentResult::empty(cfg_out, &["duration_ns", "p0"]);
            r.push_columns(&[&grid, &p]);
            Ok(r)
        }
        ExperimentKind::RunSeq => {
            let (src, doc) = cfg.load_dsl()?;
            let spectrum = cfg.build_spectrum(Some((&src, &doc)))?;
            let mut seq = doc.sequence(&src.sequence)?;
            if ideal {
                seq = seq.with_instantaneous_pulses();
            }
            let rho = ensemble_evolve(&DensityMatrix::ground(), &seq, &spectrum, &method)?;
            let v = rho.bloch();
            let p0 = measured(cfg, 0, &[rho.p0()])?[0];
            let mut r = ExperimentResult::empty(cfg_out, &["duration_ns", "p0", "x", "y", "z"]);
            r.rows.push(vec![seq.total_duration_ns(), p0, v.x, v.y, v.z]);
            r.summary.insert("sequence".into(), json!(src.sequence));
            r.summary.insert("segments".into(), json!(seq.segments.len()));
            r.summary.insert("rabi_mhz".into(), json!(doc.rabi()));
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridSpec, SpectrumConfig};

    #[test]
    fn resonant_rdja_contrast_is_one() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RdjaScan);
        cfg.spectrum = SpectrumConfig::PointMass { detuning_mhz: 0.0 };
        cfg.grid = Some(GridSpec::new(0.0, 200.0, 50.0).unwrap());
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 5);
        for c in r.column("contrast").unwrap() {
            assert!((c - 1.0).abs() < 1e-12, "{c}");
        }
    }

    #[test]
    fn trace_distance_matches_closed_form() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::TraceDistance);
        cfg.ideal_pulses = true;
        cfg.grid = Some(GridSpec::new(0.0, 1400.0, 10.0).unwrap());
        let r = run_experiment(&cfg).unwrap();
        for row in &r.rows {
            let expect = trace_distance_model(1.0 / 3.0, 2.0 / 3.0, 2.170, 1382.0, row[0]);
            assert!((row[1] - expect).abs() < 1e-6, "t={} {} vs {expect}", row[0], row[1]);
        }
    }

    #[test]
    fn markov_transition_turns_off_backflow() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::MarkovTransition);
        cfg.ideal_pulses = true;
        cfg.method = crate::pulse::EnsembleMethod::Quadrature { nodes_per_mode: 32 };
        cfg.grid = Some(GridSpec::new(0.0, 1400.0, 10.0).unwrap());
        cfg.fields_mt = Some(GridSpec::new(0.0, 50.0, 5.0).unwrap());
        let r = run_experiment(&cfg).unwrap();
        let b = r.column("field_mt").unwrap();
        let n = r.column("n_revival").unwrap();
        assert_eq!(b.len(), 11);
        for w in n.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{n:?}");
        }
        for (b, n) in b.iter().zip(&n) {
            if *b >= 35.0 {
                assert!(*n < 1e-6, "N({b}) = {n}");
            }
        }
    }

    #[test]
    fn noisy_signal_is_seeded() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Rabi);
        cfg.spectrum = SpectrumConfig::PointMass { detuning_mhz: 0.0 };
        cfg.grid = Some(GridSpec::new(0.0, 200.0, 10.0).unwrap());
        cfg.signal = Some(crate::config::SignalConfig { c_max: 1.3e6, c_min: 0.9e6, shots: 1, noisy: true });
        cfg.seed = Some(5);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        cfg.seed = Some(6);
        assert_ne!(run_experiment(&cfg).unwrap().rows, a.rows);
    }

    #[test]
    fn invalid_config_fails_before_running() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RdjaScan);
        cfg.grid = Some(GridSpec { start: 0.0, stop: 10.0, step: 0.0 });
        assert_eq!(run_experiment(&cfg).unwrap_err().code(), "E_CONFIG");
    }
}
