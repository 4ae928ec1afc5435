//! Python bindings: `import spinbath_py`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spinbath::analysis::{self, TraceDistanceSeries};
use spinbath::bath::{coherence_function, polarize_spectrum};
use spinbath::protocols::{self, Oracle, DEFAULT_RABI_MHZ};
use spinbath::pulse::{ensemble_evolve, EnsembleMethod};
use spinbath::quantum::trace_distance;
use spinbath::{dsl, output, BlochVector, Mode, PolarizationModel};

create_exception!(spinbath_py, SpinbathError, PyException, "Raised for every spinbath failure; `args[1]` is the error code.");

fn to_py(e: spinbath::Error) -> PyErr {
    SpinbathError::new_err((e.to_string(), e.code()))
}

fn method(text: &str) -> PyResult<EnsembleMethod> {
    text.parse().map_err(to_py)
}

#[pyclass(name = "Spectrum", module = "spinbath_py")]
struct Spectrum(spinbath::BathSpectrum);

#[pymethods]
impl Spectrum {
    /// Modes as `(weight, center_mhz, sigma_mhz)`; weights are normalized.
    #[new]
    fn new(modes: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let modes = modes.into_iter().map(|(w, c, s)| Mode::new(w, c, s)).collect();
        Ok(Self(spinbath::BathSpectrum::new(modes).map_err(to_py)?))
    }

    /// Three equal hyperfine modes at 0 and ±2.17 MHz with a 1382 ns envelope.
    #[staticmethod]
    fn default() -> Self {
        Self(spinbath::paper_default_spectrum())
    }

    #[staticmethod]
    fn point_mass(detuning_mhz: f64) -> Self {
        Self(spinbath::BathSpectrum::point_mass(detuning_mhz))
    }

    #[staticmethod]
    #[pyo3(signature = (center_mhz, envelope_ns = 1382.0))]
    fn single_mode(center_mhz: f64, envelope_ns: f64) -> Self {
        Self(spinbath::BathSpectrum::single_mode(center_mhz, envelope_ns))
    }

    #[getter]
    fn modes(&self) -> Vec<(f64, f64, f64)> {
        self.0.modes().iter().map(|m| (m.weight, m.center_mhz, m.sigma_mhz)).collect()
    }

    fn coherence(&self, t_ns: f64) -> (f64, f64) {
        let w = coherence_function(&self.0, t_ns);
        (w.re, w.im)
    }

    #[pyo3(signature = (field_mt, saturation_field_mt = 35.0, exponent = 1.0))]
    fn polarized(&self, field_mt: f64, saturation_field_mt: f64, exponent: f64) -> PyResult<Self> {
        let model = PolarizationModel::new(saturation_field_mt, exponent).map_err(to_py)?;
        Ok(Self(polarize_spectrum(&self.0, field_mt, &model).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!("Spectrum({:?})", self.modes())
    }
}

#[pyclass(name = "DensityMatrix", module = "spinbath_py")]
struct DensityMatrix(spinbath::DensityMatrix);

#[pymethods]
impl DensityMatrix {
    #[staticmethod]
    fn from_bloch(x: f64, y: f64, z: f64) -> PyResult<Self> {
        Ok(Self(spinbath::DensityMatrix::from_bloch(BlochVector::new(x, y, z)).map_err(to_py)?))
    }

    #[staticmethod]
    fn ground() -> Self {
        Self(spinbath::DensityMatrix::ground())
    }

    fn bloch(&self) -> (f64, f64, f64) {
        let v = self.0.bloch();
        (v.x, v.y, v.z)
    }

    fn p0(&self) -> f64 {
        self.0.p0()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        trace_distance(&self.0, &other.0)
    }

    /// Row-major complex entries.
    fn elements(&self) -> Vec<Vec<(f64, f64)>> {
        let m = self.0.elements();
        (0..2).map(|i| (0..2).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect()).collect()
    }

    fn __repr__(&self) -> String {
        let (x, y, z) = self.bloch();
        format!("DensityMatrix(bloch=({x:.6}, {y:.6}, {z:.6}))")
    }
}

#[pyclass(name = "PulseSequence", module = "spinbath_py")]
struct PulseSequence(spinbath::PulseSequence);

fn oracle(name: &str) -> PyResult<Oracle> {
    name.parse().map_err(to_py)
}

#[pymethods]
impl PulseSequence {
    /// Expands sequence `name` from DSL text.
    #[staticmethod]
    fn from_dsl(text: &str, name: &str) -> PyResult<Self> {
        let doc = dsl::parse_dsl(text).map_err(to_py)?;
        Ok(Self(doc.sequence(name).map_err(to_py)?))
    }

    #[staticmethod]
    #[pyo3(signature = (oracle_name, tau_ns, rabi_mhz = DEFAULT_RABI_MHZ))]
    fn rdja(oracle_name: &str, tau_ns: f64, rabi_mhz: f64) -> PyResult<Self> {
        Ok(Self(protocols::build_rdja_sequence(oracle(oracle_name)?, tau_ns, rabi_mhz).map_err(to_py)?))
    }

    #[staticmethod]
    #[pyo3(signature = (oracle_name, t1_ns, t2_ns, rabi_mhz = DEFAULT_RABI_MHZ))]
    fn echo_rdja(oracle_name: &str, t1_ns: f64, t2_ns: f64, rabi_mhz: f64) -> PyResult<Self> {
        Ok(Self(
            protocols::build_echo_rdja_sequence(oracle(oracle_name)?, t1_ns, t2_ns, rabi_mhz).map_err(to_py)?,
        ))
    }

    fn instantaneous(&self) -> Self {
        Self(self.0.with_instantaneous_pulses())
    }

    #[getter]
    fn duration_ns(&self) -> f64 {
        self.0.total_duration_ns()
    }

    fn __len__(&self) -> usize {
        self.0.segments.len()
    }

    /// Evolves |0⟩ through the sequence, averaged over the bath.
    #[pyo3(signature = (spectrum, method = "quadrature:64"))]
    fn evolve(&self, spectrum: &Spectrum, method: &str) -> PyResult<DensityMatrix> {
        let m = self::method(method)?;
        let rho = ensemble_evolve(&spinbath::DensityMatrix::ground(), &self.0, &spectrum.0, &m).map_err(to_py)?;
        Ok(DensityMatrix(rho))
    }

    fn __repr__(&self) -> String {
        format!("PulseSequence({:?}, {} segments, {:.3} ns)", self.0.label, self.0.segments.len(), self.duration_ns())
    }
}

/// P0 curves for the four oracles plus `contrast = p0_u3 − p0_u1`.
#[pyfunction]
#[pyo3(signature = (spectrum, tau_ns, rabi_mhz = DEFAULT_RABI_MHZ, method = "quadrature:64", ideal_pulses = false))]
fn rdja_scan<'py>(
    py: Python<'py>,
    spectrum: &Spectrum,
    tau_ns: Vec<f64>,
    rabi_mhz: f64,
    method: &str,
    ideal_pulses: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let m = self::method(method)?;
    let scan = py
        .detach(|| protocols::run_rdja_scan(&spectrum.0, rabi_mhz, &tau_ns, &m, ideal_pulses))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("tau_ns", scan.grid)?;
    for c in scan.curves {
        d.set_item(c.name, c.values)?;
    }
    d.set_item("contrast", scan.contrast)?;
    Ok(d)
}

/// Echo-RDJA scan over t2 at fixed t1; `pos = p0_constant − p0_balanced`.
#[pyfunction]
#[pyo3(signature = (spectrum, t1_ns, t2_ns, rabi_mhz = DEFAULT_RABI_MHZ, method = "quadrature:64", ideal_pulses = false))]
fn echo_scan<'py>(
    py: Python<'py>,
    spectrum: &Spectrum,
    t1_ns: f64,
    t2_ns: Vec<f64>,
    rabi_mhz: f64,
    method: &str,
    ideal_pulses: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let m = self::method(method)?;
    let scan = py
        .detach(|| protocols::run_echo_scan(&spectrum.0, rabi_mhz, t1_ns, &t2_ns, &m, ideal_pulses))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("t2_ns", scan.t2_ns)?;
    d.set_item("p0_constant", scan.p0_constant)?;
    d.set_item("p0_balanced", scan.p0_balanced)?;
    d.set_item("pos", scan.pos)?;
    Ok(d)
}

/// Trace distance of the optimal equatorial pair after free evolution.
#[pyfunction]
#[pyo3(signature = (spectrum, t_ns, rabi_mhz = DEFAULT_RABI_MHZ, method = "quadrature:64", ideal_pulses = false))]
fn trace_distance_curve(
    py: Python<'_>,
    spectrum: &Spectrum,
    t_ns: Vec<f64>,
    rabi_mhz: f64,
    method: &str,
    ideal_pulses: bool,
) -> PyResult<Vec<f64>> {
    let m = self::method(method)?;
    let s = py
        .detach(|| protocols::run_trace_distance_experiment(&spectrum.0, rabi_mhz, &t_ns, &m, ideal_pulses))
        .map_err(to_py)?;
    Ok(s.values)
}

/// `(revival_sum, positive_increment_integral)`.
#[pyfunction]
#[pyo3(signature = (t_ns, values, prominence = 0.0))]
fn non_markovianity(t_ns: Vec<f64>, values: Vec<f64>, prominence: f64) -> PyResult<(f64, f64)> {
    let s = TraceDistanceSeries::new(t_ns, values).map_err(to_py)?;
    let r = analysis::non_markovianity_revival_sum(&s, prominence).map_err(to_py)?;
    Ok((r.n_value, analysis::non_markovianity_integral(&s)))
}

/// Fits `|a + b cos(2πΔt)|·exp(−t²/T²)`; returns a dict of parameters.
#[pyfunction]
fn fit_trace_distance<'py>(py: Python<'py>, t_ns: Vec<f64>, values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let s = TraceDistanceSeries::new(t_ns, values).map_err(to_py)?;
    let f = py.detach(|| analysis::fit_trace_distance(&s)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("a", f.a)?;
    d.set_item("b", f.b)?;
    d.set_item("splitting_mhz", f.splitting_mhz)?;
    d.set_item("envelope_ns", f.envelope_ns)?;
    d.set_item("residual_rms", f.residual_rms)?;
    d.set_item("iterations", f.iterations)?;
    Ok(d)
}

/// `(frequency_mhz, amplitude)` of the dominant non-DC line.
#[pyfunction]
fn dft_peak(t_ns: Vec<f64>, values: Vec<f64>) -> PyResult<(f64, f64)> {
    let p = analysis::dft_peak(&t_ns, &values).map_err(to_py)?;
    Ok((p.frequency_mhz, p.amplitude))
}

/// Runs a JSON experiment config; returns `(columns, rows)`.
#[pyfunction]
fn run_config(py: Python<'_>, config_json: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let cfg = spinbath::ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let r = py.detach(|| spinbath::run_experiment(&cfg)).map_err(to_py)?;
    Ok((r.columns, r.rows))
}

/// Same as `run_config` but returns the CSV text.
#[pyfunction]
fn run_config_csv(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = spinbath::ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let r = py.detach(|| spinbath::run_experiment(&cfg)).map_err(to_py)?;
    Ok(output::to_csv(&r))
}

#[pymodule]
fn spinbath_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SpinbathError", m.py().get_type::<SpinbathError>())?;
    m.add_class::<Spectrum>()?;
    m.add_class::<DensityMatrix>()?;
    m.add_class::<PulseSequence>()?;
    m.add_function(wrap_pyfunction!(rdja_scan, m)?)?;
    m.add_function(wrap_pyfunction!(echo_scan, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance_curve, m)?)?;
    m.add_function(wrap_pyfunction!(non_markovianity, m)?)?;
    m.add_function(wrap_pyfunction!(fit_trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(dft_peak, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config_csv, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
