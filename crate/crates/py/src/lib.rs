use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use kkq_core::analysis::{self, ClusterStats, Covariance2};
use kkq_core::experiment::{self, ConfigFile, ExperimentConfig, ExperimentError};
use kkq_core::heterodyne::{self, HeterodyneParams};
use kkq_core::kk_receiver;
use kkq_core::quantum_noise::{self, NoiseLaw, NoiseStream, PhotocurrentTrace, TraceKind};
use kkq_core::signal_model::{self, ModulationSymbol};
use kkq_core::KkError;

fn value_error(e: KkError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn experiment_error(e: ExperimentError) -> PyErr {
    match e {
        ExperimentError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn symbol(index: u8) -> PyResult<ModulationSymbol> {
    ModulationSymbol::qpsk(index).map_err(value_error)
}

#[pyclass(name = "SignalParams", frozen)]
struct PySignalParams {
    inner: signal_model::SignalParams,
}

#[pymethods]
impl PySignalParams {
    #[new]
    fn new(n_s: f64, cspr_db: f64) -> PyResult<Self> {
        signal_model::SignalParams::new(n_s, cspr_db)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[getter]
    fn n_s(&self) -> f64 {
        self.inner.n_s
    }

    #[getter]
    fn cspr_db(&self) -> f64 {
        self.inner.cspr_db
    }

    #[getter]
    fn carrier_amplitude(&self) -> f64 {
        self.inner.carrier_amplitude
    }

    fn __repr__(&self) -> String {
        format!(
            "SignalParams(n_s={}, cspr_db={}, carrier_amplitude={})",
            self.inner.n_s, self.inner.cspr_db, self.inner.carrier_amplitude
        )
    }
}

#[pyclass(name = "SamplingGrid", frozen)]
struct PySamplingGrid {
    inner: signal_model::SamplingGrid,
}

#[pymethods]
impl PySamplingGrid {
    #[new]
    #[pyo3(signature = (samples_per_if_period, if_periods_per_symbol, decision_index=None))]
    fn new(
        samples_per_if_period: usize,
        if_periods_per_symbol: usize,
        decision_index: Option<usize>,
    ) -> PyResult<Self> {
        let grid = match decision_index {
            Some(l) => signal_model::SamplingGrid::with_decision_index(
                samples_per_if_period,
                if_periods_per_symbol,
                l,
            ),
            None => signal_model::SamplingGrid::new(samples_per_if_period, if_periods_per_symbol),
        };
        grid.map(|inner| Self { inner }).map_err(value_error)
    }

    #[staticmethod]
    fn paper() -> Self {
        Self {
            inner: signal_model::SamplingGrid::paper(),
        }
    }

    #[staticmethod]
    fn reduced() -> Self {
        Self {
            inner: signal_model::SamplingGrid::reduced(),
        }
    }

    #[getter]
    fn samples_per_if_period(&self) -> usize {
        self.inner.samples_per_if_period
    }

    #[getter]
    fn if_periods_per_symbol(&self) -> usize {
        self.inner.if_periods_per_symbol
    }

    #[getter]
    fn decision_index(&self) -> usize {
        self.inner.decision_index
    }

    #[getter]
    fn total_samples(&self) -> usize {
        self.inner.total_samples
    }

    #[getter]
    fn phase_step(&self) -> f64 {
        self.inner.phase_step()
    }

    #[getter]
    fn decision_phase(&self) -> f64 {
        self.inner.decision_phase()
    }

    fn __repr__(&self) -> String {
        format!(
            "SamplingGrid(samples_per_if_period={}, if_periods_per_symbol={}, decision_index={})",
            self.inner.samples_per_if_period,
            self.inner.if_periods_per_symbol,
            self.inner.decision_index
        )
    }
}

/// sqrt(n_s) * exp(j(pi/4 + index pi/2)).
#[pyfunction]
fn map_qpsk(index: u8, n_s: f64) -> PyResult<Complex64> {
    signal_model::map_qpsk(index, n_s).map_err(value_error)
}

#[pyfunction]
fn synthesize_envelope(
    params: PyRef<'_, PySignalParams>,
    grid: PyRef<'_, PySamplingGrid>,
    symbol_index: u8,
) -> PyResult<Vec<Complex64>> {
    let frame =
        signal_model::synthesize_mp_envelope(&params.inner, &grid.inner, symbol(symbol_index)?);
    Ok(frame.samples)
}

/// Returns (is_minimum_phase, min_abs, winding).
#[pyfunction]
fn check_minimum_phase(
    params: PyRef<'_, PySignalParams>,
    grid: PyRef<'_, PySamplingGrid>,
    symbol_index: u8,
) -> PyResult<(bool, f64, i64)> {
    let frame =
        signal_model::synthesize_mp_envelope(&params.inner, &grid.inner, symbol(symbol_index)?);
    let r = signal_model::check_minimum_phase(&frame);
    Ok((r.is_minimum_phase, r.min_abs, r.winding))
}

#[pyfunction]
#[pyo3(signature = (params, grid, symbol_index, k=1.0))]
fn expected_current(
    params: PyRef<'_, PySignalParams>,
    grid: PyRef<'_, PySamplingGrid>,
    symbol_index: u8,
    k: f64,
) -> PyResult<Vec<f64>> {
    let frame =
        signal_model::synthesize_mp_envelope(&params.inner, &grid.inner, symbol(symbol_index)?);
    Ok(quantum_noise::expected_current(&frame, k).values)
}

/// Noisy realization of an expected current trace.
#[pyfunction]
#[pyo3(signature = (values, seed, stream=0, r=2.0, k=1.0))]
fn sample_noisy_current(
    values: Vec<f64>,
    seed: u64,
    stream: u64,
    r: f64,
    k: f64,
) -> PyResult<Vec<f64>> {
    let trace = PhotocurrentTrace {
        values,
        k,
        kind: TraceKind::Expected,
    };
    let law = NoiseLaw::new(r, k).map_err(value_error)?;
    quantum_noise::sample_noisy_current(&trace, &law, NoiseStream::new(seed, stream))
        .map(|t| t.values)
        .map_err(value_error)
}

/// Retrieved phase of h at `decision_index` from a positive current trace.
#[pyfunction]
fn hilbert_phase(values: Vec<f64>, decision_index: usize) -> PyResult<f64> {
    let trace = PhotocurrentTrace {
        values,
        k: 1.0,
        kind: TraceKind::Noisy,
    };
    kk_receiver::hilbert_phase(&trace, decision_index)
        .map(|p| p.phi)
        .map_err(value_error)
}

/// Returns (alpha_prime, decision_phase, clamp_count).
#[pyfunction]
#[pyo3(signature = (params, grid, symbol_index, seed, stream=0, r=2.0, k=1.0))]
fn simulate_symbol(
    params: PyRef<'_, PySignalParams>,
    grid: PyRef<'_, PySamplingGrid>,
    symbol_index: u8,
    seed: u64,
    stream: u64,
    r: f64,
    k: f64,
) -> PyResult<(Complex64, f64, usize)> {
    let law = NoiseLaw::new(r, k).map_err(value_error)?;
    let s = kk_receiver::simulate_symbol(
        &params.inner,
        &grid.inner,
        symbol(symbol_index)?,
        &law,
        NoiseStream::new(seed, stream),
    )
    .map_err(value_error)?;
    Ok((s.alpha_prime, s.decision_phase, s.clamp_count))
}

/// Mean and unbiased covariance (xx, xy, yy) of a cluster of points.
#[pyfunction]
fn cluster_stats(points: Vec<Complex64>) -> PyResult<(Complex64, (f64, f64, f64))> {
    let s = ClusterStats::from_points(ModulationSymbol::ALL[0], &points).map_err(value_error)?;
    let c = s.covariance;
    Ok((s.mean, (c.xx, c.xy, c.yy)))
}

/// Returns (lambda_major, lambda_minor, orientation, rho).
#[pyfunction]
fn pca_ellipse(xx: f64, xy: f64, yy: f64) -> PyResult<(f64, f64, f64, f64)> {
    let e = analysis::pca_ellipse(&Covariance2 { xx, xy, yy }, Complex64::new(0.0, 0.0))
        .map_err(value_error)?;
    Ok((e.lambda_major, e.lambda_minor, e.orientation, e.rho))
}

#[pyfunction]
fn predict_iq_variances(theta: f64) -> (f64, f64) {
    analysis::predict_iq_variances(theta)
}

#[pyfunction]
#[pyo3(signature = (current, k=1.0))]
fn predict_phase_variance(current: f64, k: f64) -> PyResult<f64> {
    analysis::predict_phase_variance(current, k).map_err(value_error)
}

#[pyfunction]
fn basel_sum_check(terms: u64) -> PyResult<f64> {
    analysis::basel_sum_check(terms).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (n_s, n_l, k=1.0))]
fn balanced_snr(n_s: f64, n_l: f64, k: f64) -> PyResult<f64> {
    let p = HeterodyneParams::new(n_s, n_l, k, 0.0).map_err(value_error)?;
    heterodyne::balanced_snr(&p).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (n_s, n_l, k=1.0))]
fn balanced_current_variance(n_s: f64, n_l: f64, k: f64) -> PyResult<f64> {
    let p = HeterodyneParams::new(n_s, n_l, k, 0.0).map_err(value_error)?;
    Ok(heterodyne::balanced_current_variance(&p))
}

/// Runs an experiment from a config string and returns the stats document as
/// JSON. With `write_outputs=True` the usual files go to the config's `out`.
#[pyfunction]
#[pyo3(signature = (config_toml, write_outputs=false))]
fn run_experiment(py: Python<'_>, config_toml: &str, write_outputs: bool) -> PyResult<String> {
    let raw = ConfigFile::parse(config_toml).map_err(experiment_error)?;
    let config = ExperimentConfig::resolve(raw).map_err(experiment_error)?;
    let outcome = py
        .detach(|| {
            let start = std::time::Instant::now();
            let outcome = experiment::run_experiment(&config)?;
            if write_outputs {
                experiment::write_outputs(&outcome, start.elapsed().as_secs_f64())?;
            }
            Ok::<_, ExperimentError>(outcome)
        })
        .map_err(experiment_error)?;
    serde_json::to_string_pretty(&outcome.report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn kkq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignalParams>()?;
    m.add_class::<PySamplingGrid>()?;
    m.add_function(wrap_pyfunction!(map_qpsk, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(check_minimum_phase, m)?)?;
    m.add_function(wrap_pyfunction!(expected_current, m)?)?;
    m.add_function(wrap_pyfunction!(sample_noisy_current, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_phase, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_stats, m)?)?;
    m.add_function(wrap_pyfunction!(pca_ellipse, m)?)?;
    m.add_function(wrap_pyfunction!(predict_iq_variances, m)?)?;
    m.add_function(wrap_pyfunction!(predict_phase_variance, m)?)?;
    m.add_function(wrap_pyfunction!(basel_sum_check, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_snr, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_current_variance, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
