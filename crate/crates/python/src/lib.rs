//! Python bindings: `regime_ou.Model` and a few free functions.
//!
//! Structured results (reports, certificates, statistics) cross the boundary
//! as JSON and come out as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use regime_ou_core::analyze::{self, AnalyzeError, SearchGrid};
use regime_ou_core::chain;
use regime_ou_core::model::{LevyMeasureSpec, LevyTriplet, RegimeModel};
use regime_ou_core::oracle::{self, InversionOptions, OracleError};
use regime_ou_core::rng::stream_rng;
use regime_ou_core::simulate::{self, IncrementPlan, SeedInfo, SimError, SmallJumpMode};
use regime_ou_core::spectral::{self, Kappa};

pyo3::create_exception!(regime_ou, PreconditionError, PyValueError);
pyo3::create_exception!(regime_ou, NumericalError, PyRuntimeError);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> PyErr {
    NumericalError::new_err(e.to_string())
}

fn sim_err(e: SimError) -> PyErr {
    match e {
        SimError::NotPositiveRecurrent { .. } => PreconditionError::new_err(e.to_string()),
        SimError::InvalidPlan(_)
        | SimError::InvalidStep { .. }
        | SimError::StateOutOfRange { .. }
        | SimError::InvalidSampling(_) => value_err(e),
        _ => numerical(e),
    }
}

fn analyze_err(e: AnalyzeError) -> PyErr {
    match e {
        AnalyzeError::PreconditionNotRecurrent(_)
        | AnalyzeError::PreconditionEpsilon { .. }
        | AnalyzeError::PreconditionDelta(_)
        | AnalyzeError::PreconditionCondition(_) => PreconditionError::new_err(e.to_string()),
        AnalyzeError::InvalidOrderStatistic { .. } | AnalyzeError::DegenerateSample(_) => value_err(e),
        _ => numerical(e),
    }
}

fn oracle_err(e: OracleError) -> PyErr {
    match e {
        OracleError::PreconditionAlphaSign { .. } => PreconditionError::new_err(e.to_string()),
        _ => numerical(e),
    }
}

/// Serializes through JSON into Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(numerical)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Parses a Levy measure given as a dict in the config format, e.g.
/// `{"kind": "tempered_power_law", "c_pos": 1, ...}`.
fn parse_measure(py: Python<'_>, levy: Option<&Bound<'_, PyAny>>) -> PyResult<LevyMeasureSpec> {
    let Some(levy) = levy else {
        return Ok(LevyMeasureSpec::Zero);
    };
    let text: String = py.import("json")?.call_method1("dumps", (levy,))?.extract()?;
    let spec: LevyMeasureSpec = serde_json::from_str(&text).map_err(|e| value_err(format!("levy: {e}")))?;
    spec.validate().map_err(value_err)?;
    Ok(spec)
}

fn kappa_to_f64(k: Kappa) -> Option<f64> {
    k.value()
}

fn plan(dt_max: f64, epsilon_trunc: f64, drop_small_jumps: bool) -> IncrementPlan {
    IncrementPlan {
        epsilon_trunc,
        dt_max,
        small_jump_mode: if drop_small_jumps {
            SmallJumpMode::Drop
        } else {
            SmallJumpMode::CompensateGaussian
        },
    }
}

/// A validated regime-switching model.
#[pyclass(module = "regime_ou", frozen)]
struct Model {
    inner: RegimeModel,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (q, alpha, sigma, b = 0.0, a = 1.0, levy = None))]
    fn new(
        py: Python<'_>,
        q: Vec<Vec<f64>>,
        alpha: Vec<f64>,
        sigma: Vec<f64>,
        b: f64,
        a: f64,
        levy: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let measure = parse_measure(py, levy)?;
        let triplet = LevyTriplet::new(b, a, measure).map_err(value_err)?;
        let inner = RegimeModel::new(q, alpha, sigma, triplet).map_err(value_err)?;
        Ok(Model { inner })
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha().to_vec()
    }

    #[getter]
    fn sigma(&self) -> Vec<f64> {
        self.inner.sigma().to_vec()
    }

    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        self.inner.q_rows()
    }

    fn stationary_distribution(&self) -> PyResult<Vec<f64>> {
        Ok(chain::stationary_distribution(self.inner.q()).map_err(numerical)?.mu)
    }

    fn drift_index(&self) -> PyResult<f64> {
        analyze::drift_index(&self.inner).map_err(numerical)
    }

    fn eta_p(&self, p: f64) -> PyResult<f64> {
        spectral::eta_p(self.inner.q(), self.inner.alpha(), p).map_err(numerical)
    }

    /// `inf` when every `alpha_i <= 0`, `None` when the index is degenerate.
    fn kappa(&self) -> PyResult<Option<f64>> {
        spectral::kappa(self.inner.q(), self.inner.alpha())
            .map(kappa_to_f64)
            .map_err(numerical)
    }

    fn integrability(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.integrability())
    }

    fn classify(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let report = analyze::classify(&self.inner).map_err(analyze_err)?;
        to_py(py, &report)
    }

    /// One trajectory as a dict with `times`, `x`, `state` and `jumps`.
    #[pyo3(signature = (x0, i0, horizon, seed = 0, stream = 0, dt_max = 0.05, epsilon_trunc = 0.01, drop_small_jumps = false))]
    #[allow(clippy::too_many_arguments)]
    fn simulate_path(
        &self,
        py: Python<'_>,
        x0: f64,
        i0: usize,
        horizon: f64,
        seed: u64,
        stream: u64,
        dt_max: f64,
        epsilon_trunc: f64,
        drop_small_jumps: bool,
    ) -> PyResult<Py<PyAny>> {
        let plan = plan(dt_max, epsilon_trunc, drop_small_jumps);
        let path = py
            .detach(|| simulate::simulate_path(&self.inner, x0, i0, horizon, &plan, &mut stream_rng(seed, stream)))
            .map_err(sim_err)?;
        let out = PyDict::new(py);
        out.set_item("times", path.times)?;
        out.set_item("x", path.x)?;
        out.set_item("state", path.lambda)?;
        out.set_item("jumps", to_py(py, &path.large_jump_log)?)?;
        Ok(out.into_any().unbind())
    }

    /// Terminal values of `n_paths` independent paths; failed paths are `nan`.
    #[pyo3(signature = (x0, i0, horizon, n_paths, seed = 0, dt_max = 0.05, epsilon_trunc = 0.01))]
    #[allow(clippy::too_many_arguments)]
    fn simulate_terminal(
        &self,
        py: Python<'_>,
        x0: f64,
        i0: usize,
        horizon: f64,
        n_paths: usize,
        seed: u64,
        dt_max: f64,
        epsilon_trunc: f64,
    ) -> PyResult<Vec<f64>> {
        let plan = plan(dt_max, epsilon_trunc, false);
        let ends = py
            .detach(|| simulate::simulate_terminal_batch(&self.inner, x0, i0, horizon, &plan, seed, n_paths))
            .map_err(sim_err)?;
        Ok(ends.into_iter().map(|r| r.unwrap_or(f64::NAN)).collect())
    }

    /// Approximately stationary draws; returns `(x, state)` lists.
    #[pyo3(signature = (n_draws, burn_in = None, gap = 1.0, seed = 0, dt_max = 0.05, epsilon_trunc = 0.01, allow_any_model = false))]
    #[allow(clippy::too_many_arguments)]
    fn sample_stationary(
        &self,
        py: Python<'_>,
        n_draws: usize,
        burn_in: Option<f64>,
        gap: f64,
        seed: u64,
        dt_max: f64,
        epsilon_trunc: f64,
        allow_any_model: bool,
    ) -> PyResult<(Vec<f64>, Vec<usize>)> {
        let burn_in = match burn_in {
            Some(b) => b,
            None => 20.0 / self.drift_index()?.abs(),
        };
        let plan = plan(dt_max, epsilon_trunc, false);
        let seed = SeedInfo { master_seed: seed, stream: 0 };
        let sample = py
            .detach(|| simulate::sample_stationary(&self.inner, burn_in, n_draws, gap, &plan, seed, allow_any_model))
            .map_err(sim_err)?;
        Ok(sample.draws.iter().map(|d| (d.x, d.state)).unzip())
    }

    #[pyo3(signature = (epsilon, min_abs = 1.0, max_abs = 1e6, points_per_decade = 10))]
    fn verify_log_drift(
        &self,
        py: Python<'_>,
        epsilon: f64,
        min_abs: f64,
        max_abs: f64,
        points_per_decade: usize,
    ) -> PyResult<Py<PyAny>> {
        let grid = SearchGrid {
            min_abs,
            max_abs,
            points_per_decade,
        };
        let cert = py
            .detach(|| analyze::verify_log_drift(&self.inner, epsilon, grid))
            .map_err(analyze_err)?;
        to_py(py, &cert)
    }

    #[pyo3(signature = (delta, epsilon, min_abs = 1.0, max_abs = 1e6, points_per_decade = 10))]
    fn verify_reciprocal_drift(
        &self,
        py: Python<'_>,
        delta: f64,
        epsilon: f64,
        min_abs: f64,
        max_abs: f64,
        points_per_decade: usize,
    ) -> PyResult<Py<PyAny>> {
        let grid = SearchGrid {
            min_abs,
            max_abs,
            points_per_decade,
        };
        let cert = py
            .detach(|| analyze::verify_reciprocal_drift(&self.inner, delta, epsilon, grid))
            .map_err(analyze_err)?;
        to_py(py, &cert)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(n_states={}, alpha={:?}, sigma={:?})",
            self.inner.n_states(),
            self.inner.alpha(),
            self.inner.sigma()
        )
    }
}

fn triplet(py: Python<'_>, b: f64, a: f64, levy: Option<&Bound<'_, PyAny>>) -> PyResult<LevyTriplet> {
    LevyTriplet::new(b, a, parse_measure(py, levy)?).map_err(value_err)
}

/// Levy exponent `Phi(u)` of the noise, `E e^{iuZ_1} = e^{-Phi(u)}`.
#[pyfunction]
#[pyo3(signature = (u, b = 0.0, a = 1.0, levy = None))]
fn levy_exponent(py: Python<'_>, u: f64, b: f64, a: f64, levy: Option<&Bound<'_, PyAny>>) -> PyResult<Complex64> {
    oracle::levy_exponent_real(u, &triplet(py, b, a, levy)?).map_err(oracle_err)
}

/// Characteristic function of the stationary law of the single-regime process.
#[pyfunction]
#[pyo3(signature = (z, alpha, sigma, b = 0.0, a = 1.0, levy = None))]
fn stationary_cf(
    py: Python<'_>,
    z: f64,
    alpha: f64,
    sigma: f64,
    b: f64,
    a: f64,
    levy: Option<&Bound<'_, PyAny>>,
) -> PyResult<Complex64> {
    oracle::stationary_cf(z, alpha, sigma, &triplet(py, b, a, levy)?).map_err(oracle_err)
}

/// Stationary CDF of the single-regime process on the points `x`.
#[pyfunction]
#[pyo3(signature = (x, alpha, sigma, b = 0.0, a = 1.0, levy = None))]
fn stationary_cdf(
    py: Python<'_>,
    x: Vec<f64>,
    alpha: f64,
    sigma: f64,
    b: f64,
    a: f64,
    levy: Option<&Bound<'_, PyAny>>,
) -> PyResult<Vec<f64>> {
    let t = triplet(py, b, a, levy)?;
    let table = py
        .detach(|| {
            oracle::invert_to_cdf(|z| oracle::stationary_cf(z, alpha, sigma, &t), &x, InversionOptions::default())
        })
        .map_err(oracle_err)?;
    Ok(table.f)
}

#[pyfunction]
fn hill_tail_index(samples: Vec<f64>, k: usize) -> PyResult<f64> {
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    analyze::hill_tail_index(&abs, k).map_err(analyze_err)
}

/// Hill sweep, moment curve and exponential-moment probe as a dict.
#[pyfunction]
#[pyo3(signature = (samples, p_list = vec![1.0, 2.0, 3.0], lambdas = vec![0.1, 0.5, 1.0]))]
fn tail_stats(py: Python<'_>, samples: Vec<f64>, p_list: Vec<f64>, lambdas: Vec<f64>) -> PyResult<Py<PyAny>> {
    let stats = py.detach(|| analyze::tail_stats(&samples, &p_list, &lambdas, None));
    to_py(py, &stats)
}

#[pymodule]
fn regime_ou(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(levy_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_cf, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(hill_tail_index, m)?)?;
    m.add_function(wrap_pyfunction!(tail_stats, m)?)?;
    m.add("PreconditionError", m.py().get_type::<PreconditionError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
