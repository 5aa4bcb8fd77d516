//! Python bindings: correlation matrices, harvester models, analytic laws
//! and the Monte Carlo engines. All powers are in mW.

use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nalgebra::DMatrix;
use num_complex::Complex64;
use wetsim::analytic::{self, PiecewiseParams};
use wetsim::channel::{self, rician_params, RngStream};
use wetsim::eh;
use wetsim::mc::{self, McConfig, ScenarioConfig};
use wetsim::strategies::{self, StrategyId};
use wetsim::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capability(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Convergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn strategy(name: &str) -> PyResult<StrategyId> {
    name.parse().map_err(to_py)
}

#[pyclass(name = "CorrelationMatrix", frozen)]
#[derive(Clone)]
pub struct PyCorrelation(channel::CorrelationMatrix);

#[pymethods]
impl PyCorrelation {
    #[staticmethod]
    fn identity(m: usize) -> PyResult<Self> {
        channel::CorrelationMatrix::identity(m).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn uniform(m: usize, rho: f64) -> PyResult<Self> {
        channel::uniform_corr(m, rho).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn exponential(m: usize, tau: f64) -> PyResult<Self> {
        channel::exponential_corr(m, tau).map(Self).map_err(to_py)
    }

    /// Any symmetric PSD matrix with unit diagonal, as a list of rows.
    #[staticmethod]
    fn custom(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(PyValueError::new_err("matrix must be square and non-empty"));
        }
        let entries = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
        channel::CorrelationMatrix::custom(entries).map(Self).map_err(to_py)
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    /// Sum of all entries.
    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    fn entries(&self) -> Vec<Vec<f64>> {
        let e = self.0.entries();
        (0..e.nrows()).map(|i| e.row(i).iter().copied().collect()).collect()
    }

    fn equivalent_rho(&self) -> PyResult<f64> {
        channel::equivalent_uniform_rho(&self.0).map(|r| r.rho).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("CorrelationMatrix(m={}, delta={})", self.0.m(), self.0.delta())
    }
}

#[pyclass(name = "EhModel", frozen)]
#[derive(Clone, Copy)]
pub struct PyEhModel(eh::EhModel);

#[pymethods]
impl PyEhModel {
    #[staticmethod]
    fn ideal(eta: f64) -> PyResult<Self> {
        eh::EhModel::ideal(eta).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn piecewise(eta: f64, w1: f64, w2: f64) -> PyResult<Self> {
        eh::EhModel::piecewise(eta, w1, w2).map(Self).map_err(to_py)
    }

    /// `p2`, `p3` in µW and `p1` in 1/µW.
    #[staticmethod]
    fn logistic(p1: f64, p2: f64, p3: f64) -> PyResult<Self> {
        eh::EhModel::logistic(p1, p2, p3).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn reference_piecewise() -> Self {
        Self(eh::EhModel::reference_piecewise())
    }

    #[staticmethod]
    fn reference_logistic() -> Self {
        Self(eh::EhModel::reference_logistic())
    }

    fn harvest(&self, rf_in: f64) -> PyResult<f64> {
        self.0.harvest(rf_in).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Distribution of the ideal-model harvested energy `ξ⁰/η` at link gain `scale`.
#[pyclass(name = "HarvestLaw", frozen)]
pub struct PyHarvestLaw(analytic::HarvestLaw);

#[pymethods]
impl PyHarvestLaw {
    #[new]
    #[pyo3(signature = (strategy, kappa, delta, m, scale=1.0))]
    fn new(strategy: &str, kappa: f64, delta: f64, m: usize, scale: f64) -> PyResult<Self> {
        analytic::HarvestLaw::for_strategy(self::strategy(strategy)?, kappa, delta, m, scale).map(Self).map_err(to_py)
    }

    fn cdf(&self, x: f64) -> PyResult<f64> {
        self.0.cdf(x).map_err(to_py)
    }

    fn pdf(&self, x: f64) -> PyResult<f64> {
        self.0.pdf(x).map_err(to_py)
    }

    /// `(mean, variance)`.
    fn moments(&self) -> PyResult<(f64, f64)> {
        self.0.moments().map_err(to_py)
    }

    fn outage(&self, xi_th: f64, eta: f64) -> PyResult<f64> {
        analytic::energy_outage(&self.0, xi_th, eta).map_err(to_py)
    }

    #[pyo3(signature = (xi, eta, w1, w2))]
    fn saturated_cdf(&self, xi: f64, eta: f64, w1: f64, w2: f64) -> PyResult<f64> {
        analytic::saturated_cdf(&self.0, eta, w1, w2, xi).map_err(to_py)
    }
}

#[pyfunction]
fn avg_harvest(strategy: &str, kappa: f64, delta: f64, m: usize, rho: f64, eta: f64, w1: f64, w2: f64) -> PyResult<f64> {
    let eh = PiecewiseParams::new(eta, w1, w2).map_err(to_py)?;
    analytic::avg_harvest(self::strategy(strategy)?, kappa, delta, m, rho, &eh).map_err(to_py)
}

#[pyfunction]
fn kappa_star(strategy: &str, delta: f64, m: usize) -> PyResult<f64> {
    analytic::kappa_star(self::strategy(strategy)?, delta, m).map_err(to_py)
}

#[pyfunction]
fn min_variance_delta(kappa: f64, m: usize) -> PyResult<f64> {
    analytic::min_variance_delta(kappa, m).map_err(to_py)
}

#[pyfunction]
fn dbm_to_mw(x: f64) -> f64 {
    eh::dbm_to_linear(x)
}

#[pyfunction]
fn mw_to_dbm(p: f64) -> f64 {
    eh::linear_to_dbm(p)
}

/// One channel draw as a list of `complex`.
#[pyfunction]
#[pyo3(signature = (corr, kappa, seed, stream=0))]
fn sample_channel(corr: &PyCorrelation, kappa: f64, seed: u64, stream: u64) -> PyResult<Vec<Complex64>> {
    let p = rician_params(kappa).map_err(to_py)?;
    let h = channel::sample_channel(&corr.0, &p, &mut RngStream::new(seed, stream)).map_err(to_py)?;
    Ok((0..h.m()).map(|i| h.coefficient(i)).collect())
}

/// True when the per-draw strategy ordering holds for the given channel.
#[pyfunction]
#[pyo3(signature = (h, rho=1.0, eta=1.0))]
fn ordering_holds(h: Vec<Complex64>, rho: f64, eta: f64) -> PyResult<bool> {
    let draw = channel::ChannelDraw::from_complex(&h).map_err(to_py)?;
    Ok(strategies::theorem1_check(&draw, rho, eta))
}

#[pyfunction]
#[pyo3(signature = (corr, kappa, strategy, model, rho, samples, seed, workers=1, thresholds=vec![]))]
#[allow(clippy::too_many_arguments)]
fn run_mc<'py>(
    py: Python<'py>,
    corr: &PyCorrelation,
    kappa: f64,
    strategy: &str,
    model: &PyEhModel,
    rho: f64,
    samples: usize,
    seed: u64,
    workers: usize,
    thresholds: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = McConfig::new(corr.0.clone(), kappa, self::strategy(strategy)?, model.0, rho, samples, seed).map_err(to_py)?;
    cfg.workers = workers;
    cfg.thresholds = thresholds;
    let st = py.detach(|| mc::run_mc(&cfg)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", st.n)?;
    d.set_item("mean", st.mean)?;
    d.set_item("variance", st.variance)?;
    d.set_item("se_mean", st.se_mean)?;
    d.set_item("se_variance", st.se_variance)?;
    d.set_item("min", st.min)?;
    d.set_item("max", st.max)?;
    d.set_item("outage", st.outage_at)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (users, antennas, placements, draws, seed, strategies=None, workers=1))]
fn multiuser_run<'py>(
    py: Python<'py>,
    users: usize,
    antennas: usize,
    placements: usize,
    draws: usize,
    seed: u64,
    strategies: Option<Vec<String>>,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let strategies = match strategies {
        Some(names) => names.iter().map(|s| strategy(s)).collect::<PyResult<Vec<_>>>()?,
        None => StrategyId::ALL.to_vec(),
    };
    let cfg = ScenarioConfig {
        n_users: users,
        m_antennas: antennas,
        placements,
        draws_per_placement: draws,
        seed,
        strategies,
        workers,
        ..ScenarioConfig::default()
    };
    let r = py.detach(|| mc::multiuser_run(&cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    for o in &r.outcomes {
        let d = PyDict::new(py);
        d.set_item("avg_energy", o.avg_energy)?;
        d.set_item("se_energy", o.se_energy)?;
        d.set_item("outage", o.outage)?;
        d.set_item("se_outage", o.se_outage)?;
        d.set_item("fairness_std", o.fairness_std)?;
        out.set_item(o.strategy.name(), d)?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "wetsim")]
fn wetsim_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorrelation>()?;
    m.add_class::<PyEhModel>()?;
    m.add_class::<PyHarvestLaw>()?;
    m.add_function(wrap_pyfunction!(avg_harvest, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_star, m)?)?;
    m.add_function(wrap_pyfunction!(min_variance_delta, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_mw, m)?)?;
    m.add_function(wrap_pyfunction!(mw_to_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(sample_channel, m)?)?;
    m.add_function(wrap_pyfunction!(ordering_holds, m)?)?;
    m.add_function(wrap_pyfunction!(run_mc, m)?)?;
    m.add_function(wrap_pyfunction!(multiuser_run, m)?)?;
    m.add("STRATEGIES", StrategyId::ALL.iter().map(|s| s.name()).collect::<Vec<_>>())?;
    Ok(())
}
