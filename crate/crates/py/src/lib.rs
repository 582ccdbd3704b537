//! Python bindings. Reports and oracle results come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use groundhold::generator::Preset;
use groundhold::oracle;
use groundhold::search::exp_probabilities as exp_distribution;
use groundhold::{PreprocessedModel, ReportOptions, SearchConfig, SolveReport};

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(
    name = "Instance",
    module = "pygroundhold",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyInstance {
    inner: groundhold::Instance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        groundhold::Instance::parse(text.as_bytes())
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    /// Instance of a named preset: `tiny`, `congested-ecac` or `infeasible`.
    #[staticmethod]
    #[pyo3(signature = (preset, seed = 0))]
    fn generate(preset: &str, seed: u64) -> PyResult<Self> {
        let preset: Preset = preset.parse().map_err(value_error)?;
        preset
            .generate(seed)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn num_flights(&self) -> usize {
        self.inner.flights.len()
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.inner.cells.len()
    }

    #[getter]
    fn flight_ids(&self) -> Vec<String> {
        self.inner.flights.iter().map(|f| f.id.clone()).collect()
    }

    /// Scenario parameters as a dict with keys now, s, e, w, t, g, cap.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = &self.inner.params;
        let d = PyDict::new(py);
        d.set_item("now", p.now)?;
        d.set_item("s", p.start)?;
        d.set_item("e", p.end)?;
        d.set_item("w", p.window)?;
        d.set_item("t", p.step)?;
        d.set_item("g", p.max_hold)?;
        d.set_item("cap", p.cap)?;
        Ok(d)
    }

    /// Copy with some scenario parameters replaced.
    #[pyo3(signature = (*, now = None, s = None, e = None, w = None, t = None, g = None, cap = None))]
    #[allow(clippy::too_many_arguments)]
    fn with_params(
        &self,
        now: Option<i64>,
        s: Option<i64>,
        e: Option<i64>,
        w: Option<i64>,
        t: Option<i64>,
        g: Option<i64>,
        cap: Option<i64>,
    ) -> PyResult<Self> {
        let mut p = self.inner.params;
        p.now = now.unwrap_or(p.now);
        p.start = s.unwrap_or(p.start);
        p.end = e.unwrap_or(p.end);
        p.window = w.unwrap_or(p.window);
        p.step = t.unwrap_or(p.step);
        p.max_hold = g.unwrap_or(p.max_hold);
        p.cap = cap.unwrap_or(p.cap);
        self.inner
            .with_params(p)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    /// Sizes of the preprocessed model.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = PreprocessedModel::build(&self.inner).summary();
        let d = PyDict::new(py);
        d.set_item("relevant_flights", s.relevant_flights)?;
        d.set_item("airborne_flights", s.airborne_flights)?;
        d.set_item("waiting_flights", s.waiting_flights)?;
        d.set_item("relevant_cells", s.relevant_cells)?;
        d.set_item("active_cells", s.active_cells)?;
        d.set_item("windows", s.windows)?;
        d.set_item("candidate_pairs", s.candidate_pairs)?;
        d.set_item("posted_constraints", s.posted_constraints)?;
        d.set_item("pruning_ratio", s.pruning_ratio)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(flights={}, cells={})",
            self.inner.flights.len(),
            self.inner.cells.len()
        )
    }
}

/// Solves and returns the report as a dict. `config` takes the same keys as
/// the CLI's JSON search configuration.
#[pyfunction]
#[pyo3(signature = (instance, *, max_iter = None, seed = None, starts = 1, time_limit = None, stats_population = "relevant", timing = true, config = None))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    max_iter: Option<u64>,
    seed: Option<u64>,
    starts: usize,
    time_limit: Option<f64>,
    stats_population: &str,
    timing: bool,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = match config {
        Some(text) => SearchConfig::from_json(text).map_err(value_error)?,
        None => SearchConfig::default(),
    };
    if let Some(v) = max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = seed {
        cfg.rng_seed = v;
    }
    if time_limit.is_some() {
        cfg.time_limit_secs = time_limit;
    }
    let options = ReportOptions {
        population: stats_population.parse().map_err(value_error)?,
        include_timing: timing,
    };
    let inst = &instance.inner;
    let report = py
        .detach(|| {
            let model = PreprocessedModel::build(inst);
            groundhold::solve_multi_start(&model, &cfg, starts)
                .map(|result| SolveReport::build(inst, &model, &result, options))
        })
        .map_err(value_error)?;
    json_to_py(py, &report.to_json())
}

/// Exact minimum total delay by exhaustive search; small instances only.
#[pyfunction]
fn brute_force<'py>(py: Python<'py>, instance: &PyInstance) -> PyResult<Bound<'py, PyDict>> {
    let inst = &instance.inner;
    let result = py
        .detach(|| oracle::brute_force_min_delay(inst))
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("feasible", result.feasible)?;
    d.set_item("min_total_delay", result.min_total_delay)?;
    d.set_item("witness", result.witness)?;
    Ok(d)
}

/// Checks per-flight delays (instance flight order) against every window
/// and relevant cell.
#[pyfunction]
fn check_full<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    delays: Vec<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let check = oracle::check_full(&instance.inner, &delays).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("ok", check.ok)?;
    let violations: Vec<(usize, String, i64, i64, i64)> = check
        .violations
        .iter()
        .map(|v| {
            (
                v.window,
                instance.inner.cells[v.cell].id.clone(),
                v.demand,
                v.cap,
                v.overflow,
            )
        })
        .collect();
    d.set_item("violations", violations)?;
    Ok(d)
}

/// Probabilities of the truncated geometric series `x^low .. x^high`.
#[pyfunction]
fn exp_probabilities(ratio: f64, low: i32, high: i32) -> PyResult<Vec<f64>> {
    exp_distribution(ratio, low, high)
        .map(|d| d.weights().to_vec())
        .map_err(value_error)
}

#[pymodule]
fn pygroundhold(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(check_full, m)?)?;
    m.add_function(wrap_pyfunction!(exp_probabilities, m)?)?;
    Ok(())
}
