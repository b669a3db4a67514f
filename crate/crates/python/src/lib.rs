//! Python bindings: `rescon_py.System` wraps a system description and
//! exposes analysis, co-design, synthesis and verification.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rescon::codesign::{codesign_with, CoDesignSolution, Mode, Representative};
use rescon::fixed_modes::{analyze, numeric_fixed_modes, AnalysisOptions, NumericOptions};
use rescon::fixtures;
use rescon::io::{to_dot, to_json, SystemFile};
use rescon::pattern::{
    build_scenario_digraph, build_system_digraph, FailureCollection, FailureScenario, Gain,
    LinkSet, Realization,
};
use rescon::stabilizer::{
    spectral_radius as radius, stabilize, verify_stabilization, CclOptions, CclStatus,
    StabilityReport,
};
use rescon::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Infeasible(_) | Error::MaxIterations(_) | Error::NumericalBreakdown(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err(format!(
            "{name} rows have different lengths"
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn pairs(links: &LinkSet) -> Vec<(usize, usize)> {
    links.iter().map(|l| (l.sensor, l.actuator)).collect()
}

/// A plant with its feedback links and failure scenarios.
#[pyclass(name = "System")]
struct PySystem {
    file: SystemFile,
}

impl PySystem {
    fn failures(&self, budget: Option<usize>) -> PyResult<FailureCollection> {
        Ok(match budget {
            Some(k) => FailureCollection::budget(
                &self.file.link_set().map_err(err)?,
                self.file.p,
                self.file.m,
                k,
            ),
            None => self.file.failure_collection(),
        })
    }
}

fn report_dicts<'py>(
    py: Python<'py>,
    report: &StabilityReport,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    report
        .scenarios
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("scenario", s.scenario.to_string())?;
            d.set_item("closed_loop_radius", s.closed_loop_radius)?;
            d.set_item("block_radius", s.block_radius)?;
            d.set_item("schur", s.schur)?;
            Ok(d)
        })
        .collect()
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            file: SystemFile::from_json(text).map_err(err)?,
        })
    }

    /// Numeric plant; `links` are `(sensor, actuator)` pairs, 1-based.
    #[staticmethod]
    #[pyo3(signature = (a, b, c, links = Vec::new(), failures = Vec::new()))]
    fn from_matrices(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        links: Vec<(usize, usize)>,
        failures: Vec<Vec<(usize, usize)>>,
    ) -> PyResult<Self> {
        let r =
            Realization::new(matrix(&a, "A")?, matrix(&b, "B")?, matrix(&c, "C")?).map_err(err)?;
        let links = LinkSet::try_from_pairs(links).map_err(err)?;
        let failures = FailureCollection::new(
            failures
                .iter()
                .map(|f| LinkSet::try_from_pairs(f.iter().copied()).map(FailureScenario::links))
                .collect::<Result<_, _>>()
                .map_err(err)?,
        );
        Ok(Self {
            file: SystemFile::from_realization(&r, &links, &failures),
        })
    }

    /// The IEEE 5-bus example with its four single-link failures.
    #[staticmethod]
    fn five_bus() -> Self {
        Self {
            file: SystemFile::from_realization(
                &fixtures::five_bus_realization(),
                &fixtures::five_bus_links(),
                &fixtures::five_bus_failures(),
            ),
        }
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.file.n
    }

    #[getter]
    fn p(&self) -> usize {
        self.file.p
    }

    #[getter]
    fn m(&self) -> usize {
        self.file.m
    }

    #[getter]
    fn links(&self) -> PyResult<Vec<(usize, usize)>> {
        Ok(pairs(&self.file.link_set().map_err(err)?))
    }

    /// Per-scenario structural diagnostics (nominal first).
    #[pyo3(signature = (budget = None, stabilization_only = false))]
    fn analyze<'py>(
        &self,
        py: Python<'py>,
        budget: Option<usize>,
        stabilization_only: bool,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let pattern = self.file.pattern().map_err(err)?;
        let links = self.file.link_set().map_err(err)?;
        let opts = AnalysisOptions {
            include_nominal: true,
            stabilization_only,
        };
        let report = analyze(&pattern, &links, &self.failures(budget)?, opts).map_err(err)?;
        report
            .scenarios
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("scenario", s.scenario.to_string())?;
                d.set_item("condition_a", s.condition_a)?;
                d.set_item("condition_b", s.condition_b)?;
                d.set_item("violating_states", s.violating_states.clone())?;
                Ok(d)
            })
            .collect()
    }

    /// True when some scenario leaves a structurally fixed mode.
    #[pyo3(signature = (budget = None, stabilization_only = false))]
    fn has_fixed_modes(&self, budget: Option<usize>, stabilization_only: bool) -> PyResult<bool> {
        let pattern = self.file.pattern().map_err(err)?;
        let links = self.file.link_set().map_err(err)?;
        let opts = AnalysisOptions {
            include_nominal: true,
            stabilization_only,
        };
        Ok(analyze(&pattern, &links, &self.failures(budget)?, opts)
            .map_err(err)?
            .has_fixed_modes)
    }

    /// Eigenvalues of `A + BKC` shared by random gains on the links, as `(re, im)`.
    #[pyo3(signature = (seed = 0, tol = 1e-6, trials = 3))]
    fn numeric_fixed_modes(&self, seed: u64, tol: f64, trials: usize) -> PyResult<Vec<(f64, f64)>> {
        let r = self.file.realization().map_err(err)?;
        let links = self.file.link_set().map_err(err)?;
        let opts = NumericOptions { trials, tol, seed };
        Ok(numeric_fixed_modes(&r, &links, &LinkSet::new(), opts)
            .map_err(err)?
            .into_iter()
            .map(|z| (z.re, z.im))
            .collect())
    }

    #[pyo3(signature = (k = 1, mode = "full"))]
    fn codesign(&self, k: usize, mode: &str) -> PyResult<PyCoDesign> {
        let mode = match mode {
            "full" => Mode::Full,
            "stabilization" => Mode::Stabilization,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let pattern = self.file.pattern().map_err(err)?;
        Ok(PyCoDesign {
            sol: codesign_with(&pattern, k, mode, Representative::default()).map_err(err)?,
        })
    }

    /// Gain synthesis on the system's links under its failure scenarios.
    #[pyo3(signature = (max_iter = 500, per_scenario = false))]
    fn stabilize(
        &self,
        py: Python<'_>,
        max_iter: usize,
        per_scenario: bool,
    ) -> PyResult<PyStabilization> {
        let r = self.file.realization().map_err(err)?;
        let links = self.file.link_set().map_err(err)?;
        let failures = self.failures(None)?;
        let opts = CclOptions {
            max_iter,
            shared_lyapunov: !per_scenario,
            ..Default::default()
        };
        let out = py
            .detach(|| stabilize(&r, &links, &failures, &opts))
            .map_err(err)?;
        let report = verify_stabilization(&r, out.gain(), &failures).map_err(err)?;
        Ok(PyStabilization {
            status: match out.status {
                CclStatus::Stabilized => "stabilized",
                CclStatus::MaxIterations => "max_iterations",
                CclStatus::Stalled => "stalled",
            }
            .to_string(),
            gain: rows(out.gain().matrix()),
            cost_trace: out.cost_trace.clone(),
            radii: report
                .scenarios
                .iter()
                .map(|s| s.closed_loop_radius)
                .collect(),
        })
    }

    /// Spectral radii of a `p x m` gain for the nominal case and every scenario.
    fn verify<'py>(
        &self,
        py: Python<'py>,
        gain: Vec<Vec<f64>>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let r = self.file.realization().map_err(err)?;
        let g =
            Gain::new(matrix(&gain, "gain")?, self.file.link_set().map_err(err)?).map_err(err)?;
        let report = verify_stabilization(&r, &g, &self.failures(None)?).map_err(err)?;
        report_dicts(py, &report)
    }

    /// Graphviz text; `scenario` is a 1-based index into the failures.
    #[pyo3(signature = (closed_loop = false, scenario = None))]
    fn to_dot(&self, closed_loop: bool, scenario: Option<usize>) -> PyResult<String> {
        let pattern = self.file.pattern().map_err(err)?;
        let d = if closed_loop || scenario.is_some() {
            let s = match scenario {
                None => FailureScenario::none(),
                Some(i) => self
                    .file
                    .failure_collection()
                    .0
                    .get(i.wrapping_sub(1))
                    .cloned()
                    .ok_or_else(|| PyValueError::new_err(format!("no failure scenario {i}")))?,
            };
            build_scenario_digraph(&pattern, &self.file.link_set().map_err(err)?, &s)
                .map_err(err)?
        } else {
            build_system_digraph(&pattern)
        };
        Ok(to_dot(&d, "system"))
    }

    fn __repr__(&self) -> String {
        format!(
            "System(n={}, p={}, m={}, links={})",
            self.file.n,
            self.file.p,
            self.file.m,
            self.file.links.len()
        )
    }
}

#[pyclass(name = "CoDesignSolution")]
struct PyCoDesign {
    sol: CoDesignSolution,
}

#[pymethods]
impl PyCoDesign {
    /// State driven by each dedicated actuator, in actuator order.
    #[getter]
    fn actuators(&self) -> Vec<usize> {
        self.sol.actuators.indices().to_vec()
    }

    #[getter]
    fn sensors(&self) -> Vec<usize> {
        self.sol.sensors.indices().to_vec()
    }

    #[getter]
    fn links(&self) -> Vec<(usize, usize)> {
        pairs(&self.sol.links)
    }

    #[getter]
    fn sub_patterns(&self) -> Vec<Vec<(usize, usize)>> {
        self.sol.sub_patterns.iter().map(pairs).collect()
    }

    #[getter]
    fn k(&self) -> usize {
        self.sol.k
    }

    #[getter]
    fn verified(&self) -> bool {
        self.sol.verified
    }

    fn cost(&self) -> usize {
        self.sol.cost()
    }

    fn to_json(&self) -> String {
        to_json(&self.sol)
    }

    fn __repr__(&self) -> String {
        format!(
            "CoDesignSolution(actuators={:?}, sensors={:?}, links={})",
            self.sol.actuators.indices(),
            self.sol.sensors.indices(),
            self.sol.links
        )
    }
}

#[pyclass(name = "StabilizationResult", get_all)]
struct PyStabilization {
    status: String,
    gain: Vec<Vec<f64>>,
    cost_trace: Vec<f64>,
    /// Closed-loop radius for the nominal case then each scenario.
    radii: Vec<f64>,
}

#[pymethods]
impl PyStabilization {
    fn __repr__(&self) -> String {
        format!(
            "StabilizationResult(status={:?}, radii={:?})",
            self.status, self.radii
        )
    }
}

#[pyfunction]
fn spectral_radius(m: Vec<Vec<f64>>) -> PyResult<f64> {
    let m = matrix(&m, "matrix")?;
    if !m.is_square() {
        return Err(PyValueError::new_err("matrix is not square"));
    }
    Ok(radius(&m))
}

#[pymodule]
fn rescon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyCoDesign>()?;
    m.add_class::<PyStabilization>()?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    Ok(())
}
