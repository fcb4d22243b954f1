//! Python module `artts`: stations, the scan engine, test execution,
//! traceability and the bus protocol.

use std::path::PathBuf;
use std::sync::Arc;

use artts_core::bus::{self, Bus as CoreBus};
use artts_core::engine::{Engine as CoreEngine, FaultCode};
use artts_core::runner::{parse_test_script, run_batch, run_case, BatchOptions, Suite};
use artts_core::station::{
    build_reference_station, explore_reachable, Chain, ExploreOptions, StationModel,
};
use artts_core::trace::{
    build_matrices, coverage as core_coverage, load_links, load_requirements, Level, TestUnitTree,
};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn read(path: &str) -> PyResult<String> {
    std::fs::read_to_string(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any().unbind(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any().unbind(),
            _ => n
                .as_f64()
                .unwrap_or(f64::NAN)
                .into_pyobject(py)?
                .into_any()
                .unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(a) => {
            let items = a
                .iter()
                .map(|x| to_py(py, x))
                .collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any().unbind()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn serialize(py: Python<'_>, v: &impl Serialize) -> PyResult<Py<PyAny>> {
    to_py(py, &serde_json::to_value(v).map_err(value_err)?)
}

fn chain(s: &str) -> PyResult<Chain> {
    Chain::parse(s).ok_or_else(|| value_err(format!("chain must be A or B, not {s:?}")))
}

/// A station: point map plus both chain programs.
#[pyclass(frozen, module = "artts")]
struct Station {
    inner: Arc<StationModel>,
}

#[pymethods]
impl Station {
    /// Loads station.json, chain_a.state and chain_b.rung from `dir`.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        let inner = StationModel::load_dir(&dir).map_err(value_err)?;
        Ok(Station {
            inner: Arc::new(inner),
        })
    }

    /// The built-in Station A.
    #[staticmethod]
    fn reference() -> Self {
        Station {
            inner: Arc::new(build_reference_station()),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn inputs(&self) -> Vec<String> {
        self.inner.inputs().map(|p| p.name.to_string()).collect()
    }

    #[getter]
    fn outputs(&self) -> Vec<String> {
        self.inner.outputs().map(|p| p.name.to_string()).collect()
    }

    /// Lint findings as `"chain X: severity: line N: message"` strings.
    fn lint(&self) -> Vec<String> {
        self.inner
            .lint()
            .into_iter()
            .map(|(c, d)| format!("chain {c}: {d}"))
            .collect()
    }

    /// Exhaustive reachability check of the safety properties.
    #[pyo3(signature = (state_cap=None))]
    fn explore(&self, py: Python<'_>, state_cap: Option<usize>) -> PyResult<Py<PyAny>> {
        let mut opts = ExploreOptions::exhaustive(&self.inner);
        if let Some(cap) = state_cap {
            opts.state_cap = cap;
        }
        let r = py
            .detach(|| explore_reachable(&self.inner, &opts))
            .map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("complete", r.is_complete())?;
        d.set_item("states", r.states)?;
        d.set_item("transitions", r.transitions)?;
        d.set_item("violation_count", r.violation_count)?;
        d.set_item(
            "violations",
            r.violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>(),
        )?;
        d.set_item(
            "outputs_reached",
            r.outputs_reached
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>(),
        )?;
        Ok(d.into_any().unbind())
    }

    fn __repr__(&self) -> String {
        format!("Station({:?})", self.inner.name())
    }
}

/// The dual-chain scan engine, advanced one scan at a time.
#[pyclass(module = "artts")]
struct Engine {
    inner: CoreEngine,
}

#[pymethods]
impl Engine {
    #[new]
    fn new(station: &Station) -> PyResult<Self> {
        let inner = CoreEngine::load(Arc::clone(&station.inner)).map_err(value_err)?;
        Ok(Engine { inner })
    }

    /// Runs `n` scans; returns the canonical record line of the last one.
    #[pyo3(signature = (n=1))]
    fn step(&mut self, n: u64) -> String {
        for _ in 0..n {
            self.inner.scan();
        }
        self.inner.record().canonical()
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    #[getter]
    fn time_ms(&self) -> u64 {
        self.inner.time_ms()
    }

    #[getter]
    fn seq(&self) -> u64 {
        self.inner.seq()
    }

    /// Queues an input value for the next scan.
    fn write(&mut self, point: &str, value: bool) -> PyResult<()> {
        self.inner.write_point(point, value).map_err(value_err)
    }

    /// Value at the last scan boundary.
    fn read(&self, point: &str) -> PyResult<bool> {
        self.inner.read_point(point).map_err(value_err)
    }

    fn snapshot(&self) -> Vec<(String, bool)> {
        self.inner
            .image()
            .values
            .into_iter()
            .map(|(n, v)| (n.to_string(), v))
            .collect()
    }

    fn inject_fault(&mut self, chain_id: &str, code: &str) -> PyResult<()> {
        let code: FaultCode = code.parse().map_err(value_err)?;
        self.inner
            .inject_fault(chain(chain_id)?, code)
            .map_err(value_err)
    }

    fn reset_faults(&mut self) {
        self.inner.reset_faults();
    }

    /// Fault codes of chains A and B.
    #[getter]
    fn faults(&self) -> (String, String) {
        let [a, b] = self.inner.faults();
        (a.code().to_string(), b.code().to_string())
    }

    #[getter]
    fn task_states(&self) -> Vec<(String, String)> {
        self.inner
            .task_states()
            .into_iter()
            .map(|(t, s)| (t.to_string(), s.to_string()))
            .collect()
    }

    /// Parses a `.tc` script and runs it from a reset engine.
    fn run_case(&mut self, py: Python<'_>, script: &str) -> PyResult<Py<PyAny>> {
        let case = parse_test_script(script).map_err(value_err)?;
        let r = run_case(&case, &mut self.inner, chrono::Utc::now());
        serialize(py, &r)
    }
}

/// The bus protocol state machine without a transport.
#[pyclass(module = "artts")]
struct Bus {
    inner: CoreBus,
}

#[pymethods]
impl Bus {
    #[new]
    #[pyo3(signature = (station, mode="stepped"))]
    fn new(station: &Station, mode: &str) -> PyResult<Self> {
        let mode =
            bus::Mode::parse(mode).ok_or_else(|| value_err(format!("unknown mode {mode:?}")))?;
        let engine = CoreEngine::load(Arc::clone(&station.inner)).map_err(value_err)?;
        Ok(Bus {
            inner: CoreBus::new(engine, mode),
        })
    }

    fn connect(&mut self) -> u64 {
        self.inner.connect()
    }

    fn disconnect(&mut self, client: u64) {
        self.inner.disconnect(client);
    }

    /// Handles one command line; returns `(client, line)` pairs to send.
    fn handle_line(&mut self, client: u64, line: &str) -> Vec<(u64, String)> {
        self.inner.handle_line(client, line)
    }
}

/// Runs the cases under `ids` (all builds when omitted) from a suite.json.
#[pyfunction]
#[pyo3(signature = (suite, ids=None, seed=None, station=None))]
fn run_suite(
    py: Python<'_>,
    suite: PathBuf,
    ids: Option<Vec<String>>,
    seed: Option<u64>,
    station: Option<&Station>,
) -> PyResult<Py<PyAny>> {
    let suite = Suite::load(&suite).map_err(value_err)?;
    let mut opts = BatchOptions::timestamped(chrono::Utc::now());
    opts.seed = seed;
    opts.station = station.map(|s| Arc::clone(&s.inner));
    let ids = ids.unwrap_or_else(|| suite.all_builds());
    let report = py
        .detach(|| run_batch(&suite, &ids, &opts))
        .map_err(value_err)?;
    serialize(py, &report)
}

/// Coverage of one level (`high`, `intermediate` or `detail`).
#[pyfunction]
#[pyo3(signature = (requirements, links, suite, level="detail"))]
fn coverage(
    py: Python<'_>,
    requirements: &str,
    links: &str,
    suite: &str,
    level: &str,
) -> PyResult<Py<PyAny>> {
    let level: Level = level.parse().map_err(value_err)?;
    let reqs = load_requirements(&read(requirements)?).map_err(value_err)?;
    let links = load_links(&read(links)?).map_err(value_err)?;
    let tree = TestUnitTree::from_json(&read(suite)?).map_err(value_err)?;
    let m = build_matrices(&reqs, &tree, &links).map_err(value_err)?;
    serialize(py, &core_coverage(&reqs, &m, level, None))
}

/// Parses a `.tc` script; returns it re-printed in canonical form.
#[pyfunction]
fn format_test_script(script: &str) -> PyResult<String> {
    parse_test_script(script)
        .map(|c| c.to_string())
        .map_err(value_err)
}

#[pymodule]
fn artts(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Station>()?;
    m.add_class::<Engine>()?;
    m.add_class::<Bus>()?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(format_test_script, m)?)?;
    Ok(())
}
