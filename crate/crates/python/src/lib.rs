//! Python bindings. Models, intervals and statistics cross the boundary as
//! plain dicts in the same JSON shapes the CLI writes.

use std::path::PathBuf;
use std::time::Duration;

use megasample::coverage::{normalized_coverage, CoverageBitmap};
use megasample::sampler::{approximate, mega_sample, Problem, SamplerConfig, Strategy};
use megasample::smtlib::{parse_problem, print_problem, ParsedProblem};
use megasample::solver::{EnumerationSolver, ProcessSolver, Solver, DEFAULT_SOLVER_CMD};
use megasample::{preprocess, Error, Formula, Model, Sample};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

create_exception!(megasample, MegasampleError, PyException);
create_exception!(megasample, UnsatError, MegasampleError);
create_exception!(megasample, UnsupportedError, MegasampleError);
create_exception!(megasample, SolverError, MegasampleError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Unsat => UnsatError::new_err(msg),
        Error::UnsupportedFeature(_) => UnsupportedError::new_err(msg),
        Error::Solver(_) | Error::ModelParse(_) | Error::UnsupportedSoft(_) => SolverError::new_err(msg),
        _ => MegasampleError::new_err(msg),
    }
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (v.to_string(),))?.unbind())
}

fn py_to_json(v: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = v.py().import("json")?.call_method1("dumps", (v,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn py_to_model(v: &Bound<'_, PyAny>) -> PyResult<Model> {
    Model::from_json(&py_to_json(v)?).map_err(to_py)
}

/// A parsed SMT-LIB problem.
#[pyclass(name = "Problem", module = "megasample", frozen)]
struct PyProblem {
    parsed: ParsedProblem,
    problem: Problem,
    /// Preprocessed formula that coverage bitmaps are numbered over.
    coverage_formula: Formula,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let parsed = parse_problem(text).map_err(to_py)?;
        let problem = Problem::from_parsed(&parsed).map_err(to_py)?;
        let coverage_formula = preprocess(&parsed.assertion).map_err(to_py)?;
        Ok(PyProblem {
            parsed,
            problem,
            coverage_formula,
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| to_py(e.into()))?;
        PyProblem::new(&text)
    }

    /// `(name, kind)` pairs in declaration order.
    #[getter]
    fn declarations(&self) -> Vec<(String, String)> {
        self.parsed
            .declarations
            .iter()
            .map(|d| (d.name.clone(), format!("{:?}", d.kind).to_lowercase()))
            .collect()
    }

    #[getter]
    fn has_arrays(&self) -> bool {
        self.problem.theory == megasample::sampler::Theory::Amia
    }

    fn to_smtlib(&self) -> String {
        print_problem(&self.parsed)
    }

    fn satisfies(&self, sample: &Bound<'_, PyAny>) -> PyResult<bool> {
        py_to_model(sample)?.satisfies(&self.parsed.assertion).map_err(to_py)
    }

    /// Interval under-approximation around a satisfying `seed`.
    #[pyo3(signature = (seed, rng_seed = 0))]
    fn approximate(&self, py: Python<'_>, seed: &Bound<'_, PyAny>, rng_seed: u64) -> PyResult<Py<PyAny>> {
        let seed = py_to_model(seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let a = approximate(&self.problem, &seed, &mut rng).map_err(to_py)?;
        let aliasing: Vec<String> = a
            .aliasing()
            .map(|al| al.to_literals().iter().map(|f| f.to_string()).collect())
            .unwrap_or_default();
        let v = serde_json::json!({
            "intervals": a.intervals.to_json(),
            "pins": a.pins.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "aliasing": aliasing,
        });
        json_to_py(py, &v)
    }

    /// Runs the sampler and returns `(samples, stats)`.
    ///
    /// `enumerate_bounds=(lo, hi)` swaps the external solver for brute
    /// enumeration over that box; it handles Int and Bool symbols only.
    #[pyo3(signature = (
        max_samples = Some(1000),
        strategy = "random",
        solver_cmd = None,
        enumerate_bounds = None,
        inject_seed = None,
        rng_seed = 0,
        time_limit = 60.0,
        max_epochs = None,
        rounds = 10,
        samples_per_round = 1000,
        solver_timeout = 60.0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn sample(
        &self,
        py: Python<'_>,
        max_samples: Option<u64>,
        strategy: &str,
        solver_cmd: Option<&str>,
        enumerate_bounds: Option<(i64, i64)>,
        inject_seed: Option<&Bound<'_, PyAny>>,
        rng_seed: u64,
        time_limit: f64,
        max_epochs: Option<u64>,
        rounds: usize,
        samples_per_round: usize,
        solver_timeout: f64,
    ) -> PyResult<(Vec<Py<PyAny>>, Py<PyAny>)> {
        let strategy = match strategy {
            "random" => Strategy::Random,
            "blocking" => Strategy::Blocking,
            other => return Err(PyValueError::new_err(format!("unknown strategy `{other}`"))),
        };
        let secs = |s: f64| Duration::try_from_secs_f64(s).map_err(|e| PyValueError::new_err(e.to_string()));
        let cfg = SamplerConfig {
            strategy,
            total_time_limit: secs(time_limit)?,
            epoch_time_limit: secs(time_limit)?,
            max_samples,
            max_epochs,
            rounds,
            samples_per_round,
            rng_seed,
            inject_seed: inject_seed.map(py_to_model).transpose()?,
            ..SamplerConfig::default()
        };
        let mut solver: Box<dyn Solver> = match enumerate_bounds {
            Some((lo, hi)) => Box::new(EnumerationSolver::new(lo, hi)),
            None => Box::new(
                ProcessSolver::new(solver_cmd.unwrap_or(DEFAULT_SOLVER_CMD), secs(solver_timeout)?).map_err(to_py)?,
            ),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut out: Vec<Sample> = Vec::new();
        let stats = mega_sample(&self.problem, &cfg, &mut solver, &mut rng, &mut out).map_err(to_py)?;
        let samples = out
            .iter()
            .map(|s| json_to_py(py, &s.to_json()))
            .collect::<PyResult<_>>()?;
        Ok((samples, json_to_py(py, &stats.to_json())?))
    }

    /// Coverage bitmap of `samples` over this problem.
    fn coverage(&self, samples: Vec<Bound<'_, PyAny>>) -> PyResult<PyCoverage> {
        let mut bm = CoverageBitmap::for_formula(&self.coverage_formula);
        for s in &samples {
            bm.record_sample(&self.coverage_formula, &py_to_model(s)?)
                .map_err(to_py)?;
        }
        Ok(PyCoverage(bm))
    }
}

/// Per-node bit coverage of a sample set.
#[pyclass(name = "Coverage", module = "megasample")]
struct PyCoverage(CoverageBitmap);

#[pymethods]
impl PyCoverage {
    #[getter]
    fn total_bits(&self) -> u64 {
        self.0.total_bits()
    }

    #[getter]
    fn covered_bits(&self) -> u64 {
        self.0.covered_bits()
    }

    #[getter]
    fn raw(&self) -> f64 {
        self.0.raw_coverage()
    }

    fn merge(&mut self, other: PyRef<'_, PyCoverage>) -> PyResult<()> {
        self.0.merge(&other.0).map_err(to_py)
    }

    /// Covered bits over the bits covered by this map and `others` together.
    fn normalized(&self, others: Vec<PyRef<'_, PyCoverage>>) -> PyResult<f64> {
        let others: Vec<CoverageBitmap> = others.iter().map(|o| o.0.clone()).collect();
        normalized_coverage(&self.0, &others).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        CoverageBitmap::load(&path).map(PyCoverage).map_err(to_py)
    }

    fn to_bytes(&self) -> PyResult<Vec<u8>> {
        let mut buf = Vec::new();
        self.0.write_to(&mut buf).map_err(to_py)?;
        Ok(buf)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        CoverageBitmap::read_from(&mut &data[..]).map(PyCoverage).map_err(to_py)
    }
}

#[pymodule]
#[pyo3(name = "megasample")]
fn megasample_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyProblem>()?;
    m.add_class::<PyCoverage>()?;
    m.add("MegasampleError", py.get_type::<MegasampleError>())?;
    m.add("UnsatError", py.get_type::<UnsatError>())?;
    m.add("UnsupportedError", py.get_type::<UnsupportedError>())?;
    m.add("SolverError", py.get_type::<SolverError>())?;
    Ok(())
}
