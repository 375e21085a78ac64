//! Python bindings: programs, guards, chain models, learning and the parking simulator.

use std::collections::BTreeMap;
use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nprog::gauss::{self, GaussianParams, Interval, Kernel, Mgd, RngStream};
use nprog::gbn::{
    alternating_layout, learned_chain, load_model, model_from_csv, model_to_csv, precision_chain, Gbn, LearningState,
    Trace, DEFAULT_PRIOR_SCALE,
};
use nprog::lang::{parse, Env, Stmt, Store};
use nprog::nalgebra::{DMatrix, DVector};
use nprog::sim::{gen_expert_traces, run_parking, WorldConfig, PARKING_PROGRAM};

fn value_error(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Normal CDF at `x` for a centred Gaussian of variance `sigma2`.
#[pyfunction]
fn cdf(x: f64, sigma2: f64) -> f64 {
    gauss::cdf(x, GaussianParams { mean: 0.0, variance: sigma2 })
}

/// Central interval holding `mass`; `None` when it is unbounded.
#[pyfunction]
fn central_interval(mass: f64, sigma2: f64) -> Option<(f64, f64)> {
    match gauss::central_interval(mass, sigma2) {
        Interval::Bounded { lo, hi } => Some((lo, hi)),
        Interval::Empty => Some((0.0, 0.0)),
        Interval::Unbounded => None,
    }
}

/// Golden-value self check as `(name, expected, actual, passed)` rows.
#[pyfunction]
fn check() -> Vec<(String, f64, f64, bool)> {
    nprog::check::golden_report(&Kernel::STANDARD)
        .into_iter()
        .map(|c| (c.name, c.expected, c.actual, c.pass))
        .collect()
}

#[pyclass(name = "Program", module = "neuralprog", frozen)]
struct PyProgram {
    stmt: Stmt,
}

#[pymethods]
impl PyProgram {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(Self {
            stmt: parse(source).map_err(value_error)?,
        })
    }

    /// The seven-block parking program.
    #[staticmethod]
    fn parking() -> Self {
        Self {
            stmt: parse(PARKING_PROGRAM).expect("shipped program parses"),
        }
    }

    /// Run once and return the final store.
    #[pyo3(signature = (seed=0, store=None))]
    fn run(&self, seed: u64, store: Option<BTreeMap<String, f64>>) -> PyResult<BTreeMap<String, f64>> {
        let mut init = Store::new();
        for (k, v) in store.unwrap_or_default() {
            init.set(&k, v);
        }
        let mut env = Env::new(seed).with_store(init);
        env.exec(&self.stmt).map_err(value_error)?;
        Ok(env.store.iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    /// Mean of every variable over `trials` independent runs.
    #[pyo3(signature = (trials, seed=0, store=None))]
    fn mean(&self, trials: u64, seed: u64, store: Option<BTreeMap<String, f64>>) -> PyResult<BTreeMap<String, f64>> {
        let store = store.unwrap_or_default();
        let mut sums = BTreeMap::new();
        for i in 0..trials {
            let mut init = Store::new();
            for (k, v) in &store {
                init.set(k, *v);
            }
            let mut env = Env::with_rng(RngStream::for_trial(seed, i)).with_store(init);
            env.exec(&self.stmt).map_err(value_error)?;
            for (k, v) in env.store.iter() {
                *sums.entry(k.to_string()).or_insert(0.0) += v;
            }
        }
        Ok(sums.into_iter().map(|(k, s)| (k, s / trials as f64)).collect())
    }

    fn __str__(&self) -> String {
        self.stmt.to_string()
    }
}

/// Chain-structured Gaussian Bayesian network over motion commands.
#[pyclass(name = "Gbn", module = "neuralprog", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGbn {
    inner: Gbn,
}

#[pymethods]
impl PyGbn {
    /// Alternating drive/turn chain `l1, alpha1, l2, ...`.
    #[staticmethod]
    fn chain(means: Vec<f64>, variances: Vec<f64>, coefficients: Vec<f64>) -> PyResult<Self> {
        let layout = alternating_layout(means.len());
        let layout: Vec<_> = layout.iter().map(|(l, m, d)| (l.as_str(), *m, *d)).collect();
        Ok(Self {
            inner: Gbn::chain(&layout, &means, &variances, &coefficients).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_model(path).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model_from_csv(text, "<string>").map_err(value_error)?,
        })
    }

    /// Recover a chain from a mean vector and precision matrix.
    #[staticmethod]
    fn extract(mean: Vec<f64>, precision: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = mean.len();
        if precision.len() != n || precision.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("precision must be n x n"));
        }
        let t = DMatrix::from_fn(n, n, |i, j| precision[i][j]);
        let mgd = Mgd::new(DVector::from_vec(mean), t).map_err(value_error)?;
        Ok(Self {
            inner: nprog::gbn::extract(&mgd).map_err(value_error)?,
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        model_to_csv(&self.inner).map_err(value_error)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.label.clone()).collect()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means()
    }

    #[getter]
    fn variances(&self) -> Vec<f64> {
        self.inner.variances()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.chain_coefficients()
    }

    fn precision(&self) -> PyResult<Vec<Vec<f64>>> {
        let t = precision_chain(&self.inner).map_err(value_error)?.precision;
        Ok(t.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// `count` command vectors; vector i depends only on `(seed, i)`.
    #[pyo3(signature = (count, seed=0))]
    fn sample(&self, count: u64, seed: u64) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| self.inner.sample_commands(&mut RngStream::for_trial(seed, i)))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Sequential conjugate learner. Updating in batches gives the same posterior
/// as one update on all traces.
#[pyclass(name = "Learner", module = "neuralprog")]
struct PyLearner {
    state: Option<LearningState>,
}

#[pymethods]
impl PyLearner {
    #[new]
    fn new() -> Self {
        Self { state: None }
    }

    fn update(&mut self, traces: Vec<Vec<f64>>) -> PyResult<()> {
        let traces: Vec<Trace> = traces.into_iter().map(Trace).collect();
        let state = match &self.state {
            Some(s) => s,
            None => &LearningState::weak_from_traces(&traces, DEFAULT_PRIOR_SCALE).map_err(value_error)?,
        };
        self.state = Some(state.learn_update(&traces).map_err(value_error)?);
        Ok(())
    }

    /// Current estimate as a chain with the alternating drive/turn layout.
    fn model(&self) -> PyResult<PyGbn> {
        let state = self.state.as_ref().ok_or_else(|| PyValueError::new_err("no traces yet"))?;
        let n = state.dim();
        let layout = PyGbn::chain(vec![0.0; n], vec![1.0; n], vec![0.0; n.saturating_sub(1)])?.inner;
        Ok(PyGbn {
            inner: learned_chain(state, &layout).map_err(value_error)?,
        })
    }
}

/// Simulated parking world.
#[pyclass(name = "World", module = "neuralprog", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWorld {
    config: WorldConfig,
}

#[pymethods]
impl PyWorld {
    /// The shipped world, or one read from a config file.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<&str>) -> PyResult<Self> {
        let config = match path {
            Some(p) => WorldConfig::load(p).map_err(value_error)?,
            None => WorldConfig::default(),
        };
        Ok(Self { config })
    }

    fn noiseless(&self) -> Self {
        Self {
            config: self.config.noiseless(),
        }
    }

    fn with_slip(&self, slip: f64) -> Self {
        Self {
            config: self.config.with_slip(slip),
        }
    }

    #[pyo3(signature = (count, seed=0))]
    fn expert_traces(&self, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let traces = gen_expert_traces(count, &self.config, &mut RngStream::new(seed)).map_err(value_error)?;
        Ok(traces.into_iter().map(|t| t.0).collect())
    }

    /// Model with this world's motion layout, learned from `experts` synthetic traces.
    #[pyo3(signature = (experts=500, seed=0))]
    fn learn(&self, experts: usize, seed: u64) -> PyResult<PyGbn> {
        let traces = gen_expert_traces(experts, &self.config, &mut RngStream::new(seed)).map_err(value_error)?;
        let state = LearningState::weak_from_traces(&traces, DEFAULT_PRIOR_SCALE)
            .and_then(|s| s.learn_update(&traces))
            .map_err(value_error)?;
        let n = self.config.nominal.len();
        let layout = self
            .config
            .nominal
            .to_model(&vec![1.0; n], &vec![0.0; n.saturating_sub(1)])
            .map_err(value_error)?;
        Ok(PyGbn {
            inner: learned_chain(&state, &layout).map_err(value_error)?,
        })
    }

    /// One closed-loop run: `(success, (x, y, theta), commands)`.
    #[pyo3(signature = (model, seed=0, program=None))]
    fn park(&self, model: &PyGbn, seed: u64, program: Option<&PyProgram>) -> PyResult<(bool, (f64, f64, f64), Vec<f64>)> {
        let default;
        let stmt = match program {
            Some(p) => &p.stmt,
            None => {
                default = parse(PARKING_PROGRAM).expect("shipped program parses");
                &default
            }
        };
        let r = run_parking(stmt, &model.inner, &self.config, seed).map_err(value_error)?;
        let p = r.final_pose;
        Ok((r.success, (p.x, p.y, p.theta), r.commands))
    }

    /// Fraction of `runs` successful parkings; run i uses seed `(seed, i)`.
    #[pyo3(signature = (model, runs=200, seed=0))]
    fn success_rate(&self, model: &PyGbn, runs: u64, seed: u64) -> PyResult<f64> {
        let stmt = parse(PARKING_PROGRAM).expect("shipped program parses");
        let mut ok = 0u64;
        for i in 0..runs {
            let s = RngStream::for_trial(seed, i).next_u64();
            ok += u64::from(run_parking(&stmt, &model.inner, &self.config, s).map_err(value_error)?.success);
        }
        Ok(ok as f64 / runs as f64)
    }
}

#[pymodule]
fn neuralprog(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cdf, m)?)?;
    m.add_function(wrap_pyfunction!(central_interval, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyGbn>()?;
    m.add_class::<PyLearner>()?;
    m.add_class::<PyWorld>()?;
    Ok(())
}
