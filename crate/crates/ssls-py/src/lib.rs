//! Python bindings for the SSLS query engine.
//!
//! ```python
//! import ssls
//! ctx = ssls.load_fixture("fixtures/toy.ssls")
//! res = ctx.query(k=2, alpha=0.5, omega=0.5, algo="exact")
//! print(res["members"], res["total"])
//! ```

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use ssls_core::baselines::{self, GneConfig, SosConfig, DEFAULT_BRUTE_CAP};
use ssls_core::context::{DistanceMetric, Params, QueryContext};
use ssls_core::graph::SocioSpatialGraph;
use ssls_core::metrics::{self, MmdMode};
use ssls_core::scoring::ScoreTable;
use ssls_core::solver::{approx, exact, exact_plus, Algorithm, SelectionResult};
use ssls_core::SslsError;
use std::fs::File;
use std::io::BufReader;

fn to_py_err(e: SslsError) -> PyErr {
    match e {
        SslsError::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A loaded socio-spatial graph.
#[pyclass(name = "Graph")]
struct PyGraph {
    inner: SocioSpatialGraph,
}

#[pymethods]
impl PyGraph {
    /// Dataset statistics as a dict.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new_bound(py);
        d.set_item("users", s.users)?;
        d.set_item("edges", s.edges)?;
        d.set_item("checkins", s.checkins)?;
        d.set_item("places", s.places)?;
        d.set_item("ac", s.ac)?;
        d.set_item("af", s.af)?;
        d.set_item("afc", s.afc)?;
        Ok(d)
    }

    /// Check-in group id of a user, or None.
    fn checkin_group(&self, user: u64) -> Option<u32> {
        self.inner.checkin_group(user)
    }

    /// Query-eligible users.
    fn eligible_users(&self) -> Vec<u64> {
        self.inner.eligible_users()
    }

    /// Build the per-user query context. `metric` is "planar" or
    /// "haversine".
    fn context(&self, user: u64, metric: &str) -> PyResult<PyContext> {
        let metric: DistanceMetric = metric.parse().map_err(to_py_err)?;
        let ctx = QueryContext::build(&self.inner, user, metric).map_err(to_py_err)?;
        Ok(PyContext { inner: ctx })
    }
}

/// One user's candidate view: the unit every solver operates on.
#[pyclass(name = "Context")]
struct PyContext {
    inner: QueryContext,
}

fn result_dict<'py>(py: Python<'py>, res: &SelectionResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("algorithm", res.algorithm.name())?;
    d.set_item("members", res.members.clone())?;
    d.set_item("total", res.score.total)?;
    d.set_item("relevance_sum", res.score.relevance_sum)?;
    d.set_item("diversity_sum", res.score.diversity_sum)?;
    let t = PyDict::new_bound(py);
    t.set_item("states_expanded", res.telemetry.states_expanded)?;
    t.set_item("pruned_property1", res.telemetry.pruned_property1)?;
    t.set_item("pruned_property2", res.telemetry.pruned_property2)?;
    t.set_item("pair_diversity_evals", res.telemetry.pair_diversity_evals)?;
    t.set_item("roots_total", res.telemetry.roots_total)?;
    t.set_item("exhausted", res.telemetry.exhausted)?;
    t.set_item("relaxed", res.telemetry.relaxed)?;
    d.set_item("telemetry", t)?;
    Ok(d)
}

#[pymethods]
impl PyContext {
    /// Candidate location ids.
    #[getter]
    fn candidates(&self) -> Vec<u64> {
        self.inner.candidates().to_vec()
    }

    /// Scoring friend ids.
    #[getter]
    fn friends(&self) -> Vec<u64> {
        self.inner.friends().to_vec()
    }

    /// Maximum pairwise candidate distance.
    #[getter]
    fn max_d(&self) -> f64 {
        self.inner.max_d()
    }

    /// Per-location scores under `alpha`: list of
    /// `(locid, s_sc, s_sp, r_ss)` tuples in candidate order.
    fn scores(&self, alpha: f64) -> PyResult<Vec<(u64, f64, f64, f64)>> {
        let table = ScoreTable::build(&self.inner, alpha).map_err(to_py_err)?;
        Ok((0..table.len())
            .map(|i| {
                (
                    self.inner.candidates()[i],
                    table.social_relevance(i),
                    table.spatial_relevance(i),
                    table.relevance(i),
                )
            })
            .collect())
    }

    /// Blended pairwise diversity between two candidate location ids.
    fn pair_diversity(&self, a: u64, b: u64, alpha: f64) -> PyResult<f64> {
        let table = ScoreTable::build(&self.inner, alpha).map_err(to_py_err)?;
        let idx = table.indices_of(&[a, b]).map_err(to_py_err)?;
        Ok(table.pair_diversity(idx[0], idx[1]))
    }

    /// Score an explicit set of candidate location ids.
    fn set_score(&self, members: Vec<u64>, alpha: f64, omega: f64) -> PyResult<f64> {
        let table = ScoreTable::build(&self.inner, alpha).map_err(to_py_err)?;
        let idx = table.indices_of(&members).map_err(to_py_err)?;
        Ok(table.set_score(&idx, omega).map_err(to_py_err)?.total)
    }

    /// Solve a top-k query. `algo` is one of exact, approx, exactplus,
    /// fast, brute, gmc, gne, sos.
    #[pyo3(signature = (k, alpha=0.5, omega=0.5, algo="exact", seed=0))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        k: usize,
        alpha: f64,
        omega: f64,
        algo: &str,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let algo: Algorithm = algo.parse().map_err(to_py_err)?;
        let params = Params {
            k,
            alpha,
            omega,
            metric: self.inner.metric(),
            ..Params::default()
        };
        let table = ScoreTable::build(&self.inner, alpha).map_err(to_py_err)?;
        let res = match algo {
            Algorithm::Exact => exact::solve_exact(&table, &params),
            Algorithm::Approx => approx::solve_approx(&table, &params),
            Algorithm::ExactPlus => exact_plus::solve_exact_plus(&table, &params),
            Algorithm::Fast => exact_plus::solve_fast_approx(&table, &params),
            Algorithm::Brute => baselines::brute_force(&table, &params, DEFAULT_BRUTE_CAP),
            Algorithm::Gmc => baselines::gmc(&table, &params),
            Algorithm::Gne => baselines::gne(
                &table,
                &params,
                &GneConfig {
                    rng_seed: seed,
                    ..GneConfig::default()
                },
            ),
            Algorithm::Sos => baselines::adaptive_sos(&table, &params, &SosConfig::default()),
        }
        .map_err(to_py_err)?;
        result_dict(py, &res)
    }

    /// Precision of a selection against a reference of the same size.
    #[staticmethod]
    fn precision(s: Vec<u64>, reference: Vec<u64>) -> PyResult<f64> {
        metrics::precision(&s, &reference).map_err(to_py_err)
    }

    /// Mean of minimum diversity. `mode` is "spatial" or "socio-spatial".
    fn mmd(&self, s: Vec<u64>, mode: &str, alpha: f64) -> PyResult<f64> {
        let mode = match mode {
            "spatial" => MmdMode::Spatial,
            "socio-spatial" => MmdMode::SocioSpatial,
            other => return Err(PyValueError::new_err(format!("unknown mmd mode {other:?}"))),
        };
        metrics::mmd(&self.inner, &s, mode, alpha).map_err(to_py_err)
    }

    /// Percentage of friends with a check-in within `theta` of the set.
    fn social_coverage(&self, s: Vec<u64>, theta: f64) -> PyResult<f64> {
        metrics::social_coverage(&self.inner, &s, theta).map_err(to_py_err)
    }

    /// Social entropy (bits, degenerate-flag) of the visitor distribution.
    fn social_entropy(&self, s: Vec<u64>) -> PyResult<(f64, bool)> {
        metrics::social_entropy(&self.inner, &s).map_err(to_py_err)
    }
}

/// Load an injected-matrix fixture file.
#[pyfunction]
fn load_fixture(path: &str) -> PyResult<PyContext> {
    let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let ctx = QueryContext::load_fixture(BufReader::new(file)).map_err(to_py_err)?;
    Ok(PyContext { inner: ctx })
}

/// Load a graph snapshot written by `ssls ingest`.
#[pyfunction]
fn load_snapshot(path: &str) -> PyResult<PyGraph> {
    let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let graph = SocioSpatialGraph::read_snapshot(BufReader::new(file)).map_err(to_py_err)?;
    Ok(PyGraph { inner: graph })
}

#[pymodule]
fn ssls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyContext>()?;
    m.add_function(wrap_pyfunction!(load_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(load_snapshot, m)?)?;
    Ok(())
}
