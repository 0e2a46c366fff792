//! Python bindings. Graphs and hierarchies are wrapped as classes; larger
//! results (solutions, traces, reports) come back as plain dicts decoded from
//! the same JSON the CLI writes.

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;
use thintree::cp::{CpInstance, Mode, Program};
use thintree::io::SolutionFile;
use thintree::pipeline::{PipelineOptions, PipelineTrace};
use thintree::{generators, graph, lch, spectral, Error, Hierarchy, MultiGraph};

create_exception!(thintree_py, ThintreeError, PyException, "Contract error raised by the library.");

fn err(e: Error) -> PyErr {
    ThintreeError::new_err(format!("{}: {e}", e.name()))
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = thintree::io::to_json(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ThintreeError::new_err("InvalidArgument: ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Undirected multigraph on vertices `0..n`; edge ids follow insertion order.
#[pyclass(name = "Graph", module = "thintree_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph(MultiGraph);

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        MultiGraph::new(n, edges).map(PyGraph).map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        thintree::io::parse_graph(text).map(PyGraph).map_err(err)
    }

    fn to_text(&self) -> String {
        thintree::io::format_graph(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn is_connected(&self) -> bool {
        self.0.is_connected()
    }

    fn laplacian(&self) -> Vec<Vec<f64>> {
        rows(&self.0.laplacian())
    }

    fn effective_resistances(&self) -> PyResult<Vec<f64>> {
        spectral::edge_resistances(&self.0, &spectral::SpectralView::of_graph(&self.0)).map_err(err)
    }

    /// Global edge connectivity and one minimum cut side.
    fn min_edge_connectivity(&self) -> (usize, Option<Vec<usize>>) {
        let (k, cut) = graph::min_edge_connectivity(&self.0);
        (k, cut.map(|c| c.side))
    }

    fn spectral_thinness(&self, tree: Vec<usize>) -> PyResult<f64> {
        spectral::spectral_thinness(&self.0, &tree).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.0.n(), self.0.m())
    }
}

/// Rooted laminar hierarchy over the vertices of a graph.
#[pyclass(name = "Hierarchy", module = "thintree_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHierarchy(Hierarchy);

#[pymethods]
impl PyHierarchy {
    #[staticmethod]
    fn star(n: usize) -> PyResult<Self> {
        Hierarchy::star(n).map(PyHierarchy).map_err(err)
    }

    #[staticmethod]
    fn chain(h: usize) -> PyResult<Self> {
        Hierarchy::chain(h).map(PyHierarchy).map_err(err)
    }

    #[staticmethod]
    fn planar(g: &PyGraph) -> PyResult<Self> {
        lch::planar_lch(&g.0).map(PyHierarchy).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (g, k, log_base = 2.0))]
    fn general(g: &PyGraph, k: usize, log_base: f64) -> PyResult<Self> {
        lch::general_lch(&g.0, k, log_base).map(PyHierarchy).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(PyHierarchy).map_err(|e| err(e.into()))
    }

    fn to_json(&self) -> PyResult<String> {
        thintree::io::to_json(&self.0).map_err(err)
    }

    fn with_marked(&self, marked: Vec<usize>) -> PyResult<Self> {
        self.0.with_marked(marked).map(PyHierarchy).map_err(err)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    #[getter]
    fn root(&self) -> usize {
        self.0.root()
    }

    fn marked(&self) -> Vec<usize> {
        self.0.marked().to_vec()
    }

    fn children(&self, t: usize) -> PyResult<Vec<usize>> {
        if t >= self.0.node_count() {
            return Err(err(Error::UnknownNode(t)));
        }
        Ok(self.0.children(t).to_vec())
    }

    fn vertices(&self, t: usize) -> PyResult<Vec<usize>> {
        if t >= self.0.node_count() {
            return Err(err(Error::UnknownNode(t)));
        }
        Ok(self.0.vertices(t).to_vec())
    }

    /// Violations of the local-connectivity conditions as dicts.
    #[pyo3(signature = (g, k, lam, nodes = None))]
    fn validate<'py>(
        &self,
        py: Python<'py>,
        g: &PyGraph,
        k: f64,
        lam: f64,
        nodes: Option<Vec<usize>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let nodes = nodes.unwrap_or_else(|| self.0.marked().to_vec());
        let report = lch::validate_lch(&g.0, &self.0, k, lam, &nodes).map_err(err)?;
        to_dict(py, &report)
    }
}

#[pyfunction]
#[pyo3(signature = (d, mult = 1))]
fn hypercube(d: usize, mult: usize) -> PyResult<PyGraph> {
    generators::hypercube(d, mult).map(PyGraph).map_err(err)
}

#[pyfunction]
fn dyadic(h: usize, k: usize) -> PyResult<PyGraph> {
    generators::dyadic(h, k).map(PyGraph).map_err(err)
}

/// Returns `(graph, verticals, shortcuts)`.
#[pyfunction]
#[pyo3(signature = (n, k, shortcuts = false))]
fn ladder(n: usize, k: usize, shortcuts: bool) -> PyResult<(PyGraph, Vec<usize>, Vec<usize>)> {
    let l = generators::ladder(n, k, shortcuts).map_err(err)?;
    Ok((PyGraph(l.graph), l.verticals, l.shortcuts))
}

#[pyfunction]
#[pyo3(signature = (n, extra, seed = 0))]
fn random_connected(n: usize, extra: usize, seed: u64) -> PyGraph {
    PyGraph(generators::random_connected(n, extra, seed))
}

#[pyfunction]
fn amplify(g: &PyGraph, c: usize) -> PyResult<PyGraph> {
    generators::amplify(&g.0, c).map(PyGraph).map_err(err)
}

/// Solves one of the programs `"max"`, `"average"` or `"tree"` in mode
/// `"box"` or `"psd"`. Tree programs need a hierarchy; `nodes` defaults to
/// its marked nodes, or every non-root node when none are marked.
#[pyfunction]
#[pyo3(signature = (g, program = "max", mode = "box", hierarchy = None, nodes = None))]
fn solve_cp<'py>(
    py: Python<'py>,
    g: &PyGraph,
    program: &str,
    mode: &str,
    hierarchy: Option<&PyHierarchy>,
    nodes: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let program: Program = program.parse().map_err(err)?;
    let mode: Mode = mode.parse().map_err(err)?;
    let inst = match (program, hierarchy) {
        (Program::Tree, Some(h)) => {
            let nodes = nodes.unwrap_or_else(|| match h.0.marked() {
                [] => h.0.non_root_nodes(),
                m => m.to_vec(),
            });
            CpInstance::tree(g.0.clone(), h.0.clone(), nodes, mode)
        }
        (Program::Tree, None) => {
            return Err(err(Error::InvalidArgument("the tree program needs a hierarchy".into())));
        }
        _ => CpInstance::new(g.0.clone(), program, mode),
    };
    let sol = py.detach(|| thintree::cp::solve_cp(&inst)).map_err(err)?;
    to_dict(py, &SolutionFile::from(&sol))
}

/// `(D, k)` with `Reff_D(a, b) = 1/k` for the local edge connectivity `k`.
#[pyfunction]
fn single_pair_shortcut(g: &PyGraph, a: usize, b: usize) -> PyResult<(Vec<Vec<f64>>, usize)> {
    let (d, k) = thintree::cp::single_pair_shortcut(&g.0, a, b).map_err(err)?;
    Ok((rows(&d), k))
}

/// Runs good-edge extraction and returns the trace as a dict.
#[pyfunction]
#[pyo3(signature = (g, hierarchy, k = None, max_iters = None, mode = "box"))]
fn extract_good_edges<'py>(
    py: Python<'py>,
    g: &PyGraph,
    hierarchy: &PyHierarchy,
    k: Option<usize>,
    max_iters: Option<usize>,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = PipelineOptions { k, max_iters, mode: mode.parse().map_err(err)?, ..Default::default() };
    let trace = py.detach(|| thintree::pipeline::extract_good_edges(&g.0, &hierarchy.0, &opts)).map_err(err)?;
    to_dict(py, &trace)
}

/// Recomputes a trace (dict or JSON text) and returns the certificate.
#[pyfunction]
fn certify_pipeline<'py>(py: Python<'py>, g: &PyGraph, trace: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let text: String = match trace.extract::<String>() {
        Ok(s) => s,
        Err(_) => py.import("json")?.call_method1("dumps", (trace,))?.extract()?,
    };
    let trace: PipelineTrace = serde_json::from_str(&text).map_err(|e| err(e.into()))?;
    let report = py.detach(|| thintree::pipeline::certify_pipeline(&g.0, &trace)).map_err(err)?;
    to_dict(py, &report)
}

/// Greedy disjoint balls for the edge embedding `y` (one row per edge).
#[pyfunction]
#[pyo3(signature = (g, y, edges = None, eps = 0.25))]
fn greedy_balls<'py>(
    py: Python<'py>,
    g: &PyGraph,
    y: Vec<Vec<f64>>,
    edges: Option<Vec<usize>>,
    eps: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let y = matrix(y)?;
    let edges = edges.unwrap_or_else(|| (0..g.0.m()).collect());
    let res = thintree::balls::greedy_balls(&g.0, &y, &edges, eps).map_err(err)?;
    to_dict(py, &res)
}

/// Homogeneous dominating subset of `(a, b)` pairs with `a <= b`.
#[pyfunction]
fn bucket<'py>(py: Python<'py>, values: Vec<(f64, f64)>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    let res = thintree::balls::homogeneous_dominating_subset(&values, alpha).map_err(err)?;
    to_dict(py, &res)
}

#[pymodule]
fn thintree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", thintree::VERSION)?;
    m.add("ThintreeError", m.py().get_type::<ThintreeError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyHierarchy>()?;
    for f in [
        wrap_pyfunction!(hypercube, m)?,
        wrap_pyfunction!(dyadic, m)?,
        wrap_pyfunction!(ladder, m)?,
        wrap_pyfunction!(random_connected, m)?,
        wrap_pyfunction!(amplify, m)?,
        wrap_pyfunction!(solve_cp, m)?,
        wrap_pyfunction!(single_pair_shortcut, m)?,
        wrap_pyfunction!(extract_good_edges, m)?,
        wrap_pyfunction!(certify_pipeline, m)?,
        wrap_pyfunction!(greedy_balls, m)?,
        wrap_pyfunction!(bucket, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
