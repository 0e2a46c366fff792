//! Good-edge extraction: repeated Tree-CP solves over hierarchies that are
//! refined wherever the good edges found so far leave a node's internal graph
//! poorly connected, followed by an independent certificate check.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cp::{reff_under, solve_cp, CpInstance, Mode};
use crate::error::{Error, Result};
use crate::graph::{graph_expansion, min_edge_connectivity, natural_decomposition, MultiGraph};
use crate::io::matrix_rows;
use crate::lch::Hierarchy;
use crate::spectral::{cut_dominance, lambda_min};
use crate::EXHAUSTIVE_MAX_N;

/// Good edges are those with resistance at most this multiple of the solved
/// objective. Markov's inequality then leaves fewer than a `1/16` fraction of
/// any node's outgoing edges outside.
pub const THRESHOLD_FACTOR: f64 = 16.0;

/// Relative slack used when recomputed quantities are compared to a trace.
pub const CERTIFY_TOL: f64 = 1e-6;

/// Iteration cap used when none is given: `ceil(log2 k) + 2`.
pub fn default_max_iters(k: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < k.max(1) {
        bits += 1;
    }
    bits + 2
}

/// Connectivity demanded of the good-edge internal graphs: `ceil(k/4)`, at
/// least 1.
pub fn part_threshold(k: usize) -> usize {
    k.div_ceil(4).max(1)
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Connectivity parameter; `None` uses the edge connectivity of the graph.
    pub k: Option<usize>,
    pub max_iters: Option<usize>,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { k: None, max_iters: None, mode: Mode::Box, seed: 0 }
    }
}

/// Markov bookkeeping for one Tree-CP node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Coverage {
    pub node: usize,
    /// Average resistance over `O(t)` under this iteration's matrix.
    pub average: f64,
    /// Outgoing edges that are good in this iteration.
    pub covered: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }
}

/// Decomposition of one active node's good-edge internal graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeSplit {
    pub node: usize,
    /// Parts as lists of child node ids.
    pub parts: Vec<Vec<usize>>,
    /// Edge connectivity of the good-edge internal graph.
    pub connectivity: usize,
    /// Expansion of the full internal graph.
    pub expansion: f64,
    pub expansion_heuristic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    pub iteration: usize,
    pub hierarchy: Hierarchy,
    /// Nodes still being refined at the start of the iteration.
    pub active: Vec<usize>,
    /// Nodes whose outgoing averages enter this iteration's Tree-CP.
    pub tree_nodes: Vec<usize>,
    pub epsilon: f64,
    pub threshold: f64,
    #[serde(with = "matrix_rows")]
    pub d: DMatrix<f64>,
    pub good_edges: Vec<usize>,
    pub coverage: Vec<Coverage>,
    pub splits: Vec<NodeSplit>,
    pub solver_rounds: usize,
    pub solver_heuristic: bool,
}

impl IterationRecord {
    /// Tree-CP nodes whose average is within the solved objective yet fewer
    /// than 15/16 of their outgoing edges are good. Always empty for a
    /// consistent record.
    pub fn markov_failures(&self) -> Vec<usize> {
        self.coverage
            .iter()
            .filter(|c| c.average <= self.epsilon * (1.0 + 1e-9) && 16 * c.covered < 15 * c.total)
            .map(|c| c.node)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineTrace {
    pub format: u32,
    pub k: usize,
    /// Connectivity demanded of retired nodes, `ceil(k/4)`.
    pub part_threshold: usize,
    pub max_iters: usize,
    pub mode: Mode,
    pub iterations: Vec<IterationRecord>,
    #[serde(with = "matrix_rows")]
    pub d_avg: DMatrix<f64>,
    pub good_edges: Vec<usize>,
    pub connectivity: usize,
    pub max_reff: f64,
    /// The iteration cap was hit with nodes still active.
    pub non_termination: bool,
}

/// Runs the extraction loop starting from `lch0`. Tree-CP nodes of the first
/// iteration are the marked nodes of `lch0`, or every non-root node when none
/// are marked.
pub fn extract_good_edges(g: &MultiGraph, lch0: &Hierarchy, opts: &PipelineOptions) -> Result<PipelineTrace> {
    extract_good_edges_with(g, lch0, opts, |_| {})
}

/// As [`extract_good_edges`], calling `on_iteration` after each iteration.
pub fn extract_good_edges_with(
    g: &MultiGraph,
    lch0: &Hierarchy,
    opts: &PipelineOptions,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<PipelineTrace> {
    if lch0.vertex_count() != g.n() {
        return Err(Error::InconsistentLeafMap(format!(
            "hierarchy has {} leaves, graph has {} vertices",
            lch0.vertex_count(),
            g.n()
        )));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let k = match opts.k {
        Some(k) => k,
        None => min_edge_connectivity(g).0,
    };
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let threshold = part_threshold(k);
    let max_iters = opts.max_iters.unwrap_or_else(|| default_max_iters(k));
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be positive".into()));
    }
    let base_degrees = BaseDegrees::new(g, lch0)?;

    let mut h = lch0.clone();
    let mut active = lch0.internal_nodes();
    let mut tree_nodes = if lch0.marked().is_empty() { lch0.non_root_nodes() } else { lch0.marked().to_vec() };
    let mut good = BTreeSet::new();
    let mut records = Vec::new();

    for iteration in 0..max_iters {
        let mut inst = CpInstance::tree(g.clone(), h.clone(), tree_nodes.clone(), opts.mode);
        inst.seed = opts.seed;
        let sol = solve_cp(&inst)?;
        let epsilon = sol.objective;
        let tau = THRESHOLD_FACTOR * epsilon;
        let good_now: Vec<usize> = (0..g.m()).filter(|&e| sol.edge_reff[e] <= tau).collect();
        good.extend(good_now.iter().copied());

        let mut coverage = Vec::with_capacity(tree_nodes.len());
        for &t in &tree_nodes {
            let out = h.outgoing(g, t)?;
            coverage.push(Coverage {
                node: t,
                average: sol.average_reff(&out),
                covered: out.iter().filter(|&&e| sol.edge_reff[e] <= tau).count(),
                total: out.len(),
            });
        }

        let good_graph = g.edge_subgraph(&good.iter().copied().collect::<Vec<_>>());
        let mut splits = Vec::with_capacity(active.len());
        for &t in &active {
            splits.push(split_node(g, &good_graph, &h, t, threshold)?);
        }
        let next_active: Vec<usize> = splits.iter().filter(|s| s.parts.len() > 1).map(|s| s.node).collect();

        records.push(IterationRecord {
            iteration,
            hierarchy: h.clone(),
            active: active.clone(),
            tree_nodes: tree_nodes.clone(),
            epsilon,
            threshold: tau,
            d: sol.d.matrix.clone(),
            good_edges: good_now,
            coverage,
            splits: splits.clone(),
            solver_rounds: sol.rounds.len(),
            solver_heuristic: sol.heuristic,
        });
        on_iteration(records.last().expect("just pushed"));

        if next_active.is_empty() || iteration + 1 == max_iters {
            active = next_active;
            break;
        }
        h = refine(&h, &splits)?;
        tree_nodes = base_degrees.nondominating_children(&h, &next_active);
        active = next_active;
    }

    let count = records.len() as f64;
    let d_avg = records.iter().fold(DMatrix::zeros(g.n(), g.n()), |acc, r| acc + &r.d) / count;
    let good_edges: Vec<usize> = good.into_iter().collect();
    let (connectivity, max_reff) = final_measures(g, &d_avg, &good_edges)?;
    Ok(PipelineTrace {
        format: 1,
        k,
        part_threshold: threshold,
        max_iters,
        mode: opts.mode,
        iterations: records,
        d_avg,
        good_edges,
        connectivity,
        max_reff,
        non_termination: !active.is_empty(),
    })
}

fn final_measures(g: &MultiGraph, d_avg: &DMatrix<f64>, good: &[usize]) -> Result<(usize, f64)> {
    let (c, _) = min_edge_connectivity(&g.edge_subgraph(good));
    let reff = reff_under(g, d_avg)?;
    let max = good.iter().map(|&e| reff[e]).fold(0.0, f64::max);
    Ok((c, max))
}

fn split_node(g: &MultiGraph, good: &MultiGraph, h: &Hierarchy, t: usize, threshold: usize) -> Result<NodeSplit> {
    let inner = h.internal_graph(good, t)?;
    let dec = natural_decomposition(&inner.graph, threshold);
    let parts = dec.parts.iter().map(|p| p.iter().map(|&i| inner.children[i]).collect()).collect();
    let (connectivity, _) = min_edge_connectivity(&inner.graph);
    let full = h.internal_graph(g, t)?;
    let exp = graph_expansion(&full.graph)?;
    Ok(NodeSplit { node: t, parts, connectivity, expansion: exp.phi, expansion_heuristic: exp.heuristic })
}

/// Inserts one new node per multi-child part, between the split node and the
/// children of that part. Single-child parts stay attached directly.
fn refine(h: &Hierarchy, splits: &[NodeSplit]) -> Result<Hierarchy> {
    let mut parent = h.parents().to_vec();
    let mut leaf = h.leaf_map().to_vec();
    for split in splits.iter().filter(|s| s.parts.len() > 1) {
        for part in split.parts.iter().filter(|p| p.len() > 1) {
            let s = parent.len();
            parent.push(Some(split.node));
            leaf.push(None);
            for &c in part {
                parent[c] = Some(s);
            }
        }
    }
    Hierarchy::new(h.vertex_count(), parent, leaf, Vec::new())
}

/// Degrees of each original child inside its parent's first-iteration
/// internal graph, keyed by a representative vertex.
struct BaseDegrees {
    /// For each node of the first hierarchy: (representative vertex, degree)
    /// of each child.
    children: Vec<Vec<(usize, usize)>>,
}

impl BaseDegrees {
    fn new(g: &MultiGraph, h: &Hierarchy) -> Result<BaseDegrees> {
        let mut children = vec![Vec::new(); h.node_count()];
        for t in h.internal_nodes() {
            let inner = h.internal_graph(g, t)?;
            let deg = inner.graph.degrees();
            children[t] =
                inner.children.iter().enumerate().map(|(i, &c)| (h.vertices(c)[0], deg[i])).collect();
        }
        Ok(BaseDegrees { children })
    }

    /// Children of the given nodes in `h`, minus the (at most one) child per
    /// node holding more than half of the first-iteration degree mass.
    fn nondominating_children(&self, h: &Hierarchy, nodes: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &t in nodes {
            let kids = h.children(t);
            let mut owner = vec![usize::MAX; h.vertex_count()];
            for (i, &c) in kids.iter().enumerate() {
                for &v in h.vertices(c) {
                    owner[v] = i;
                }
            }
            let mut mass = vec![0usize; kids.len()];
            for &(rep, d) in &self.children[t] {
                mass[owner[rep]] += d;
            }
            let total: usize = mass.iter().sum();
            out.extend(kids.iter().enumerate().filter(|&(i, _)| 2 * mass[i] <= total).map(|(_, &c)| c));
        }
        out.sort_unstable();
        out
    }
}

/// Quantities recomputed from a trace by [`certify_pipeline`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateReport {
    pub iterations: usize,
    pub connectivity: usize,
    pub part_threshold: usize,
    pub max_reff: f64,
    /// `iterations * max_i threshold_i`.
    pub reff_bound: f64,
    pub min_eigenvalue: f64,
    /// Exhaustive cut dominance of the averaged matrix; `None` above the
    /// exhaustive size limit.
    pub dominated: Option<bool>,
    pub retired_nodes: usize,
    pub min_retired_connectivity: Option<usize>,
    pub markov_failures: usize,
    pub non_termination: bool,
}

fn mismatch(msg: String) -> Error {
    Error::CertificateMismatch(msg)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CERTIFY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Recomputes every claim of a trace from the graph and the stored matrices
/// and hierarchies.
pub fn certify_pipeline(g: &MultiGraph, trace: &PipelineTrace) -> Result<CertificateReport> {
    let recs = &trace.iterations;
    if recs.is_empty() {
        return Err(mismatch("trace has no iterations".into()));
    }
    if trace.part_threshold != part_threshold(trace.k) {
        return Err(mismatch(format!("part threshold {} for k = {}", trace.part_threshold, trace.k)));
    }
    let n = g.n();
    let mut union = BTreeSet::new();
    let mut reffs = Vec::with_capacity(recs.len());
    let mut retired = Vec::new();
    let mut markov_failures = 0;
    for (i, rec) in recs.iter().enumerate() {
        if rec.d.nrows() != n || rec.d.ncols() != n {
            return Err(mismatch(format!("iteration {i}: matrix has the wrong shape")));
        }
        if !close(rec.threshold, THRESHOLD_FACTOR * rec.epsilon) {
            return Err(mismatch(format!("iteration {i}: threshold is not {THRESHOLD_FACTOR} epsilon")));
        }
        let reff = reff_under(g, &rec.d)?;
        // good set must match the stored matrix; edges on the threshold may go either way
        let stored: BTreeSet<usize> = rec.good_edges.iter().copied().collect();
        for (e, &r) in reff.iter().enumerate() {
            let inside = stored.contains(&e);
            let slack = CERTIFY_TOL * rec.threshold.max(1.0);
            if (inside && r > rec.threshold + slack) || (!inside && r <= rec.threshold - slack) {
                return Err(mismatch(format!(
                    "iteration {i}: edge {e} has resistance {r:.6e} against threshold {:.6e} but is {} the good set",
                    rec.threshold,
                    if inside { "in" } else { "outside" }
                )));
            }
        }
        union.extend(stored.iter().copied());
        // the solved objective is the worst tree-node average
        let mut worst: f64 = 0.0;
        for c in &rec.coverage {
            let out = rec.hierarchy.outgoing(g, c.node)?;
            let avg = out.iter().map(|&e| reff[e]).sum::<f64>() / out.len() as f64;
            let covered = out.iter().filter(|&&e| stored.contains(&e)).count();
            if !close(avg, c.average) || covered != c.covered || out.len() != c.total {
                return Err(mismatch(format!("iteration {i}: coverage of node {} differs", c.node)));
            }
            worst = worst.max(avg);
        }
        if !close(worst, rec.epsilon) {
            return Err(mismatch(format!("iteration {i}: worst node average {worst:.6e} vs epsilon {:.6e}", rec.epsilon)));
        }
        markov_failures += rec.markov_failures().len();
        reffs.push(reff);

        // decompositions of the active nodes under the good edges so far
        let good_graph = g.edge_subgraph(&union.iter().copied().collect::<Vec<_>>());
        let next: BTreeSet<usize> = recs.get(i + 1).map(|r| r.active.iter().copied().collect()).unwrap_or_default();
        if !next.iter().all(|t| rec.active.contains(t)) {
            return Err(mismatch(format!("iteration {}: active set is not a subset of the previous one", i + 1)));
        }
        for &t in &rec.active {
            let inner = rec.hierarchy.internal_graph(&good_graph, t)?;
            let parts = natural_decomposition(&inner.graph, trace.part_threshold).parts.len();
            let expect_active = parts > 1;
            let last = i + 1 == recs.len();
            if !last && expect_active != next.contains(&t) {
                return Err(mismatch(format!("iteration {i}: node {t} has {parts} parts")));
            }
            if !expect_active {
                let (c, _) = min_edge_connectivity(&inner.graph);
                if inner.graph.n() >= 2 && c < trace.part_threshold {
                    return Err(mismatch(format!(
                        "iteration {i}: retired node {t} has good-edge connectivity {c} < {}",
                        trace.part_threshold
                    )));
                }
                retired.push(if inner.graph.n() >= 2 { Some(c) } else { None });
            }
        }
        if let Some(r) = rec.splits.iter().find(|s| !rec.active.contains(&s.node)) {
            return Err(mismatch(format!("iteration {i}: split recorded for inactive node {}", r.node)));
        }
    }

    let good_edges: Vec<usize> = union.into_iter().collect();
    if good_edges != trace.good_edges {
        return Err(mismatch("final good set is not the union of the iteration sets".into()));
    }
    let count = recs.len() as f64;
    let d_avg = recs.iter().fold(DMatrix::zeros(n, n), |acc, r| acc + &r.d) / count;
    let scale = d_avg.amax().max(1.0);
    if (&d_avg - &trace.d_avg).amax() > CERTIFY_TOL * scale {
        return Err(mismatch("averaged matrix differs from the mean of the iteration matrices".into()));
    }
    let min_eigenvalue = lambda_min(&d_avg);
    if min_eigenvalue <= 0.0 {
        return Err(mismatch(format!("averaged matrix is not positive definite ({min_eigenvalue:.3e})")));
    }
    let (connectivity, max_reff) = final_measures(g, &d_avg, &good_edges)?;
    if connectivity != trace.connectivity {
        return Err(mismatch(format!("good-edge connectivity {connectivity} vs reported {}", trace.connectivity)));
    }
    if !close(max_reff, trace.max_reff) {
        return Err(mismatch(format!("max resistance {max_reff:.6e} vs reported {:.6e}", trace.max_reff)));
    }
    // averaging loses at most a factor of the iteration count against any single matrix
    let avg_reff = reff_under(g, &d_avg)?;
    for e in 0..g.m() {
        let best = reffs.iter().map(|r| r[e]).fold(f64::INFINITY, f64::min);
        if avg_reff[e] > count * best * (1.0 + CERTIFY_TOL) {
            return Err(mismatch(format!("edge {e}: averaged resistance exceeds {count} times the best")));
        }
    }
    let reff_bound = count * recs.iter().map(|r| r.threshold).fold(0.0, f64::max);
    if max_reff > reff_bound * (1.0 + CERTIFY_TOL) {
        return Err(mismatch(format!("max resistance {max_reff:.6e} exceeds {reff_bound:.6e}")));
    }
    let dominated = if n <= EXHAUSTIVE_MAX_N && trace.mode == Mode::Box {
        let dom = cut_dominance(&d_avg, &g.laplacian())?;
        if !dom.holds {
            return Err(mismatch(format!("averaged matrix violates cut dominance on {:?}", dom.witness)));
        }
        Some(true)
    } else {
        None
    };
    let non_termination = !recs.last().expect("nonempty").splits.iter().all(|s| s.parts.len() <= 1);
    if non_termination != trace.non_termination {
        return Err(mismatch("termination flag differs".into()));
    }
    if !non_termination && connectivity < trace.part_threshold {
        return Err(mismatch(format!(
            "every node retired yet the good edges are only {connectivity}-edge-connected"
        )));
    }
    Ok(CertificateReport {
        iterations: recs.len(),
        connectivity,
        part_threshold: trace.part_threshold,
        max_reff,
        reff_bound,
        min_eigenvalue,
        dominated,
        retired_nodes: retired.len(),
        min_retired_connectivity: retired.iter().flatten().copied().min(),
        markov_failures,
        non_termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{cycle, dumbbell};

    #[test]
    fn iteration_cap() {
        assert_eq!(default_max_iters(1), 2);
        assert_eq!(default_max_iters(4), 4);
        assert_eq!(default_max_iters(5), 5);
        assert_eq!(part_threshold(1), 1);
        assert_eq!(part_threshold(8), 2);
        assert_eq!(part_threshold(9), 3);
    }

    #[test]
    fn dumbbell_single_iteration() {
        let g = dumbbell(6);
        let trace = extract_good_edges(&g, &Hierarchy::star(2).unwrap(), &PipelineOptions::default()).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.good_edges, (0..6).collect::<Vec<_>>());
        assert!(!trace.non_termination);
        let report = certify_pipeline(&g, &trace).unwrap();
        assert_eq!(report.connectivity, 6);
        assert!((report.max_reff - 1.0 / 6.0).abs() < 1e-3, "{}", report.max_reff);
        assert_eq!(report.markov_failures, 0);
    }

    #[test]
    fn tampered_trace_detected() {
        let g = cycle(6);
        let mut trace = extract_good_edges(&g, &Hierarchy::star(6).unwrap(), &PipelineOptions::default()).unwrap();
        certify_pipeline(&g, &trace).unwrap();
        let removed = trace.iterations[0].good_edges.remove(0);
        trace.good_edges.retain(|&e| e != removed);
        assert!(matches!(certify_pipeline(&g, &trace), Err(Error::CertificateMismatch(_))));
    }

    #[test]
    fn refinement_inserts_part_nodes() {
        // two triangles joined by one edge; star hierarchy over all six vertices
        let g = MultiGraph::new(6, vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]).unwrap();
        let h = Hierarchy::star(6).unwrap();
        let split = split_node(&g, &g, &h, h.root(), 2).unwrap();
        assert_eq!(split.parts.len(), 2);
        let refined = refine(&h, &[split]).unwrap();
        assert_eq!(refined.node_count(), 9);
        assert_eq!(refined.children(h.root()).len(), 2);
        let base = BaseDegrees::new(&g, &h).unwrap();
        // equal halves: neither child dominates
        assert_eq!(base.nondominating_children(&refined, &[h.root()]).len(), 2);
    }

    #[test]
    fn trace_json_round_trip() {
        let g = dumbbell(3);
        let trace = extract_good_edges(&g, &Hierarchy::star(2).unwrap(), &PipelineOptions::default()).unwrap();
        let text = serde_json::to_string(&trace).unwrap();
        let back: PipelineTrace = serde_json::from_str(&text).unwrap();
        certify_pipeline(&g, &back).unwrap();
    }
}
