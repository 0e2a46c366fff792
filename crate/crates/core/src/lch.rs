//! Locally connected hierarchies: the tree model, validation, the planar
//! merge construction, expander extraction and the general construction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    expansion, graph_expansion, induced_subgraph, membership, min_edge_connectivity,
    natural_decomposition, MultiGraph,
};
use crate::spectral::spectral_partition;

/// Rooted tree whose leaves are in bijection with the vertices of a graph.
/// Only parents and the leaf map are stored; vertex sets are derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HierarchyFile", into = "HierarchyFile")]
pub struct Hierarchy {
    parent: Vec<Option<usize>>,
    leaf_vertex: Vec<Option<usize>>,
    marked: Vec<usize>,
    children: Vec<Vec<usize>>,
    root: usize,
    vertex_leaf: Vec<usize>,
    vsets: Vec<Vec<usize>>,
}

impl Hierarchy {
    /// Builds a hierarchy over `n` vertices. Every leaf (childless node) must
    /// carry a vertex, every vertex exactly one leaf.
    pub fn new(
        n: usize,
        parent: Vec<Option<usize>>,
        leaf_vertex: Vec<Option<usize>>,
        marked: Vec<usize>,
    ) -> Result<Hierarchy> {
        let count = parent.len();
        if leaf_vertex.len() != count {
            return Err(Error::InconsistentLeafMap("leaf map length differs from node count".into()));
        }
        let mut children = vec![Vec::new(); count];
        let mut roots = Vec::new();
        for (t, p) in parent.iter().enumerate() {
            match *p {
                Some(p) if p >= count => return Err(Error::UnknownNode(p)),
                Some(p) if p == t => {
                    return Err(Error::InconsistentLeafMap(format!("node {t} is its own parent")))
                }
                Some(p) => children[p].push(t),
                None => roots.push(t),
            }
        }
        if roots.len() != 1 {
            return Err(Error::InconsistentLeafMap(format!("expected one root, found {}", roots.len())));
        }
        if let Some(&t) = marked.iter().find(|&&t| t >= count) {
            return Err(Error::UnknownNode(t));
        }
        let root = roots[0];
        let mut vertex_leaf = vec![usize::MAX; n];
        for t in 0..count {
            match (leaf_vertex[t], children[t].is_empty()) {
                (Some(v), true) => {
                    if v >= n {
                        return Err(Error::InconsistentLeafMap(format!("vertex {v} outside 0..{n}")));
                    }
                    if vertex_leaf[v] != usize::MAX {
                        return Err(Error::InconsistentLeafMap(format!("vertex {v} mapped twice")));
                    }
                    vertex_leaf[v] = t;
                }
                (Some(_), false) => {
                    return Err(Error::InconsistentLeafMap(format!("internal node {t} has a vertex")))
                }
                (None, true) => {
                    return Err(Error::InconsistentLeafMap(format!("leaf {t} has no vertex")))
                }
                (None, false) => {}
            }
        }
        if let Some(v) = vertex_leaf.iter().position(|&t| t == usize::MAX) {
            return Err(Error::InconsistentLeafMap(format!("vertex {v} has no leaf")));
        }
        // post-order over the tree; also detects nodes unreachable from the root
        let mut order = Vec::with_capacity(count);
        let mut stack = vec![root];
        while let Some(t) = stack.pop() {
            order.push(t);
            stack.extend(children[t].iter().copied());
        }
        if order.len() != count {
            return Err(Error::InconsistentLeafMap("parent links contain a cycle".into()));
        }
        let mut vsets: Vec<Vec<usize>> = vec![Vec::new(); count];
        for &t in order.iter().rev() {
            let mut set = match leaf_vertex[t] {
                Some(v) => vec![v],
                None => Vec::new(),
            };
            for &c in &children[t] {
                set.extend_from_slice(&vsets[c]);
            }
            set.sort_unstable();
            vsets[t] = set;
        }
        let mut marked = marked;
        marked.sort_unstable();
        marked.dedup();
        Ok(Hierarchy { parent, leaf_vertex, marked, children, root, vertex_leaf, vsets })
    }

    /// One internal root whose children are the leaves `0..n` (leaf `i` is
    /// vertex `i`).
    pub fn star(n: usize) -> Result<Hierarchy> {
        let mut parent = vec![Some(n); n];
        parent.push(None);
        let mut leaf: Vec<Option<usize>> = (0..n).map(Some).collect();
        leaf.push(None);
        Hierarchy::new(n, parent, leaf, Vec::new())
    }

    /// The chain hierarchy on the path `0..=2^h`: leaf `i` is vertex `i`,
    /// node `2^h + i` joins leaf `i` to everything below it, the last such
    /// node is the root, and leaves `1..=2^h` are marked.
    pub fn chain(h: usize) -> Result<Hierarchy> {
        let len = 1usize << h;
        let mut parent = vec![None; 2 * len + 1];
        let joiner = |i: usize| len + i;
        parent[0] = Some(joiner(1));
        for i in 1..=len {
            parent[i] = Some(joiner(i));
            if i > 1 {
                parent[joiner(i - 1)] = Some(joiner(i));
            }
        }
        let mut leaf: Vec<Option<usize>> = (0..=len).map(Some).collect();
        leaf.resize(2 * len + 1, None);
        Hierarchy::new(len + 1, parent, leaf, (1..=len).collect())
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_leaf.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parent[t]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, t: usize) -> &[usize] {
        &self.children[t]
    }

    pub fn leaf_vertex(&self, t: usize) -> Option<usize> {
        self.leaf_vertex[t]
    }

    pub fn leaf_map(&self) -> &[Option<usize>] {
        &self.leaf_vertex
    }

    pub fn leaf_of(&self, v: usize) -> usize {
        self.vertex_leaf[v]
    }

    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    pub fn with_marked(&self, marked: Vec<usize>) -> Result<Hierarchy> {
        Hierarchy::new(self.vertex_count(), self.parent.clone(), self.leaf_vertex.clone(), marked)
    }

    pub fn is_leaf(&self, t: usize) -> bool {
        self.children[t].is_empty()
    }

    /// Nodes with at least one child, in id order.
    pub fn internal_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&t| !self.is_leaf(t)).collect()
    }

    pub fn non_root_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&t| t != self.root).collect()
    }

    /// Sorted leaf vertex set `V(t)`.
    pub fn vertices(&self, t: usize) -> &[usize] {
        &self.vsets[t]
    }

    fn check(&self, t: usize) -> Result<()> {
        if t >= self.node_count() {
            return Err(Error::UnknownNode(t));
        }
        Ok(())
    }

    /// Edges between `V(t)` and the rest of its parent's set. Empty at the
    /// root.
    pub fn outgoing(&self, g: &MultiGraph, t: usize) -> Result<Vec<usize>> {
        self.check(t)?;
        let Some(p) = self.parent[t] else { return Ok(Vec::new()) };
        let inside = membership(g.n(), &self.vsets[t])?;
        let parent_set = membership(g.n(), &self.vsets[p])?;
        Ok((0..g.m())
            .filter(|&e| {
                let (u, v) = g.edge(e);
                (inside[u] && !inside[v] && parent_set[v]) || (inside[v] && !inside[u] && parent_set[u])
            })
            .collect())
    }

    /// Edges leaving `V(t)` in the whole graph.
    pub fn boundary(&self, g: &MultiGraph, t: usize) -> Result<Vec<usize>> {
        self.check(t)?;
        let inside = membership(g.n(), &self.vsets[t])?;
        Ok((0..g.m()).filter(|&e| inside[g.edge(e).0] != inside[g.edge(e).1]).collect())
    }

    /// `G{t}`: the induced graph on `V(t)` with each child's set contracted.
    /// Vertex `i` of the result is `children(t)[i]`.
    pub fn internal_graph(&self, g: &MultiGraph, t: usize) -> Result<InternalGraph> {
        self.check(t)?;
        let mut label = vec![usize::MAX; g.n()];
        for (i, &c) in self.children[t].iter().enumerate() {
            for &v in &self.vsets[c] {
                label[v] = i;
            }
        }
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for e in 0..g.m() {
            let (u, v) = g.edge(e);
            if label[u] != usize::MAX && label[v] != usize::MAX && label[u] != label[v] {
                edges.push((label[u], label[v]));
                edge_map.push(e);
            }
        }
        let count = self.children[t].len().max(1);
        Ok(InternalGraph {
            graph: MultiGraph::new(count, edges)?,
            edge_map,
            children: self.children[t].clone(),
        })
    }

    pub fn views(&self, g: &MultiGraph, t: usize) -> Result<NodeViews> {
        self.check(t)?;
        Ok(NodeViews {
            vertices: self.vsets[t].clone(),
            outgoing: self.outgoing(g, t)?,
            boundary: self.boundary(g, t)?,
            internal: self.internal_graph(g, t)?,
            is_root: t == self.root,
        })
    }
}

/// On-disk form: `parent` uses -1 for the root and `leafVertex` maps leaf
/// node ids to vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct HierarchyFile {
    format: u32,
    nodes: usize,
    parent: Vec<i64>,
    leaf_vertex: BTreeMap<usize, usize>,
    #[serde(default)]
    marked: Vec<usize>,
}

impl From<Hierarchy> for HierarchyFile {
    fn from(h: Hierarchy) -> Self {
        HierarchyFile {
            format: 1,
            nodes: h.node_count(),
            parent: h.parent.iter().map(|p| p.map_or(-1, |v| v as i64)).collect(),
            leaf_vertex: h.leaf_vertex.iter().enumerate().filter_map(|(t, v)| v.map(|v| (t, v))).collect(),
            marked: h.marked,
        }
    }
}

impl TryFrom<HierarchyFile> for Hierarchy {
    type Error = Error;
    fn try_from(f: HierarchyFile) -> Result<Hierarchy> {
        if f.format != 1 {
            return Err(Error::InvalidArgument(format!("unsupported hierarchy format {}", f.format)));
        }
        if f.parent.len() != f.nodes {
            return Err(Error::InconsistentLeafMap("parent list length differs from node count".into()));
        }
        let mut leaf = vec![None; f.nodes];
        for (&t, &v) in &f.leaf_vertex {
            *leaf.get_mut(t).ok_or(Error::UnknownNode(t))? = Some(v);
        }
        let parent = f.parent.into_iter().map(|p| if p < 0 { None } else { Some(p as usize) }).collect();
        Hierarchy::new(f.leaf_vertex.len(), parent, leaf, f.marked)
    }
}

/// Contracted internal graph of a node.
#[derive(Clone, Debug)]
pub struct InternalGraph {
    pub graph: MultiGraph,
    /// Local edge id -> edge id in the original graph.
    pub edge_map: Vec<usize>,
    /// Local vertex -> child node.
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct NodeViews {
    pub vertices: Vec<usize>,
    pub outgoing: Vec<usize>,
    pub boundary: Vec<usize>,
    pub internal: InternalGraph,
    pub is_root: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub node: usize,
    /// One of `children`, `connectivity`, `outgoing`, `ratio`.
    pub condition: String,
    pub measured: f64,
    pub required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeMeasure {
    pub node: usize,
    /// Edge connectivity of the induced graph on `V(t)`; `None` for
    /// singletons.
    pub connectivity: Option<usize>,
    pub outgoing: usize,
    pub boundary: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LchReport {
    pub k: f64,
    pub lambda: f64,
    pub valid_nodes: Vec<usize>,
    pub violations: Vec<Violation>,
    pub nodes: Vec<NodeMeasure>,
}

impl LchReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the three hierarchy conditions: every induced `G[V(t)]` is
/// `k`-edge-connected, every non-root node has `|O(t)| >= k`, and every node
/// of `tset` has `|O(t)| >= lambda |P(t)|`. Internal nodes with a single
/// child are reported too.
pub fn validate_lch(
    g: &MultiGraph,
    h: &Hierarchy,
    k: f64,
    lambda: f64,
    tset: &[usize],
) -> Result<LchReport> {
    if h.vertex_count() != g.n() {
        return Err(Error::InconsistentLeafMap(format!(
            "hierarchy covers {} vertices, graph has {}",
            h.vertex_count(),
            g.n()
        )));
    }
    if let Some(&t) = tset.iter().find(|&&t| t >= h.node_count()) {
        return Err(Error::UnknownNode(t));
    }
    let mut in_tset = vec![false; h.node_count()];
    for &t in tset {
        in_tset[t] = true;
    }
    let mut violations = Vec::new();
    let mut valid_nodes = Vec::new();
    let mut nodes = Vec::new();
    for t in 0..h.node_count() {
        if h.children(t).len() == 1 {
            violations.push(Violation {
                node: t,
                condition: "children".into(),
                measured: 1.0,
                required: 2.0,
            });
        }
        let set = h.vertices(t);
        let connectivity = if set.len() > 1 {
            let sub = induced_subgraph(g, set)?;
            Some(min_edge_connectivity(&sub.graph).0)
        } else {
            None
        };
        if let Some(c) = connectivity {
            if (c as f64) < k {
                violations.push(Violation {
                    node: t,
                    condition: "connectivity".into(),
                    measured: c as f64,
                    required: k,
                });
            }
        }
        let out = h.outgoing(g, t)?.len();
        let bnd = h.boundary(g, t)?.len();
        if t != h.root() {
            if (out as f64) < k {
                violations.push(Violation {
                    node: t,
                    condition: "outgoing".into(),
                    measured: out as f64,
                    required: k,
                });
            }
            let ratio_ok = out as f64 >= lambda * bnd as f64;
            if ratio_ok {
                valid_nodes.push(t);
            }
            if in_tset[t] && !ratio_ok {
                violations.push(Violation {
                    node: t,
                    condition: "ratio".into(),
                    measured: out as f64,
                    required: lambda * bnd as f64,
                });
            }
        }
        nodes.push(NodeMeasure { node: t, connectivity, outgoing: out, boundary: bnd });
    }
    Ok(LchReport { k, lambda, valid_nodes, violations, nodes })
}

/// Merge construction for planar graphs: repeatedly joins the first
/// contracted vertex with at most five neighbours to the neighbour sharing
/// the most parallel edges with it. Marks the first vertex of every merge.
pub fn planar_lch(g: &MultiGraph) -> Result<Hierarchy> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut leaf: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut marked = Vec::new();
    // current top-level nodes, in creation order
    let mut active: Vec<usize> = (0..n).collect();
    // vertex -> position in `active`
    let mut slot: Vec<usize> = (0..n).collect();
    while active.len() > 1 {
        let w = active.len();
        let mut mult = vec![vec![0usize; w]; w];
        for &(u, v) in g.edges() {
            let (a, b) = (slot[u], slot[v]);
            if a != b {
                mult[a][b] += 1;
                mult[b][a] += 1;
            }
        }
        let nbrs = |a: usize| (0..w).filter(|&b| mult[a][b] > 0).count();
        let first = (0..w).find(|&a| nbrs(a) <= 5).ok_or(Error::NoLowDegreeVertex)?;
        if nbrs(first) == 0 {
            return Err(Error::Disconnected);
        }
        let mut second = usize::MAX;
        for b in 0..w {
            if mult[first][b] > 0 && (second == usize::MAX || mult[first][b] > mult[first][second]) {
                second = b;
            }
        }
        let (t1, t2) = (active[first], active[second]);
        let new = parent.len();
        parent.push(None);
        leaf.push(None);
        parent[t1] = Some(new);
        parent[t2] = Some(new);
        marked.push(t1);
        let (lo, hi) = (first.min(second), first.max(second));
        active.remove(hi);
        active.remove(lo);
        active.push(new);
        for v in 0..n {
            let s = slot[v];
            slot[v] = if s == first || s == second {
                active.len() - 1
            } else {
                s - (s > lo) as usize - (s > hi) as usize
            };
        }
    }
    Hierarchy::new(n, parent, leaf, marked)
}

/// How the extraction loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionExit {
    /// The current induced subgraph was already sufficiently connected.
    Connected,
    /// A part of a natural decomposition of a low-cut side was returned.
    Decomposed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Extraction {
    pub vertices: Vec<usize>,
    pub exit: ExtractionExit,
    pub passes: usize,
}

fn log_in_base(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

/// Checks `k >= 7 log(n)` in the given base.
pub fn check_connectivity_precondition(n: usize, k: usize, log_base: f64) -> Result<()> {
    if log_base <= 1.0 {
        return Err(Error::InvalidArgument(format!("log base {log_base} must exceed 1")));
    }
    let need = 7.0 * log_in_base(n.max(1) as f64, log_base);
    if (k as f64) < need {
        return Err(Error::PreconditionFailed(format!(
            "k = {k} is below 7 log(n) = {need:.3} for n = {n}"
        )));
    }
    Ok(())
}

/// Boundary of `s` (a subset of `u`) inside `G[u]`, using a mask for `u`.
fn boundary_within(g: &MultiGraph, in_u: &[bool], s: &[bool]) -> usize {
    g.edges()
        .iter()
        .filter(|&&(a, b)| in_u[a] && in_u[b] && s[a] != s[b])
        .count()
}

fn phi_within(g: &MultiGraph, in_u: &[bool], s: &[bool]) -> f64 {
    let mut vol = 0usize;
    for &(a, b) in g.edges() {
        if in_u[a] && in_u[b] {
            vol += s[a] as usize + s[b] as usize;
        }
    }
    if vol == 0 {
        return f64::INFINITY;
    }
    boundary_within(g, in_u, s) as f64 / vol as f64
}

/// One-sided expansion `d(S, V - S) / d(S)` in the whole graph; zero when the
/// set is everything.
fn phi_g(g: &MultiGraph, s: &[usize]) -> f64 {
    if s.len() == g.n() {
        return 0.0;
    }
    expansion(g, s).map(|e| e.phi_side).unwrap_or(f64::INFINITY)
}

/// Finds a sufficiently connected, dense, expanding induced subgraph of a
/// `k`-edge-connected graph with `k >= 7 log(n)`. Follows the extraction
/// loop literally; see `ExtractionExit` for how it ended.
pub fn expander_extract(g: &MultiGraph, k: usize, log_base: f64) -> Result<Extraction> {
    check_connectivity_precondition(g.n(), k, log_base)?;
    let n = g.n();
    if n <= 1 {
        return Ok(Extraction { vertices: (0..n).collect(), exit: ExtractionExit::Connected, passes: 0 });
    }
    let kf = k as f64;
    let deg_g = g.degrees();
    let mut u: Vec<usize> = (0..n).collect();
    let mut passes = 0;
    loop {
        passes += 1;
        if u.len() <= 1 {
            return Err(Error::PreconditionFailed(
                "extraction shrank to a single vertex; input is not sufficiently connected".into(),
            ));
        }
        let sub = induced_subgraph(g, &u)?;
        let h = &sub.graph;
        let deg_h = h.degrees();
        if let Some(i) = (0..u.len()).find(|&i| 20 * deg_h[i] <= 7 * deg_g[u[i]]) {
            u.remove(i);
            continue;
        }
        // side S (local ids) from a spectral sweep, or a component when H
        // falls apart
        let side_local: Vec<usize> = if h.is_connected() {
            spectral_partition(h)?.side
        } else {
            let (_, label) = h.components();
            (0..h.n()).filter(|&i| label[i] == 0).collect()
        };
        let in_side = membership(h.n(), &side_local)?;
        let s: Vec<usize> = side_local.iter().map(|&i| u[i]).collect();
        let t: Vec<usize> = (0..h.n()).filter(|&i| !in_side[i]).map(|i| u[i]).collect();
        let (phi_s, phi_t, phi_u) = (phi_g(g, &s), phi_g(g, &t), phi_g(g, &u));
        if phi_s <= phi_u || phi_t <= phi_u {
            u = if phi_s <= phi_t { s } else { t };
            continue;
        }
        let all = vec![true; h.n()];
        let not_side: Vec<bool> = in_side.iter().map(|b| !b).collect();
        let (ph_s, ph_t) = (phi_within(h, &all, &in_side), phi_within(h, &all, &not_side));
        if ph_s.max(ph_t) < 1.0 / kf {
            u = if s.len() <= t.len() { s } else { t };
            continue;
        }
        let threshold = kf / 20.0;
        let (conn, witness) = min_edge_connectivity(h);
        if conn as f64 >= threshold {
            return Ok(Extraction { vertices: u, exit: ExtractionExit::Connected, passes });
        }
        let w = witness.expect("h has at least two vertices");
        let w_mask = membership(h.n(), &w.side)?;
        let w_comp: Vec<bool> = w_mask.iter().map(|b| !b).collect();
        let heavier = if phi_within(h, &all, &w_mask) >= phi_within(h, &all, &w_comp) {
            w_mask
        } else {
            w_comp
        };
        let chosen: Vec<usize> = (0..h.n()).filter(|&i| heavier[i]).collect();
        let part_graph = induced_subgraph(h, &chosen)?;
        let parts = natural_decomposition(&part_graph.graph, threshold.ceil() as usize).parts;
        let mut best: Option<(usize, usize, Vec<usize>)> = None;
        for p in parts {
            let local: Vec<usize> = p.iter().map(|&i| part_graph.vertex_map[i]).collect();
            let pmask = membership(h.n(), &local)?;
            let b = boundary_within(h, &all, &pmask);
            let key = ((b as f64) < kf / 10.0 && local.len() > 1, local.len() > 1);
            let rank = match key {
                (true, _) => 0,
                (false, true) => 1,
                _ => 2,
            };
            if best.as_ref().is_none_or(|(r, bb, _)| rank < *r || (rank == *r && rank > 0 && b < *bb)) {
                best = Some((rank, b, local));
            }
        }
        let (_, _, local) = best.expect("decomposition is nonempty");
        let vertices = local.iter().map(|&i| u[i]).collect();
        return Ok(Extraction { vertices, exit: ExtractionExit::Decomposed, passes });
    }
}

/// Measured properties of an extracted vertex set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionCheck {
    pub connectivity: usize,
    /// Smallest `d_{G[S]}(v) / d_G(v)` over `v` in `S`.
    pub density: f64,
    pub expansion: f64,
    pub heuristic: bool,
}

pub fn check_extraction(g: &MultiGraph, s: &[usize]) -> Result<ExtractionCheck> {
    let sub = induced_subgraph(g, s)?;
    let dg = g.degrees();
    let ds = sub.graph.degrees();
    let density = (0..s.len())
        .map(|i| if dg[sub.vertex_map[i]] == 0 { 1.0 } else { ds[i] as f64 / dg[sub.vertex_map[i]] as f64 })
        .fold(f64::INFINITY, f64::min);
    let (conn, _) = min_edge_connectivity(&sub.graph);
    let (expansion, heuristic) = if sub.graph.n() >= 2 {
        let e = graph_expansion(&sub.graph)?;
        (e.phi, e.heuristic)
    } else {
        (f64::INFINITY, false)
    };
    Ok(ExtractionCheck { connectivity: conn, density, expansion, heuristic })
}

/// General construction: contract the current top-level nodes, extract a
/// well-connected set of them and give it a new parent, until one node
/// remains. Every non-root node is marked.
pub fn general_lch(g: &MultiGraph, k: usize, log_base: f64) -> Result<Hierarchy> {
    check_connectivity_precondition(g.n(), k, log_base)?;
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut leaf: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut slot: Vec<usize> = (0..n).collect();
    while active.len() > 1 {
        let quotient = g.quotient(&slot, active.len()).graph;
        let ext = expander_extract(&quotient, k, log_base)?;
        if ext.vertices.len() < 2 {
            return Err(Error::PreconditionFailed(
                "extraction returned fewer than two contracted vertices".into(),
            ));
        }
        let new = parent.len();
        parent.push(None);
        leaf.push(None);
        let chosen = membership(active.len(), &ext.vertices)?;
        for &i in &ext.vertices {
            parent[active[i]] = Some(new);
        }
        let mut next_pos = vec![0; active.len()];
        let mut kept = Vec::new();
        for (i, &t) in active.iter().enumerate() {
            if !chosen[i] {
                next_pos[i] = kept.len();
                kept.push(t);
            }
        }
        let new_slot = kept.len();
        kept.push(new);
        for s in slot.iter_mut() {
            *s = if chosen[*s] { new_slot } else { next_pos[*s] };
        }
        active = kept;
    }
    let root = active[0];
    let marked = (0..parent.len()).filter(|&t| t != root).collect();
    Hierarchy::new(n, parent, leaf, marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{amplify, dyadic, hypercube, ladder};
    use crate::graph::tests::{cycle, dumbbell};

    #[test]
    fn json_round_trip() {
        let h = Hierarchy::chain(2).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        assert!(text.contains("\"format\":1") && text.contains("\"leafVertex\""));
        let back: Hierarchy = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
        let bad = text.replace("\"format\":1", "\"format\":2");
        assert!(serde_json::from_str::<Hierarchy>(&bad).is_err());
    }

    #[test]
    fn chain_views() {
        let g = dyadic(3, 4).unwrap();
        let h = Hierarchy::chain(3).unwrap();
        assert_eq!(h.root(), 16);
        for i in 1..=8usize {
            let out = h.outgoing(&g, i).unwrap();
            let expect: Vec<usize> = (0..g.m())
                .filter(|&e| {
                    let (a, b) = g.edge(e);
                    (a == i && b < i) || (b == i && a < i)
                })
                .collect();
            assert_eq!(out, expect);
            if i >= 2 {
                assert_eq!(h.outgoing(&g, 8 + i - 1).unwrap(), out);
            }
        }
        let root = h.views(&g, h.root()).unwrap();
        assert!(root.is_root && root.boundary.is_empty() && root.outgoing.is_empty());
    }

    #[test]
    fn star_internal_graph_is_graph() {
        let g = hypercube(3, 1).unwrap();
        let h = Hierarchy::star(8).unwrap();
        let ig = h.internal_graph(&g, h.root()).unwrap();
        assert_eq!(ig.graph, g);
        assert!(validate_lch(&g, &h, 3.0, 1.0, &[]).unwrap().is_valid());
    }

    #[test]
    fn chain_is_valid() {
        for (hh, k) in [(2, 3), (3, 4), (3, 8)] {
            let g = dyadic(hh, k).unwrap();
            let h = Hierarchy::chain(hh).unwrap();
            let r = validate_lch(&g, &h, k as f64, 0.5, h.marked()).unwrap();
            assert!(r.is_valid(), "{:?}", r.violations);
        }
    }

    #[test]
    fn single_child_reported() {
        let g = dumbbell(3);
        let h = Hierarchy::new(2, vec![Some(3), Some(2), Some(3), None], vec![Some(0), Some(1), None, None], vec![])
            .unwrap();
        let r = validate_lch(&g, &h, 1.0, 0.0, &[]).unwrap();
        assert!(r.violations.iter().any(|v| v.node == 2 && v.condition == "children"));
    }

    #[test]
    fn bad_leaf_maps() {
        assert!(matches!(
            Hierarchy::new(2, vec![Some(2), Some(2), None], vec![Some(0), Some(0), None], vec![]),
            Err(Error::InconsistentLeafMap(_))
        ));
        assert!(matches!(
            Hierarchy::new(2, vec![Some(5), Some(2), None], vec![Some(0), Some(1), None], vec![]),
            Err(Error::UnknownNode(5))
        ));
        let h = Hierarchy::star(3).unwrap();
        assert!(matches!(validate_lch(&dumbbell(2), &h, 1.0, 0.0, &[]), Err(Error::InconsistentLeafMap(_))));
        assert!(matches!(h.views(&dumbbell(2), 9), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn planar_small() {
        let h = planar_lch(&dumbbell(5)).unwrap();
        assert_eq!(h.node_count(), 3);
        let mut tri = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            for _ in 0..6 {
                tri.push((a, b));
            }
        }
        let g = MultiGraph::new(3, tri).unwrap();
        let h = planar_lch(&g).unwrap();
        assert_eq!(h.node_count(), 5);
        let r = validate_lch(&g, &h, 12.0 / 5.0, 0.2, h.marked()).unwrap();
        assert!(r.is_valid(), "{:?}", r.violations);
    }

    #[test]
    fn planar_ladder() {
        let g = ladder(8, 4, false).unwrap().graph;
        let h = planar_lch(&g).unwrap();
        assert_eq!(h.node_count(), 31);
        for t in h.internal_nodes() {
            assert_eq!(h.children(t).len(), 2);
        }
        let r = validate_lch(&g, &h, 4.0 / 5.0, 0.2, h.marked()).unwrap();
        assert!(r.is_valid(), "{:?}", r.violations);
        let g10 = amplify(&g, 10).unwrap();
        let h = planar_lch(&g10).unwrap();
        let r = validate_lch(&g10, &h, 8.0, 0.2, h.marked()).unwrap();
        assert!(r.is_valid(), "{:?}", r.violations);
    }

    #[test]
    fn planar_rejects_dense() {
        let mut edges = Vec::new();
        for a in 0..8 {
            for b in a + 1..8 {
                edges.push((a, b));
            }
        }
        let k8 = MultiGraph::new(8, edges).unwrap();
        assert!(matches!(planar_lch(&k8), Err(Error::NoLowDegreeVertex)));
    }

    #[test]
    fn extraction() {
        let e = expander_extract(&dumbbell(7), 7, 2.0).unwrap();
        assert_eq!(e.vertices, vec![0, 1]);
        let q = amplify(&hypercube(4, 1).unwrap(), 14).unwrap();
        let e = expander_extract(&q, 56, 2.0).unwrap();
        let c = check_extraction(&q, &e.vertices).unwrap();
        assert!(c.connectivity >= 2 && c.density >= 0.25 && c.expansion >= 1.0 / 56f64.powi(2));
        assert!(!c.heuristic);
        assert!(matches!(
            expander_extract(&hypercube(4, 1).unwrap(), 4, 2.0),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn general_construction() {
        let h = general_lch(&dumbbell(7), 7, 2.0).unwrap();
        assert_eq!(h.node_count(), 3);
        let q = amplify(&hypercube(4, 1).unwrap(), 14).unwrap();
        let h = general_lch(&q, 56, 2.0).unwrap();
        let r = validate_lch(&q, &h, (56 / 20) as f64, 0.25, &h.non_root_nodes()).unwrap();
        assert!(r.is_valid(), "{:?}", r.violations);
        let c6 = amplify(&cycle(6), 14).unwrap();
        let h = general_lch(&c6, 28, 2.0).unwrap();
        for t in h.internal_nodes() {
            let ig = h.internal_graph(&c6, t).unwrap();
            assert!(ig.graph.is_connected());
        }
        let r = validate_lch(&c6, &h, 1.0, 0.25, &h.non_root_nodes()).unwrap();
        assert!(r.is_valid(), "{:?}", r.violations);
    }
}
