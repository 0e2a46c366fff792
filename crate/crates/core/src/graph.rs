//! Unweighted multigraphs with fixed edge orientations, cut machinery and
//! edge connectivity.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::EXHAUSTIVE_MAX_N;

/// Undirected multigraph. Edge `i` is stored as the ordered pair `(u, v)`,
/// which fixes its incidence vector `1_u - 1_v`. Parallel edges are repeated
/// entries and edge ids never change after construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MultiGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// A cut `(S, V - S)` with `S` canonicalized so that vertex 0 is not in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Cut {
    pub side: Vec<usize>,
    pub value: usize,
}

/// Partition of the vertex set into parts whose induced graphs are all
/// `k`-edge-connected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Decomposition {
    pub parts: Vec<Vec<usize>>,
    pub k: usize,
    pub cross_edges: usize,
    /// Whether `sum_i boundary(S_i) <= 2(k-1)(l-1)` held.
    pub bound_holds: bool,
}

/// Result of contracting or inducing: the new graph plus maps back to the
/// original ids.
#[derive(Clone, Debug)]
pub struct Derived {
    pub graph: MultiGraph,
    /// For contraction: old vertex -> new vertex. For induced subgraphs:
    /// new vertex -> old vertex.
    pub vertex_map: Vec<usize>,
    /// New edge id -> old edge id.
    pub edge_map: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Expansion {
    pub phi_side: f64,
    pub phi_complement: f64,
    pub phi_pair: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphExpansion {
    pub phi: f64,
    pub witness: Cut,
    pub heuristic: bool,
}

impl MultiGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} = ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("edge {i} is a self-loop at {u}")));
            }
        }
        Ok(MultiGraph { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    /// Dense matrix of edge multiplicities between vertex pairs.
    pub fn multiplicity(&self) -> Vec<Vec<usize>> {
        let mut a = vec![vec![0; self.n]; self.n];
        for &(u, v) in &self.edges {
            a[u][v] += 1;
            a[v][u] += 1;
        }
        a
    }

    /// Distinct neighbours of every vertex, sorted.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        self.laplacian_of(0..self.m())
    }

    /// Laplacian of the sub-multigraph formed by the given edge ids.
    pub fn laplacian_of(&self, ids: impl IntoIterator<Item = usize>) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in ids {
            let (u, v) = self.edges[e];
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
            l[(u, v)] -= 1.0;
            l[(v, u)] -= 1.0;
        }
        l
    }

    /// `sum_e w_e x_e x_e'` with one weight per edge.
    pub fn laplacian_weighted(&self, w: &[f64]) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (&(u, v), &we) in self.edges.iter().zip(w) {
            l[(u, u)] += we;
            l[(v, v)] += we;
            l[(u, v)] -= we;
            l[(v, u)] -= we;
        }
        l
    }

    /// Signed incidence vector of edge `e`.
    pub fn incidence(&self, e: usize) -> nalgebra::DVector<f64> {
        let (u, v) = self.edges[e];
        let mut x = nalgebra::DVector::zeros(self.n);
        x[u] = 1.0;
        x[v] = -1.0;
        x
    }

    /// Component label of each vertex, labels in order of first vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let adj = self.neighbours();
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if label[y] == usize::MAX {
                        label[y] = count;
                        queue.push_back(y);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().0 == 1
    }

    /// Graph with the given edge ids only (same vertex set, ids renumbered in
    /// the given order).
    pub fn edge_subgraph(&self, ids: &[usize]) -> MultiGraph {
        MultiGraph { n: self.n, edges: ids.iter().map(|&e| self.edges[e]).collect() }
    }

    /// Merges vertices by `label` (values in `0..count`), dropping edges that
    /// become loops.
    pub fn quotient(&self, label: &[usize], count: usize) -> Derived {
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            let (a, b) = (label[u], label[v]);
            if a != b {
                edges.push((a, b));
                edge_map.push(i);
            }
        }
        Derived { graph: MultiGraph { n: count, edges }, vertex_map: label.to_vec(), edge_map }
    }
}

/// Validates a vertex subset and returns its membership mask.
pub(crate) fn membership(n: usize, s: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &v in s {
        if v >= n {
            return Err(Error::InvalidArgument(format!("vertex {v} outside 0..{n}")));
        }
        mask[v] = true;
    }
    Ok(mask)
}

fn canonical_side(mask: &[bool]) -> Vec<usize> {
    let flip = mask.first().copied().unwrap_or(false);
    (0..mask.len()).filter(|&v| mask[v] != flip).collect()
}

fn proper_mask(n: usize, s: &[usize]) -> Result<Vec<bool>> {
    let mask = membership(n, s)?;
    let size = mask.iter().filter(|&&b| b).count();
    if size == 0 || size == n {
        return Err(Error::EmptySide);
    }
    Ok(mask)
}

fn crossing(g: &MultiGraph, mask: &[bool]) -> usize {
    g.edges.iter().filter(|&&(u, v)| mask[u] != mask[v]).count()
}

impl Cut {
    pub(crate) fn from_mask(g: &MultiGraph, mask: &[bool]) -> Cut {
        Cut { side: canonical_side(mask), value: crossing(g, mask) }
    }

    pub(crate) fn from_bits(g: &MultiGraph, bits: u64) -> Cut {
        let mask: Vec<bool> = (0..g.n).map(|v| bits >> v & 1 == 1).collect();
        Cut::from_mask(g, &mask)
    }

    /// Recomputes the cut value from the graph.
    pub fn recompute(&self, g: &MultiGraph) -> usize {
        let mask = membership(g.n, &self.side).expect("cut side within range");
        crossing(g, &mask)
    }
}

pub fn cut_value(g: &MultiGraph, s: &[usize]) -> Result<Cut> {
    let mask = proper_mask(g.n, s)?;
    Ok(Cut::from_mask(g, &mask))
}

/// Edge ids crossing `(S, V - S)`.
pub fn cut_edges(g: &MultiGraph, s: &[usize]) -> Result<Vec<usize>> {
    let mask = membership(g.n, s)?;
    Ok((0..g.m()).filter(|&e| mask[g.edges[e].0] != mask[g.edges[e].1]).collect())
}

/// Sorted lists compared lexicographically, both given as bitmasks.
pub(crate) fn lex_less(a: u64, b: u64) -> bool {
    let d = a ^ b;
    if d == 0 {
        return false;
    }
    let v = d.trailing_zeros();
    if a >> v & 1 == 1 {
        // b lacks v: a is smaller unless b has nothing beyond v
        b >> v != 0
    } else {
        a >> v == 0
    }
}

fn lex_less_vec(a: &[usize], b: &[usize]) -> bool {
    a < b
}

/// Enumerates every canonical cut (vertex 0 outside S) in Gray-code order,
/// maintaining quadratic forms `1_S' M 1_S` and linear forms `w' 1_S`
/// incrementally.
pub(crate) fn gray_scan(
    n: usize,
    mats: &[&DMatrix<f64>],
    lins: &[&[f64]],
    mut visit: impl FnMut(u64, &[f64], &[f64]),
) {
    if n < 2 {
        return;
    }
    assert!(n <= 63);
    let mut ys: Vec<Vec<f64>> = vec![vec![0.0; n]; mats.len()];
    let mut qs = vec![0.0; mats.len()];
    let mut ls = vec![0.0; lins.len()];
    let mut bits: u64 = 0;
    let total: u64 = 1 << (n - 1);
    for i in 1..total {
        let v = i.trailing_zeros() as usize + 1;
        let adding = bits >> v & 1 == 0;
        bits ^= 1 << v;
        for (k, m) in mats.iter().enumerate() {
            let y = &mut ys[k];
            let mvv = m[(v, v)];
            if adding {
                qs[k] += 2.0 * y[v] + mvv;
                for j in 0..n {
                    y[j] += m[(j, v)];
                }
            } else {
                qs[k] -= 2.0 * y[v] - mvv;
                for j in 0..n {
                    y[j] -= m[(j, v)];
                }
            }
        }
        for (k, w) in lins.iter().enumerate() {
            if adding {
                ls[k] += w[v];
            } else {
                ls[k] -= w[v];
            }
        }
        visit(bits, &qs, &ls);
    }
}

fn check_exhaustive(n: usize) -> Result<()> {
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLarge { what: "n", got: n, limit: EXHAUSTIVE_MAX_N });
    }
    Ok(())
}

/// Dinic max-flow on a dense capacity matrix.
pub(crate) struct FlowNet {
    n: usize,
    cap: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    pub(crate) fn from_graph(g: &MultiGraph) -> FlowNet {
        let n = g.n;
        let mut cap = vec![0i64; n * n];
        for &(u, v) in &g.edges {
            cap[u * n + v] += 1;
            cap[v * n + u] += 1;
        }
        FlowNet { n, cap, adj: g.neighbours() }
    }

    /// Returns the flow value and the set reachable from `s` in the final
    /// residual graph.
    pub(crate) fn max_flow(&self, s: usize, t: usize) -> (i64, Vec<bool>) {
        let n = self.n;
        let mut res = self.cap.clone();
        let mut flow = 0;
        let mut level = vec![-1i32; n];
        loop {
            level.iter_mut().for_each(|l| *l = -1);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &self.adj[x] {
                    if level[y] < 0 && res[x * n + y] > 0 {
                        level[y] = level[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            if level[t] < 0 {
                let reach = level.iter().map(|&l| l >= 0).collect();
                return (flow, reach);
            }
            let mut it = vec![0usize; n];
            loop {
                let f = self.augment(s, t, i64::MAX, &mut res, &level, &mut it);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    fn augment(
        &self,
        x: usize,
        t: usize,
        limit: i64,
        res: &mut [i64],
        level: &[i32],
        it: &mut [usize],
    ) -> i64 {
        if x == t {
            return limit;
        }
        let n = self.n;
        while it[x] < self.adj[x].len() {
            let y = self.adj[x][it[x]];
            if level[y] == level[x] + 1 && res[x * n + y] > 0 {
                let f = self.augment(y, t, limit.min(res[x * n + y]), res, level, it);
                if f > 0 {
                    res[x * n + y] -= f;
                    res[y * n + x] += f;
                    return f;
                }
            }
            it[x] += 1;
        }
        0
    }
}

/// Number of edge-disjoint paths between `a` and `b`, with the minimal
/// source side of a minimum `(a, b)` cut.
pub fn local_edge_connectivity(g: &MultiGraph, a: usize, b: usize) -> Result<(usize, Vec<usize>)> {
    if a >= g.n || b >= g.n || a == b {
        return Err(Error::InvalidArgument(format!("bad vertex pair ({a}, {b})")));
    }
    let (f, reach) = FlowNet::from_graph(g).max_flow(a, b);
    Ok((f as usize, (0..g.n).filter(|&v| reach[v]).collect()))
}

/// Global minimum cut by max-flow from vertex 0 to every other vertex. Returns
/// `usize::MAX` and no witness for graphs with fewer than two vertices.
pub fn min_edge_connectivity(g: &MultiGraph) -> (usize, Option<Cut>) {
    if g.n < 2 {
        return (usize::MAX, None);
    }
    let net = FlowNet::from_graph(g);
    let mut best: Option<(usize, Vec<bool>)> = None;
    for t in 1..g.n {
        let (f, reach) = net.max_flow(0, t);
        let f = f as usize;
        let side: Vec<bool> = reach.iter().map(|r| !r).collect();
        let better = match &best {
            None => true,
            Some((bv, bs)) => {
                f < *bv || (f == *bv && lex_less_vec(&canonical_side(&side), &canonical_side(bs)))
            }
        };
        if better {
            best = Some((f, side));
        }
    }
    let (value, side) = best.expect("n >= 2");
    (value, Some(Cut { side: canonical_side(&side), value }))
}

/// Exhaustive minimum cut over all `2^(n-1) - 1` canonical cuts.
pub fn min_cut_exhaustive(g: &MultiGraph) -> Result<(usize, Cut)> {
    check_exhaustive(g.n)?;
    if g.n < 2 {
        return Err(Error::EmptySide);
    }
    let l = g.laplacian();
    let mut best: Option<(f64, u64)> = None;
    gray_scan(g.n, &[&l], &[], |bits, q, _| {
        let better = match best {
            None => true,
            Some((bv, bb)) => q[0] < bv - 0.5 || (q[0] < bv + 0.5 && lex_less(bits, bb)),
        };
        if better {
            best = Some((q[0], bits));
        }
    });
    let (_, bits) = best.expect("at least one cut");
    let cut = Cut::from_bits(g, bits);
    Ok((cut.value, cut))
}

/// Merges `S` into a single vertex. The merged vertex takes the slot of the
/// smallest member of `S`; all other vertices keep their relative order.
pub fn contract(g: &MultiGraph, s: &[usize]) -> Result<Derived> {
    let mask = membership(g.n, s)?;
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptySide);
    }
    let mut label = vec![0; g.n];
    let mut merged = None;
    let mut next = 0;
    for v in 0..g.n {
        if mask[v] {
            label[v] = *merged.get_or_insert_with(|| {
                next += 1;
                next - 1
            });
        } else {
            label[v] = next;
            next += 1;
        }
    }
    Ok(g.quotient(&label, next))
}

/// Induced subgraph on `S` (vertices renumbered in increasing order).
pub fn induced_subgraph(g: &MultiGraph, s: &[usize]) -> Result<Derived> {
    let mask = membership(g.n, s)?;
    let vertices: Vec<usize> = (0..g.n).filter(|&v| mask[v]).collect();
    if vertices.is_empty() {
        return Err(Error::EmptySide);
    }
    let mut pos = vec![usize::MAX; g.n];
    for (i, &v) in vertices.iter().enumerate() {
        pos[v] = i;
    }
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        if mask[u] && mask[v] {
            edges.push((pos[u], pos[v]));
            edge_map.push(i);
        }
    }
    Ok(Derived {
        graph: MultiGraph { n: vertices.len(), edges },
        vertex_map: vertices,
        edge_map,
    })
}

/// Sum of degrees over the vertices of `S`.
pub fn volume(g: &MultiGraph, s: &[usize]) -> usize {
    let d = g.degrees();
    s.iter().map(|&v| d[v]).sum()
}

pub fn expansion(g: &MultiGraph, s: &[usize]) -> Result<Expansion> {
    let mask = proper_mask(g.n, s)?;
    let boundary = crossing(g, &mask) as f64;
    let deg = g.degrees();
    let (mut ds, mut dc) = (0usize, 0usize);
    for v in 0..g.n {
        if mask[v] {
            ds += deg[v];
        } else {
            dc += deg[v];
        }
    }
    if ds == 0 || dc == 0 {
        return Err(Error::DegenerateDegree);
    }
    let a = boundary / ds as f64;
    let b = boundary / dc as f64;
    Ok(Expansion { phi_side: a, phi_complement: b, phi_pair: a.max(b) })
}

/// Expansion of the graph: exact for `n <= 20`, otherwise the spectral sweep
/// upper bound flagged as heuristic.
pub fn graph_expansion(g: &MultiGraph) -> Result<GraphExpansion> {
    if g.n < 2 {
        return Err(Error::EmptySide);
    }
    if g.n > EXHAUSTIVE_MAX_N {
        if !g.is_connected() {
            let (_, label) = g.components();
            let side: Vec<usize> = (0..g.n).filter(|&v| label[v] != label[0]).collect();
            let cut = cut_value(g, &side)?;
            return Ok(GraphExpansion { phi: 0.0, witness: cut, heuristic: true });
        }
        let cut = crate::spectral::spectral_partition(g)?;
        let phi = expansion(g, &cut.side)?.phi_pair;
        return Ok(GraphExpansion { phi, witness: cut, heuristic: true });
    }
    let l = g.laplacian();
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    let total: f64 = deg.iter().sum();
    let mut best: Option<(f64, u64)> = None;
    gray_scan(g.n, &[&l], &[&deg], |bits, q, lin| {
        let (ds, dc) = (lin[0], total - lin[0]);
        if ds <= 0.0 || dc <= 0.0 {
            return;
        }
        let phi = (q[0] / ds).max(q[0] / dc);
        let better = match best {
            None => true,
            Some((bp, bb)) => phi < bp - 1e-12 || (phi <= bp + 1e-12 && lex_less(bits, bb)),
        };
        if better {
            best = Some((phi, bits));
        }
    });
    let (_, bits) = best.ok_or(Error::DegenerateDegree)?;
    let witness = Cut::from_bits(g, bits);
    let phi = expansion(g, &witness.side)?.phi_pair;
    Ok(GraphExpansion { phi, witness, heuristic: false })
}

/// Recursively splits parts along cuts of size less than `k` until every
/// induced part is `k`-edge-connected.
pub fn natural_decomposition(g: &MultiGraph, k: usize) -> Decomposition {
    let mut done: Vec<Vec<usize>> = Vec::new();
    let mut work: Vec<Vec<usize>> = if g.n == 0 { vec![] } else { vec![(0..g.n).collect()] };
    while let Some(part) = work.pop() {
        if part.len() == 1 {
            done.push(part);
            continue;
        }
        let sub = induced_subgraph(g, &part).expect("nonempty part");
        let (value, witness) = min_edge_connectivity(&sub.graph);
        match witness {
            Some(cut) if value < k => {
                let mask = membership(part.len(), &cut.side).expect("in range");
                let (a, b): (Vec<usize>, Vec<usize>) =
                    (0..part.len()).partition(|&i| mask[i]);
                work.push(a.iter().map(|&i| sub.vertex_map[i]).collect());
                work.push(b.iter().map(|&i| sub.vertex_map[i]).collect());
            }
            _ => done.push(part),
        }
    }
    done.sort();
    let mut label = vec![0; g.n];
    for (i, p) in done.iter().enumerate() {
        for &v in p {
            label[v] = i;
        }
    }
    let cross_edges = g.edges.iter().filter(|&&(u, v)| label[u] != label[v]).count();
    let l = done.len();
    let bound = 2 * k.saturating_sub(1) * l.saturating_sub(1);
    Decomposition { parts: done, k, cross_edges, bound_holds: 2 * cross_edges <= bound }
}

/// Largest fraction of any cut's edges that lie in `T`, by exhaustive scan.
pub fn combinatorial_thinness(g: &MultiGraph, t: &[usize]) -> Result<(f64, Cut)> {
    check_exhaustive(g.n)?;
    if t.is_empty() {
        return Err(Error::InvalidArgument("edge subset T is empty".into()));
    }
    if let Some(&e) = t.iter().find(|&&e| e >= g.m()) {
        return Err(Error::InvalidArgument(format!("edge {e} outside 0..{}", g.m())));
    }
    let l = g.laplacian();
    let lt = g.laplacian_of(t.iter().copied());
    let mut best: Option<(f64, u64)> = None;
    gray_scan(g.n, &[&l, &lt], &[], |bits, q, _| {
        if q[0] < 0.5 {
            return;
        }
        let r = q[1] / q[0];
        let better = match best {
            None => true,
            Some((br, bb)) => r > br + 1e-12 || (r >= br - 1e-12 && lex_less(bits, bb)),
        };
        if better {
            best = Some((r, bits));
        }
    });
    let (r, bits) = best.ok_or(Error::Disconnected)?;
    Ok((r, Cut::from_bits(g, bits)))
}
