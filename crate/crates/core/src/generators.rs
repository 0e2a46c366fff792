//! Deterministic constructors for the example graph families.
//!
//! Vertex numbering: hypercube vertices are binary codes; ladder vertices are
//! the first rail `0..n` followed by the second rail `n..2n`; dyadic vertices
//! are the integers `0..=2^h`; cycle-expander vertex `b*m + i` is position `i`
//! on the cycle replacing base vertex `b`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiGraph;

/// Resampling attempts for the configuration model.
pub const MAX_ATTEMPTS: u64 = 1000;

pub fn hypercube(d: usize, mult: usize) -> Result<MultiGraph> {
    if d == 0 || mult == 0 {
        return Err(Error::InvalidArgument("hypercube needs d >= 1 and mult >= 1".into()));
    }
    if d > 12 {
        return Err(Error::TooLarge { what: "d", got: d, limit: 12 });
    }
    let n = 1usize << d;
    let mut edges = Vec::with_capacity(d * n / 2 * mult);
    for v in 0..n {
        for b in 0..d {
            if v >> b & 1 == 0 {
                for _ in 0..mult {
                    edges.push((v, v | 1 << b));
                }
            }
        }
    }
    MultiGraph::new(n, edges)
}

/// Ladder graph with its marked edge subsets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ladder {
    pub graph: MultiGraph,
    /// Extra parallel edges between consecutive rungs on each rail.
    pub shortcuts: Vec<usize>,
    pub verticals: Vec<usize>,
}

/// Two rails of `n` vertices with `k` parallel edges between neighbours and
/// rungs at 1-based positions `1, n/k, 2n/k, ..., n`.
pub fn ladder(n: usize, k: usize, with_shortcuts: bool) -> Result<Ladder> {
    if k == 0 || n == 0 || n % k != 0 {
        return Err(Error::Indivisible { n, k });
    }
    let mut edges = Vec::new();
    for rail in 0..2 {
        for i in 0..n - 1 {
            for _ in 0..k {
                edges.push((rail * n + i, rail * n + i + 1));
            }
        }
    }
    let step = n / k;
    let mut positions: Vec<usize> = vec![0];
    positions.extend((1..=k).map(|j| j * step - 1));
    positions.dedup();
    let mut verticals = Vec::new();
    for &p in &positions {
        verticals.push(edges.len());
        edges.push((p, n + p));
    }
    let mut shortcuts = Vec::new();
    if with_shortcuts {
        for rail in 0..2 {
            for w in positions.windows(2) {
                for _ in 0..k {
                    shortcuts.push(edges.len());
                    edges.push((rail * n + w[0], rail * n + w[1]));
                }
            }
        }
    }
    Ok(Ladder { graph: MultiGraph::new(2 * n, edges)?, shortcuts, verticals })
}

/// Path `0..=2^h` with `k` parallel unit edges plus one long edge
/// `{j 2^i, (j+1) 2^i}` per level `1 <= i <= h`. Unit edges come first, then
/// long edges level by level.
pub fn dyadic(h: usize, k: usize) -> Result<MultiGraph> {
    if h == 0 || k == 0 {
        return Err(Error::InvalidArgument("dyadic needs h >= 1 and k >= 1".into()));
    }
    if h > 14 {
        return Err(Error::TooLarge { what: "h", got: h, limit: 14 });
    }
    let len = 1usize << h;
    let mut edges = Vec::new();
    for i in 0..len {
        for _ in 0..k {
            edges.push((i, i + 1));
        }
    }
    for level in 1..=h {
        let span = 1usize << level;
        for j in 0..len / span {
            edges.push((j * span, (j + 1) * span));
        }
    }
    MultiGraph::new(len + 1, edges)
}

/// Edge id of the long edge `{j 2^level, (j+1) 2^level}` in `dyadic(h, k)`.
/// Level 0 maps to the first parallel copy of the unit edge.
pub fn dyadic_edge_id(h: usize, k: usize, level: usize, j: usize) -> usize {
    let len = 1usize << h;
    if level == 0 {
        return j * k;
    }
    let mut id = len * k;
    for l in 1..level {
        id += len >> l;
    }
    id + j
}

fn configuration_base(m: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let mut points: Vec<usize> = (0..m).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    points.shuffle(rng);
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for pair in points.chunks(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a == b || !seen.insert((a, b)) {
            return None;
        }
        edges.push((a, b));
    }
    let g = MultiGraph::new(m, edges.clone()).ok()?;
    g.is_connected().then_some(edges)
}

/// Seeded simple connected `k`-regular graph on `m` vertices.
pub fn random_regular(m: usize, k: usize, seed: u64) -> Result<MultiGraph> {
    if k == 0 || k >= m || (m * k) % 2 == 1 {
        return Err(Error::InfeasibleDegree { m, k });
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        if let Some(edges) = configuration_base(m, k, &mut rng) {
            return MultiGraph::new(m, edges);
        }
    }
    Err(Error::InfeasibleDegree { m, k })
}

/// Replaces each vertex of a seeded `k`-regular base graph with an `m`-cycle
/// whose edges are repeated `k` times. Base edges attach at equally spaced
/// cycle positions, in base-edge order.
pub fn cycle_expander(m: usize, k: usize, seed: u64) -> Result<MultiGraph> {
    if m < 3 {
        return Err(Error::InfeasibleDegree { m, k });
    }
    let base = random_regular(m, k, seed)?;
    let mut edges = Vec::new();
    for b in 0..m {
        for i in 0..m {
            for _ in 0..k {
                edges.push((b * m + i, b * m + (i + 1) % m));
            }
        }
    }
    let mut used = vec![0usize; m];
    let mut port = |b: usize| {
        let j = used[b];
        used[b] += 1;
        b * m + j * m / k
    };
    for &(a, b) in base.edges() {
        let pa = port(a);
        let pb = port(b);
        edges.push((pa, pb));
    }
    MultiGraph::new(m * m, edges)
}

/// Replicates every edge `c` times; copies of edge `e` get ids `e*c..(e+1)*c`.
pub fn amplify(g: &MultiGraph, c: usize) -> Result<MultiGraph> {
    if c == 0 {
        return Err(Error::InvalidArgument("amplification factor must be >= 1".into()));
    }
    let edges = g.edges().iter().flat_map(|&e| std::iter::repeat_n(e, c)).collect();
    MultiGraph::new(g.n(), edges)
}

/// Seeded connected multigraph: a random recursive tree plus `extra` random
/// edges (parallel edges allowed).
pub fn random_connected(n: usize, extra: usize, seed: u64) -> MultiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n + extra);
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    if n >= 2 {
        for _ in 0..extra {
            let u = rng.random_range(0..n);
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            edges.push((u, v));
        }
    }
    MultiGraph::new(n, edges).expect("valid by construction")
}

/// Edge ids of a uniformly shuffled spanning forest found by randomized
/// Kruskal.
pub fn random_spanning_tree(g: &MultiGraph, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..g.m()).collect();
    ids.shuffle(&mut rng);
    let mut parent: Vec<usize> = (0..g.n()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut tree = Vec::new();
    for e in ids {
        let (u, v) = g.edge(e);
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            tree.push(e);
        }
    }
    tree.sort_unstable();
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::min_edge_connectivity;
    use crate::spectral::{cut_dominance, effective_resistance};

    #[test]
    fn hypercube_counts() {
        let q3 = hypercube(3, 1).unwrap();
        assert_eq!((q3.n(), q3.m()), (8, 12));
        assert_eq!(min_edge_connectivity(&q3).0, 3);
        let q4 = hypercube(4, 14).unwrap();
        assert_eq!((q4.n(), q4.m()), (16, 448));
        assert_eq!(min_edge_connectivity(&q4).0, 56);
        assert!(hypercube(0, 1).is_err());
        assert!(matches!(hypercube(13, 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn ladder_counts() {
        let l = ladder(8, 4, false).unwrap();
        assert_eq!((l.graph.n(), l.graph.m()), (16, 61));
        assert_eq!(l.verticals.len(), 5);
        assert!(min_edge_connectivity(&l.graph).0 >= 4);
        let s = ladder(8, 4, true).unwrap();
        assert_eq!(s.graph.m(), 93);
        assert_eq!(s.shortcuts.len(), 32);
        assert!(matches!(ladder(9, 4, false), Err(Error::Indivisible { .. })));
    }

    #[test]
    fn ladder_shortcuts_dominated() {
        for (n, k) in [(4, 2), (6, 3), (8, 4), (10, 5), (8, 2)] {
            let s = ladder(n, k, true).unwrap();
            let ld = s.graph.laplacian_of(s.shortcuts.iter().copied());
            let plain = ladder(n, k, false).unwrap().graph.laplacian();
            assert!(cut_dominance(&ld, &plain).unwrap().holds, "n={n} k={k}");
        }
    }

    #[test]
    fn dyadic_counts() {
        let d = dyadic(3, 4).unwrap();
        assert_eq!((d.n(), d.m()), (9, 39));
        let d1 = dyadic(1, 1).unwrap();
        assert_eq!((d1.n(), d1.m()), (3, 3));
        assert!(min_edge_connectivity(&d).0 >= 4);
        assert_eq!(crate::graph::min_cut_exhaustive(&d).unwrap().0, 7);
        assert!(matches!(dyadic(15, 1), Err(Error::TooLarge { .. })));
        assert_eq!(d.edge(dyadic_edge_id(3, 4, 2, 1)), (4, 8));
        assert_eq!(d.edge(dyadic_edge_id(3, 4, 3, 0)), (0, 8));
        assert_eq!(d.edge(dyadic_edge_id(3, 4, 0, 5)), (5, 6));
    }

    #[test]
    fn cycle_expander_counts() {
        let g = cycle_expander(4, 3, 0).unwrap();
        assert_eq!((g.n(), g.m()), (16, 54));
        assert!(min_edge_connectivity(&g).0 >= 3);
        assert_eq!(g, cycle_expander(4, 3, 0).unwrap());
        assert!(matches!(cycle_expander(5, 3, 0), Err(Error::InfeasibleDegree { .. })));
        // expander edges approach resistance 1 as the cycles grow
        let mean_expander_reff = |m: usize| {
            let g = cycle_expander(m, 3, 1).unwrap();
            let first = m * m * 3;
            let view = crate::spectral::SpectralView::of_graph(&g);
            let rs: Vec<f64> = (first..g.m())
                .map(|e| view.reff_pair(g.edge(e).0, g.edge(e).1).unwrap())
                .collect();
            rs.iter().sum::<f64>() / rs.len() as f64
        };
        let (a, b, c) = (mean_expander_reff(4), mean_expander_reff(6), mean_expander_reff(8));
        assert!(a < b && b < c && c < 1.0, "{a} {b} {c}");
    }

    #[test]
    fn amplification() {
        let q = hypercube(2, 1).unwrap();
        assert_eq!(amplify(&q, 1).unwrap(), q);
        let a = amplify(&q, 3).unwrap();
        let r0 = effective_resistance(&q, 0).unwrap();
        let r1 = effective_resistance(&a, 0).unwrap();
        assert!((r0 / 3.0 - r1).abs() < 1e-12);
        assert_eq!(min_edge_connectivity(&a).0, 6);
    }

    #[test]
    fn random_tree_spans() {
        let g = random_connected(12, 10, 4);
        let t = random_spanning_tree(&g, 9);
        assert_eq!(t.len(), 11);
        assert!(g.edge_subgraph(&t).is_connected());
    }
}
