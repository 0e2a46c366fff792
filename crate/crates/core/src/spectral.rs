//! Laplacians, pseudoinverses, effective resistance, spectral thinness,
//! spectral partitioning, nuclear norms and cut dominance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{expansion, gray_scan, lex_less, Cut, MultiGraph};
use crate::EXHAUSTIVE_MAX_N;

/// Relative eigenvalue cutoff below which a direction counts as null.
pub const PINV_CUTOFF: f64 = 1e-9;
/// Relative residual allowed when checking range membership.
pub const RANGE_TOL: f64 = 1e-6;
/// Absolute slack allowed by `cut_dominance`.
pub const DOMINANCE_TOL: f64 = 1e-8;

/// Eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = sym_eigen(m);
    vals[vals.len() - 1]
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m).0[0]
}

/// Cached spectral data of a symmetric positive semidefinite matrix.
#[derive(Clone, Debug)]
pub struct SpectralView {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub rank: usize,
}

impl SpectralView {
    pub fn of_matrix(m: &DMatrix<f64>) -> SpectralView {
        let n = m.nrows();
        let (vals, vecs) = sym_eigen(m);
        let top = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let cut = PINV_CUTOFF * top;
        let mut pinv = DMatrix::zeros(n, n);
        let mut rank = 0;
        for i in 0..n {
            if vals[i] > cut && vals[i] > 0.0 {
                rank += 1;
                let v = vecs.column(i);
                pinv += (v * v.transpose()) / vals[i];
            }
        }
        SpectralView { matrix: m.clone(), eigenvalues: vals, eigenvectors: vecs, pinv, rank }
    }

    pub fn of_graph(g: &MultiGraph) -> SpectralView {
        SpectralView::of_matrix(&g.laplacian())
    }

    fn cutoff(&self) -> f64 {
        PINV_CUTOFF * self.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// `x' M^+ x`, rejecting vectors with a component outside the range.
    pub fn quad_pinv(&self, x: &DVector<f64>) -> Result<f64> {
        let cut = self.cutoff();
        let norm = x.norm();
        let mut null_sq = 0.0;
        for i in 0..self.eigenvalues.len() {
            if !(self.eigenvalues[i] > cut && self.eigenvalues[i] > 0.0) {
                null_sq += self.eigenvectors.column(i).dot(x).powi(2);
            }
        }
        let residual = null_sq.sqrt();
        if residual > RANGE_TOL * norm {
            return Err(Error::OutOfRange(residual / norm.max(f64::MIN_POSITIVE)));
        }
        Ok(x.dot(&(&self.pinv * x)))
    }

    pub fn reff_pair(&self, u: usize, v: usize) -> Result<f64> {
        let n = self.matrix.nrows();
        if u >= n || v >= n {
            return Err(Error::InvalidArgument(format!("pair ({u}, {v}) outside 0..{n}")));
        }
        if u == v {
            return Ok(0.0);
        }
        let mut x = DVector::zeros(n);
        x[u] = 1.0;
        x[v] = -1.0;
        self.quad_pinv(&x)
    }
}

/// Effective resistance of edge `e` in the graph.
pub fn effective_resistance(g: &MultiGraph, e: usize) -> Result<f64> {
    let (u, v) = g.edge(e);
    SpectralView::of_graph(g).reff_pair(u, v)
}

/// Effective resistance of every edge, measured against `view`.
pub fn edge_resistances(g: &MultiGraph, view: &SpectralView) -> Result<Vec<f64>> {
    g.edges().iter().map(|&(u, v)| view.reff_pair(u, v)).collect()
}

/// `1_u - 1_v` resistance in a PD or PSD matrix `m`.
pub fn reff_in(m: &DMatrix<f64>, u: usize, v: usize) -> Result<f64> {
    SpectralView::of_matrix(m).reff_pair(u, v)
}

/// Symmetric matrix with a certified smallest eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdMatrix {
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
}

impl PsdMatrix {
    /// Accepts `m` if it is symmetric to 1e-10 relative and its smallest
    /// eigenvalue is at least `floor` (up to 1e-12 relative).
    pub fn new(m: DMatrix<f64>, floor: f64) -> Result<PsdMatrix> {
        if !m.is_square() {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        let scale = m.amax().max(1.0);
        if (&m - m.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("matrix is not symmetric".into()));
        }
        let min_eigenvalue = lambda_min(&m);
        if min_eigenvalue < floor - 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "smallest eigenvalue {min_eigenvalue:.3e} below {floor:.3e}"
            )));
        }
        Ok(PsdMatrix { matrix: m, min_eigenvalue })
    }
}

/// `lambda_max(L^{+/2} L_T L^{+/2})` for an edge subset `T`.
pub fn spectral_thinness(g: &MultiGraph, t: &[usize]) -> Result<f64> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if t.is_empty() {
        return Err(Error::InvalidArgument("edge subset T is empty".into()));
    }
    if let Some(&e) = t.iter().find(|&&e| e >= g.m()) {
        return Err(Error::InvalidArgument(format!("edge {e} outside 0..{}", g.m())));
    }
    let view = SpectralView::of_graph(g);
    let n = g.n();
    let cut = view.cutoff();
    let mut half = DMatrix::zeros(n, n);
    for i in 0..n {
        let lam = view.eigenvalues[i];
        if lam > cut {
            let v = view.eigenvectors.column(i);
            half += (v * v.transpose()) / lam.sqrt();
        }
    }
    let lt = g.laplacian_of(t.iter().copied());
    Ok(lambda_max(&(&half * lt * &half)))
}

/// Fiedler vector of the normalized Laplacian rescaled by `D^{-1/2}`, with
/// its largest-magnitude entry made positive.
pub fn fiedler_embedding(g: &MultiGraph) -> Result<Vec<f64>> {
    if g.n() < 2 {
        return Err(Error::EmptySide);
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    let l = g.laplacian();
    let n = g.n();
    let s = DMatrix::from_fn(n, n, |i, j| l[(i, j)] / (deg[i] * deg[j]).sqrt());
    let (_, vecs) = sym_eigen(&s);
    let mut x: Vec<f64> = (0..n).map(|i| vecs[(i, 1)] / deg[i].sqrt()).collect();
    let mut lead = 0;
    for i in 1..n {
        if x[i].abs() > x[lead].abs() + 1e-12 {
            lead = i;
        }
    }
    if x[lead] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(x)
}

/// Sweep cut over the Fiedler ordering minimizing `max(phi(S), phi(V-S))`.
pub fn spectral_partition(g: &MultiGraph) -> Result<Cut> {
    let x = fiedler_embedding(g)?;
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let deg = g.degrees();
    let total: usize = deg.iter().sum();
    let mut inside = vec![false; n];
    let adj = g.multiplicity();
    let (mut boundary, mut vol) = (0i64, 0usize);
    let mut best: Option<(f64, usize)> = None;
    for (p, &v) in order.iter().enumerate().take(n - 1) {
        let to_inside: usize = (0..n).filter(|&w| inside[w]).map(|w| adj[v][w]).sum();
        boundary += deg[v] as i64 - 2 * to_inside as i64;
        vol += deg[v];
        inside[v] = true;
        let b = boundary as f64;
        let phi = (b / vol as f64).max(b / (total - vol) as f64);
        if best.is_none_or(|(bp, _)| phi < bp - 1e-12) {
            best = Some((phi, p + 1));
        }
    }
    let (_, size) = best.expect("n >= 2");
    let side: Vec<usize> = order[..size].to_vec();
    crate::graph::cut_value(g, &side)
}

/// Expansion pair of a cut, a small convenience used by extraction.
pub fn cut_phi(g: &MultiGraph, side: &[usize]) -> Result<f64> {
    Ok(expansion(g, side)?.phi_pair)
}

/// Nuclear norm and a semiorthogonal maximizer `U` with `trace(U A)` equal to
/// the norm. Inputs with fewer rows than columns are padded with zero rows,
/// so `U` has shape `cols x max(rows, cols)`.
pub fn nuclear_norm(a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let (r, c) = a.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let value = svd.singular_values.sum();
    (value, vt.transpose() * u.transpose())
}

pub fn singular_values_desc(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Outcome of an exhaustive cut-dominance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub holds: bool,
    /// Most violated side when the check fails.
    pub witness: Option<Vec<usize>>,
    /// Smallest `1_S'B1_S - 1_S'A1_S` over all cuts.
    pub margin: f64,
    pub margin_side: Vec<usize>,
}

/// Checks `1_S' A 1_S <= 1_S' B 1_S + tol` for every cut, exhaustively.
pub fn cut_dominance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Dominance> {
    let n = a.nrows();
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLarge { what: "n", got: n, limit: EXHAUSTIVE_MAX_N });
    }
    if b.shape() != a.shape() || !a.is_square() {
        return Err(Error::InvalidArgument("matrix shapes differ".into()));
    }
    let diff = b - a;
    // A need not be a Laplacian, so both S and its complement are checked:
    // 1_C' M 1_C = 1'M1 - 2 (M1)' 1_S + 1_S' M 1_S.
    let rows: Vec<f64> = (0..n).map(|i| diff.row(i).sum()).collect();
    let total: f64 = rows.iter().sum();
    let full: u64 = (1u64 << n) - 1;
    let mut worst: Option<(f64, u64)> = None;
    let mut offer = |value: f64, bits: u64| {
        let better = match worst {
            None => true,
            Some((w, wb)) => value < w - 1e-12 || (value <= w + 1e-12 && lex_less(bits, wb)),
        };
        if better {
            worst = Some((value, bits));
        }
    };
    gray_scan(n, &[&diff], &[&rows], |bits, q, l| {
        offer(q[0], bits);
        offer(total - 2.0 * l[0] + q[0], full ^ bits);
    });
    let (margin, bits) = worst.unwrap_or((0.0, 0));
    let side: Vec<usize> = (0..n).filter(|&v| bits >> v & 1 == 1).collect();
    let holds = margin >= -DOMINANCE_TOL;
    Ok(Dominance {
        holds,
        witness: if holds { None } else { Some(side.clone()) },
        margin,
        margin_side: side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::hypercube;
    use crate::graph::combinatorial_thinness;
    use crate::graph::tests::{cycle, dumbbell, two_triangles};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn resistances() {
        assert!((effective_resistance(&dumbbell(5), 0).unwrap() - 0.2).abs() < 1e-12);
        assert!((effective_resistance(&cycle(4), 1).unwrap() - 0.75).abs() < 1e-12);
        let q3 = hypercube(3, 1).unwrap();
        let view = SpectralView::of_graph(&q3);
        for r in edge_resistances(&q3, &view).unwrap() {
            assert!((r - 7.0 / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range() {
        let split = MultiGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let view = SpectralView::of_graph(&split);
        assert!(matches!(view.reff_pair(0, 2), Err(Error::OutOfRange(_))));
        assert!((view.reff_pair(0, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinv_identity() {
        let l = hypercube(3, 2).unwrap().laplacian();
        let v = SpectralView::of_matrix(&l);
        assert!((&l * &v.pinv * &l - &l).amax() < 1e-8 * l.norm());
        assert_eq!(v.rank, 7);
    }

    #[test]
    fn thinness_basics() {
        let q3 = hypercube(3, 1).unwrap();
        let r = effective_resistance(&q3, 4).unwrap();
        assert!((spectral_thinness(&q3, &[4]).unwrap() - r).abs() < 1e-10);
        let all: Vec<usize> = (0..12).collect();
        assert!((spectral_thinness(&q3, &all).unwrap() - 1.0).abs() < 1e-10);
        let mut edges = Vec::new();
        for i in 0..4 {
            edges.push((i, (i + 1) % 4));
            edges.push((i, (i + 1) % 4));
        }
        let g = MultiGraph::new(4, edges).unwrap();
        let s = spectral_thinness(&g, &[0, 2, 4]).unwrap();
        let c = combinatorial_thinness(&g, &[0, 2, 4]).unwrap().0;
        assert!(c - 1e-12 <= s && s <= 1.0 + 1e-12);
    }

    #[test]
    fn partitions() {
        let t = spectral_partition(&two_triangles()).unwrap();
        assert_eq!(t.side, vec![3, 4, 5]);
        let k4 = MultiGraph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let c = spectral_partition(&k4).unwrap();
        let phi = cut_phi(&k4, &c.side).unwrap();
        let opt = crate::graph::graph_expansion(&k4).unwrap().phi;
        assert!(opt <= phi + 1e-12 && phi <= 1.0 + 1e-12);
        let c8 = cycle(8);
        let c = spectral_partition(&c8).unwrap();
        assert_eq!(c.value, 2);
        let opt = crate::graph::graph_expansion(&c8).unwrap().phi;
        let phi = cut_phi(&c8, &c.side).unwrap();
        // Cheeger: phi(sweep) <= sqrt(2 * lambda_2) and lambda_2 <= 2 opt
        assert!(phi <= (4.0 * opt).sqrt() + 1e-12);
        let disc = MultiGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(matches!(spectral_partition(&disc), Err(Error::Disconnected)));
    }

    #[test]
    fn nuclear() {
        let (v, u) = nuclear_norm(&DMatrix::identity(3, 3));
        assert!((v - 3.0).abs() < 1e-12);
        assert!((u - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        let (v, _) = nuclear_norm(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0])));
        assert!((v - 7.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
        let (v, u) = nuclear_norm(&a);
        assert!(((&u * &a).trace() - v).abs() < 1e-8);
        assert!((&u * u.transpose() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
        for _ in 0..100 {
            let g = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            let q = g.qr().q();
            let w = q.rows(0, 4).into_owned();
            assert!((&w * &a).trace() <= v + 1e-8);
        }
        let wide = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let (v, u) = nuclear_norm(&wide);
        assert!((v - 5.0).abs() < 1e-12);
        assert_eq!(u.shape(), (2, 2));
    }

    #[test]
    fn dominance() {
        let l = hypercube(3, 1).unwrap().laplacian();
        let d = cut_dominance(&l, &l).unwrap();
        assert!(d.holds && d.margin.abs() < 1e-12);
        let d = cut_dominance(&(&l * 2.0), &l).unwrap();
        assert!(!d.holds && d.witness.is_some());
        assert!(cut_dominance(&DMatrix::zeros(21, 21), &DMatrix::zeros(21, 21)).is_err());
    }
}
