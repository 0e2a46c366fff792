//! Dual ratios: lower bounds on the three programs built from a cut metric
//! `X` (rows are 0/1 vertex labelings) and a semiorthogonal `U` with one row
//! per designated edge.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{cut_edges, MultiGraph};
use crate::lch::Hierarchy;
use crate::spectral::nuclear_norm;

/// Tolerance on `U U' = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
/// Tolerance on a distribution summing to one.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DualWitness {
    /// `dim x n`, entries in {0, 1}.
    pub x: DMatrix<f64>,
    /// Optional nonnegative weight per row of `x`.
    pub row_weights: Option<Vec<f64>>,
    /// `(edge id, row of length dim)`; edges without a row contribute zero.
    pub u: Vec<(usize, DVector<f64>)>,
    pub lambda_nodes: Vec<(usize, f64)>,
    pub lambda_cuts: Vec<(Vec<usize>, f64)>,
}

impl DualWitness {
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Checks shapes, binary entries, weights and orthonormal rows of `U`.
    pub fn validate(&self, g: &MultiGraph) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.x.ncols() != g.n() {
            return bad(format!("X has {} columns, graph has {} vertices", self.x.ncols(), g.n()));
        }
        if self.x.iter().any(|&v| v != 0.0 && v != 1.0) {
            return bad("X entries must be 0 or 1".into());
        }
        if let Some(w) = &self.row_weights {
            if w.len() != self.dim() || w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return bad("row weights must be nonnegative, one per row".into());
            }
        }
        let mut seen = vec![false; g.m()];
        for (e, row) in &self.u {
            if *e >= g.m() {
                return bad(format!("U names edge {e}, graph has {} edges", g.m()));
            }
            if std::mem::replace(&mut seen[*e], true) {
                return bad(format!("U names edge {e} twice"));
            }
            if row.len() != self.dim() {
                return bad(format!("U row for edge {e} has length {}", row.len()));
            }
        }
        let gram_err = self.orthonormality_error();
        if gram_err > ORTHONORMAL_TOL {
            return bad(format!("U rows are not orthonormal (error {gram_err:.3e})"));
        }
        Ok(())
    }

    /// Largest entry of `|U U' - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in self.u.iter().enumerate() {
            for (j, (_, b)) in self.u.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }

    /// Embedded edge vectors, one column per edge: `sqrt(w) * (X_u - X_v)`.
    pub fn edge_vectors(&self, g: &MultiGraph) -> DMatrix<f64> {
        let scale: Vec<f64> = match &self.row_weights {
            Some(w) => w.iter().map(|v| v.sqrt()).collect(),
            None => vec![1.0; self.dim()],
        };
        DMatrix::from_fn(self.dim(), g.m(), |r, e| {
            let (u, v) = g.edge(e);
            scale[r] * (self.x[(r, u)] - self.x[(r, v)])
        })
    }

    /// `<U^e, X_e>` per edge.
    pub fn alignments(&self, g: &MultiGraph) -> Vec<f64> {
        let cols = self.edge_vectors(g);
        let mut out = vec![0.0; g.m()];
        for (e, row) in &self.u {
            out[*e] = row.dot(&cols.column(*e));
        }
        out
    }

    /// `sum_e |X_e|^2`, equal to `Z . L` for `Z = X'X`.
    pub fn denominator(&self, g: &MultiGraph) -> f64 {
        self.edge_vectors(g).norm_squared()
    }
}

fn checked_denominator(w: &DualWitness, g: &MultiGraph) -> Result<f64> {
    w.validate(g)?;
    let den = w.denominator(g);
    if den <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(den)
}

fn check_distribution<'a>(weights: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut sum = 0.0;
    for &w in weights {
        if !(w >= 0.0) {
            return Err(Error::BadDistribution(format!("negative weight {w}")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::BadDistribution(format!("weights sum to {sum}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeDual {
    pub ratio: f64,
    /// `|X W|_*^2 / (Z . L)`, present when node weights are given.
    pub nuclear: Option<f64>,
}

fn outgoing_sets(g: &MultiGraph, h: &Hierarchy, nodes: &[usize]) -> Result<Vec<(usize, Vec<usize>)>> {
    if h.vertex_count() != g.n() {
        return Err(Error::InconsistentLeafMap("hierarchy and graph sizes differ".into()));
    }
    let mut nodes = nodes.to_vec();
    nodes.sort();
    nodes.dedup();
    nodes.into_iter().map(|t| Ok((t, h.outgoing(g, t)?))).collect()
}

/// Per-edge `sqrt(sum_{t: e in O(t)} lambda_t / |O(t)|)`.
fn tree_weights(g: &MultiGraph, sets: &[(usize, Vec<usize>)], w: &DualWitness) -> Result<Vec<f64>> {
    check_distribution(w.lambda_nodes.iter().map(|(_, v)| v))?;
    let mut acc = vec![0.0; g.m()];
    for &(t, lam) in &w.lambda_nodes {
        let (_, out) = sets
            .iter()
            .find(|(s, _)| *s == t)
            .ok_or_else(|| Error::BadDistribution(format!("weight on node {t} outside the node set")))?;
        for &e in out {
            acc[e] += lam / out.len() as f64;
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// `sum_t (1/|O(t)|)(sum_{e in O(t)} <U^e, X_e>)^2 / sum_e |X_e|^2`.
pub fn eval_dual_tree(g: &MultiGraph, h: &Hierarchy, nodes: &[usize], w: &DualWitness) -> Result<TreeDual> {
    let den = checked_denominator(w, g)?;
    let sets = outgoing_sets(g, h, nodes)?;
    let a = w.alignments(g);
    let mut num = 0.0;
    for (_, out) in &sets {
        if out.is_empty() {
            continue;
        }
        let s: f64 = out.iter().map(|&e| a[e]).sum();
        num += s * s / out.len() as f64;
    }
    let nuclear = if w.lambda_nodes.is_empty() {
        None
    } else {
        let weights = tree_weights(g, &sets, w)?;
        let xw = w.edge_vectors(g) * DMatrix::from_diagonal(&DVector::from_vec(weights));
        let (norm, _) = nuclear_norm(&xw);
        Some(norm * norm / den)
    };
    Ok(TreeDual { ratio: num / den, nuclear })
}

/// `(sum_e W_e <U^e, X_e>)^2 / sum_e |X_e|^2` with the node-weight edge
/// scaling; equals the nuclear form when `U` is the aligned maximizer.
pub fn weighted_tree_form(g: &MultiGraph, h: &Hierarchy, nodes: &[usize], w: &DualWitness) -> Result<f64> {
    let den = checked_denominator(w, g)?;
    let sets = outgoing_sets(g, h, nodes)?;
    let weights = tree_weights(g, &sets, w)?;
    let s: f64 = w.alignments(g).iter().zip(&weights).map(|(a, b)| a * b).sum();
    Ok(s * s / den)
}

/// `(sum_e sqrt(gamma_e) <U^e, X_e>)^2 / sum_e |X_e|^2` where `gamma_e` sums
/// `lambda_S / |E(S)|` over the weighted cuts containing `e`.
pub fn eval_dual_average(g: &MultiGraph, w: &DualWitness) -> Result<f64> {
    check_distribution(w.lambda_cuts.iter().map(|(_, v)| v))?;
    let den = checked_denominator(w, g)?;
    let mut gamma = vec![0.0; g.m()];
    for (side, lam) in &w.lambda_cuts {
        let ids = cut_edges(g, side)?;
        if ids.is_empty() {
            return Err(Error::BadDistribution(format!("weighted side {side:?} cuts no edge")));
        }
        for e in &ids {
            gamma[*e] += lam / ids.len() as f64;
        }
    }
    let s: f64 = w.alignments(g).iter().zip(&gamma).map(|(a, c)| c.sqrt() * a).sum();
    Ok(s * s / den)
}

/// `sum_e <U^e, X_e>^2 / sum_e |X_e|^2`.
pub fn eval_dual_max(g: &MultiGraph, w: &DualWitness) -> Result<f64> {
    let den = checked_denominator(w, g)?;
    Ok(w.alignments(g).iter().map(|a| a * a).sum::<f64>() / den)
}

/// Witness whose `U` is the nuclear-norm maximizer of `X W` for the given node
/// weights; `X` is padded with zero rows so that `U` has one row per edge.
pub fn aligned_tree_witness(
    g: &MultiGraph,
    h: &Hierarchy,
    nodes: &[usize],
    x: &DMatrix<f64>,
    lambda_nodes: Vec<(usize, f64)>,
) -> Result<DualWitness> {
    let m = g.m();
    let dim = x.nrows().max(m);
    let mut padded = DMatrix::zeros(dim, x.ncols());
    padded.view_mut((0, 0), x.shape()).copy_from(x);
    let mut w = DualWitness { x: padded, row_weights: None, u: Vec::new(), lambda_nodes, lambda_cuts: Vec::new() };
    let sets = outgoing_sets(g, h, nodes)?;
    let weights = tree_weights(g, &sets, &w)?;
    let xw = w.edge_vectors(g) * DMatrix::from_diagonal(&DVector::from_vec(weights));
    let (_, u) = nuclear_norm(&xw);
    w.u = (0..m).map(|e| (e, u.row(e).transpose())).collect();
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> MultiGraph {
        MultiGraph::new(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn constant_row_has_zero_denominator() {
        let w = DualWitness {
            x: DMatrix::from_element(1, 3, 1.0),
            row_weights: None,
            u: vec![],
            lambda_nodes: vec![],
            lambda_cuts: vec![(vec![0], 1.0)],
        };
        assert!(matches!(eval_dual_max(&path3(), &w), Err(Error::ZeroDenominator)));
        assert!(matches!(eval_dual_average(&path3(), &w), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn single_cut_single_edge() {
        // X = 1_{v >= 1} separates edge 0 only; U aligned with that edge.
        let g = path3();
        let w = DualWitness {
            x: DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 1.0]),
            row_weights: None,
            u: vec![(0, DVector::from_vec(vec![-1.0]))],
            lambda_nodes: vec![],
            lambda_cuts: vec![(vec![0], 1.0)],
        };
        // gamma_0 = 1, <U, X_0> = 1, denominator 1
        assert!((eval_dual_average(&g, &w).unwrap() - 1.0).abs() < 1e-15);
        let mut half = w.clone();
        half.lambda_cuts = vec![(vec![0], 0.5), (vec![2], 0.5)];
        assert!((eval_dual_average(&g, &half).unwrap() - 0.5).abs() < 1e-15);
        let mut bad = w.clone();
        bad.lambda_cuts = vec![(vec![0], 0.7)];
        assert!(matches!(eval_dual_average(&g, &bad), Err(Error::BadDistribution(_))));
        bad.lambda_cuts = vec![(vec![0], 1.5), (vec![2], -0.5)];
        assert!(matches!(eval_dual_average(&g, &bad), Err(Error::BadDistribution(_))));
    }

    #[test]
    fn rejects_non_orthonormal_rows() {
        let w = DualWitness {
            x: DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 1.0]),
            row_weights: None,
            u: vec![(0, DVector::from_vec(vec![2.0]))],
            lambda_nodes: vec![],
            lambda_cuts: vec![],
        };
        assert!(matches!(eval_dual_max(&path3(), &w), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn nuclear_form_matches_aligned_u() {
        let g = crate::generators::dyadic(2, 2).unwrap();
        let h = Hierarchy::chain(2).unwrap();
        let nodes = h.marked().to_vec();
        let x = DMatrix::from_fn(4, 5, |r, v| if v > r { 1.0 } else { 0.0 });
        let lam: Vec<(usize, f64)> = nodes.iter().map(|&t| (t, 1.0 / nodes.len() as f64)).collect();
        let w = aligned_tree_witness(&g, &h, &nodes, &x, lam).unwrap();
        let nuclear = eval_dual_tree(&g, &h, &nodes, &w).unwrap().nuclear.unwrap();
        let form = weighted_tree_form(&g, &h, &nodes, &w).unwrap();
        assert!((nuclear - form).abs() < 1e-8, "{nuclear} {form}");
    }
}
