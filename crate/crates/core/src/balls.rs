//! Disjoint balls around embedded edge endpoints, and the two-level dyadic
//! bucketing that extracts a homogeneous subset carrying a fixed share of
//! the projection mass.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiGraph;
use crate::spectral::singular_values_desc;

/// Bisection steps after the doubling phase of the radius search.
pub const BISECTION_STEPS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    L2sq,
}

impl Metric {
    pub fn distance(self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self {
            Metric::L1 => (a - b).abs().sum(),
            Metric::L2sq => (a - b).norm_squared(),
        }
    }

    /// Center distance above which two balls of radius `r` cannot meet.
    pub fn spacing(self, r: f64) -> f64 {
        match self {
            Metric::L1 => 2.0 * r,
            Metric::L2sq => 4.0 * r,
        }
    }
}

/// Balls of a common radius centered at embedded vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BallFamily {
    pub centers: Vec<usize>,
    pub radius: f64,
    pub metric: Metric,
}

impl BallFamily {
    /// All-pairs check that center distances exceed the metric's spacing.
    pub fn is_disjoint(&self, points: &DMatrix<f64>) -> bool {
        let sep = self.metric.spacing(self.radius);
        self.centers.iter().enumerate().all(|(i, &a)| {
            self.centers[i + 1..].iter().all(|&b| {
                self.metric.distance(&points.column(a).into_owned(), &points.column(b).into_owned()) > sep
            })
        })
    }
}

/// Scans `order` and keeps each point farther than the spacing from every
/// kept center. Points not kept are within the spacing of some center.
pub fn greedy_cover(points: &DMatrix<f64>, order: &[usize], r: f64, metric: Metric) -> Vec<usize> {
    let sep = metric.spacing(r);
    let cols: Vec<DVector<f64>> = (0..points.ncols()).map(|j| points.column(j).into_owned()).collect();
    let mut centers: Vec<usize> = Vec::new();
    for &p in order {
        if centers.iter().all(|&c| c != p && metric.distance(&cols[p], &cols[c]) > sep) {
            centers.push(p);
        }
    }
    centers
}

/// `(192/eps + 64/eps^2)^(1 + eps)`.
pub fn ball_constant(eps: f64) -> f64 {
    (192.0 / eps + 64.0 / (eps * eps)).powf(1.0 + eps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GreedyBalls {
    pub balls: BallFamily,
    /// Number of balls at the located radius.
    pub b: usize,
    pub r: f64,
    /// Requested count `ceil(alpha |F| / C1)`.
    pub target: usize,
    /// `(E Y_ee)^2 / E |Y_e|^2` over `F`.
    pub alpha: f64,
    /// `(E Y_ee)^2`.
    pub upsilon: f64,
    pub c1: f64,
    pub singular_values: Vec<f64>,
    /// `sum_{i >= b} sigma_i^2` (1-based).
    pub tail: f64,
    /// `r >= tail / (16 |F|)`.
    pub claim_holds: bool,
    pub rb: f64,
    /// `alpha^eps * upsilon * |F| / C1`.
    pub guaranteed_product: f64,
    /// (radius, count) over the doubling phase.
    pub schedule: Vec<(f64, usize)>,
    /// Counts never increased along the doubling schedule.
    pub monotone: bool,
}

/// Greedy disjoint `L2^2` balls around the endpoints of `f`.
///
/// `y` has one row per edge of `g` and one column per vertex; the edge
/// vector of `e = (u, v)` is `y[:, u] - y[:, v]` and its self-coordinate is
/// row `e` of that vector. The radius is the smallest (up to bisection) for
/// which the greedy count falls to the target.
pub fn greedy_balls(g: &MultiGraph, y: &DMatrix<f64>, f: &[usize], eps: f64) -> Result<GreedyBalls> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1/2)")));
    }
    if y.nrows() != g.m() || y.ncols() != g.n() {
        return Err(Error::InvalidArgument(format!(
            "embedding is {}x{}, expected one row per edge and one column per vertex ({}x{})",
            y.nrows(),
            y.ncols(),
            g.m(),
            g.n()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("embedding has non-finite entries".into()));
    }
    let mut f = f.to_vec();
    f.sort_unstable();
    f.dedup();
    if f.is_empty() {
        return Err(Error::InvalidArgument("edge set is empty".into()));
    }
    if let Some(&e) = f.iter().find(|&&e| e >= g.m()) {
        return Err(Error::InvalidArgument(format!("edge {e} outside 0..{}", g.m())));
    }
    let mut order = Vec::with_capacity(2 * f.len());
    for &e in &f {
        let (u, v) = g.edge(e);
        for w in [u, v] {
            if !order.contains(&w) {
                order.push(w);
            }
        }
    }
    let metric = Metric::L2sq;
    let first = y.column(order[0]).into_owned();
    let min_gap = order
        .iter()
        .flat_map(|&a| order.iter().map(move |&b| (a, b)))
        .filter(|(a, b)| a < b)
        .map(|(a, b)| metric.distance(&y.column(a).into_owned(), &y.column(b).into_owned()))
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if order.iter().all(|&w| y.column(w) == first) {
        return Err(Error::DegenerateEmbedding);
    }

    let m_f = f.len() as f64;
    let edge_cols = DMatrix::from_fn(y.nrows(), f.len(), |i, j| {
        let (u, v) = g.edge(f[j]);
        y[(i, u)] - y[(i, v)]
    });
    let mean_self = f.iter().enumerate().map(|(j, &e)| edge_cols[(e, j)]).sum::<f64>() / m_f;
    let mean_sq = edge_cols.column_iter().map(|c| c.norm_squared()).sum::<f64>() / m_f;
    let upsilon = mean_self * mean_self;
    let alpha = upsilon / mean_sq;
    let c1 = ball_constant(eps);
    let target = ((alpha * m_f / c1).ceil() as usize).max(1);

    let count = |r: f64| greedy_cover(y, &order, r, metric).len();
    // below min_gap / 4 every distinct point is its own ball
    let mut hi = min_gap / 8.0;
    let mut schedule = vec![(hi, count(hi))];
    while schedule.last().expect("nonempty").1 > target {
        hi *= 2.0;
        schedule.push((hi, count(hi)));
    }
    let monotone = schedule.windows(2).all(|w| w[1].1 <= w[0].1);
    let r = if schedule.len() == 1 {
        hi
    } else {
        let mut lo = hi / 2.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if count(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let centers = greedy_cover(y, &order, r, metric);
    let b = centers.len();
    let singular_values = singular_values_desc(&edge_cols);
    let tail: f64 = singular_values.iter().skip(b - 1).map(|s| s * s).sum();
    Ok(GreedyBalls {
        balls: BallFamily { centers, radius: r, metric },
        b,
        r,
        target,
        alpha,
        upsilon,
        c1,
        tail,
        claim_holds: r >= tail / (16.0 * m_f),
        singular_values,
        rb: r * b as f64,
        guaranteed_product: alpha.powf(eps) * upsilon * m_f / c1,
        schedule,
        monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bucketing {
    /// Indices into the input.
    pub subset: Vec<usize>,
    /// `5 + 2 log2(1/alpha)`.
    pub q: f64,
    /// `32 q^2 (5 + q)^2`.
    pub c2: f64,
    /// Bucket of `a^2 / mu^2` in `[2^outer, 2^(outer+1))`.
    pub outer: i32,
    /// Bucket of `b^2 / a_min^2` in `[2^inner, 2^(inner+1))`.
    pub inner: i32,
    /// `(sum over subset of a)^2 / (sum of a)^2`.
    pub dominating_ratio: f64,
    pub dominating: bool,
}

/// `floor(log2 x)` for positive finite `x`, exact at powers of two.
fn dyadic_index(x: f64) -> i32 {
    let mut i = x.log2().floor() as i32;
    while 2f64.powi(i) > x {
        i -= 1;
    }
    while 2f64.powi(i + 1) <= x {
        i += 1;
    }
    i
}

/// Picks a 2-homogeneous subset of the pairs `(a_e, b_e)`: first the
/// `sqrt 2`-dyadic bucket of `a / mean(a)` maximizing size times smallest
/// `a`, then within it the largest `sqrt 2`-dyadic bucket of `b / min a`.
/// Buckets are formed on squares so their boundaries are exact powers of two.
pub fn homogeneous_dominating_subset(values: &[(f64, f64)], alpha: f64) -> Result<Bucketing> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1]")));
    }
    if let Some((i, _)) = values.iter().enumerate().find(|(_, &(a, b))| !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidArgument(format!("value {i} is not finite")));
    }
    if let Some((i, &(a, b))) = values.iter().enumerate().find(|(_, &(a, b))| a > b) {
        return Err(Error::PreconditionFailed(format!("a > b at index {i} ({a} > {b})")));
    }
    let len = values.len() as f64;
    let mu = values.iter().map(|v| v.0).sum::<f64>() / len;
    let mean_b2 = values.iter().map(|v| v.1 * v.1).sum::<f64>() / len;
    if !(mu > 0.0) || mu * mu < alpha * mean_b2 {
        return Err(Error::NotBad(format!("(E a)^2 = {:.6e} < alpha E b^2 = {:.6e}", mu * mu, alpha * mean_b2)));
    }
    let q = 5.0 + 2.0 * (1.0 / alpha).log2();
    let c2 = 32.0 * q * q * (5.0 + q).powi(2);

    let outer: Vec<Option<i32>> =
        values.iter().map(|&(a, _)| (a > 0.0).then(|| dyadic_index((a / mu).powi(2)))).collect();
    let mut keys: Vec<i32> = outer.iter().flatten().copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let min_a = |key: i32| {
        values.iter().zip(&outer).filter(|(_, o)| **o == Some(key)).map(|(v, _)| v.0).fold(f64::INFINITY, f64::min)
    };
    let size = |key: i32| outer.iter().filter(|o| **o == Some(key)).count();
    let best_outer = *keys
        .iter()
        .max_by(|&&x, &&y| (size(x) as f64 * min_a(x)).total_cmp(&(size(y) as f64 * min_a(y))).then(y.cmp(&x)))
        .expect("mu > 0 implies a positive entry");
    let a_min = min_a(best_outer);
    let members: Vec<usize> = (0..values.len()).filter(|&i| outer[i] == Some(best_outer)).collect();
    let inner: Vec<i32> = members.iter().map(|&i| dyadic_index((values[i].1 / a_min).powi(2))).collect();
    let mut inner_keys = inner.clone();
    inner_keys.sort_unstable();
    inner_keys.dedup();
    let best_inner = *inner_keys
        .iter()
        .max_by_key(|&&j| (inner.iter().filter(|&&x| x == j).count(), std::cmp::Reverse(j)))
        .expect("bucket nonempty");
    let subset: Vec<usize> =
        members.iter().zip(&inner).filter(|(_, &j)| j == best_inner).map(|(&i, _)| i).collect();
    let total: f64 = values.iter().map(|v| v.0).sum();
    let part: f64 = subset.iter().map(|&i| values[i].0).sum();
    let dominating_ratio = (part / total).powi(2);
    Ok(Bucketing {
        subset,
        q,
        c2,
        outer: best_outer,
        inner: best_inner,
        dominating_ratio,
        dominating: dominating_ratio >= 1.0 / c2,
    })
}

/// Largest over smallest value in a nonempty list of positives.
pub fn spread(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.into_iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> MultiGraph {
        MultiGraph::new(leaves + 1, (1..=leaves).map(|v| (0, v)).collect()).unwrap()
    }

    #[test]
    fn isotropic_star() {
        // edge e = (0, e + 1) has edge vector exactly the unit vector e
        let g = star(4);
        let y = DMatrix::from_fn(4, 5, |i, v| if v == i + 1 { -1.0 } else { 0.0 });
        let res = greedy_balls(&g, &y, &[0, 1, 2, 3], 0.25).unwrap();
        assert!((res.alpha - 1.0).abs() < 1e-12);
        assert!(res.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert_eq!(res.schedule[0].1, 5);
        assert_eq!(res.target, 1);
        assert_eq!(res.b, 1);
        assert!(res.claim_holds && res.monotone);
        assert!(res.balls.is_disjoint(&y));
    }

    #[test]
    fn single_point_one_ball() {
        let p = DMatrix::from_row_slice(2, 1, &[0.3, -1.0]);
        for r in [0.0, 1e-3, 10.0] {
            assert_eq!(greedy_cover(&p, &[0], r, Metric::L2sq), vec![0]);
        }
    }

    #[test]
    fn coincident_points_rejected() {
        let g = star(2);
        let y = DMatrix::from_element(2, 3, 1.5);
        assert!(matches!(greedy_balls(&g, &y, &[0, 1], 0.25), Err(Error::DegenerateEmbedding)));
    }

    #[test]
    fn cover_spacing() {
        let p = DMatrix::from_row_slice(1, 4, &[0.0, 1.0, 2.0, 5.0]);
        // L1 balls of radius 0.6 need centers more than 1.2 apart
        let c = greedy_cover(&p, &[0, 1, 2, 3], 0.6, Metric::L1);
        assert_eq!(c, vec![0, 2, 3]);
        let fam = BallFamily { centers: c, radius: 0.6, metric: Metric::L1 };
        assert!(fam.is_disjoint(&p));
    }

    #[test]
    fn identical_values_keep_everything() {
        let vals = vec![(0.5, 0.7); 9];
        let res = homogeneous_dominating_subset(&vals, 0.1).unwrap();
        assert_eq!(res.subset.len(), 9);
        assert!((res.dominating_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_scales_pick_heavy_bucket() {
        let mut vals = vec![(1.0, 1.0); 5];
        vals.extend(vec![(100.0, 100.0); 5]);
        let res = homogeneous_dominating_subset(&vals, 0.5).unwrap();
        assert_eq!(res.subset, vec![5, 6, 7, 8, 9]);
        assert!(res.dominating_ratio >= 1.0 / res.c2);
        assert!((res.q - 7.0).abs() < 1e-12);
    }

    #[test]
    fn bucketing_preconditions() {
        assert!(matches!(
            homogeneous_dominating_subset(&[(2.0, 1.0)], 0.5),
            Err(Error::PreconditionFailed(_))
        ));
        // mean a = 0.5, mean b^2 = 50.5: not 0.5-bad
        assert!(matches!(homogeneous_dominating_subset(&[(0.0, 10.0), (1.0, 1.0)], 0.5), Err(Error::NotBad(_))));
    }

    #[test]
    fn dyadic_index_exact() {
        assert_eq!(dyadic_index(1.0), 0);
        assert_eq!(dyadic_index(2.0), 1);
        assert_eq!(dyadic_index(1.999_999_999_999_999_8), 0);
        assert_eq!(dyadic_index(0.25), -2);
    }
}
