//! Log-barrier Newton method for
//!
//! ```text
//! min eps  s.t.  trace(A_c D^{-1}) <= eps      (objective rows)
//!                1_S' D 1_S <= bound_S           (cut rows)
//!                D >= floor I,  D <= C           (C optional)
//! ```
//!
//! over symmetric `D`, parameterized by its upper triangle.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub(crate) struct Problem {
    pub n: usize,
    pub objective: Vec<DMatrix<f64>>,
    pub cuts: Vec<Vec<usize>>,
    pub cut_bounds: Vec<f64>,
    pub floor: f64,
    pub upper: Option<DMatrix<f64>>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Options {
    pub tol_gap: f64,
    pub t0: f64,
    pub growth: f64,
    pub max_newton: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { tol_gap: 1e-9, t0: 1.0, growth: 5.0, max_newton: 200 }
    }
}

pub(crate) struct Outcome {
    pub d: DMatrix<f64>,
    pub t: f64,
    pub newton_steps: usize,
    /// False when some stage ran out of Newton steps far from its center.
    pub converged: bool,
}

struct Layout {
    pairs: Vec<(usize, usize)>,
    index: Vec<usize>,
    n: usize,
}

impl Layout {
    fn new(n: usize) -> Layout {
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        let mut index = vec![0; n * n];
        for a in 0..n {
            for b in a..n {
                index[a * n + b] = pairs.len();
                index[b * n + a] = pairs.len();
                pairs.push((a, b));
            }
        }
        Layout { pairs, index, n }
    }

    fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Gradient of `trace(M H)` in coordinates.
    fn symvec(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.pairs.iter().map(|&(a, b)| if a == b { m[(a, a)] } else { 2.0 * m[(a, b)] }),
        )
    }

    fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, &(a, b)) in self.pairs.iter().enumerate() {
            d[(a, b)] = x[i];
            d[(b, a)] = x[i];
        }
        d
    }

    fn from_matrix(&self, d: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.pairs.iter().map(|&(a, b)| d[(a, b)]))
    }

    /// Adds `scale * trace(X H1 Y H2)` for all coordinate pairs `H1, H2`.
    fn add_bilinear(&self, h: &mut DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>, scale: f64) {
        let p = self.dim();
        for i in 0..p {
            let (a, b) = self.pairs[i];
            for j in i..p {
                let (c, d) = self.pairs[j];
                // orientations (a,b)/(b,a) against (c,d)/(d,c)
                let mut v = x[(d, a)] * y[(b, c)];
                if c != d {
                    v += x[(c, a)] * y[(b, d)];
                }
                if a != b {
                    v += x[(d, b)] * y[(a, c)];
                    if c != d {
                        v += x[(c, b)] * y[(a, d)];
                    }
                }
                h[(i, j)] += scale * v;
                if i != j {
                    h[(j, i)] += scale * v;
                }
            }
        }
    }
}

struct Point {
    phi: f64,
    p: DMatrix<f64>,
    q: DMatrix<f64>,
    r: Option<DMatrix<f64>>,
    f: Vec<f64>,
    s: Vec<f64>,
}

fn chol(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m)
}

fn logdet(c: &Cholesky<f64, Dyn>) -> f64 {
    c.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum()
}

pub(crate) fn quad_side(d: &DMatrix<f64>, side: &[usize]) -> f64 {
    let mut s = 0.0;
    for &a in side {
        for &b in side {
            s += d[(a, b)];
        }
    }
    s
}

fn trace_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

impl Problem {
    fn eval(&self, d: &DMatrix<f64>, eps: f64, t: f64) -> Option<Point> {
        let n = self.n;
        let shifted = chol(d - DMatrix::identity(n, n) * self.floor)?;
        let full = chol(d.clone())?;
        let p = full.inverse();
        let q = shifted.inverse();
        let mut phi = t * eps - logdet(&shifted);
        let r = match &self.upper {
            Some(c) => {
                let ch = chol(c - d)?;
                phi -= logdet(&ch);
                Some(ch.inverse())
            }
            None => None,
        };
        let mut f = Vec::with_capacity(self.objective.len());
        for a in &self.objective {
            let v = eps - trace_prod(a, &p);
            if !(v > 0.0) {
                return None;
            }
            phi -= v.ln();
            f.push(v);
        }
        let mut s = Vec::with_capacity(self.cuts.len());
        for (side, bound) in self.cuts.iter().zip(&self.cut_bounds) {
            let v = bound - quad_side(d, side);
            if !(v > 0.0) {
                return None;
            }
            phi -= v.ln();
            s.push(v);
        }
        phi.is_finite().then_some(Point { phi, p, q, r, f, s })
    }

    /// Barrier parameter: number of logarithmic terms (matrix terms count
    /// their dimension).
    fn nu(&self) -> f64 {
        (self.objective.len() + self.cuts.len() + self.n * (1 + self.upper.is_some() as usize)) as f64
    }

    fn newton_system(&self, lay: &Layout, pt: &Point, t: f64) -> (DMatrix<f64>, DVector<f64>) {
        let p = lay.dim();
        let e = p; // index of eps
        let mut h = DMatrix::zeros(p + 1, p + 1);
        let mut g = DVector::zeros(p + 1);
        g[e] = t;
        let mut msum = DMatrix::zeros(self.n, self.n);
        for (a, &f) in self.objective.iter().zip(&pt.f) {
            let m = &pt.p * a * &pt.p;
            let mut v = lay.symvec(&m).resize_vertically(p + 1, 0.0);
            v[e] = 1.0;
            // -log f with f = eps - trace(A P)
            g -= &v / f;
            h.ger(1.0 / (f * f), &v, &v, 1.0);
            msum += m / f;
        }
        lay.add_bilinear(&mut h, &msum, &pt.p, 2.0);
        for (side, &s) in self.cuts.iter().zip(&pt.s) {
            let mut idx = Vec::with_capacity(side.len() * (side.len() + 1) / 2);
            for (i, &a) in side.iter().enumerate() {
                for &b in &side[i..] {
                    idx.push((lay.index[a * self.n + b], if a == b { 1.0 } else { 2.0 }));
                }
            }
            for &(i, ci) in &idx {
                g[i] += ci / s;
                for &(j, cj) in &idx {
                    h[(i, j)] += ci * cj / (s * s);
                }
            }
        }
        let gq = lay.symvec(&pt.q);
        for i in 0..p {
            g[i] -= gq[i];
        }
        lay.add_bilinear(&mut h, &pt.q, &pt.q, 1.0);
        if let Some(r) = &pt.r {
            let gr = lay.symvec(r);
            for i in 0..p {
                g[i] += gr[i];
            }
            lay.add_bilinear(&mut h, r, r, 1.0);
        }
        (h, g)
    }

    /// Smallest `eps` keeping every objective row strictly feasible at `d`.
    pub(crate) fn objective_values(&self, d: &DMatrix<f64>) -> Vec<f64> {
        let p = match chol(d.clone()) {
            Some(c) => c.inverse(),
            None => return vec![f64::INFINITY; self.objective.len()],
        };
        self.objective.iter().map(|a| trace_prod(a, &p)).collect()
    }

    pub(crate) fn solve(&self, d0: &DMatrix<f64>, opts: Options) -> Result<Outcome> {
        let lay = Layout::new(self.n);
        let p = lay.dim();
        let start = self.objective_values(d0).into_iter().fold(0.0f64, f64::max);
        let mut eps = 2.0 * start + 1e-9;
        let mut x = lay.from_matrix(d0);
        let mut t = opts.t0;
        let nu = self.nu();
        let mut steps = 0;
        let mut converged = true;
        let mut pt = self
            .eval(d0, eps, t)
            .ok_or_else(|| Error::SolverStalled("initial point is not strictly feasible".into()))?;
        loop {
            let mut centered = false;
            for _ in 0..opts.max_newton {
                let (h, g) = self.newton_system(&lay, &pt, t);
                let dir = match solve_spd(h, &g) {
                    Some(v) => v,
                    None => break,
                };
                let dec = -g.dot(&dir);
                if !(dec > 0.0) || dec / 2.0 < 1e-8 {
                    centered = true;
                    break;
                }
                steps += 1;
                let mut alpha = 1.0;
                let mut moved = false;
                while alpha > 1e-14 {
                    let xn = &x + &dir.rows(0, p) * alpha;
                    let en = eps + dir[p] * alpha;
                    if let Some(np) = self.eval(&lay.to_matrix(&xn), en, t) {
                        if np.phi <= pt.phi - 0.01 * alpha * dec {
                            x = xn;
                            eps = en;
                            pt = np;
                            moved = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                // once steps shrink this far the merit differences are roundoff
                if !moved || (alpha < 1e-6 && dec < 1e-3) {
                    centered = dec < 1e-3;
                    break;
                }
            }
            converged &= centered;
            if nu / t < opts.tol_gap {
                break;
            }
            // long steps cost about nu Newton steps per stage, so shorten them
            // when there are many rows
            t *= opts.growth.min(1.0 + 10.0 / nu.sqrt());
            pt = self.eval(&lay.to_matrix(&x), eps, t).expect("point stays feasible");
        }
        Ok(Outcome { d: lay.to_matrix(&x), t, newton_steps: steps, converged })
    }
}

/// Solves `H x = -g` for symmetric positive definite `H`. The system is
/// equilibrated by its diagonal first since near-tight rows make the scales
/// differ by many orders of magnitude; the diagonal is regularized if the
/// factorization still fails.
fn solve_spd(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let k = h.nrows();
    let scale: Vec<f64> = (0..k).map(|i| 1.0 / h[(i, i)].max(1e-300).sqrt()).collect();
    let scaled = DMatrix::from_fn(k, k, |i, j| h[(i, j)] * scale[i] * scale[j]);
    let rhs = DVector::from_fn(k, |i, _| -g[i] * scale[i]);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut m = scaled.clone();
        for i in 0..k {
            m[(i, i)] += reg;
        }
        if let Some(c) = Cholesky::new(m) {
            let y = c.solve(&rhs);
            if y.iter().all(|v| v.is_finite()) {
                return Some(DVector::from_fn(k, |i, _| y[i] * scale[i]));
            }
        }
        reg = if reg == 0.0 { 1e-13 } else { reg * 100.0 };
    }
    None
}
