//! Matrix-fact oracles and instance builders shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thintree::spectral::{lambda_min, nuclear_norm, singular_values_desc};
use thintree::MultiGraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// `A A' + shift I` for a random square `A`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let a = uniform(rng, n, n);
    &a * a.transpose() + DMatrix::identity(n, n) * shift
}

/// `[[D, x], [x', t]]` is PSD exactly when `x' D^-1 x <= t`. Instances within
/// `1e-6` of the boundary are skipped as undecidable in floating point.
pub fn schur_case(seed: u64) -> Result<bool, String> {
    let mut r = rng(seed);
    let n = r.random_range(2..7);
    let d = random_pd(&mut r, n, 0.1);
    let x = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
    let q = (x.transpose() * d.clone().cholesky().unwrap().inverse() * &x)[(0, 0)];
    let t = q * r.random_range(0.5..1.5);
    if (q - t).abs() < 1e-6 * q.max(1.0) {
        return Ok(false);
    }
    let mut block = DMatrix::zeros(n + 1, n + 1);
    block.view_mut((0, 0), (n, n)).copy_from(&d);
    block.view_mut((0, n), (n, 1)).copy_from(&x);
    block.view_mut((n, 0), (1, n)).copy_from(&x.transpose());
    block[(n, n)] = t;
    let psd = lambda_min(&block) >= -1e-12;
    if psd != (q <= t) {
        return Err(format!("seed {seed}: block psd = {psd} but x'D^-1x = {q} vs t = {t}"));
    }
    Ok(true)
}

/// `(l A + (1-l) B)^-1 <= l A^-1 + (1-l) B^-1` in the Loewner order.
pub fn operator_convexity_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(2..7);
    let a = random_pd(&mut r, n, 0.05);
    let b = random_pd(&mut r, n, 0.05);
    let l = r.random_range(0.0..1.0);
    let inv = |m: &DMatrix<f64>| m.clone().cholesky().unwrap().inverse();
    let lhs = inv(&(&a * l + &b * (1.0 - l)));
    let rhs = inv(&a) * l + inv(&b) * (1.0 - l);
    let gap = lambda_min(&(&rhs - &lhs));
    let scale = rhs.amax().max(1.0);
    if gap < -1e-9 * scale {
        return Err(format!("seed {seed}: min eigenvalue of the gap is {gap:.3e}"));
    }
    Ok(())
}

/// The returned semiorthogonal `U` attains `trace(U A) = |A|_*`, and random
/// semiorthogonal matrices do no better.
pub fn nuclear_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let rows = r.random_range(1..7);
    let cols = r.random_range(1..7);
    let a = uniform(&mut r, rows, cols);
    let (value, u) = nuclear_norm(&a);
    let sv: f64 = singular_values_desc(&a).iter().sum();
    if (value - sv).abs() > 1e-10 * sv.max(1.0) {
        return Err(format!("seed {seed}: nuclear norm {value} vs singular value sum {sv}"));
    }
    let k = u.nrows();
    let gram = &u * u.transpose();
    if (gram - DMatrix::<f64>::identity(k, k)).amax() > 1e-10 {
        return Err(format!("seed {seed}: maximizer rows are not orthonormal"));
    }
    let padded = if rows < cols { a.clone().resize(cols, cols, 0.0) } else { a.clone() };
    if ((&u * &padded).trace() - value).abs() > 1e-9 * value.max(1.0) {
        return Err(format!("seed {seed}: trace(U A) differs from the norm"));
    }
    let dim = padded.nrows();
    for _ in 0..5 {
        let q = uniform(&mut r, dim, dim).qr().q();
        let w = q.rows(0, k).into_owned();
        if (&w * &padded).trace() > value + 1e-9 * value.max(1.0) {
            return Err(format!("seed {seed}: a random semiorthogonal matrix beats the maximizer"));
        }
    }
    Ok(())
}

/// For any `C` of rank at most `r`, `|A - C|_F^2 >= sum_{i > r} sigma_i^2`.
pub fn hoffman_wielandt_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let rows = r.random_range(2..8);
    let cols = r.random_range(2..8);
    let a = uniform(&mut r, rows, cols);
    let rank = r.random_range(0..rows.min(cols));
    let c = uniform(&mut r, rows, rank) * uniform(&mut r, rank, cols);
    // also try the truncated SVD, which attains the bound
    let svd = a.clone().svd(true, true);
    let mut best = DMatrix::zeros(rows, cols);
    let order = {
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        idx
    };
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    for &i in order.iter().take(rank) {
        best += u.column(i) * vt.row(i) * svd.singular_values[i];
    }
    let tail: f64 = singular_values_desc(&a).iter().skip(rank).map(|s| s * s).sum();
    for (name, cand) in [("random", &c), ("truncated", &best)] {
        let dist = (&a - cand).norm_squared();
        if dist < tail - 1e-10 * tail.max(1.0) {
            return Err(format!("seed {seed}: {name} rank-{rank} approximation at {dist} beats tail {tail}"));
        }
    }
    if ((&a - &best).norm_squared() - tail).abs() > 1e-9 * tail.max(1.0) {
        return Err(format!("seed {seed}: truncated SVD misses the tail"));
    }
    Ok(())
}

/// Random graph with exactly `m` edges on `n` vertices: a random tree plus
/// random extra edges.
pub fn graph_with_edges(seed: u64, n: usize, m: usize) -> MultiGraph {
    thintree::generators::random_connected(n, m + 1 - n, seed)
}
