//! Haar-type dual witness for the dyadic path.

use nalgebra::{DMatrix, DVector};

use crate::cp::dual::DualWitness;
use crate::error::{Error, Result};
use crate::generators::dyadic_edge_id;

/// Witness on `dyadic(h, k)` with `2^h` coordinates.
///
/// Vertex `v` is embedded as the indicator of coordinates `0..v`. For each
/// level `i < h` and each even-indexed edge `{2j 2^i, (2j+1) 2^i}` of that
/// level, `U` carries a Haar row on coordinates `2j 2^i .. (2j+2) 2^i`: value
/// `-2^{-(i+1)/2}` on the first half and `+2^{-(i+1)/2}` on the second.
/// Rows are unit vectors and nested supports make them orthogonal; the
/// alignment with the edge is `2^{(i-1)/2}`. Cut weights are uniform over the
/// `2^h` prefix cuts `{0..=l}`.
pub fn dyadic_witness(h: usize, k: usize) -> Result<DualWitness> {
    if h == 0 || k == 0 {
        return Err(Error::InvalidArgument("dyadic witness needs h >= 1 and k >= 1".into()));
    }
    if h > 14 {
        return Err(Error::TooLarge { what: "h", got: h, limit: 14 });
    }
    let len = 1usize << h;
    let x = DMatrix::from_fn(len, len + 1, |c, v| if v > c { 1.0 } else { 0.0 });
    let mut u = Vec::with_capacity(len - 1);
    for level in 0..h {
        let span = 1usize << level;
        let value = 2f64.powf(-((level + 1) as f64) / 2.0);
        for j in 0..len / (2 * span) {
            let start = 2 * j * span;
            let mut row = DVector::zeros(len);
            for c in start..start + span {
                row[c] = -value;
                row[c + span] = value;
            }
            u.push((dyadic_edge_id(h, k, level, 2 * j), row));
        }
    }
    let w = 1.0 / len as f64;
    let lambda_cuts = (0..len).map(|l| ((0..=l).collect(), w)).collect();
    Ok(DualWitness { x, row_weights: None, u, lambda_nodes: Vec::new(), lambda_cuts })
}
