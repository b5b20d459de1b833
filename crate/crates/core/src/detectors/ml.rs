use super::{residual_sq, DetectionResult};
use crate::error::{Error, Result};
use crate::lattice::LatticeProblem;
use crate::metrics::OpCounter;
use crate::modem::Constellation;

/// Largest search space [`ml_exhaustive`] will enumerate.
pub const ML_MAX_POINTS: u128 = 100_000_000;

/// Number of lattice points an exhaustive search over `n` antennas visits.
pub fn ml_point_count(n_antennas: usize, c: &Constellation) -> u128 {
    (c.mu() as u128).checked_pow(2 * n_antennas as u32).unwrap_or(u128::MAX)
}

/// Exhaustive minimization of `|y_hat - R x|^2` over all `mu^(2N)` points.
///
/// Points are visited in ascending top-down order and only a strictly
/// smaller weight replaces the incumbent, so ties keep the lexicographically
/// smallest vector. Each enumerated point counts as one node.
pub fn ml_exhaustive(p: &LatticeProblem, c: &Constellation) -> Result<DetectionResult> {
    let dim = p.dim();
    let mu = c.mu();
    let points = ml_point_count(p.n, c);
    if points > ML_MAX_POINTS {
        return Err(Error::Capacity(points));
    }
    let rail = c.rail();
    let mut ops = OpCounter::new();
    let mut idx = vec![0usize; dim];
    let mut x = vec![rail[0]; dim];
    let mut best_x = x.clone();
    let mut best_w = f64::INFINITY;
    loop {
        ops.visit();
        let w = residual_sq(p, &x, &mut ops);
        if ops.less(w, best_w) {
            best_w = w;
            best_x.copy_from_slice(&x);
        }
        // Odometer with level 1 (index 0) turning fastest.
        let mut l = 0;
        loop {
            if l == dim {
                return Ok(DetectionResult::finish(p, best_x, best_w, ops, 0));
            }
            idx[l] += 1;
            if idx[l] < mu {
                x[l] = rail[idx[l]];
                break;
            }
            idx[l] = 0;
            x[l] = rail[0];
            l += 1;
        }
    }
}
