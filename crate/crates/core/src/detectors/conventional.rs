use super::{interference, level_term, require_representation, DetectionResult};
use crate::error::Result;
use crate::lattice::{LatticeProblem, RadiusPolicy, Representation};
use crate::metrics::OpCounter;
use crate::modem::Constellation;

struct DepthFirst<'a> {
    p: &'a LatticeProblem,
    rail: &'a [i32],
    ops: OpCounter,
    radius_sq: f64,
    x: Vec<i32>,
    best: Option<(Vec<i32>, f64)>,
}

impl DepthFirst<'_> {
    /// Expands the children of the current prefix at 0-indexed `level`.
    ///
    /// Each child evaluates its partial metric from scratch:
    /// `w_parent + (y_hat[l] - sum_{k >= l} r[l][k] x[k])^2`.
    fn descend(&mut self, level: usize, w_parent: f64) {
        let p = self.p;
        let dim = p.dim();
        let r_ll = p.r.get(level, level);
        for &omega in self.rail {
            self.ops.visit();
            let b = if level + 1 < dim {
                let e = interference(p, level, level + 1, &self.x, &mut self.ops);
                self.ops.sub(p.y_hat[level], e)
            } else {
                p.y_hat[level]
            };
            let t = level_term(b, r_ll, omega, &mut self.ops);
            let w = self.ops.add(w_parent, t);
            debug_assert!(w >= w_parent, "partial metric decreased");
            if !self.ops.less(w, self.radius_sq) {
                continue;
            }
            self.x[level] = omega;
            if level == 0 {
                // A leaf inside the sphere becomes the new radius.
                self.radius_sq = w;
                self.best = Some((self.x.clone(), w));
            } else {
                self.descend(level - 1, w);
            }
        }
    }
}

/// Depth-first sphere decoder on the stacked representation.
///
/// Children are tried in ascending rail order; a branch is pruned as soon
/// as its cumulative weight reaches `d^2`, and every leaf found inside the
/// sphere shrinks `d^2` to its own weight. If the sphere is empty, the
/// radius grows by `policy.growth` and the search reruns; once
/// `policy.max_restarts` is exceeded the search runs with no radius at all.
pub fn sd_conventional(p: &LatticeProblem, c: &Constellation, policy: &RadiusPolicy) -> Result<DetectionResult> {
    require_representation(p, Representation::Stacked, "sd_conventional")?;
    policy.validate()?;
    let dim = p.dim();
    let mut search = DepthFirst {
        p,
        rail: c.rail(),
        ops: OpCounter::new(),
        radius_sq: p.radius_sq,
        x: vec![c.rail()[0]; dim],
        best: None,
    };
    let mut restarts = 0;
    loop {
        search.radius_sq = policy.radius_for_attempt(p.radius_sq, restarts).unwrap_or(f64::INFINITY);
        search.descend(dim - 1, 0.0);
        if let Some((x, w)) = search.best.take() {
            return Ok(DetectionResult::finish(p, x, w, search.ops, restarts));
        }
        restarts += 1;
    }
}
