//! Detectors for the QR-reduced lattice problem.
//!
//! * [`ml_exhaustive`] enumerates every lattice point.
//! * [`sd_conventional`] is a depth-first Fincke-Pohst search on the stacked
//!   representation.
//! * [`sd_proposed`] runs on the interleaved representation, where the real
//!   and imaginary levels of each symbol decouple.
//!
//! Ties between equal weights are resolved lexicographically on the symbol
//! vector read from the top level (2N) down, which is also the order in which
//! the depth-first search meets leaves.

mod conventional;
mod ml;
mod proposed;

pub use conventional::sd_conventional;
pub use ml::{ml_exhaustive, ml_point_count, ML_MAX_POINTS};
pub use proposed::{sd_proposed, KBestSchedule};

use crate::error::{Error, Result};
use crate::lattice::{LatticeProblem, RadiusPolicy, Representation};
use crate::metrics::OpCounter;
use crate::modem::{Constellation, SymbolVector};
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Detected rail levels in the problem's ordering.
    pub x_hat: SymbolVector,
    /// `|y_hat - R x_hat|^2` evaluated by [`recompute_weight`].
    pub weight: f64,
    /// The same quantity as accumulated by the search itself.
    pub path_weight: f64,
    pub nodes_visited: u64,
    pub flops: u64,
    /// Number of times the radius had to be enlarged.
    pub restarts: u32,
    pub ops: OpCounter,
}

impl DetectionResult {
    fn finish(p: &LatticeProblem, x: Vec<i32>, path_weight: f64, ops: OpCounter, restarts: u32) -> Self {
        let x_hat = SymbolVector(x);
        DetectionResult {
            weight: recompute_weight(p, &x_hat),
            x_hat,
            path_weight,
            nodes_visited: ops.nodes,
            flops: ops.flops(),
            restarts,
            ops,
        }
    }
}

/// `|y_hat - R x|^2`, summed from level 2N down to level 1.
pub fn recompute_weight(p: &LatticeProblem, x: &SymbolVector) -> f64 {
    residual_sq(p, x.as_slice(), &mut OpCounter::new())
}

pub(crate) fn residual_sq(p: &LatticeProblem, x: &[i32], ops: &mut OpCounter) -> f64 {
    let dim = p.dim();
    debug_assert_eq!(x.len(), dim);
    let mut w = 0.0;
    for l in (0..dim).rev() {
        let row = &p.r.row(l)[l..];
        let mut s = ops.mul(row[0], x[l] as f64);
        for (r, &xk) in row[1..].iter().zip(&x[l + 1..]) {
            let t = ops.mul(*r, xk as f64);
            s = ops.add(s, t);
        }
        let d = ops.sub(p.y_hat[l], s);
        let d2 = ops.mul(d, d);
        w = ops.add(w, d2);
    }
    w
}

/// Interference `sum_{k >= from} r[level][k] x[k]` (0-indexed).
pub(crate) fn interference(p: &LatticeProblem, level: usize, from: usize, x: &[i32], ops: &mut OpCounter) -> f64 {
    let row = p.r.row(level);
    let mut it = row[from..].iter().zip(&x[from..]);
    let Some((r, &xk)) = it.next() else {
        return 0.0;
    };
    let mut acc = ops.mul(*r, xk as f64);
    for (r, &xk) in it {
        let t = ops.mul(*r, xk as f64);
        acc = ops.add(acc, t);
    }
    acc
}

/// One-dimensional metric `(b - r * x)^2`.
#[inline]
pub(crate) fn level_term(b: f64, r: f64, x: i32, ops: &mut OpCounter) -> f64 {
    let rx = ops.mul(r, x as f64);
    let d = ops.sub(b, rx);
    ops.mul(d, d)
}

/// Orders symbol vectors from the top level down.
pub(crate) fn top_down_cmp(a: &[i32], b: &[i32]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// `(weight, top-down x)` ordering used for every tie-break.
pub(crate) fn candidate_cmp(wa: f64, xa: &[i32], wb: f64, xb: &[i32]) -> Ordering {
    wa.total_cmp(&wb).then_with(|| top_down_cmp(xa, xb))
}

pub(crate) fn require_representation(p: &LatticeProblem, want: Representation, who: &str) -> Result<()> {
    if p.representation != want {
        return Err(Error::Config(format!(
            "{who} needs the {want:?} representation, got {:?}",
            p.representation
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Detector {
    #[serde(rename = "ml")]
    Ml,
    #[serde(rename = "sd-conv")]
    SdConventional,
    #[serde(rename = "sd-new")]
    SdProposed,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::Ml, Detector::SdConventional, Detector::SdProposed];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Ml => "ml",
            Detector::SdConventional => "sd-conv",
            Detector::SdProposed => "sd-new",
        }
    }

    pub fn representation(self) -> Representation {
        match self {
            Detector::Ml | Detector::SdConventional => Representation::Stacked,
            Detector::SdProposed => Representation::Interleaved,
        }
    }

    /// Runs this detector on a problem built in [`Detector::representation`].
    pub fn detect(
        self,
        p: &LatticeProblem,
        c: &Constellation,
        policy: &RadiusPolicy,
        schedule: &KBestSchedule,
    ) -> Result<DetectionResult> {
        match self {
            Detector::Ml => ml_exhaustive(p, c),
            Detector::SdConventional => sd_conventional(p, c, policy),
            Detector::SdProposed => sd_proposed(p, c, policy, schedule),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Detector::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown detector '{s}'; expected ml, sd-conv or sd-new")))
    }
}
