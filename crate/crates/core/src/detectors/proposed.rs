use super::{candidate_cmp, interference, level_term, require_representation, DetectionResult};
use crate::error::{Error, Result};
use crate::lattice::{LatticeProblem, RadiusPolicy, Representation};
use crate::metrics::OpCounter;
use crate::modem::{quantize_counted, Constellation};

/// Survivor caps for the middle symbol layers of [`sd_proposed`].
///
/// Entry `i` caps the survivors after symbol `N - 1 - i` has been enumerated
/// (symbols 1-indexed). The top symbol is never capped and symbols below
/// the last capped layer are resolved by quantization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KBestSchedule {
    caps: Vec<usize>,
}

impl KBestSchedule {
    /// No middle layers: every symbol below the top one is quantized.
    pub fn none() -> Self {
        Self { caps: Vec::new() }
    }

    pub fn new(caps: Vec<usize>) -> Result<Self> {
        if caps.contains(&0) {
            return Err(Error::Config("survivor caps must be at least 1".into()));
        }
        Ok(Self { caps })
    }

    /// Caps used for the 2x2, 4x4 and 6x6 systems.
    pub fn for_system(n: usize, order: u32) -> Result<Self> {
        let caps = match (n, order) {
            (2, 16 | 64) => vec![],
            (4, 16 | 64) => vec![8, 8],
            (6, 16) => vec![16, 8, 4],
            (6, 64) => vec![32, 32, 16],
            _ => {
                return Err(Error::Config(format!(
                    "no survivor schedule for {n}x{n} {order}-QAM (defined for N = 2, 4, 6)"
                )))
            }
        };
        Self::new(caps)
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }
}

/// Partial assignment of the upper levels. Entries below `x`'s assigned
/// range are placeholders.
#[derive(Debug, Clone)]
struct Survivor {
    x: Vec<i32>,
    w: f64,
}

enum Outcome {
    Found(Vec<i32>, f64),
    Empty,
}

/// Sphere decoder on the interleaved representation.
///
/// 1. The two levels of the top symbol are independent, so each is scored
///    on its own against `d^2` and every pair whose summed weight stays
///    inside the sphere survives.
/// 2. For each capped middle symbol, every survivor is extended by all
///    `mu^2` (real, imaginary) pairs. Each pair's weight is the sum of two
///    decoupled one-dimensional terms; pairs outside the sphere are dropped
///    and only the best `cap` extensions (by weight, then top-down order)
///    are kept.
/// 3. The remaining symbols of each survivor are obtained by quantizing the
///    interference-cancelled, scaled observation on each level.
/// 4. The lowest-weight leaf inside the sphere is returned.
///
/// An empty sphere at any stage triggers the restart policy.
pub fn sd_proposed(
    p: &LatticeProblem,
    c: &Constellation,
    policy: &RadiusPolicy,
    schedule: &KBestSchedule,
) -> Result<DetectionResult> {
    require_representation(p, Representation::Interleaved, "sd_proposed")?;
    policy.validate()?;
    let dim = p.dim();
    for k in (0..dim - 1).step_by(2) {
        if p.r.get(k, k + 1) != 0.0 {
            return Err(Error::Config(format!(
                "sd_proposed needs r[{k}][{}] == 0 exactly",
                k + 1
            )));
        }
    }
    if schedule.caps().len() + 1 > p.n {
        return Err(Error::Config(format!(
            "schedule has {} middle layers but only {} symbols sit below the top one",
            schedule.caps().len(),
            p.n - 1
        )));
    }

    let mut ops = OpCounter::new();
    let mut restarts = 0;
    loop {
        let radius_sq = policy.radius_for_attempt(p.radius_sq, restarts).unwrap_or(f64::INFINITY);
        match search(p, c, schedule, radius_sq, &mut ops)? {
            Outcome::Found(x, w) => return Ok(DetectionResult::finish(p, x, w, ops, restarts)),
            Outcome::Empty => restarts += 1,
        }
    }
}

fn search(
    p: &LatticeProblem,
    c: &Constellation,
    schedule: &KBestSchedule,
    radius_sq: f64,
    ops: &mut OpCounter,
) -> Result<Outcome> {
    let dim = p.dim();
    let rail = c.rail();

    // Top symbol: imaginary part at level 2N, real part at level 2N - 1.
    let (im, re) = (dim - 1, dim - 2);
    let mut upper = Vec::with_capacity(rail.len());
    for &omega in rail {
        ops.visit();
        let t = level_term(p.y_hat[im], p.r.get(im, im), omega, ops);
        let w = ops.add(0.0, t);
        if ops.less(w, radius_sq) {
            upper.push((omega, w));
        }
    }
    let mut lower = Vec::with_capacity(rail.len());
    for &omega in rail {
        ops.visit();
        let t = level_term(p.y_hat[re], p.r.get(re, re), omega, ops);
        if ops.less(t, radius_sq) {
            lower.push((omega, t));
        }
    }
    let mut survivors = Vec::with_capacity(upper.len() * lower.len());
    for &(x_im, w_im) in &upper {
        for &(x_re, t_re) in &lower {
            let w = ops.add(w_im, t_re);
            if ops.less(w, radius_sq) {
                let mut x = vec![rail[0]; dim];
                x[im] = x_im;
                x[re] = x_re;
                survivors.push(Survivor { x, w });
            }
        }
    }

    for (layer, &cap) in schedule.caps().iter().enumerate() {
        let im = dim - 3 - 2 * layer;
        let re = im - 1;
        let mut next = Vec::new();
        for s in &survivors {
            extend_pairs(p, rail, s, im, re, radius_sq, ops, &mut next);
        }
        next.sort_by(|a, b| {
            ops.compare();
            candidate_cmp(a.w, &a.x, b.w, &b.x)
        });
        next.truncate(cap);
        survivors = next;
    }
    if survivors.is_empty() {
        return Ok(Outcome::Empty);
    }

    let quantized_top = dim - 2 - 2 * schedule.caps().len();
    let mut best: Option<Survivor> = None;
    for mut s in survivors {
        let mut level = quantized_top;
        while level > 0 {
            let (im, re) = (level - 1, level - 2);
            let e_im = interference(p, im, im + 1, &s.x, ops);
            let e_re = interference(p, re, im + 1, &s.x, ops);
            let b_im = ops.sub(p.y_hat[im], e_im);
            let b_re = ops.sub(p.y_hat[re], e_re);
            for (lvl, b) in [(im, b_im), (re, b_re)] {
                let r_ll = p.r.get(lvl, lvl);
                ops.visit();
                let z = ops.div(b, r_ll)?;
                let x = quantize_counted(z, c, ops)?;
                s.x[lvl] = x;
                let t = level_term(b, r_ll, x, ops);
                let w = ops.add(s.w, t);
                debug_assert!(w >= s.w, "partial metric decreased");
                s.w = w;
            }
            level -= 2;
        }
        if !ops.less(s.w, radius_sq) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                ops.compare();
                candidate_cmp(s.w, &s.x, b.w, &b.x).is_lt()
            }
        };
        if better {
            best = Some(s);
        }
    }
    Ok(match best {
        Some(s) => Outcome::Found(s.x, s.w),
        None => Outcome::Empty,
    })
}

/// Appends every in-sphere (real, imaginary) extension of `s` at the
/// symbol occupying 0-indexed levels `re = im - 1` and `im`.
#[allow(clippy::too_many_arguments)]
fn extend_pairs(
    p: &LatticeProblem,
    rail: &[i32],
    s: &Survivor,
    im: usize,
    re: usize,
    radius_sq: f64,
    ops: &mut OpCounter,
    out: &mut Vec<Survivor>,
) {
    // r[re][im] is exactly zero, so both sums start above `im`.
    let e_im = interference(p, im, im + 1, &s.x, ops);
    let e_re = interference(p, re, im + 1, &s.x, ops);
    let b_im = ops.sub(p.y_hat[im], e_im);
    let b_re = ops.sub(p.y_hat[re], e_re);
    let slack = ops.sub(radius_sq, s.w);

    let mut imag = Vec::with_capacity(rail.len());
    for &omega in rail {
        ops.visit();
        let t = level_term(b_im, p.r.get(im, im), omega, ops);
        let w = ops.add(s.w, t);
        if ops.less(w, radius_sq) {
            imag.push((omega, w));
        }
    }
    let mut real = Vec::with_capacity(rail.len());
    for &omega in rail {
        ops.visit();
        let t = level_term(b_re, p.r.get(re, re), omega, ops);
        if ops.less(t, slack) {
            real.push((omega, t));
        }
    }
    for &(x_im, w_im) in &imag {
        for &(x_re, t_re) in &real {
            let w = ops.add(w_im, t_re);
            if ops.less(w, radius_sq) {
                let mut x = s.x.clone();
                x[im] = x_im;
                x[re] = x_re;
                out.push(Survivor { x, w });
            }
        }
    }
}
