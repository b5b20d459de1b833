//! Real-valued lattice views of a complex channel and the QR-reduced
//! closest-point problem.
//!
//! Levels are 1-indexed in docs (level `2N` is the root of the search tree,
//! level 1 the leaves) and 0-indexed in code (`level - 1`).

use crate::error::{Error, Result};
use crate::metrics::OpCounter;
use crate::modem::SymbolVector;
use crate::numkit::{apply_qt_counted, gram_schmidt_qr, ComplexMatrix, RealMatrix};
use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Representation {
    /// `[Re; Im]` blocks: `x = [Re s1..Re sN, Im s1..Im sN]`.
    Stacked,
    /// Per-symbol column pairs: `x = [Re s1, Im s1, ..., Re sN, Im sN]`.
    Interleaved,
}

impl Representation {
    /// Position in the problem vector of natural-order entry `i`
    /// (natural order is `[Re s1, Im s1, ...]`).
    fn position(self, i: usize, n: usize) -> usize {
        match self {
            Representation::Interleaved => i,
            Representation::Stacked => (i % 2) * n + i / 2,
        }
    }

    /// Reorders a natural-order symbol vector into this representation.
    pub fn from_natural(self, natural: &SymbolVector) -> SymbolVector {
        let n = natural.len() / 2;
        let mut out = vec![0; natural.len()];
        for (i, &v) in natural.as_slice().iter().enumerate() {
            out[self.position(i, n)] = v;
        }
        SymbolVector(out)
    }

    /// Inverse of [`Representation::from_natural`].
    pub fn to_natural(self, x: &SymbolVector) -> SymbolVector {
        let n = x.len() / 2;
        SymbolVector((0..x.len()).map(|i| x.as_slice()[self.position(i, n)]).collect())
    }
}

fn check_square(h: &ComplexMatrix) -> Result<usize> {
    if h.rows() != h.cols() || h.rows() == 0 {
        return Err(Error::Shape(format!(
            "channel must be square and non-empty, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    Ok(h.rows())
}

/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn stack_real(h: &ComplexMatrix) -> Result<RealMatrix> {
    let n = check_square(h)?;
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    for m in 0..n {
        for k in 0..n {
            let z = h.get(m, k);
            out.set(m, k, z.re);
            out.set(m, n + k, -z.im);
            out.set(n + m, k, z.im);
            out.set(n + m, n + k, z.re);
        }
    }
    Ok(out)
}

/// Each complex entry becomes the 2x2 block `[[Re, -Im], [Im, Re]]`.
pub fn interleave(h: &ComplexMatrix) -> Result<RealMatrix> {
    let n = check_square(h)?;
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    for m in 0..n {
        for k in 0..n {
            let z = h.get(m, k);
            out.set(2 * m, 2 * k, z.re);
            out.set(2 * m, 2 * k + 1, -z.im);
            out.set(2 * m + 1, 2 * k, z.im);
            out.set(2 * m + 1, 2 * k + 1, z.re);
        }
    }
    Ok(out)
}

pub fn reorder_received(y: &[Complex64], representation: Representation) -> Vec<f64> {
    match representation {
        Representation::Stacked => y.iter().map(|z| z.re).chain(y.iter().map(|z| z.im)).collect(),
        Representation::Interleaved => y.iter().flat_map(|z| [z.re, z.im]).collect(),
    }
}

/// Real channel matrix and received vector in the given representation.
pub fn real_model(
    h: &ComplexMatrix,
    y: &[Complex64],
    representation: Representation,
) -> Result<(RealMatrix, Vec<f64>)> {
    let hr = match representation {
        Representation::Stacked => stack_real(h)?,
        Representation::Interleaved => interleave(h)?,
    };
    if y.len() != h.rows() {
        return Err(Error::Shape(format!(
            "received vector has length {}, channel has {} rows",
            y.len(),
            h.rows()
        )));
    }
    Ok((hr, reorder_received(y, representation)))
}

/// Which dimension enters the initial radius `d^2 = 2 sigma^2 dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RadiusDim {
    /// N, the number of complex symbols.
    Complex,
    /// 2N, the dimension of the real search.
    Real,
}

impl FromStr for RadiusDim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(RadiusDim::Complex),
            "2n" => Ok(RadiusDim::Real),
            _ => Err(Error::Config(format!("radius dimension must be 'n' or '2n', got '{s}'"))),
        }
    }
}

impl fmt::Display for RadiusDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RadiusDim::Complex => "n",
            RadiusDim::Real => "2n",
        })
    }
}

/// Initial sphere radius and what to do when the sphere turns out empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusPolicy {
    pub dim: RadiusDim,
    /// Factor applied to `d^2` on each restart.
    pub growth: f64,
    /// Restarts allowed before falling back to an unbounded search.
    pub max_restarts: u32,
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        Self { dim: RadiusDim::Real, growth: 2.0, max_restarts: 20 }
    }
}

impl RadiusPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.growth.is_finite() && self.growth > 1.0) {
            return Err(Error::Config(format!("radius growth must exceed 1, got {}", self.growth)));
        }
        if self.max_restarts < 1 {
            return Err(Error::Config("max_restarts must be at least 1".into()));
        }
        Ok(())
    }

    /// `2 sigma^2 N` or `2 sigma^2 (2N)` for an N-antenna system.
    pub fn initial_sq(&self, sigma_sq: f64, n: usize) -> f64 {
        let dim = match self.dim {
            RadiusDim::Complex => n,
            RadiusDim::Real => 2 * n,
        };
        2.0 * sigma_sq * dim as f64
    }

    /// Radius for attempt `restart` (0 = first pass); `None` once the budget
    /// is spent and the search must run unbounded.
    pub fn radius_for_attempt(&self, initial_sq: f64, restart: u32) -> Option<f64> {
        (restart <= self.max_restarts).then(|| initial_sq * self.growth.powi(restart as i32))
    }
}

/// `min |y_hat - R x|^2` over the search set, with `R` upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeProblem {
    pub r: RealMatrix,
    pub y_hat: Vec<f64>,
    pub radius_sq: f64,
    pub representation: Representation,
    /// Number of complex symbols.
    pub n: usize,
    /// Arithmetic spent on the QR factorization and the rotation of `y`.
    pub preprocessing: OpCounter,
    pub zero_structure_max: f64,
}

impl LatticeProblem {
    /// Real dimension 2N.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Same problem with a different initial radius.
    pub fn with_radius_sq(mut self, radius_sq: f64) -> Self {
        self.radius_sq = radius_sq;
        self
    }
}

pub fn build_problem(
    h: &ComplexMatrix,
    y: &[Complex64],
    sigma_sq: f64,
    representation: Representation,
    policy: &RadiusPolicy,
) -> Result<LatticeProblem> {
    if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
        return Err(Error::Domain(format!("noise variance must be positive, got {sigma_sq}")));
    }
    policy.validate()?;
    let (hr, yr) = real_model(h, y, representation)?;
    let qr = gram_schmidt_qr(&hr)?;
    let mut preprocessing = qr.ops;
    let y_hat = apply_qt_counted(&qr.q, &yr, &mut preprocessing)?;
    let n = h.rows();
    Ok(LatticeProblem {
        r: qr.r,
        y_hat,
        radius_sq: policy.initial_sq(sigma_sq, n),
        representation,
        n,
        preprocessing,
        zero_structure_max: qr.zero_structure_max,
    })
}
