//! Small dense matrices and classical Gram-Schmidt QR.
//!
//! Sizes here never exceed 12x12, so everything is plain row-major `Vec<f64>`
//! with triple loops.

use crate::error::{Error, Result};
use crate::metrics::OpCounter;
use num_complex::Complex64;

/// Residual norm below which a column is considered linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Largest admissible `|r[k][k+1]|` (odd k, 1-indexed) before it is forced
/// to zero for a paired-column matrix.
pub const ZERO_STRUCTURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.cols + c] = v;
    }

    /// Row `r` as a slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when the matrix is made of 2x2 blocks `[[a, -b], [b, a]]`, the
    /// real form of a complex matrix with each symbol's real and imaginary
    /// columns adjacent.
    pub fn has_paired_columns(&self) -> bool {
        if !self.is_square() || !self.rows.is_multiple_of(2) || self.rows == 0 {
            return false;
        }
        let n = self.rows / 2;
        (0..n).all(|m| {
            (0..n).all(|k| {
                let (r0, r1, c0, c1) = (2 * m, 2 * m + 1, 2 * k, 2 * k + 1);
                self.get(r0, c0) == self.get(r1, c1) && self.get(r0, c1) == -self.get(r1, c0)
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum())
            .collect())
    }
}

pub fn mat_mul(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = RealMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = 0.0;
            for k in 0..a.cols {
                acc += a.get(i, k) * b.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    pub q: RealMatrix,
    pub r: RealMatrix,
    /// Largest `|r[k][k+1]|` over odd k (1-indexed), measured before any
    /// forcing.
    pub zero_structure_max: f64,
    /// Whether the paired-column zeros were forced to exact 0.0.
    pub zeros_forced: bool,
    /// Arithmetic spent on the factorization (square roots are tallied with
    /// the divisions).
    pub ops: OpCounter,
}

/// Classical Gram-Schmidt QR of a square matrix.
///
/// `r[j][k] = <e_j, h_k>` for `j < k`, `u_k = h_k - sum_j r[j][k] e_j`,
/// `r[k][k] = |u_k|`, `e_k = u_k / |u_k|`. The diagonal is therefore
/// positive and the factorization unique.
///
/// When `h` has paired columns (see [`RealMatrix::has_paired_columns`]),
/// every `r[k][k+1]` with odd 1-indexed k vanishes analytically. Those
/// entries are checked against [`ZERO_STRUCTURE_TOL`] and set to exactly
/// zero.
pub fn gram_schmidt_qr(h: &RealMatrix) -> Result<QrFactors> {
    if !h.is_square() {
        return Err(Error::Shape(format!("QR needs a square matrix, got {}x{}", h.rows, h.cols)));
    }
    let n = h.rows;
    let mut ops = OpCounter::new();
    // Orthonormal basis stored column-wise as rows of `basis` for contiguous dots.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = RealMatrix::zeros(n, n);

    for k in 0..n {
        let hk = h.col(k);
        let mut u = hk.clone();
        for (j, e) in basis.iter().enumerate() {
            let rjk = ops.dot(e, &hk);
            r.set(j, k, rjk);
            for (ui, ei) in u.iter_mut().zip(e) {
                let p = ops.mul(rjk, *ei);
                *ui = ops.sub(*ui, p);
            }
        }
        let norm_sq = ops.dot(&u, &u);
        ops.divs += 1;
        let norm = norm_sq.sqrt();
        if norm.is_nan() || norm <= RANK_TOL {
            return Err(Error::DegenerateChannel { column: k, norm });
        }
        r.set(k, k, norm);
        for ui in u.iter_mut() {
            *ui = ops.div(*ui, norm)?;
        }
        basis.push(u);
    }

    let mut q = RealMatrix::zeros(n, n);
    for (k, e) in basis.iter().enumerate() {
        for (i, v) in e.iter().enumerate() {
            q.set(i, k, *v);
        }
    }

    let zero_structure_max = (0..n.saturating_sub(1))
        .step_by(2)
        .map(|k| r.get(k, k + 1).abs())
        .fold(0.0, f64::max);

    let zeros_forced = h.has_paired_columns();
    if zeros_forced {
        if zero_structure_max >= ZERO_STRUCTURE_TOL {
            return Err(Error::ZeroStructure(zero_structure_max));
        }
        for k in (0..n - 1).step_by(2) {
            r.set(k, k + 1, 0.0);
        }
    }

    Ok(QrFactors { q, r, zero_structure_max, zeros_forced, ops })
}

/// `q^T y`.
pub fn apply_qt(q: &RealMatrix, y: &[f64]) -> Result<Vec<f64>> {
    apply_qt_counted(q, y, &mut OpCounter::new())
}

pub fn apply_qt_counted(q: &RealMatrix, y: &[f64], ops: &mut OpCounter) -> Result<Vec<f64>> {
    if y.len() != q.rows {
        return Err(Error::Shape(format!(
            "q has {} rows but y has length {}",
            q.rows,
            y.len()
        )));
    }
    Ok((0..q.cols).map(|c| ops.dot(&q.col(c), y)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identity_times_a_is_a() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(mat_mul(&RealMatrix::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn hand_product() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = RealMatrix::from_rows(&[vec![5.0], vec![6.0]]).unwrap();
        let c = mat_mul(&a, &b).unwrap();
        assert_eq!(c.entries(), &[17.0, 39.0]);
    }

    #[test]
    fn product_shape_mismatch() {
        let a = RealMatrix::zeros(2, 3);
        assert!(matches!(mat_mul(&a, &a), Err(Error::Shape(_))));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(RealMatrix::new(2, 2, vec![0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(RealMatrix::new(1, 1, vec![f64::NAN]), Err(Error::Domain(_))));
    }

    #[test]
    fn qr_of_identity() {
        let f = gram_schmidt_qr(&RealMatrix::identity(4)).unwrap();
        assert_eq!(f.q, RealMatrix::identity(4));
        assert_eq!(f.r, RealMatrix::identity(4));
    }

    #[test]
    fn qr_two_by_two_by_hand() {
        let h = RealMatrix::from_rows(&[vec![3.0, 1.0], vec![4.0, 2.0]]).unwrap();
        let f = gram_schmidt_qr(&h).unwrap();
        assert!(approx(f.r.get(0, 0), 5.0));
        assert!(approx(f.r.get(0, 1), 11.0 / 5.0));
        assert_eq!(f.r.get(1, 0), 0.0);
        assert!(approx(f.r.get(1, 1), 2.0 / 5.0));
        assert!(approx(f.q.get(0, 0), 0.6) && approx(f.q.get(1, 0), 0.8));
        assert!(approx(f.q.get(0, 1), -0.8) && approx(f.q.get(1, 1), 0.6));
        assert!(!f.zeros_forced);
    }

    #[test]
    fn rank_deficient_is_degenerate() {
        let h = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(gram_schmidt_qr(&h), Err(Error::DegenerateChannel { column: 1, .. })));
        assert!(matches!(gram_schmidt_qr(&RealMatrix::zeros(3, 3)), Err(Error::DegenerateChannel { column: 0, .. })));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(gram_schmidt_qr(&RealMatrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn apply_qt_identity_and_shape() {
        let y = [1.0, -2.0, 3.5];
        assert_eq!(apply_qt(&RealMatrix::identity(3), &y).unwrap(), y.to_vec());
        assert!(matches!(apply_qt(&RealMatrix::identity(2), &y), Err(Error::Shape(_))));
    }

    #[test]
    fn paired_columns_detection() {
        let h = RealMatrix::from_rows(&[vec![1.0, -2.0], vec![2.0, 1.0]]).unwrap();
        assert!(h.has_paired_columns());
        let g = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(!g.has_paired_columns());
        assert!(!RealMatrix::zeros(3, 3).has_paired_columns());
    }
}
