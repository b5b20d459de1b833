//! Operation accounting for the detectors.
//!
//! Every real add, subtract, multiply and divide executed inside a detector
//! goes through an [`OpCounter`]. Comparisons (radius tests, sorting,
//! quantizer decisions) are tallied separately and are not FLOPs. A counter
//! is owned by exactly one detection call.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounter {
    pub adds: u64,
    pub mults: u64,
    pub divs: u64,
    pub comparisons: u64,
    pub nodes: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Real additions, multiplications and divisions. Subtractions are
    /// counted as additions.
    pub fn flops(&self) -> u64 {
        self.adds + self.mults + self.divs
    }

    #[inline]
    pub fn add(&mut self, a: f64, b: f64) -> f64 {
        self.adds += 1;
        a + b
    }

    #[inline]
    pub fn sub(&mut self, a: f64, b: f64) -> f64 {
        self.adds += 1;
        a - b
    }

    #[inline]
    pub fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.mults += 1;
        a * b
    }

    #[inline]
    pub fn div(&mut self, a: f64, b: f64) -> Result<f64> {
        if b == 0.0 {
            return Err(Error::Domain("division by zero".into()));
        }
        self.divs += 1;
        Ok(a / b)
    }

    /// `a < b` with the comparison tallied.
    #[inline]
    pub fn less(&mut self, a: f64, b: f64) -> bool {
        self.comparisons += 1;
        a < b
    }

    #[inline]
    pub fn compare(&mut self) {
        self.comparisons += 1;
    }

    #[inline]
    pub fn visit(&mut self) {
        self.nodes += 1;
    }

    /// Inner product `sum_k a[k] * b[k]`: `len` mults and `len - 1` adds.
    pub fn dot(&mut self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let mut it = a.iter().zip(b);
        let Some((x, y)) = it.next() else {
            return 0.0;
        };
        let mut acc = self.mul(*x, *y);
        for (x, y) in it {
            let p = self.mul(*x, *y);
            acc = self.add(acc, p);
        }
        acc
    }

    pub fn snapshot(&self) -> OpCounter {
        *self
    }

    /// Adds another counter's tallies into this one.
    pub fn absorb(&mut self, other: &OpCounter) {
        self.adds += other.adds;
        self.mults += other.mults;
        self.divs += other.divs;
        self.comparisons += other.comparisons;
        self.nodes += other.nodes;
    }
}

pub fn counted_add(c: &mut OpCounter, a: f64, b: f64) -> f64 {
    c.add(a, b)
}

pub fn counted_mul(c: &mut OpCounter, a: f64, b: f64) -> f64 {
    c.mul(a, b)
}

pub fn counted_div(c: &mut OpCounter, a: f64, b: f64) -> Result<f64> {
    c.div(a, b)
}

pub fn snapshot(c: &OpCounter) -> OpCounter {
    c.snapshot()
}
