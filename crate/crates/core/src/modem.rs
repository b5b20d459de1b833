//! Square QAM as two independent PAM rails with Gray-labelled levels.
//!
//! Levels are the unnormalized odd integers `-(mu-1), ..., -1, 1, ..., mu-1`.
//! A complex symbol is the pair (real rail, imaginary rail); a symbol vector
//! in natural order is `[Re s1, Im s1, Re s2, Im s2, ...]`, and bits are laid
//! out the same way, `bits_per_rail` bits per rail, most significant first.

use crate::error::{Error, Result};
use crate::metrics::OpCounter;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    rail: Vec<i32>,
    bits_per_rail: usize,
}

impl Constellation {
    /// Square QAM of the given order (16 or 64).
    pub fn new(order: u32) -> Result<Self> {
        let mu: i32 = match order {
            16 => 4,
            64 => 8,
            _ => return Err(Error::Config(format!("unsupported QAM order {order}; expected 16 or 64"))),
        };
        let rail = (0..mu).map(|i| 2 * i - (mu - 1)).collect();
        Ok(Self { rail, bits_per_rail: mu.trailing_zeros() as usize })
    }

    pub fn rail(&self) -> &[i32] {
        &self.rail
    }

    /// Number of rail levels.
    pub fn mu(&self) -> usize {
        self.rail.len()
    }

    pub fn order(&self) -> u32 {
        (self.mu() * self.mu()) as u32
    }

    pub fn bits_per_rail(&self) -> usize {
        self.bits_per_rail
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_rail
    }

    /// Mean `|s|^2` over the complex constellation.
    pub fn avg_symbol_energy(&self) -> f64 {
        let sum: i64 = self.rail.iter().map(|&v| (v as i64) * (v as i64)).sum();
        2.0 * sum as f64 / self.mu() as f64
    }

    pub fn contains(&self, level: i32) -> bool {
        self.index_of(level).is_some()
    }

    fn index_of(&self, level: i32) -> Option<usize> {
        let mu = self.mu() as i32;
        let shifted = level + mu - 1;
        (level % 2 != 0 && (0..2 * mu).contains(&shifted)).then_some((shifted / 2) as usize)
    }

    /// Gray label of the rail level at ascending index `i`.
    fn label(i: usize) -> usize {
        i ^ (i >> 1)
    }

    fn index_from_label(mut g: usize) -> usize {
        let mut i = 0;
        while g != 0 {
            i ^= g;
            g >>= 1;
        }
        i
    }
}

/// Rail levels for one transmit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolVector(pub Vec<i32>);

impl SymbolVector {
    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Maps `2 * n_antennas * bits_per_rail` bits (each 0 or 1) to rail levels
/// in natural order.
pub fn bits_to_symbols(bits: &[u8], c: &Constellation, n_antennas: usize) -> Result<SymbolVector> {
    let k = c.bits_per_rail();
    let expected = 2 * n_antennas * k;
    if bits.len() != expected {
        return Err(Error::Shape(format!("expected {expected} bits, got {}", bits.len())));
    }
    bits.chunks(k)
        .map(|chunk| {
            let label = chunk.iter().try_fold(0usize, |acc, &b| match b {
                0 | 1 => Ok((acc << 1) | b as usize),
                _ => Err(Error::Domain(format!("bit value {b} is not 0 or 1"))),
            })?;
            Ok(c.rail[Constellation::index_from_label(label)])
        })
        .collect::<Result<Vec<_>>>()
        .map(SymbolVector)
}

pub fn symbols_to_bits(s: &SymbolVector, c: &Constellation) -> Result<Vec<u8>> {
    let k = c.bits_per_rail();
    let mut bits = Vec::with_capacity(s.len() * k);
    for &level in s.as_slice() {
        let i = c
            .index_of(level)
            .ok_or_else(|| Error::Domain(format!("{level} is not a {}-QAM rail level", c.order())))?;
        let label = Constellation::label(i);
        bits.extend((0..k).rev().map(|b| ((label >> b) & 1) as u8));
    }
    Ok(bits)
}

/// Nearest rail level to `v`.
///
/// Values past the outermost levels clamp to them. An exact midpoint goes to
/// the neighbour of smaller magnitude; at 0 (equal magnitudes) it goes to -1.
pub fn quantize_rail(v: f64, c: &Constellation) -> Result<i32> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("cannot quantize {v}")));
    }
    let rail = c.rail();
    let lo = rail[0] as f64;
    let t = (v - lo) / 2.0;
    let last = rail.len() - 1;
    if t <= 0.0 {
        return Ok(rail[0]);
    }
    if t >= last as f64 {
        return Ok(rail[last]);
    }
    let i = t.floor() as usize;
    let frac = t - i as f64;
    let upper = frac > 0.5 || (frac == 0.5 && rail[i + 1].abs() < rail[i].abs());
    let idx = if upper { i + 1 } else { i };
    Ok(rail[idx])
}

/// [`quantize_rail`] with the decision tallied as one comparison.
pub(crate) fn quantize_counted(v: f64, c: &Constellation, ops: &mut OpCounter) -> Result<i32> {
    ops.compare();
    quantize_rail(v, c)
}
