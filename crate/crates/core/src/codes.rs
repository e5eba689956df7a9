//! Structured codebooks.
//!
//! Everything here is one-dimensional: the scalar lattice codebook
//! `{k P^(1/4+eps)} ∩ [-sqrt(P), sqrt(P)]`, nested scalar lattices
//! `δZ ⊃ KδZ` with the centred fundamental region `[-Kδ/2, Kδ/2)`, and
//! offset-free digit codebooks `sqrt(P0) Σ a_i Q^i`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::channel::Sign;
use crate::{Error, Result};

/// Relative tolerance for "is this a lattice point" tests.
pub const LATTICE_TOL: f64 = 1e-9;

/// Uniform scalar lattice codebook with spacing `P^(1/4 + eps)` clipped to
/// `[-sqrt(P), sqrt(P)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarLatticeCodebook {
    pub step: f64,
    pub half_width: f64,
    pub points: Vec<f64>,
    pub power: f64,
    pub epsilon: f64,
}

fn check_codebook_params(power: f64, epsilon: f64) -> Result<()> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::domain(format!("power must be positive, got {power}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1/4), got {epsilon}")));
    }
    Ok(())
}

/// Largest `n` with `n * step <= half_width`.
fn half_count(step: f64, half_width: f64) -> f64 {
    let mut n = (half_width / step).floor();
    if n >= 2f64.powi(52) {
        // unit steps are no longer representable; the quotient is as exact as it gets
        return n;
    }
    while (n + 1.0) * step <= half_width {
        n += 1.0;
    }
    while n > 0.0 && n * step > half_width {
        n -= 1.0;
    }
    n
}

pub fn build_scalar_codebook(power: f64, epsilon: f64) -> Result<ScalarLatticeCodebook> {
    check_codebook_params(power, epsilon)?;
    let step = power.powf(0.25 + epsilon);
    let half_width = power.sqrt();
    let n = half_count(step, half_width) as i64;
    let points = (-n..=n).map(|k| k as f64 * step).collect();
    Ok(ScalarLatticeCodebook {
        step,
        half_width,
        points,
        power,
        epsilon,
    })
}

/// `log2 |C|` without materialising the codebook; usable for any `P` that
/// fits in an `f64`.
pub fn scalar_codebook_log2_size(power: f64, epsilon: f64) -> Result<f64> {
    check_codebook_params(power, epsilon)?;
    let n = half_count(power.powf(0.25 + epsilon), power.sqrt());
    Ok((2.0 * n + 1.0).log2())
}

impl ScalarLatticeCodebook {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn log2_size(&self) -> f64 {
        (self.points.len() as f64).log2()
    }
}

/// Centred residue of `n` modulo `period`, in `[-floor(period/2), ceil(period/2))`.
///
/// This is the integer form of the min-norm modulo on the half-open region
/// `[-period/2, period/2)`.
pub fn mod_centered(n: i64, period: i64) -> i64 {
    debug_assert!(period > 0);
    let h = period / 2;
    (n + h).rem_euclid(period) - h
}

/// Nested pair `δZ ⊃ KδZ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedScalarLattice {
    pub fine_step: f64,
    pub ratio: u32,
}

impl NestedScalarLattice {
    pub fn new(fine_step: f64, ratio: u32) -> Result<Self> {
        if !(fine_step > 0.0) || !fine_step.is_finite() {
            return Err(Error::domain(format!("fine step must be positive, got {fine_step}")));
        }
        if ratio < 2 {
            return Err(Error::domain(format!("nesting ratio must be at least 2, got {ratio}")));
        }
        Ok(Self { fine_step, ratio })
    }

    pub fn coarse_step(&self) -> f64 {
        self.ratio as f64 * self.fine_step
    }

    /// Code rate in bits per dimension.
    pub fn rate(&self) -> f64 {
        (self.ratio as f64).log2()
    }

    /// Indices `k` of the fine points `kδ` inside the fundamental region.
    pub fn region_indices(&self) -> Range<i64> {
        let k = self.ratio as i64;
        -(k / 2)..(k - k / 2)
    }

    pub fn fine_points(&self) -> Vec<f64> {
        self.region_indices().map(|k| k as f64 * self.fine_step).collect()
    }

    /// `x mod Λc` onto `[-Kδ/2, Kδ/2)`.
    pub fn mod_coarse(&self, x: f64) -> f64 {
        mod_interval(x, self.coarse_step())
    }

    /// Index of `u` if it is a fine point inside the fundamental region.
    pub fn fine_index(&self, u: f64) -> Option<i64> {
        let k = (u / self.fine_step).round();
        if (u - k * self.fine_step).abs() > LATTICE_TOL * self.fine_step {
            return None;
        }
        let k = k as i64;
        self.region_indices().contains(&k).then_some(k)
    }
}

/// `x` reduced onto `[-period/2, period/2)`.
pub fn mod_interval(x: f64, period: f64) -> f64 {
    let half = period / 2.0;
    let mut r = x - period * (x / period + 0.5).floor();
    if r >= half {
        r -= period;
    }
    if r < -half {
        r += period;
    }
    r
}

/// `mod_coarse` as a free function.
pub fn mod_coarse(x: f64, lat: &NestedScalarLattice) -> f64 {
    lat.mod_coarse(x)
}

/// Dithered nested-lattice encoding `(u + d) mod Λc`.
pub fn encode_dithered(u: f64, dither: f64, lat: &NestedScalarLattice) -> Result<f64> {
    if lat.fine_index(u).is_none() {
        return Err(Error::domain(format!(
            "{u} is not a fine lattice point in the fundamental region"
        )));
    }
    Ok(lat.mod_coarse(u + dither))
}

/// A sum of two codewords split into a coarse-lattice quotient and a residue
/// in the fundamental region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRepresentation {
    /// `(s - residue) / (Kδ)`.
    pub t: i64,
    pub residue: f64,
}

impl SumRepresentation {
    pub fn reconstruct(&self, lat: &NestedScalarLattice) -> f64 {
        self.residue + self.t as f64 * lat.coarse_step()
    }

    /// Which of the two admissible preimages of `residue` the sum is: 1 for
    /// the residue itself, 2 for its coarse-lattice neighbour on the far
    /// side of the origin.
    ///
    /// Together with the residue this index determines the sum, and it takes
    /// at most `2^N = 2` values. The raw quotient `t` can take three.
    pub fn branch(&self) -> u8 {
        if self.t == 0 {
            1
        } else {
            2
        }
    }

    /// Inverse of [`SumRepresentation::branch`].
    pub fn from_branch(branch: u8, residue: f64) -> Result<Self> {
        let t = match branch {
            1 => 0,
            2 if residue >= 0.0 => -1,
            2 => 1,
            _ => return Err(Error::domain(format!("branch must be 1 or 2, got {branch}"))),
        };
        Ok(Self { t, residue })
    }
}

/// Splits `s = x1 ± x2` (both in the fundamental region) into quotient and
/// residue.
pub fn represent_sum(s: f64, lat: &NestedScalarLattice) -> Result<SumRepresentation> {
    let c = lat.coarse_step();
    if !(s >= -c && s < c) {
        return Err(Error::domain(format!(
            "{s} is not a sum of two fundamental-region points (|s| must be below {c})"
        )));
    }
    let residue = lat.mod_coarse(s);
    let t = ((s - residue) / c).round() as i64;
    Ok(SumRepresentation { t, residue })
}

/// [`represent_sum`] for `x1 ± x2`.
pub fn represent_combination(
    x1: f64,
    x2: f64,
    sign: Sign,
    lat: &NestedScalarLattice,
) -> Result<SumRepresentation> {
    represent_sum(x1 + sign.value() * x2, lat)
}

/// Offset-free Q-ary digit codebook `X = sqrt(P0) Σ_i a_i Q^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitCodebook {
    pub base: u32,
    pub digits: u32,
    pub unit: f64,
    /// One probability vector over `{0..base}` per digit position.
    pub digit_dist: Vec<Vec<f64>>,
}

impl DigitCodebook {
    pub fn new(base: u32, digits: u32, unit: f64, digit_dist: Vec<Vec<f64>>) -> Result<Self> {
        if base < 2 || digits < 1 {
            return Err(Error::domain("digit codebook needs base >= 2 and at least one digit"));
        }
        if !(unit > 0.0) {
            return Err(Error::domain(format!("unit must be positive, got {unit}")));
        }
        if base.checked_pow(digits).is_none() {
            return Err(Error::domain("base^digits overflows"));
        }
        if digit_dist.len() != digits as usize {
            return Err(Error::domain("need one distribution per digit"));
        }
        for d in &digit_dist {
            if d.len() != base as usize || d.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::domain("digit distribution has wrong length or negative mass"));
            }
            let total: f64 = d.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("digit distribution sums to {total}")));
            }
        }
        Ok(Self {
            base,
            digits,
            unit,
            digit_dist,
        })
    }

    pub fn uniform(base: u32, digits: u32, unit: f64) -> Result<Self> {
        let d = vec![vec![1.0 / base as f64; base as usize]; digits as usize];
        Self::new(base, digits, unit, d)
    }

    pub fn max_value(&self) -> f64 {
        self.unit * (self.base.pow(self.digits) - 1) as f64
    }

    /// `sqrt(P0) Σ a_i Q^i`, least significant digit first.
    pub fn encode(&self, digits: &[u32]) -> Result<f64> {
        if digits.len() != self.digits as usize {
            return Err(Error::domain(format!(
                "expected {} digits, got {}",
                self.digits,
                digits.len()
            )));
        }
        let mut acc: u64 = 0;
        for &a in digits.iter().rev() {
            if a >= self.base {
                return Err(Error::domain(format!("digit {a} out of range for base {}", self.base)));
            }
            acc = acc * self.base as u64 + a as u64;
        }
        Ok(self.unit * acc as f64)
    }
}

pub fn digit_encode(digits: &[u32], book: &DigitCodebook) -> Result<f64> {
    book.encode(digits)
}
