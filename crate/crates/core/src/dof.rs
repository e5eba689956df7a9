//! Closed-form achievable rates and secure degrees of freedom.
//!
//! The secure DoF of a rate `R_e` is its prelog `R_e / (½ log2 ΣP)` as the
//! powers grow. Which scheme achieves what depends on the channel:
//!
//! | channel                          | scheme                         | DoF      |
//! |----------------------------------|--------------------------------|----------|
//! | complex, `ψ ≠ 0, π`              | helper jams the real part only | 1        |
//! | real, `sqrt(ab) = 1`, `+`        | none (degraded)                | 0        |
//! | real, `sqrt(ab) = 1`, `-`        | biased binary digits           | ≈ 0.1095 |
//! | real, `sqrt(ab)` irrational      | scalar lattice codebook        | 1/2      |
//! | real, otherwise                  | layered nested lattices        | sweep    |
//!
//! Gaussian signaling saturates for every channel, see
//! [`gaussian_baseline_rate`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channel::{enumerate_decompositions, gcd, phase_is_degenerate, ChannelParams, RationalDecomposition, Sign};
use crate::codes::{build_scalar_codebook, scalar_codebook_log2_size};
use crate::infotheory::{gaussian_capacity, mixture_mi_with, optimize_theorem6, MixtureChannelSpec};
use crate::{Error, Exec, Result};

/// Which closed form of the layered-scheme DoF to report.
///
/// `Eq36` is the expression as stated in the theorem; `Eq53` is what the
/// layered derivation actually produces (numerator smaller by one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Eq36,
    Eq53,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ComplexTheorem1,
    IrrationalTheorem4,
    DegradedZero,
    EqualGainTheorem6,
    LayeredTheorem7,
}

/// An achievable secure DoF and the scheme achieving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofResult {
    pub value: f64,
    pub scheme: Scheme,
    /// The decomposition used by the layered scheme, when one is feasible.
    pub witness: Option<RationalDecomposition>,
    pub variant: Option<Variant>,
}

/// Secure DoF of `rate` at total power `total_power`: `rate / (½ log2 ΣP)`.
pub fn dof_ratio(rate: f64, total_power: f64) -> f64 {
    rate / (0.5 * total_power.log2())
}

/// Secrecy rate of the complex channel after the real reduction, with the
/// helper sending Gaussian noise on the real part.
pub fn eq7_rate(p1: f64, p2: f64, b: f64, psi: f64) -> Result<f64> {
    if !(p1 >= 0.0) || !(p2 > 0.0) || !(b > 0.0) {
        return Err(Error::domain("powers must be nonnegative (p2 positive) and b positive"));
    }
    if phase_is_degenerate(psi) {
        return Err(Error::domain(format!("phase {psi} is a multiple of pi")));
    }
    let s = psi.sin();
    let d1_noise = b / (s * s) / 2.0;
    let rate = gaussian_capacity(p1 / d1_noise)? - gaussian_capacity(p1 / (p2 + 0.5))?;
    Ok(rate.max(0.0))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1/4), got {epsilon}")));
    }
    Ok(())
}

/// Lower bound on `I(X1; Y1)` for `X1` uniform on the scalar lattice
/// codebook: `(1 - 2 exp(-P^{2ε} / 8b)) log2|C| - 1`.
///
/// Reported as-is; it is negative (vacuous) until `P^{2ε}` is large compared
/// with `8b`.
pub fn theorem4_mi_bound(power: f64, epsilon: f64, b: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(b > 0.0) {
        return Err(Error::domain(format!("b must be positive, got {b}")));
    }
    let log_size = scalar_codebook_log2_size(power, epsilon)?;
    let reliability = 1.0 - 2.0 * (-power.powf(2.0 * epsilon) / (8.0 * b)).exp();
    Ok(reliability * log_size - 1.0)
}

/// Power allocation of the layered nested-lattice scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredAllocation {
    pub gamma: f64,
    pub p: u64,
    pub q: u64,
    pub b: f64,
    /// `(1 - γ²) / γ⁴`
    pub alpha: f64,
    /// `q² + (p + γ)²`
    pub beta: f64,
    pub m_layers: usize,
    /// `P_i`, layer 1 (weakest) first.
    pub powers: Vec<f64>,
    /// `A_i`: power of everything below layer `i`, noise included.
    pub interference: Vec<f64>,
    /// `R_i = ½ log2((1 - γ²) / γ²)`, the same for every layer.
    pub per_layer_rate: f64,
    pub total_power: f64,
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma == 0.0 || gamma.abs() >= 1.0 {
        return Err(Error::domain(format!("gamma = {gamma} must satisfy 0 < |gamma| < 1")));
    }
    if gamma.abs() >= std::f64::consts::FRAC_1_SQRT_2 {
        return Err(Error::infeasible(format!(
            "|gamma| = {} is not below 1/sqrt(2); layers cannot be peeled off",
            gamma.abs()
        )));
    }
    Ok(())
}

fn check_pq(p: u64, q: u64) -> Result<()> {
    if p == 0 || q == 0 || gcd(p, q) != 1 {
        return Err(Error::domain(format!("p = {p}, q = {q} must be coprime positive integers")));
    }
    Ok(())
}

/// Balances the two decoding constraints of every layer,
/// `P_i / (γ² P_i + A_i) = γ² P_i / A_i`, which gives
/// `P_i = α (αβ + 1)^{i-1} q² b` and `A_i = (αβ + 1)^{i-1} q² b`.
pub fn layered_allocation(gamma: f64, p: u64, q: u64, b: f64, m_layers: usize) -> Result<LayeredAllocation> {
    check_gamma(gamma)?;
    check_pq(p, q)?;
    if !(b > 0.0) {
        return Err(Error::domain(format!("b must be positive, got {b}")));
    }
    if m_layers == 0 {
        return Err(Error::domain("need at least one layer"));
    }
    let g2 = gamma * gamma;
    let alpha = (1.0 - g2) / (g2 * g2);
    let pg = p as f64 + gamma;
    let beta = (q * q) as f64 + pg * pg;
    let growth = alpha * beta + 1.0;
    let base = (q * q) as f64 * b;
    let interference: Vec<f64> = (0..m_layers).map(|i| growth.powi(i as i32) * base).collect();
    let powers: Vec<f64> = interference.iter().map(|a| alpha * a).collect();
    let total_power = (growth.powi(m_layers as i32) - 1.0) / beta * base;
    Ok(LayeredAllocation {
        gamma,
        p,
        q,
        b,
        alpha,
        beta,
        m_layers,
        powers,
        interference,
        per_layer_rate: 0.5 * ((1.0 - g2) / g2).log2(),
        total_power,
    })
}

impl LayeredAllocation {
    /// Secrecy accounting `Σ R_i - M`: each layer leaks at most one bit.
    pub fn secrecy_rate(&self) -> f64 {
        self.m_layers as f64 * (self.per_layer_rate - 1.0)
    }
}

/// `f(γ) = (1 - γ²)(q² + (p + γ)²) + γ⁴`.
pub fn theorem7_f(gamma: f64, p: u64, q: u64) -> f64 {
    let g2 = gamma * gamma;
    let pg = p as f64 + gamma;
    (1.0 - g2) * ((q * q) as f64 + pg * pg) + g2 * g2
}

/// Numerator and denominator of the layered-scheme DoF before clamping.
pub fn theorem7_parts(gamma: f64, p: u64, q: u64, variant: Variant) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    check_pq(p, q)?;
    let g2 = gamma * gamma;
    Ok(match variant {
        Variant::Eq36 => (
            (1.0 - g2).log2() - g2.log2() - 1.0,
            theorem7_f(gamma, p, q).log2() - 2.0 * g2.log2(),
        ),
        Variant::Eq53 => {
            let alpha = (1.0 - g2) / (g2 * g2);
            let pg = p as f64 + gamma;
            let beta = (q * q) as f64 + pg * pg;
            (((1.0 - g2) / g2).log2() - 2.0, (alpha * beta + 1.0).log2())
        }
    })
}

/// Secure DoF of the layered nested-lattice scheme, clamped at zero.
pub fn theorem7_dof(gamma: f64, p: u64, q: u64, variant: Variant) -> Result<f64> {
    let (num, den) = theorem7_parts(gamma, p, q, variant)?;
    Ok((num / den).max(0.0))
}

/// Best layered-scheme DoF over all decompositions with `q <= qmax`.
pub fn best_dof_over_decompositions(sqrt_ab: f64, qmax: u64, variant: Variant) -> DofResult {
    let mut best: Option<(f64, RationalDecomposition)> = None;
    for d in enumerate_decompositions(sqrt_ab, qmax) {
        let Ok(v) = theorem7_dof(d.gamma, d.p, d.q, variant) else {
            continue;
        };
        if v > 0.0 && best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, d));
        }
    }
    DofResult {
        value: best.map_or(0.0, |b| b.0),
        scheme: Scheme::LayeredTheorem7,
        witness: best.map(|b| b.1),
        variant: Some(variant),
    }
}

/// Gaussian codebooks at both transmitters, the helper jamming at full power:
/// `max(0, C(p1 / (ab p2 + b)) - C(p1 / (p2 + 1)))`.
///
/// Converges to `max(0, C(1/ab) - C(1))` as `p1 = p2 → ∞`, so its DoF is zero.
pub fn gaussian_baseline_rate(p1: f64, p2: f64, a: f64, b: f64) -> Result<f64> {
    if !(p1 > 0.0 && p2 > 0.0 && a > 0.0 && b > 0.0) {
        return Err(Error::domain("baseline parameters must all be positive"));
    }
    let rate = gaussian_capacity(p1 / (a * b * p2 + b))? - gaussian_capacity(p1 / (p2 + 1.0))?;
    Ok(rate.max(0.0))
}

/// Whether the caller asserts `sqrt(ab)` is (algebraic) irrational.
///
/// Irrationality cannot be read off a float, so this is an input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumberClass {
    TreatIrrational,
    #[default]
    TreatRational,
}

const THEOREM6_GRID: usize = 1000;

/// Optimised value of the biased-digit objective, computed once.
pub fn equal_gain_dof() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        optimize_theorem6(THEOREM6_GRID)
            .expect("grid size is valid")
            .value
    })
}

/// Best achievable secure DoF over every applicable scheme.
pub fn sdof_map(params: &ChannelParams, class: NumberClass, qmax: u64, variant: Variant) -> DofResult {
    let fixed = |value, scheme| DofResult {
        value,
        scheme,
        witness: None,
        variant: None,
    };
    if let Some(psi) = params.psi {
        if !phase_is_degenerate(psi) {
            return fixed(1.0, Scheme::ComplexTheorem1);
        }
    }
    let g = params.cross_gain();
    if (g - 1.0).abs() <= 1e-12 {
        return match params.sign {
            Sign::Plus => fixed(0.0, Scheme::DegradedZero),
            Sign::Minus => fixed(equal_gain_dof(), Scheme::EqualGainTheorem6),
        };
    }
    let layered = best_dof_over_decompositions(g, qmax, variant);
    if class == NumberClass::TreatIrrational && layered.value < 0.5 {
        return fixed(0.5, Scheme::IrrationalTheorem4);
    }
    layered
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    ScalarLattice,
    GaussianBaseline,
}

/// `I(X1; Y1) - I(X1; Y2)` for each power.
///
/// For the scalar lattice both inputs are uniform on the same codebook and
/// the helper's symbol acts as jamming; each mutual information is a
/// difference of two Gaussian-mixture informations,
/// `I(X1; Y) = I(X1, X2; Y) - I(X2; Y | X1)`.
pub fn mi_difference_curve(
    powers: &[f64],
    sqrt_ab: f64,
    b: f64,
    epsilon: f64,
    kind: InputKind,
) -> Result<Vec<(f64, f64)>> {
    mi_difference_curve_with(powers, sqrt_ab, b, epsilon, kind, Exec::default())
}

pub fn mi_difference_curve_with(
    powers: &[f64],
    sqrt_ab: f64,
    b: f64,
    epsilon: f64,
    kind: InputKind,
    exec: Exec,
) -> Result<Vec<(f64, f64)>> {
    if powers.iter().any(|&p| !(p > 0.0)) || powers.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("powers must be positive and strictly ascending"));
    }
    if !(sqrt_ab > 0.0) || !(b > 0.0) {
        return Err(Error::domain("sqrt(ab) and b must be positive"));
    }
    match kind {
        InputKind::GaussianBaseline => {
            let a = sqrt_ab * sqrt_ab / b;
            powers
                .iter()
                .map(|&p| Ok((p, gaussian_baseline_rate(p, p, a, b)?)))
                .collect()
        }
        InputKind::ScalarLattice => {
            check_epsilon(epsilon)?;
            powers
                .iter()
                .map(|&p| Ok((p, scalar_lattice_mi_difference(p, sqrt_ab, b, epsilon, exec)?)))
                .collect()
        }
    }
}

fn scalar_lattice_mi_difference(power: f64, sqrt_ab: f64, b: f64, epsilon: f64, exec: Exec) -> Result<f64> {
    let book = build_scalar_codebook(power, epsilon)?;
    if book.len() <= 1 {
        return Ok(0.0);
    }
    let pts = &book.points;
    let combos = |gain: f64| -> Vec<f64> {
        pts.iter()
            .flat_map(|&x1| pts.iter().map(move |&x2| x1 + gain * x2))
            .collect()
    };
    let helper = |gain: f64| -> Vec<f64> { pts.iter().map(|&x2| gain * x2).collect() };
    let mi = |values: &[f64], sigma: f64| mixture_mi_with(&MixtureChannelSpec::uniform(values, sigma)?, exec);

    let sigma1 = b.sqrt();
    let i_y1 = mi(&combos(sqrt_ab), sigma1)? - mi(&helper(sqrt_ab), sigma1)?;
    // the codebook is symmetric, so X1 - X2 has the law of X1 + X2
    let i_y2 = mi(&combos(1.0), 1.0)? - mi(&helper(1.0), 1.0)?;
    Ok((i_y1 - i_y2).max(0.0))
}

/// One grid point of the `sqrt(ab)` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sqrt_ab: f64,
    pub dof_eq36: f64,
    pub dof_eq53: f64,
    pub best_p: Option<u64>,
    pub best_q: Option<u64>,
    pub best_gamma: Option<f64>,
}

/// Evenly spaced grid of `steps` points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let span = hi - lo;
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + span * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

pub fn sweep(lo: f64, hi: f64, steps: usize, qmax: u64) -> Result<Vec<SweepRow>> {
    sweep_with(lo, hi, steps, qmax, Exec::default())
}

/// Best layered-scheme DoF on an even grid of `sqrt(ab)`, both variants.
/// The witness columns come from the `Eq36` maximiser.
pub fn sweep_with(lo: f64, hi: f64, steps: usize, qmax: u64, exec: Exec) -> Result<Vec<SweepRow>> {
    if !(lo > 0.0 && lo < hi) || !hi.is_finite() {
        return Err(Error::domain(format!("need 0 < min < max, got [{lo}, {hi}]")));
    }
    if steps < 2 || qmax < 1 {
        return Err(Error::domain("need at least 2 steps and qmax >= 1"));
    }
    let grid = linspace(lo, hi, steps);
    Ok(exec.map_slice(&grid, |&s| sweep_point(s, qmax)))
}

pub fn sweep_point(sqrt_ab: f64, qmax: u64) -> SweepRow {
    let a = best_dof_over_decompositions(sqrt_ab, qmax, Variant::Eq36);
    let b = best_dof_over_decompositions(sqrt_ab, qmax, Variant::Eq53);
    SweepRow {
        sqrt_ab,
        dof_eq36: a.value,
        dof_eq53: b.value,
        best_p: a.witness.map(|w| w.p),
        best_q: a.witness.map(|w| w.q),
        best_gamma: a.witness.map(|w| w.gamma),
    }
}
