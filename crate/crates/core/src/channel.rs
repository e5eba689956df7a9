//! Channel models.
//!
//! After normalising the direct links and scaling by `sqrt(b)`, the real
//! two-user interference-assisted wiretap channel reads
//!
//! ```text
//! Y1 = X1 + sqrt(ab) X2 + sqrt(b) Z1      (legitimate receiver D1)
//! Y2 = X1 +/- X2        + Z2              (eavesdropper D2)
//! ```
//!
//! with `Z1`, `Z2` independent standard normals. Everything downstream works
//! in this scaled model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sign of the helper's signal at the eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn apply_i64(self, x: i64) -> i64 {
        match self {
            Sign::Plus => x,
            Sign::Minus => -x,
        }
    }
}

/// Parameters of the scaled channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Squared cross gain from the helper to D1.
    pub a: f64,
    /// Squared cross gain from the source to D2.
    pub b: f64,
    pub sign: Sign,
    pub p1_bar: f64,
    pub p2_bar: f64,
    /// Phase of the cross link for the complex model; `None` for real gains.
    pub psi: Option<f64>,
}

/// Builds the scaled-model parameters from the squared cross gains.
///
/// Power constraints default to 1 and the model is real; use
/// [`ChannelParams::with_powers`] and [`ChannelParams::with_phase`] to change
/// that.
pub fn scale_model(a: f64, b: f64, sign: Sign) -> Result<ChannelParams> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain(format!(
            "channel gains must be positive and finite (a = {a}, b = {b})"
        )));
    }
    Ok(ChannelParams {
        a,
        b,
        sign,
        p1_bar: 1.0,
        p2_bar: 1.0,
        psi: None,
    })
}

impl ChannelParams {
    pub fn with_powers(mut self, p1_bar: f64, p2_bar: f64) -> Result<Self> {
        if !(p1_bar > 0.0) || !(p2_bar > 0.0) {
            return Err(Error::domain(format!(
                "power constraints must be positive (p1 = {p1_bar}, p2 = {p2_bar})"
            )));
        }
        self.p1_bar = p1_bar;
        self.p2_bar = p2_bar;
        Ok(self)
    }

    pub fn with_phase(mut self, psi: f64) -> Self {
        self.psi = Some(psi);
        self
    }

    /// Effective cross gain `sqrt(ab)` seen by D1.
    pub fn cross_gain(&self) -> f64 {
        (self.a * self.b).sqrt()
    }

    pub fn noise_std_d1(&self) -> f64 {
        self.b.sqrt()
    }

    pub fn noise_std_d2(&self) -> f64 {
        1.0
    }
}

/// `sqrt(ab) = (p + gamma) / q` with coprime positive `p`, `q` and
/// `0 < |gamma| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalDecomposition {
    pub p: u64,
    pub q: u64,
    pub gamma: f64,
}

impl RationalDecomposition {
    /// Validates and builds a decomposition from its parts.
    pub fn new(p: u64, q: u64, gamma: f64) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::domain("p and q must be positive"));
        }
        if gcd(p, q) != 1 {
            return Err(Error::domain(format!("p = {p} and q = {q} are not coprime")));
        }
        if !(gamma.abs() < 1.0) || gamma.abs() < GAMMA_ZERO {
            return Err(Error::domain(format!("gamma = {gamma} must satisfy 0 < |gamma| < 1")));
        }
        Ok(Self { p, q, gamma })
    }

    /// The value `(p + gamma) / q` being decomposed.
    pub fn sqrt_ab(&self) -> f64 {
        (self.p as f64 + self.gamma) / self.q as f64
    }
}

/// Threshold below which `gamma` counts as zero.
pub const GAMMA_ZERO: f64 = 1e-12;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Decomposes `sqrt_ab` with denominator `q`.
///
/// `p` is the integer nearest to `q * sqrt_ab`, ties going to the smaller
/// integer. Returns `None` when `p` is not positive, `gcd(p, q) != 1`, or
/// `gamma` vanishes.
pub fn decompose(sqrt_ab: f64, q: u64) -> Option<RationalDecomposition> {
    if !(sqrt_ab > 0.0) || !sqrt_ab.is_finite() || q == 0 {
        return None;
    }
    let scaled = q as f64 * sqrt_ab;
    let p = (scaled - 0.5).ceil();
    if p < 1.0 {
        return None;
    }
    let gamma = scaled - p;
    let p = p as u64;
    if gamma.abs() < GAMMA_ZERO || gcd(p, q) != 1 {
        return None;
    }
    Some(RationalDecomposition { p, q, gamma })
}

/// All valid decompositions for `q = 1..=qmax`, in ascending `q`.
pub fn enumerate_decompositions(sqrt_ab: f64, qmax: u64) -> Vec<RationalDecomposition> {
    (1..=qmax).filter_map(|q| decompose(sqrt_ab, q)).collect()
}

/// True when `psi` is within `1e-9` of a multiple of pi.
pub fn phase_is_degenerate(psi: f64) -> bool {
    let r = psi.rem_euclid(PI);
    !psi.is_finite() || r < 1e-9 || PI - r < 1e-9
}

/// D1's real statistic `Re(y1) - cot(psi) Im(y1)` for the complex model.
///
/// With real inputs this cancels the helper's contribution entirely, leaving
/// a one-sided interference channel.
pub fn complex_reduce(psi: f64, y1: Complex64) -> Result<f64> {
    if phase_is_degenerate(psi) {
        return Err(Error::domain(format!(
            "phase {psi} is a multiple of pi; the complex reduction is undefined"
        )));
    }
    Ok(y1.re - y1.im / psi.tan())
}

/// Noise variance of the reduced statistic, `b csc^2(psi) / 2`.
pub fn reduced_noise_variance(b: f64, psi: f64) -> Result<f64> {
    if phase_is_degenerate(psi) {
        return Err(Error::domain(format!("phase {psi} is a multiple of pi")));
    }
    let s = psi.sin();
    Ok(b / (s * s) / 2.0)
}

/// Source of independent standard normal variates.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

/// Gaussian noise drawn from an underlying RNG.
#[derive(Debug, Clone)]
pub struct GaussianNoise<R> {
    rng: R,
}

impl<R: Rng> GaussianNoise<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

impl<R: Rng> NoiseSource for GaussianNoise<R> {
    fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Noise source that always yields zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// Independent generator for `(seed, stream)`.
///
/// ChaCha is counter-based, so every stream index addresses its own
/// non-overlapping keystream; results do not depend on which thread asks.
pub fn noise_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One use of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub y1: f64,
    pub y2: f64,
}

pub fn sample_channel<N: NoiseSource>(
    params: &ChannelParams,
    x1: f64,
    x2: f64,
    noise: &mut N,
) -> ChannelSample {
    let z1 = noise.standard_normal();
    let z2 = noise.standard_normal();
    ChannelSample {
        y1: x1 + params.cross_gain() * x2 + params.noise_std_d1() * z1,
        y2: x1 + params.sign.value() * x2 + z2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn scale_model_unit_gains() {
        let c = scale_model(1.0, 1.0, Sign::Plus).unwrap();
        assert_eq!(c.noise_std_d1(), 1.0);
        assert_eq!(c.cross_gain(), 1.0);
        assert_eq!(c.noise_std_d2(), 1.0);
    }

    #[test]
    fn scale_model_unequal_gains() {
        let c = scale_model(2.0, 0.5, Sign::Minus).unwrap();
        assert_abs_diff_eq!(c.cross_gain(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.noise_std_d1(), 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn scale_model_rejects_zero_gain() {
        assert!(matches!(scale_model(0.0, 1.0, Sign::Plus), Err(Error::Domain(_))));
        assert!(scale_model(1.0, -2.0, Sign::Plus).is_err());
        assert!(scale_model(1.0, 1.0, Sign::Plus).unwrap().with_powers(0.0, 1.0).is_err());
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(1.5, 1).unwrap();
        assert_eq!((d.p, d.q), (1, 1));
        assert_eq!(d.gamma, 0.5);
        assert!(decompose(1.5, 2).is_none());
        assert!(decompose(0.75, 4).is_none());
        let d = decompose(0.75, 3).unwrap();
        assert_eq!(d.p, 2);
        assert_abs_diff_eq!(d.gamma, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn decompose_rejects_nonpositive_p() {
        // 0.3 rounds to p = 0
        assert!(decompose(0.3, 1).is_none());
        assert!(decompose(0.0, 3).is_none());
    }

    #[test]
    fn enumerate_examples() {
        let v = enumerate_decompositions(1.5, 3);
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].p, v[0].q, v[0].gamma), (1, 1, 0.5));
        assert_eq!((v[1].p, v[1].q, v[1].gamma), (4, 3, 0.5));

        let v = enumerate_decompositions(std::f64::consts::SQRT_2, 2);
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].p, v[0].q), (1, 1));
        assert_abs_diff_eq!(v[0].gamma, 0.41421356, epsilon = 1e-8);
        assert_eq!((v[1].p, v[1].q), (3, 2));
        assert_abs_diff_eq!(v[1].gamma, -0.17157288, epsilon = 1e-8);

        assert!(enumerate_decompositions(1.0, 1).is_empty());
    }

    #[test]
    fn complex_reduce_examples() {
        let x = complex_reduce(PI / 2.0, Complex64::new(0.7, -3.0)).unwrap();
        assert_abs_diff_eq!(x, 0.7, epsilon = 1e-15);
        let x = complex_reduce(PI / 4.0, Complex64::new(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);
        assert!(complex_reduce(0.0, Complex64::new(1.0, 0.0)).is_err());
        assert!(complex_reduce(PI, Complex64::new(1.0, 0.0)).is_err());
        assert!(complex_reduce(-2.0 * PI + 1e-12, Complex64::new(1.0, 0.0)).is_err());
        assert_abs_diff_eq!(reduced_noise_variance(1.0, PI / 2.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn complex_reduce_cancels_helper() {
        // y1 = x1 + sqrt(ab) e^{j psi} x2 with real inputs; the helper vanishes.
        let psi = 1.1;
        let (x1, x2, g) = (0.8, -2.3, 1.7);
        let y1 = Complex64::new(x1, 0.0) + Complex64::from_polar(g, psi) * x2;
        assert_abs_diff_eq!(complex_reduce(psi, y1).unwrap(), x1, epsilon = 1e-12);
    }

    #[test]
    fn sample_noiseless() {
        let c = scale_model(1.0, 1.0, Sign::Plus).unwrap();
        let s = sample_channel(&c, 1.0, 1.0, &mut ZeroNoise);
        assert_eq!((s.y1, s.y2), (2.0, 2.0));

        let c = scale_model(2.25, 1.0, Sign::Minus).unwrap();
        let s = sample_channel(&c, 1.0, 1.0, &mut ZeroNoise);
        assert_eq!((s.y1, s.y2), (2.5, 0.0));
    }

    #[test]
    fn sample_is_deterministic() {
        let c = scale_model(0.7, 1.3, Sign::Plus).unwrap();
        let draw = || {
            let mut n = GaussianNoise::new(noise_stream(42, 3));
            (0..16).map(|i| sample_channel(&c, i as f64, 1.0, &mut n)).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
        let mut other = GaussianNoise::new(noise_stream(42, 4));
        assert_ne!(draw()[0], sample_channel(&c, 0.0, 1.0, &mut other));
    }

    #[test]
    fn empirical_noise_variance_at_d1() {
        let c = scale_model(0.9, 2.5, Sign::Plus).unwrap();
        let mut n = GaussianNoise::new(noise_stream(11, 0));
        let count = 200_000;
        let mut acc = 0.0;
        for _ in 0..count {
            let s = sample_channel(&c, 0.3, -1.2, &mut n);
            let z = s.y1 - (0.3 + c.cross_gain() * -1.2);
            acc += z * z;
        }
        let var = acc / count as f64;
        assert!((var / c.b - 1.0).abs() < 0.05, "variance {var}");
    }

    proptest! {
        #[test]
        fn decompositions_are_valid(s in 0.05f64..8.0, qmax in 1u64..40) {
            for d in enumerate_decompositions(s, qmax) {
                prop_assert_eq!(gcd(d.p, d.q), 1);
                prop_assert!(d.gamma.abs() < 1.0 && d.gamma.abs() >= GAMMA_ZERO);
                let scaled = d.q as f64 * s;
                let err = (scaled - d.p as f64 - d.gamma).abs();
                prop_assert!(err <= 8.0 * f64::EPSILON * scaled, "residual {}", err);
                let back = d.sqrt_ab();
                prop_assert!((back - s).abs() <= 8.0 * f64::EPSILON * s);
            }
        }

        #[test]
        fn decompose_minimises_gamma(s in 0.05f64..8.0, q in 1u64..40) {
            if let Some(d) = decompose(s, q) {
                let scaled = q as f64 * s;
                for p in 0..=(scaled.ceil() as i64 + 2) {
                    if p as u64 != d.p {
                        prop_assert!((scaled - p as f64).abs() >= d.gamma.abs());
                    }
                }
            }
        }

        #[test]
        fn noiseless_sample_is_affine(a in 0.01f64..4.0, b in 0.01f64..4.0, x1 in -50.0f64..50.0, x2 in -50.0f64..50.0, minus: bool) {
            let sign = if minus { Sign::Minus } else { Sign::Plus };
            let c = scale_model(a, b, sign).unwrap();
            let s = sample_channel(&c, x1, x2, &mut ZeroNoise);
            prop_assert_eq!(s.y1, x1 + c.cross_gain() * x2);
            prop_assert_eq!(s.y2, x1 + sign.value() * x2);
        }
    }
}
