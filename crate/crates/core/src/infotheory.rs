//! Information measures.
//!
//! Discrete quantities are computed exactly from their tables (integer counts
//! where the distribution is uniform over an enumerated space, so that
//! independence gives a log ratio of exactly one). Continuous-output mutual
//! information goes through deterministic composite Simpson quadrature of the
//! Gaussian-mixture density.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::channel::Sign;
use crate::codes::{mod_centered, NestedScalarLattice};
use crate::{Error, Exec, Result};

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::default();
        for x in iter {
            k.add(x);
        }
        k
    }
}

/// `-Σ p log2 p` with `0 log 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .collect::<KahanSum>()
        .value()
}

/// Joint probability table, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::domain(format!(
                "table of {} entries does not match shape {rows}x{cols}",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain("joint pmf has negative or non-finite entries"));
        }
        let total = probs.iter().copied().collect::<KahanSum>().value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("joint pmf sums to {total}")));
        }
        Ok(Self { rows, cols, probs })
    }

    /// Normalises a table of counts.
    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::domain("count table is empty"));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(rows, cols, probs)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.cols)
            .map(|r| r.iter().copied().collect::<KahanSum>().value())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.get(i, j))
                    .collect::<KahanSum>()
                    .value()
            })
            .collect()
    }
}

/// `I(X; Y)` in bits for the table's row and column variables.
pub fn discrete_mi(joint: &JointPmf) -> f64 {
    let px = joint.row_marginal();
    let py = joint.col_marginal();
    let mut acc = KahanSum::default();
    for (i, &pxi) in px.iter().enumerate() {
        for (j, &pyj) in py.iter().enumerate() {
            let p = joint.get(i, j);
            if p > 0.0 {
                acc.add(p * (p / (pxi * pyj)).log2());
            }
        }
    }
    acc.value().clamp(0.0, entropy(&px).min(entropy(&py)).max(0.0))
}

/// Mutual information of a sparse list of `(x, y, count)` cells.
///
/// The log ratios are formed from exact integer products, so an exactly
/// independent table yields exactly zero.
fn mi_from_cells(cells: &[(i64, i64, u64)], row_counts: &dyn Fn(i64) -> u64, col_counts: &dyn Fn(i64) -> u64) -> f64 {
    let total: u128 = cells.iter().map(|c| c.2 as u128).sum();
    let mut acc = KahanSum::default();
    for &(x, y, n) in cells {
        if n == 0 {
            continue;
        }
        let num = n as u128 * total;
        let den = row_counts(x) as u128 * col_counts(y) as u128;
        if num != den {
            acc.add(n as f64 / total as f64 * (num as f64 / den as f64).log2());
        }
    }
    acc.value()
}

/// Exact `I(X1; X1 ± X2)` with `X1`, `X2` independent and uniform on `{0..Q}`.
///
/// Given `X1` the combination is a bijective image of `X2`, so the value is
/// `H(X1 ± X2) - log2 Q = log2 Q - Q^-2 Σ_s c_s log2 c_s` where `c_s` counts
/// the pairs landing on `s`.
pub fn f_of_q(q: u64, sign: Sign) -> Result<f64> {
    if q < 1 {
        return Err(Error::domain("Q must be at least 1"));
    }
    let qi = q as i64;
    let count = |s: i64| -> u64 {
        match sign {
            // s = x1 + x2 in 0..=2Q-2
            Sign::Plus => (s + 1).min(2 * qi - 1 - s) as u64,
            // s = x1 - x2 in -(Q-1)..=Q-1
            Sign::Minus => (qi - s.abs()) as u64,
        }
    };
    let range = match sign {
        Sign::Plus => 0..=2 * qi - 2,
        Sign::Minus => -(qi - 1)..=qi - 1,
    };
    let weighted: KahanSum = range
        .map(count)
        .filter(|&c| c > 1)
        .map(|c| c as f64 * (c as f64).log2())
        .collect();
    let qf = q as f64;
    Ok((qf.log2() - weighted.value() / (qf * qf)).max(0.0))
}

/// Lemma-1 upper bound `½ log2(2πe (1/6 - 1/(12 Q²)))` on `f(Q)`. Requires
/// `Q >= 1`.
pub fn lemma1_bound(q: u64) -> f64 {
    let qf = q as f64;
    0.5 * (2.0 * PI * E * (1.0 / 6.0 - 1.0 / (12.0 * qf * qf))).log2()
}

/// Limit of [`lemma1_bound`] as `Q → ∞`: `½ log2(πe/3)`.
pub fn lemma1_limit() -> f64 {
    0.5 * (PI * E / 3.0).log2()
}

fn check_prob(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// 2x3 mutual information with `a1` on rows.
fn mi_2x3(t: &[[f64; 3]; 2]) -> f64 {
    let px = [t[0].iter().sum::<f64>(), t[1].iter().sum::<f64>()];
    let mut acc = 0.0;
    for (col0, col1) in t[0].iter().zip(&t[1]) {
        let py = col0 + col1;
        for (&p, &pxi) in [col0, col1].into_iter().zip(&px) {
            if p > 0.0 {
                acc += p * (p / (pxi * py)).log2();
            }
        }
    }
    acc
}

/// `I(a1; a1 + a2) - I(a1; a1 - a2)` for independent `a1 ~ Bern(p1)`,
/// `a2 ~ Bern(p2)`.
pub fn theorem6_objective(p1: f64, p2: f64) -> Result<f64> {
    check_prob(p1, "p1")?;
    check_prob(p2, "p2")?;
    Ok(theorem6_unchecked(p1, p2))
}

fn theorem6_unchecked(p1: f64, p2: f64) -> f64 {
    let a1 = [1.0 - p1, p1];
    let a2 = [1.0 - p2, p2];
    let mut sum = [[0.0; 3]; 2];
    let mut diff = [[0.0; 3]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let w = a1[x] * a2[y];
            sum[x][x + y] += w;
            diff[x][x + 1 - y] += w;
        }
    }
    mi_2x3(&sum) - mi_2x3(&diff)
}

/// Maximiser of [`theorem6_objective`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem6Optimum {
    pub p1_star: f64,
    pub p2_star: f64,
    pub value: f64,
    pub grid: usize,
}

pub fn optimize_theorem6(grid_size: usize) -> Result<Theorem6Optimum> {
    optimize_theorem6_with(grid_size, Exec::default())
}

/// Grid search over `[0,1]^2` followed by one golden-section pass per
/// coordinate inside the neighbouring grid cells.
///
/// The objective is invariant under `(p1, p2) → (1-p1, 1-p2)`; ties are broken
/// toward the smaller `p1` so the reported maximiser is reproducible.
pub fn optimize_theorem6_with(grid_size: usize, exec: Exec) -> Result<Theorem6Optimum> {
    if grid_size < 100 {
        return Err(Error::domain(format!("grid size must be at least 100, got {grid_size}")));
    }
    let n = grid_size;
    let at = |i: usize| i as f64 / (n - 1) as f64;
    let row_best = exec.map(0..n, |i| {
        let p1 = at(i);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for j in 0..n {
            let v = theorem6_unchecked(p1, at(j));
            if v > best.0 {
                best = (v, j);
            }
        }
        best
    });
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (i, &(v, j)) in row_best.iter().enumerate() {
        if v > best.0 + 1e-12 {
            best = (v, i, j);
        }
    }
    let (_, i, j) = best;
    let h = 1.0 / (n - 1) as f64;
    let bracket = |k: usize| ((at(k) - h).max(0.0), (at(k) + h).min(1.0));
    let (lo, hi) = bracket(i);
    let p1 = golden_max(|x| theorem6_unchecked(x, at(j)), lo, hi);
    let (lo, hi) = bracket(j);
    let p2 = golden_max(|y| theorem6_unchecked(p1, y), lo, hi);
    let value = theorem6_unchecked(p1, p2);
    let (p1, p2, value) = if value >= best.0 { (p1, p2, value) } else { (at(i), at(j), best.0) };
    Ok(Theorem6Optimum {
        p1_star: p1,
        p2_star: p2,
        value,
        grid: grid_size,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..100 {
        if hi - lo < 1e-12 {
            break;
        }
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Discrete input on a line observed in additive Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureChannelSpec {
    /// `(value, probability)` pairs.
    pub atoms: Vec<(f64, f64)>,
    pub noise_std: f64,
}

impl MixtureChannelSpec {
    pub fn new(atoms: Vec<(f64, f64)>, noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0) || !noise_std.is_finite() {
            return Err(Error::domain(format!("noise std must be positive, got {noise_std}")));
        }
        if atoms.is_empty() {
            return Err(Error::domain("mixture needs at least one atom"));
        }
        if atoms.iter().any(|&(v, p)| !v.is_finite() || !(p >= 0.0)) {
            return Err(Error::domain("atoms must be finite with nonnegative mass"));
        }
        let total = atoms.iter().map(|a| a.1).collect::<KahanSum>().value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("atom masses sum to {total}")));
        }
        Ok(Self { atoms, noise_std })
    }

    /// Equiprobable atoms at `values`.
    pub fn uniform(values: &[f64], noise_std: f64) -> Result<Self> {
        let w = 1.0 / values.len().max(1) as f64;
        Self::new(values.iter().map(|&v| (v, w)).collect(), noise_std)
    }
}

/// Sorted atoms with equal values merged and zero-mass atoms dropped.
fn merged_atoms(atoms: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.1 > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut probs: Vec<f64> = Vec::with_capacity(sorted.len());
    for (v, p) in sorted {
        if values.last() == Some(&v) {
            *probs.last_mut().unwrap() += p;
        } else {
            values.push(v);
            probs.push(p);
        }
    }
    (values, probs)
}

/// Beyond this many standard deviations a Gaussian term underflows.
const DENSITY_WINDOW: f64 = 38.5;
const QUAD_TOL: f64 = 1e-8;
const QUAD_MAX_LEVELS: u32 = 12;
const QUAD_CHUNK: usize = 4096;

struct MixtureDensity<'a> {
    values: &'a [f64],
    probs: &'a [f64],
    sigma: f64,
    norm: f64,
}

impl MixtureDensity<'_> {
    fn at(&self, y: f64) -> f64 {
        let w = DENSITY_WINDOW * self.sigma;
        let lo = self.values.partition_point(|&v| v < y - w);
        let hi = self.values.partition_point(|&v| v <= y + w);
        let inv2s2 = 0.5 / (self.sigma * self.sigma);
        let mut acc = 0.0;
        for k in lo..hi {
            let d = y - self.values[k];
            acc += self.probs[k] * (-d * d * inv2s2).exp();
        }
        acc * self.norm
    }

    fn neg_f_log_f(&self, y: f64) -> f64 {
        let f = self.at(y);
        if f > 0.0 {
            -f * f.log2()
        } else {
            0.0
        }
    }
}

/// Differential entropy (bits) of the Gaussian mixture by composite Simpson
/// quadrature over `[min - 10σ, max + 10σ]`, halving the step until two
/// successive estimates agree to `1e-8`.
fn mixture_entropy(values: &[f64], probs: &[f64], sigma: f64, exec: Exec) -> f64 {
    let dens = MixtureDensity {
        values,
        probs,
        sigma,
        norm: 1.0 / (sigma * (2.0 * PI).sqrt()),
    };
    let lo = values[0] - 10.0 * sigma;
    let hi = values[values.len() - 1] + 10.0 * sigma;
    let width = hi - lo;
    // start with a step of at most σ/4
    let mut n = ((4.0 * width / sigma).ceil() as usize).max(16);
    n += n % 2;
    let eval = |idx: &[usize], n: usize| -> Vec<f64> {
        let h = width / n as f64;
        let chunks: Vec<&[usize]> = idx.chunks(QUAD_CHUNK).collect();
        exec.map_slice(&chunks, |c| c.iter().map(|&i| dens.neg_f_log_f(lo + i as f64 * h)).collect::<Vec<_>>())
            .concat()
    };
    let mut samples = eval(&(0..=n).collect::<Vec<_>>(), n);
    let simpson = |s: &[f64], n: usize| -> f64 {
        let h = width / n as f64;
        let mut acc = KahanSum::default();
        for (i, &v) in s.iter().enumerate() {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc.add(w * v);
        }
        acc.value() * h / 3.0
    };
    let mut estimate = simpson(&samples, n);
    for _ in 0..QUAD_MAX_LEVELS {
        let n2 = 2 * n;
        let mids = eval(&(0..n).map(|i| 2 * i + 1).collect::<Vec<_>>(), n2);
        let mut refined = Vec::with_capacity(n2 + 1);
        for i in 0..n {
            refined.push(samples[i]);
            refined.push(mids[i]);
        }
        refined.push(samples[n]);
        let next = simpson(&refined, n2);
        let done = (next - estimate).abs() < QUAD_TOL;
        samples = refined;
        n = n2;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `I(X; X + σZ)` in bits for the discrete `X` described by `spec`.
pub fn mixture_mi(spec: &MixtureChannelSpec) -> Result<f64> {
    mixture_mi_with(spec, Exec::default())
}

pub fn mixture_mi_with(spec: &MixtureChannelSpec, exec: Exec) -> Result<f64> {
    let spec = MixtureChannelSpec::new(spec.atoms.clone(), spec.noise_std)?;
    let (values, probs) = merged_atoms(&spec.atoms);
    if values.len() <= 1 {
        return Ok(0.0);
    }
    let sigma = spec.noise_std;
    let h_y = mixture_entropy(&values, &probs, sigma, exec);
    let h_noise = 0.5 * (2.0 * PI * E * sigma * sigma).log2();
    Ok((h_y - h_noise).clamp(0.0, entropy(&probs).max(0.0)))
}

/// Exact leakage of one dithered nested-lattice layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageAudit {
    /// `I(u1; (X1 ± X2) mod Λc, d1, d2)`.
    pub mi_mod: f64,
    /// `I(u1; X1 ± X2, d1, d2)`.
    pub mi_full: f64,
}

pub fn leakage_audit(lat: &NestedScalarLattice, dither_refinement: u32, sign: Sign) -> Result<LeakageAudit> {
    leakage_audit_with(lat, dither_refinement, sign, Exec::default())
}

/// Enumerates every `(u1, u2, d1, d2)` with messages uniform on the `K` fine
/// points and dithers uniform on the `K·m`-point refinement of the
/// fundamental region.
///
/// Arithmetic is carried out in integer units of `δ/m`. Because the dithers
/// are independent of `u1`, `I(u1; Y, d1, d2)` is the average over dither
/// pairs of `I(u1; Y | d1, d2)`, each of which is computed from an exact
/// count table.
pub fn leakage_audit_with(
    lat: &NestedScalarLattice,
    dither_refinement: u32,
    sign: Sign,
    exec: Exec,
) -> Result<LeakageAudit> {
    if dither_refinement < 2 {
        return Err(Error::domain("dither grid must refine the fine lattice (refinement >= 2)"));
    }
    let k = lat.ratio as i64;
    let m = dither_refinement as i64;
    let period = k * m;
    let messages: Vec<i64> = lat.region_indices().map(|i| i * m).collect();
    let dithers: Vec<i64> = (-(period / 2)..(period - period / 2)).collect();

    let per_d1 = exec.map_slice(&dithers, |&d1| {
        let mut mod_acc = KahanSum::default();
        let mut full_acc = KahanSum::default();
        let mut cells_mod = Vec::with_capacity(messages.len().pow(2));
        let mut cells_full = Vec::with_capacity(messages.len().pow(2));
        for &d2 in &dithers {
            cells_mod.clear();
            cells_full.clear();
            for &u1 in &messages {
                let x1 = mod_centered(u1 + d1, period);
                for &u2 in &messages {
                    let x2 = mod_centered(u2 + d2, period);
                    let s = x1 + sign.apply_i64(x2);
                    cells_full.push((u1, s));
                    cells_mod.push((u1, mod_centered(s, period)));
                }
            }
            mod_acc.add(conditional_mi(&mut cells_mod, k as u64));
            full_acc.add(conditional_mi(&mut cells_full, k as u64));
        }
        (mod_acc.value(), full_acc.value())
    });
    let pairs = (dithers.len() * dithers.len()) as f64;
    let mi_mod = per_d1.iter().map(|r| r.0).collect::<KahanSum>().value() / pairs;
    let mi_full = per_d1.iter().map(|r| r.1).collect::<KahanSum>().value() / pairs;
    Ok(LeakageAudit { mi_mod, mi_full })
}

/// MI between message and observation from equally weighted `(u1, y)` pairs,
/// each message appearing `per_message` times.
fn conditional_mi(pairs: &mut [(i64, i64)], per_message: u64) -> f64 {
    pairs.sort_unstable();
    let mut cells: Vec<(i64, i64, u64)> = Vec::with_capacity(pairs.len());
    for &(x, y) in pairs.iter() {
        match cells.last_mut() {
            Some(c) if c.0 == x && c.1 == y => c.2 += 1,
            _ => cells.push((x, y, 1)),
        }
    }
    let mut by_y: Vec<(i64, u64)> = cells.iter().map(|c| (c.1, c.2)).collect();
    by_y.sort_unstable();
    let mut col: Vec<(i64, u64)> = Vec::with_capacity(by_y.len());
    for (y, n) in by_y {
        match col.last_mut() {
            Some(c) if c.0 == y => c.1 += n,
            _ => col.push((y, n)),
        }
    }
    let col_count = |y: i64| -> u64 {
        let i = col.binary_search_by_key(&y, |c| c.0).expect("column present");
        col[i].1
    };
    mi_from_cells(&cells, &|_| per_message, &col_count)
}

/// `C(x) = ½ log2(1 + x)`.
pub fn gaussian_capacity(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("SNR must be nonnegative, got {x}")));
    }
    Ok(0.5 * x.ln_1p() / std::f64::consts::LN_2)
}
