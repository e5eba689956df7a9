//! Monte Carlo of the layered nested-lattice scheme at scalar scale.
//!
//! Both transmitters send `M` superposed layers. Layer `i` is a dithered
//! nested scalar lattice `δ_i Z ⊃ K_i δ_i Z` whose coarse cell has the
//! layer's power, `(K_i δ_i)² / 12 = P_i`. D1 observes
//! `qY1 = qX1 + (p + γ)X2 + q sqrt(b) Z1` and peels the layers off from the
//! strongest down. At layer `i`, with everything above already removed:
//!
//! 1. remove `q d1 + p d2`, reduce mod `Λc`, and round to the fine lattice to
//!    get `(q u1 + p u2) mod Λc`; the self-interference `γ X2` and the
//!    layers below act as noise;
//! 2. what is left mod `Λc` must equal the unreduced remainder
//!    `γ X2 + (lower layers) + noise`, otherwise the step is in error;
//! 3. remove `γ d2`, reduce mod `γΛc`, and round to `γΛ` to get `u2`;
//! 4. subtract `γ X2` and hand the rest to the next layer.
//!
//! Dithers are continuous and uniform on the coarse cell and known at D1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::noise_stream;
use crate::codes::{mod_centered, mod_interval, NestedScalarLattice, LATTICE_TOL};
use crate::dof::LayeredAllocation;
use crate::infotheory::KahanSum;
use crate::{Error, Exec, Result};

/// Default number of bits shaved off each layer's rate.
pub const DEFAULT_BACKOFF: f64 = 0.3;

/// Simulation setup: one nested lattice per layer, layer 1 (weakest) first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub allocation: LayeredAllocation,
    pub lattices: Vec<NestedScalarLattice>,
    pub rate_backoff: f64,
    pub trials: u64,
    pub seed: u64,
    /// Force `Z1 = 0`.
    pub noiseless: bool,
    /// After a layer error, continue with the true remainder instead of the
    /// decoder's estimate, so that per-layer error rates are measured
    /// independently.
    pub genie: bool,
}

fn coarse_step_for(power: f64) -> f64 {
    (12.0 * power).sqrt()
}

impl LayerConfig {
    /// Sizes every layer's nesting ratio `K_i`.
    ///
    /// `K_i` is the largest integer with `log2 K_i <= R_i - rate_backoff`
    /// for which decoding is error-free when `Z1 = 0`, i.e. the worst-case
    /// self-interference and lower-layer amplitude stay inside both
    /// quantiser cells. Fails if no `K_i >= 2` qualifies.
    pub fn new(allocation: LayeredAllocation, rate_backoff: f64, trials: u64, seed: u64) -> Result<Self> {
        if !(rate_backoff >= 0.0) || !rate_backoff.is_finite() {
            return Err(Error::domain(format!("rate backoff must be nonnegative, got {rate_backoff}")));
        }
        if trials == 0 {
            return Err(Error::domain("need at least one trial"));
        }
        let rate_cap = 2f64.powf(allocation.per_layer_rate - rate_backoff).floor();
        let mut lattices = Vec::with_capacity(allocation.m_layers);
        for i in 0..allocation.m_layers {
            let c = coarse_step_for(allocation.powers[i]);
            let lower = lower_layer_amplitude(&allocation, i);
            let g = allocation.gamma.abs();
            let mut k = rate_cap;
            while k >= 2.0 {
                let delta = c / k;
                let slack = 1.0 - LATTICE_TOL;
                if g * c / 2.0 + lower < slack * delta / 2.0 && lower < slack * g * delta / 2.0 {
                    break;
                }
                k -= 1.0;
            }
            if k < 2.0 {
                return Err(Error::infeasible(format!(
                    "layer {} cannot carry a nesting ratio of at least 2 (R_i = {:.4} bits, backoff {rate_backoff})",
                    i + 1,
                    allocation.per_layer_rate
                )));
            }
            lattices.push(NestedScalarLattice::new(c / k, k as u32)?);
        }
        Ok(Self {
            allocation,
            lattices,
            rate_backoff,
            trials,
            seed,
            noiseless: false,
            genie: false,
        })
    }

    /// Uses the given lattices as-is.
    pub fn with_lattices(
        allocation: LayeredAllocation,
        lattices: Vec<NestedScalarLattice>,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        if lattices.len() != allocation.m_layers {
            return Err(Error::domain(format!(
                "{} lattices for {} layers",
                lattices.len(),
                allocation.m_layers
            )));
        }
        Ok(Self {
            allocation,
            lattices,
            rate_backoff: 0.0,
            trials,
            seed,
            noiseless: false,
            genie: false,
        })
    }

    pub fn noiseless(mut self, on: bool) -> Self {
        self.noiseless = on;
        self
    }

    pub fn genie(mut self, on: bool) -> Self {
        self.genie = on;
        self
    }

    pub fn trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn ratios(&self) -> Vec<u32> {
        self.lattices.iter().map(|l| l.ratio).collect()
    }
}

/// Worst-case noiseless amplitude of the layers below layer `i` (0-based)
/// in `qY1`.
fn lower_layer_amplitude(alloc: &LayeredAllocation, i: usize) -> f64 {
    let w = alloc.q as f64 + (alloc.p as f64 + alloc.gamma).abs();
    alloc.powers[..i]
        .iter()
        .map(|&p| w * coarse_step_for(p) / 2.0)
        .sum()
}

/// Net and gross rates of the realised code sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageBudget {
    /// `Σ max(log2 K_i - 1, 0)`: what survives one leaked bit per layer.
    pub net_bits: f64,
    /// `Σ log2 K_i`.
    pub gross_bits: f64,
}

pub fn leakage_budget(cfg: &LayerConfig) -> LeakageBudget {
    let rates: Vec<f64> = cfg.lattices.iter().map(|l| l.rate()).collect();
    LeakageBudget {
        net_bits: rates.iter().map(|r| (r - 1.0).max(0.0)).sum(),
        gross_bits: rates.iter().sum(),
    }
}

/// Random inputs of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerDraw {
    /// Fine-lattice indices of both messages.
    pub u1: i64,
    pub u2: i64,
    pub d1: f64,
    pub d2: f64,
}

/// All random inputs of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDraws {
    /// Standard normal driving `Z1`.
    pub z: f64,
    pub layers: Vec<LayerDraw>,
}

impl TrialDraws {
    /// Draws for `trial` from its own stream. `Z1` comes first and every
    /// layer consumes exactly four uniforms, so changing the nesting ratios
    /// keeps the same underlying randomness.
    pub fn sample(cfg: &LayerConfig, trial: u64) -> Self {
        let mut rng = noise_stream(cfg.seed, trial);
        let z: f64 = rng.sample(StandardNormal);
        let layers = cfg
            .lattices
            .iter()
            .map(|lat| {
                let k = lat.ratio as f64;
                let lo = lat.region_indices().start;
                let c = lat.coarse_step();
                let index = |u: f64| lo + (u * k).floor().min(k - 1.0) as i64;
                let (a, b, c1, c2): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
                LayerDraw {
                    u1: index(a),
                    u2: index(b),
                    d1: (c1 - 0.5) * c,
                    d2: (c2 - 0.5) * c,
                }
            })
            .collect();
        Self { z, layers }
    }
}

/// Which decoding steps failed at one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFlags {
    /// `(q u1 + p u2) mod Λc` decoded wrongly.
    pub combination: bool,
    /// The reduced remainder differs from the unreduced one.
    pub remainder: bool,
    /// `u2` decoded wrongly.
    pub helper: bool,
}

impl StageFlags {
    pub fn any(&self) -> bool {
        self.combination || self.remainder || self.helper
    }
}

/// Result of one trial, layer 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub stages: Vec<StageFlags>,
    /// Transmitted layer symbols `(X1_i, X2_i)`.
    pub symbols: Vec<(f64, f64)>,
}

impl TrialOutcome {
    pub fn success(&self) -> bool {
        self.stages.iter().all(|s| !s.any())
    }
}

/// Transmits and decodes one trial from explicit draws.
pub fn simulate_trial(cfg: &LayerConfig, draws: &TrialDraws) -> TrialOutcome {
    let alloc = &cfg.allocation;
    let (p, q, gamma) = (alloc.p as f64, alloc.q as f64, alloc.gamma);
    let m = cfg.lattices.len();

    let symbols: Vec<(f64, f64)> = cfg
        .lattices
        .iter()
        .zip(&draws.layers)
        .map(|(lat, d)| {
            let delta = lat.fine_step;
            (
                lat.mod_coarse(d.u1 as f64 * delta + d.d1),
                lat.mod_coarse(d.u2 as f64 * delta + d.d2),
            )
        })
        .collect();

    let noise = if cfg.noiseless { 0.0 } else { q * alloc.b.sqrt() * draws.z };
    let layer_term = |(x1, x2): (f64, f64)| q * x1 + (p + gamma) * x2;
    // below[i] = Σ_{t<i} (q X1_t + (p+γ) X2_t) + q sqrt(b) Z1
    let mut below = Vec::with_capacity(m + 1);
    let mut acc = noise;
    for &s in &symbols {
        below.push(acc);
        acc += layer_term(s);
    }
    let received = acc;
    // Rounding accumulated while peeling off the upper layers; without this
    // floor the remainder test flags float noise once the top layer is ~1e10
    // times the bottom one.
    let float_floor = 64.0 * f64::EPSILON * (lower_layer_amplitude(alloc, m) + received.abs());

    let mut stages = vec![StageFlags::default(); m];
    let mut signal = received;
    for i in (0..m).rev() {
        let lat = &cfg.lattices[i];
        let d = &draws.layers[i];
        let k = lat.ratio as i64;
        let delta = lat.fine_step;
        let c = lat.coarse_step();
        let (_, x2) = symbols[i];

        let y_hat = lat.mod_coarse(signal - q * d.d1 - p * d.d2);
        let v_idx = mod_centered((y_hat / delta).round() as i64, k);
        let v_true = mod_centered(alloc.q as i64 * d.u1 + alloc.p as i64 * d.u2, k);
        stages[i].combination = v_idx != v_true;

        let remainder = lat.mod_coarse(y_hat - v_idx as f64 * delta);
        let unreduced = gamma * x2 + below[i];
        stages[i].remainder = (remainder - unreduced).abs() > LATTICE_TOL * delta + float_floor;

        let w = mod_interval(remainder - gamma * d.d2, gamma.abs() * c);
        let u2_idx = mod_centered((w / (gamma * delta)).round() as i64, k);
        stages[i].helper = u2_idx != d.u2;

        let x2_hat = lat.mod_coarse(u2_idx as f64 * delta + d.d2);
        signal = if cfg.genie && stages[i].any() {
            below[i]
        } else {
            remainder - gamma * x2_hat
        };
    }
    TrialOutcome { stages, symbols }
}

/// Per-layer error rates by decoding step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageErrorRates {
    pub combination: f64,
    pub remainder: f64,
    pub helper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Fraction of trials in which layer `i` failed at any step, layer 1 first.
    pub per_layer_error: Vec<f64>,
    pub stage_errors: Vec<StageErrorRates>,
    /// Fraction of trials with every layer decoded.
    pub chain_success: f64,
    /// `Σ max(log2 K_i - 1, 0)`.
    pub leakage_budget_bits: f64,
    pub gross_rate_bits: f64,
    /// Net secure bits per channel use weighted by each layer's success rate.
    pub achieved_secrecy_rate_accounting: f64,
    /// Mean `(X1_i², X2_i²)` per layer.
    pub empirical_power: Vec<[f64; 2]>,
    pub nesting_ratios: Vec<u32>,
    pub trials: u64,
}

pub fn run_layered_sim(cfg: &LayerConfig) -> Result<SimReport> {
    run_layered_sim_with(cfg, Exec::default())
}

const TRIAL_CHUNK: u64 = 1024;

#[derive(Clone)]
struct Tally {
    layer_err: Vec<u64>,
    stage: Vec<[u64; 3]>,
    power: Vec<[KahanSum; 2]>,
    success: u64,
}

impl Tally {
    fn new(m: usize) -> Self {
        Self {
            layer_err: vec![0; m],
            stage: vec![[0; 3]; m],
            power: vec![[KahanSum::default(); 2]; m],
            success: 0,
        }
    }
}

/// Runs `cfg.trials` independent trials. Each trial reads its own stream
/// `(seed, trial)`, and chunk tallies are merged in chunk order, so the
/// report is identical under either [`Exec`].
pub fn run_layered_sim_with(cfg: &LayerConfig, exec: Exec) -> Result<SimReport> {
    crate::dof::check_gamma(cfg.allocation.gamma)?;
    if cfg.trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    if cfg.lattices.len() != cfg.allocation.m_layers {
        return Err(Error::domain("one lattice per layer required"));
    }
    let m = cfg.lattices.len();
    let chunks = cfg.trials.div_ceil(TRIAL_CHUNK) as usize;
    let tallies = exec.map(0..chunks, |ci| {
        let start = ci as u64 * TRIAL_CHUNK;
        let end = (start + TRIAL_CHUNK).min(cfg.trials);
        let mut t = Tally::new(m);
        for trial in start..end {
            let out = simulate_trial(cfg, &TrialDraws::sample(cfg, trial));
            if out.success() {
                t.success += 1;
            }
            for (i, s) in out.stages.iter().enumerate() {
                t.layer_err[i] += s.any() as u64;
                t.stage[i][0] += s.combination as u64;
                t.stage[i][1] += s.remainder as u64;
                t.stage[i][2] += s.helper as u64;
                let (x1, x2) = out.symbols[i];
                t.power[i][0].add(x1 * x1);
                t.power[i][1].add(x2 * x2);
            }
        }
        t
    });

    let mut total = Tally::new(m);
    for t in &tallies {
        total.success += t.success;
        for i in 0..m {
            total.layer_err[i] += t.layer_err[i];
            for s in 0..3 {
                total.stage[i][s] += t.stage[i][s];
            }
            for k in 0..2 {
                total.power[i][k].add(t.power[i][k].value());
            }
        }
    }

    let n = cfg.trials as f64;
    let per_layer_error: Vec<f64> = total.layer_err.iter().map(|&e| e as f64 / n).collect();
    let budget = leakage_budget(cfg);
    let achieved = cfg
        .lattices
        .iter()
        .zip(&per_layer_error)
        .map(|(l, e)| (1.0 - e) * (l.rate() - 1.0).max(0.0))
        .sum();
    Ok(SimReport {
        stage_errors: total
            .stage
            .iter()
            .map(|s| StageErrorRates {
                combination: s[0] as f64 / n,
                remainder: s[1] as f64 / n,
                helper: s[2] as f64 / n,
            })
            .collect(),
        per_layer_error,
        chain_success: total.success as f64 / n,
        leakage_budget_bits: budget.net_bits,
        gross_rate_bits: budget.gross_bits,
        achieved_secrecy_rate_accounting: achieved,
        empirical_power: total
            .power
            .iter()
            .map(|p| [p[0].value() / n, p[1].value() / n])
            .collect(),
        nesting_ratios: cfg.ratios(),
        trials: cfg.trials,
    })
}
