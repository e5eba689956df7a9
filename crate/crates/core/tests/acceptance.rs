//! Acceptance criteria. Each test prints one PASS/FAIL line and then fails
//! if the criterion is not met. Run with `--nocapture` to see the lines.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdof_core::channel::{gcd, Sign};
use sdof_core::codes::{represent_combination, NestedScalarLattice, SumRepresentation};
use sdof_core::dof::{
    best_dof_over_decompositions, dof_ratio, eq7_rate, gaussian_baseline_rate, layered_allocation,
    linspace, mi_difference_curve, theorem7_dof, theorem7_parts, InputKind, Variant,
};
use sdof_core::infotheory::{f_of_q, leakage_audit, lemma1_bound, optimize_theorem6};
use sdof_core::layersim::{run_layered_sim, run_layered_sim_with, LayerConfig};
use sdof_core::Exec;

fn verdict(n: u32, title: &str, ok: bool, elapsed: Duration, limit: Duration, detail: String) {
    let in_time = elapsed <= limit;
    let pass = ok && in_time;
    println!(
        "{} criterion {n}: {title} ({detail}; {:.2}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {n} not met: {detail}");
    assert!(in_time, "criterion {n} over time: {:.2}s", elapsed.as_secs_f64());
}

#[test]
fn criterion_01_integer_lattice_leakage_bound() {
    let t = Instant::now();
    let mut worst_gap = f64::INFINITY;
    let mut max_f = 0.0f64;
    let mut ok = true;
    for q in 1..=4096u64 {
        let f = f_of_q(q, Sign::Plus).unwrap();
        let bound = lemma1_bound(q);
        ok &= f <= bound && bound < 0.8;
        worst_gap = worst_gap.min(bound - f);
        max_f = max_f.max(f);
    }
    let f2 = f_of_q(2, Sign::Plus).unwrap();
    ok &= f2 == 0.5;
    verdict(
        1,
        "f(Q) <= Gaussian bound < 0.8 for Q <= 4096, f(2) = 0.5",
        ok,
        t.elapsed(),
        Duration::from_secs(30),
        format!("max f = {max_f:.6}, min slack = {worst_gap:.3e}, f(2) = {f2}"),
    );
}

#[test]
fn criterion_02_equal_gain_optimum() {
    let t = Instant::now();
    let opt = optimize_theorem6(2000).unwrap();
    let ok = (opt.value - 0.1095).abs() <= 5e-4
        && (opt.p1_star - 0.1443).abs() <= 3e-3
        && (opt.p2_star - 0.8557).abs() <= 3e-3;
    verdict(
        2,
        "binary-input optimum near 0.1095 at (0.1443, 0.8557)",
        ok,
        t.elapsed(),
        Duration::from_secs(10),
        format!("value {:.5} at ({:.4}, {:.4})", opt.value, opt.p1_star, opt.p2_star),
    );
}

#[test]
fn criterion_03_layered_allocation_algebra() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let mut worst = 0.0f64;
    let mut den_gap = 0.0f64;
    let mut num_gap = 0.0f64;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    for _ in 0..1000 {
        let gamma = rng.gen_range(0.02..0.70) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let q = rng.gen_range(1..12u64);
        let p = loop {
            let p = rng.gen_range(1..30u64);
            if gcd(p, q) == 1 {
                break p;
            }
        };
        let b = rng.gen_range(0.1..10.0);
        let m = rng.gen_range(1..7usize);
        let a = layered_allocation(gamma, p, q, b, m).unwrap();

        // recursion: interference grows by each layer's received power, and
        // each layer's power solves the balance equation for its interference
        let g2 = gamma * gamma;
        let beta = (q * q) as f64 + (p as f64 + gamma).powi(2);
        let mut interference = (q * q) as f64 * b;
        let mut total = 0.0;
        for i in 0..m {
            // P A = γ² P (γ² P + A)  =>  P = A (1 - γ²) / γ⁴
            let power = interference * (1.0 - g2) / (g2 * g2);
            worst = worst.max(rel(a.interference[i], interference));
            worst = worst.max(rel(a.powers[i], power));
            let (pi, ai) = (a.powers[i], a.interference[i]);
            worst = worst.max(rel(pi / (g2 * pi + ai), g2 * pi / ai));
            total += power;
            interference += beta * power;
        }
        worst = worst.max(rel(a.total_power, total));

        let (n36, d36) = theorem7_parts(gamma, p, q, Variant::Eq36).unwrap();
        let (n53, d53) = theorem7_parts(gamma, p, q, Variant::Eq53).unwrap();
        den_gap = den_gap.max(rel(d53, d36));
        num_gap = num_gap.max((n36 - n53 - 1.0).abs());
    }
    let ok = worst <= 1e-9 && den_gap <= 1e-12 && num_gap <= 1e-12;
    verdict(
        3,
        "balance, closed forms vs recursion, total power; variant relation",
        ok,
        t.elapsed(),
        Duration::from_secs(5),
        format!("worst rel err {worst:.2e}, denominator gap {den_gap:.2e}, numerator gap from 1 {num_gap:.2e}"),
    );
}

#[test]
fn criterion_04_sweep_positivity() {
    let t = Instant::now();
    let grid: Vec<f64> = linspace(0.51, 1.99, 1000)
        .into_iter()
        .filter(|s| (s - 1.0).abs() > 1e-6)
        .collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&s| best_dof_over_decompositions(s, 20, Variant::Eq36).value)
        .collect();
    let (imin, vmin) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let at = best_dof_over_decompositions(1.5, 20, Variant::Eq36).value;
    let ok = vmin > 0.0 && (at - 0.1099).abs() <= 5e-4;
    verdict(
        4,
        "layered DoF positive on the sqrt(ab) grid, 0.1099 at 1.5",
        ok,
        t.elapsed(),
        Duration::from_secs(60),
        format!("{} points, min {vmin:.4e} at {:.4}, value at 1.5 = {at:.5}", grid.len(), grid[imin]),
    );
}

#[test]
fn criterion_05_small_gamma_limit() {
    let t = Instant::now();
    let v = theorem7_dof(1e-6, 1, 1, Variant::Eq36).unwrap();
    let ok = (0.49..=0.5).contains(&v);
    verdict(
        5,
        "layered DoF at gamma = 1e-6 within [0.49, 0.5]",
        ok,
        t.elapsed(),
        Duration::from_secs(1),
        format!("value {v:.6}"),
    );
}

#[test]
fn criterion_06_exact_leakage_audit() {
    let t = Instant::now();
    let mut max_mod = 0.0f64;
    let mut max_full = 0.0f64;
    for k in 2..=16u32 {
        let lat = NestedScalarLattice::new(1.0, k).unwrap();
        for m in [2u32, 4, 8] {
            for sign in [Sign::Plus, Sign::Minus] {
                let a = leakage_audit(&lat, m, sign).unwrap();
                max_mod = max_mod.max(a.mi_mod);
                max_full = max_full.max(a.mi_full);
            }
        }
    }
    let ok = max_mod <= 1e-12 && max_full <= 1.0;
    verdict(
        6,
        "mod-reduced leakage 0, unreduced leakage <= 1 bit",
        ok,
        t.elapsed(),
        Duration::from_secs(60),
        format!("max I mod = {max_mod:.3e}, max I full = {max_full:.6}"),
    );
}

#[test]
fn criterion_07_sum_representation() {
    let t = Instant::now();
    let mut ok = true;
    let mut worst_err = 0.0f64;
    let mut max_branches = 0usize;
    let mut max_quotients_per_residue = 0usize;
    let mut raw_quotients = BTreeSet::new();
    for k in 2..=32u32 {
        let lat = NestedScalarLattice::new(1.0, k).unwrap();
        let c = lat.coarse_step();
        // fine points and everything on a 4x-refined grid of [-c/2, c/2)
        let m = 4i64;
        let half = k as i64 * m / 2;
        let xs: Vec<f64> = (-half..half).map(|n| n as f64 / m as f64).collect();
        for sign in [Sign::Plus, Sign::Minus] {
            let mut branches = BTreeSet::new();
            let mut per_residue: BTreeMap<i64, BTreeSet<i64>> = BTreeMap::new();
            for &x1 in &xs {
                for &x2 in &xs {
                    let s = x1 + sign.value() * x2;
                    let r = represent_combination(x1, x2, sign, &lat).unwrap();
                    let err = (r.reconstruct(&lat) - s).abs();
                    worst_err = worst_err.max(err);
                    ok &= err <= 1e-9 && r.residue >= -c / 2.0 && r.residue < c / 2.0;
                    let back = SumRepresentation::from_branch(r.branch(), r.residue).unwrap();
                    ok &= back == r;
                    branches.insert(r.branch());
                    raw_quotients.insert(r.t);
                    per_residue
                        .entry((r.residue * m as f64).round() as i64)
                        .or_default()
                        .insert(r.t);
                }
            }
            max_branches = max_branches.max(branches.len());
            max_quotients_per_residue =
                max_quotients_per_residue.max(per_residue.values().map(|s| s.len()).max().unwrap());
        }
    }
    ok &= max_branches <= 2 && max_quotients_per_residue <= 2;
    verdict(
        7,
        "residue + t Kδ = s exhaustively for K <= 32, support(T) <= 2",
        ok,
        t.elapsed(),
        Duration::from_secs(10),
        format!(
            "max reconstruction error {worst_err:.1e}, branches {max_branches}, quotients per residue {max_quotients_per_residue}, raw quotients {raw_quotients:?}"
        ),
    );
}

#[test]
fn criterion_08_structured_vs_gaussian() {
    let t = Instant::now();
    let powers = [1e2, 1e4, 1e6];
    let s2 = std::f64::consts::SQRT_2;
    let curve = mi_difference_curve(&powers, s2, 1.0, 0.05, InputKind::ScalarLattice).unwrap();
    let v: Vec<f64> = curve.iter().map(|c| c.1).collect();
    let g4 = gaussian_baseline_rate(1e4, 1e4, 2.0, 1.0).unwrap();
    let g6 = gaussian_baseline_rate(1e6, 1e6, 2.0, 1.0).unwrap();
    let ok = v[0] < v[1] && v[1] < v[2] && v[2] - v[0] >= 1.0 && (g6 - g4).abs() < 0.05;
    verdict(
        8,
        "structured rate grows by >= 1 bit, Gaussian rate saturates",
        ok,
        t.elapsed(),
        Duration::from_secs(120),
        format!("structured {v:.4?}, Gaussian {g4:.5} -> {g6:.5}"),
    );
}

#[test]
fn criterion_09_layered_simulator() {
    let t = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();

    for &(gamma, p, q, m) in &[(0.1, 1, 1, 2), (0.05, 3, 2, 3), (-0.2, 2, 1, 2)] {
        let alloc = layered_allocation(gamma, p, q, 1.0, m).unwrap();
        let cfg = LayerConfig::new(alloc, 0.3, 10_000, 11).unwrap().noiseless(true);
        let r = run_layered_sim(&cfg).unwrap();
        ok &= r.chain_success == 1.0;
        notes.push(format!("noiseless {gamma}/{p}/{q}/{m}: {}", r.chain_success));
    }

    let alloc = layered_allocation(0.1, 1, 1, 1.0, 2).unwrap();
    let cfg = LayerConfig::new(alloc.clone(), 0.3, 10_000, 7).unwrap();
    let a = serde_json::to_string(&run_layered_sim(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_layered_sim(&cfg).unwrap()).unwrap();
    let c = serde_json::to_string(&run_layered_sim_with(&cfg, Exec::Sequential).unwrap()).unwrap();
    ok &= a == b && a == c;
    notes.push(format!("reproducible: {}", a == b && a == c));

    let errs: Vec<Vec<f64>> = [0.0, 0.2, 0.4]
        .iter()
        .map(|&bo| {
            let cfg = LayerConfig::new(alloc.clone(), bo, 10_000, 7).unwrap();
            run_layered_sim(&cfg).unwrap().per_layer_error
        })
        .collect();
    for w in errs.windows(2) {
        ok &= w[0].iter().zip(&w[1]).all(|(x, y)| y <= x);
    }
    notes.push(format!("layer errors vs backoff {errs:?}"));

    verdict(
        9,
        "noiseless exact, reproducible, errors monotone in backoff",
        ok,
        t.elapsed(),
        Duration::from_secs(120),
        notes.join("; "),
    );
}

#[test]
fn criterion_10_complex_gain_rate() {
    let t = Instant::now();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let r = eq7_rate(1.0, 1.0, 1.0, half_pi).unwrap();
    let big = 1e8;
    let ratio = dof_ratio(eq7_rate(big, big, 1.0, half_pi).unwrap(), 2.0 * big);
    let ok = (r - 0.4240).abs() <= 1e-4 && ratio > 0.9;
    verdict(
        10,
        "complex-gain rate 0.4240 at unit powers, DoF ratio > 0.9 at 1e8",
        ok,
        t.elapsed(),
        Duration::from_secs(1),
        format!("rate {r:.6}, ratio {ratio:.4}"),
    );
}
