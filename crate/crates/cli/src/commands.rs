use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use sdof_core::channel::Sign;
use sdof_core::dof::{
    best_dof_over_decompositions, dof_ratio, eq7_rate, layered_allocation, mi_difference_curve_with, sweep_with,
    InputKind, Variant,
};
use sdof_core::infotheory::{f_of_q, lemma1_bound, optimize_theorem6_with};
use sdof_core::layersim::{run_layered_sim_with, LayerConfig, DEFAULT_BACKOFF};
use sdof_core::Exec;

use crate::config::resolve;
use crate::error::{usage, CliError};
use crate::manifest::{sha256_hex, RunManifest};
use crate::{
    ComplexFlags, FqFlags, PlotKind, PlotscriptFlags, RatesFlags, SimulateFlags, SweepFlags, Theorem6Flags, VariantArg,
};

pub struct Ctx {
    pub config: Option<Map<String, Value>>,
    pub exec: Exec,
}

/// Ceiling column of the `fq` table.
const FQ_CEILING: f64 = 0.8;

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes a CSV with its manifest alongside, or to stdout with the manifest
/// on stderr.
fn emit_csv(sub: &str, params: Value, out: Option<&Path>, csv: Vec<u8>) -> Result<(), CliError> {
    let manifest = RunManifest::new(sub, params, None, &csv);
    let mut m = serde_json::to_vec_pretty(&manifest).expect("manifest serialises");
    m.push(b'\n');
    match out {
        Some(path) => {
            write_bytes(path, &csv)?;
            write_bytes(&manifest_path(path), &m)
        }
        None => {
            write_stdout(&csv)?;
            let _ = std::io::stderr().write_all(&m);
            Ok(())
        }
    }
}

/// Writes `{"result": .., "manifest": ..}`.
fn emit_json(sub: &str, params: Value, seed: Option<u64>, out: Option<&Path>, result: Value) -> Result<(), CliError> {
    let body = serde_json::to_vec(&result).expect("result serialises");
    let manifest = RunManifest::new(sub, params, seed, &body);
    let doc = json!({ "result": result, "manifest": manifest });
    let mut text = serde_json::to_vec_pretty(&doc).expect("document serialises");
    text.push(b'\n');
    match out {
        Some(path) => write_bytes(path, &text),
        None => write_stdout(&text),
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

// `Display` for f64 is the shortest string that parses back exactly.
fn num(x: f64) -> String {
    x.to_string()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct SweepParams {
    sqrt_ab_min: f64,
    sqrt_ab_max: f64,
    steps: usize,
    qmax: u64,
    variant: VariantArg,
    out: Option<PathBuf>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            sqrt_ab_min: 0.51,
            sqrt_ab_max: 1.99,
            steps: 1000,
            qmax: 20,
            variant: VariantArg::Eq36,
            out: None,
        }
    }
}

pub fn sweep(ctx: &Ctx, flags: &SweepFlags) -> Result<(), CliError> {
    let (p, params): (SweepParams, _) = resolve("sweep", flags, ctx.config.as_ref())?;
    usage(
        p.sqrt_ab_min > 0.0 && p.sqrt_ab_min < p.sqrt_ab_max && p.sqrt_ab_max.is_finite(),
        "need 0 < sqrt-ab-min < sqrt-ab-max",
    )?;
    usage(p.steps >= 2, "steps must be at least 2")?;
    usage(p.qmax >= 1, "qmax must be at least 1")?;
    let mut rows = sweep_with(p.sqrt_ab_min, p.sqrt_ab_max, p.steps, p.qmax, ctx.exec)?;
    if p.variant == VariantArg::Eq53 {
        let witnesses = ctx.exec.map_slice(&rows, |r| {
            best_dof_over_decompositions(r.sqrt_ab, p.qmax, Variant::Eq53).witness
        });
        for (r, w) in rows.iter_mut().zip(witnesses) {
            r.best_p = w.map(|w| w.p);
            r.best_q = w.map(|w| w.q);
            r.best_gamma = w.map(|w| w.gamma);
        }
    }
    let csv = csv_bytes(
        &["sqrt_ab", "dof_eq36", "dof_eq53", "best_p", "best_q", "best_gamma"],
        rows.iter().map(|r| {
            vec![
                num(r.sqrt_ab),
                num(r.dof_eq36),
                num(r.dof_eq53),
                opt(r.best_p),
                opt(r.best_q),
                opt(r.best_gamma),
            ]
        }),
    );
    emit_csv("sweep", params, p.out.as_deref(), csv)
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct FqParams {
    qmax: u64,
    out: Option<PathBuf>,
}

impl Default for FqParams {
    fn default() -> Self {
        Self { qmax: 64, out: None }
    }
}

pub fn fq(ctx: &Ctx, flags: &FqFlags) -> Result<(), CliError> {
    let (p, params): (FqParams, _) = resolve("fq", flags, ctx.config.as_ref())?;
    usage(p.qmax >= 1, "qmax must be at least 1")?;
    let qs: Vec<u64> = (1..=p.qmax).collect();
    let values = ctx.exec.map_slice(&qs, |&q| f_of_q(q, Sign::Plus));
    let mut rows = Vec::with_capacity(qs.len());
    for (&q, f) in qs.iter().zip(values) {
        rows.push(vec![q.to_string(), num(f?), num(lemma1_bound(q)), num(FQ_CEILING)]);
    }
    let csv = csv_bytes(&["q", "f_q", "lemma1_bound", "ceiling"], rows);
    emit_csv("fq", params, p.out.as_deref(), csv)
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct Theorem6Params {
    grid: usize,
    out: Option<PathBuf>,
}

impl Default for Theorem6Params {
    fn default() -> Self {
        Self { grid: 2000, out: None }
    }
}

pub fn theorem6(ctx: &Ctx, flags: &Theorem6Flags) -> Result<(), CliError> {
    let (p, params): (Theorem6Params, _) = resolve("theorem6", flags, ctx.config.as_ref())?;
    usage(p.grid >= 100, "grid must be at least 100")?;
    let opt = optimize_theorem6_with(p.grid, ctx.exec)?;
    emit_json("theorem6", params, None, p.out.as_deref(), serde_json::to_value(opt).expect("serialises"))
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct RatesParams {
    powers: Vec<f64>,
    sqrt_ab: f64,
    b: f64,
    epsilon: f64,
    out: Option<PathBuf>,
}

impl Default for RatesParams {
    fn default() -> Self {
        Self {
            powers: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            sqrt_ab: std::f64::consts::SQRT_2,
            b: 1.0,
            epsilon: 0.05,
            out: None,
        }
    }
}

pub fn rates(ctx: &Ctx, flags: &RatesFlags) -> Result<(), CliError> {
    let (p, params): (RatesParams, _) = resolve("rates", flags, ctx.config.as_ref())?;
    usage(!p.powers.is_empty(), "powers must not be empty")?;
    let structured = mi_difference_curve_with(&p.powers, p.sqrt_ab, p.b, p.epsilon, InputKind::ScalarLattice, ctx.exec)?;
    let gaussian =
        mi_difference_curve_with(&p.powers, p.sqrt_ab, p.b, p.epsilon, InputKind::GaussianBaseline, ctx.exec)?;
    let csv = csv_bytes(
        &["P", "structured_mi_diff", "gaussian_baseline"],
        structured
            .iter()
            .zip(&gaussian)
            .map(|(&(pw, s), &(_, g))| vec![num(pw), num(s), num(g)]),
    );
    emit_csv("rates", params, p.out.as_deref(), csv)
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct SimulateParams {
    gamma: Option<f64>,
    p: u64,
    q: u64,
    b: f64,
    layers: usize,
    backoff: f64,
    trials: u64,
    seed: u64,
    noiseless: bool,
    genie: bool,
    out: Option<PathBuf>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            gamma: None,
            p: 1,
            q: 1,
            b: 1.0,
            layers: 2,
            backoff: DEFAULT_BACKOFF,
            trials: 10_000,
            seed: 0,
            noiseless: false,
            genie: false,
            out: None,
        }
    }
}

pub fn simulate(ctx: &Ctx, flags: &SimulateFlags) -> Result<(), CliError> {
    let (p, params): (SimulateParams, _) = resolve("simulate", flags, ctx.config.as_ref())?;
    let Some(gamma) = p.gamma else {
        return Err(CliError::Usage("--gamma is required".into()));
    };
    usage(p.layers >= 1, "layers must be at least 1")?;
    usage(p.trials >= 1, "trials must be at least 1")?;
    let alloc = layered_allocation(gamma, p.p, p.q, p.b, p.layers)?;
    let cfg = LayerConfig::new(alloc, p.backoff, p.trials, p.seed)?
        .noiseless(p.noiseless)
        .genie(p.genie);
    let report = run_layered_sim_with(&cfg, ctx.exec)?;
    let result = json!({
        "report": report,
        "allocation": cfg.allocation,
        "fine_steps": cfg.lattices.iter().map(|l| l.fine_step).collect::<Vec<_>>(),
    });
    emit_json("simulate", params, Some(p.seed), p.out.as_deref(), result)
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct ComplexParams {
    psi: f64,
    b: f64,
    p1: f64,
    p2: f64,
    out: Option<PathBuf>,
}

impl Default for ComplexParams {
    fn default() -> Self {
        Self {
            psi: std::f64::consts::FRAC_PI_2,
            b: 1.0,
            p1: 1.0,
            p2: 1.0,
            out: None,
        }
    }
}

pub fn complex(ctx: &Ctx, flags: &ComplexFlags) -> Result<(), CliError> {
    let (p, params): (ComplexParams, _) = resolve("complex", flags, ctx.config.as_ref())?;
    let rate = eq7_rate(p.p1, p.p2, p.b, p.psi)?;
    let ratio_at = |scale: f64| -> Result<f64, CliError> {
        let r = eq7_rate(scale * p.p1, scale * p.p2, p.b, p.psi)?;
        Ok(dof_ratio(r, scale * (p.p1 + p.p2)))
    };
    let result = json!({
        "rate": rate,
        "dof_ratio_10x": ratio_at(10.0)?,
        "dof_ratio_100x": ratio_at(100.0)?,
    });
    emit_json("complex", params, None, p.out.as_deref(), result)
}

#[derive(Serialize, Deserialize, Default)]
#[serde(default)]
struct PlotscriptParams {
    csv: Option<PathBuf>,
    kind: Option<PlotKind>,
    out: Option<PathBuf>,
}

fn expected_header(kind: PlotKind) -> &'static str {
    match kind {
        PlotKind::Sweep => "sqrt_ab",
        PlotKind::Fq => "q",
        PlotKind::Rates => "P",
    }
}

fn gnuplot_body(kind: PlotKind, data: &str) -> String {
    let data = data.replace('\'', "''");
    let mut s = String::from("set datafile separator ','\nset key top left\nset grid\n");
    match kind {
        PlotKind::Sweep => {
            s += "set xlabel 'sqrt(ab)'\nset ylabel 'secure DoF'\n";
            s += &format!(
                "plot '{data}' using 1:2 skip 1 with lines title 'dof_eq36', \\\n     '{data}' using 1:3 skip 1 with lines title 'dof_eq53'\n"
            );
        }
        PlotKind::Fq => {
            s += "set logscale x\nset xlabel 'Q'\nset ylabel 'bits'\n";
            s += &format!(
                "plot '{data}' using 1:2 skip 1 with points title 'f(Q)', \\\n     '{data}' using 1:3 skip 1 with lines title 'Gaussian bound', \\\n     {FQ_CEILING} with lines dashtype 2 title '{FQ_CEILING}'\n"
            );
        }
        PlotKind::Rates => {
            s += "set logscale x\nset xlabel 'P'\nset ylabel 'secrecy rate (bits)'\n";
            s += &format!(
                "plot '{data}' using 1:2 skip 1 with linespoints title 'structured', \\\n     '{data}' using 1:3 skip 1 with linespoints title 'Gaussian'\n"
            );
        }
    }
    s
}

pub fn plotscript(ctx: &Ctx, flags: &PlotscriptFlags) -> Result<(), CliError> {
    let (p, params): (PlotscriptParams, _) = resolve("plotscript", flags, ctx.config.as_ref())?;
    let Some(csv_path) = p.csv.clone() else {
        return Err(CliError::Usage("--csv is required".into()));
    };
    let Some(kind) = p.kind else {
        return Err(CliError::Usage("--kind is required".into()));
    };
    let bytes =
        std::fs::read(&csv_path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", csv_path.display())))?;
    let first = csv::Reader::from_reader(bytes.as_slice())
        .headers()
        .ok()
        .and_then(|h| h.get(0).map(str::to_string));
    let want = expected_header(kind);
    if first.as_deref() != Some(want) {
        return Err(CliError::Usage(format!(
            "{} does not look like a {kind:?} table (first column should be {want})",
            csv_path.display()
        )));
    }
    let body = gnuplot_body(kind, &csv_path.to_string_lossy());
    let mut params = params;
    params["csv_sha256"] = Value::String(sha256_hex(&bytes));
    let manifest = RunManifest::new("plotscript", params, None, body.as_bytes());
    let script = format!(
        "# manifest: {}\n{body}",
        serde_json::to_string(&manifest).expect("manifest serialises")
    );
    let out = p.out.unwrap_or_else(|| csv_path.with_extension("gp"));
    write_bytes(&out, script.as_bytes())
}
