//! Subcommand bodies. Each returns `Ok(true)` on success and `Ok(false)`
//! when a suite ran but failed.

use std::path::{Path, PathBuf};
use std::process::Command;

use bbhk_core::bounds::BoundSpec;
use bbhk_core::kernels::{Kernel, KernelSpec};
use bbhk_core::scalar::dist;
use bbhk_core::simulate::{estimate_heat_kernel_many, simulate_paths, SimConfig};
use bbhk_core::verify::{run_suite, Report, SuiteName};
use bbhk_core::weights::blowup_argument;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{point, write_atomic, write_csv, write_json, write_report};
use crate::CliError;

/// Environment variable naming the plots executable.
pub const PLOTS_ENV: &str = "BBHK_PLOTS";

fn kernel_from(cfg: &RunConfig) -> Result<Kernel<f64>, CliError> {
    let dom = cfg.domain()?;
    let k = cfg.kernel()?;
    let mut spec = KernelSpec::new(k.kind, dom.clone(), k.alpha);
    spec.weight = cfg.weight(&dom)?;
    spec.seed = cfg.resolve_seed(None)?;
    if let Some(tol) = k.rel_tol {
        spec.quad = spec.quad.with_tol(tol, spec.quad.abs_tol);
    }
    if let Some(n) = k.mc_samples {
        spec.mc_samples = n;
    }
    Ok(Kernel::new(spec)?)
}

#[derive(Serialize)]
struct KernelRow {
    x: String,
    y: String,
    value: f64,
    error: f64,
    /// `|x-y|^{-d-α} Φ(arg)` with the configured weight.
    form: f64,
    ratio: f64,
}

pub fn kernel(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let k = kernel_from(cfg)?;
    let grid = cfg.grid()?;
    let dom = &k.spec.dom;
    let w = k.spec.weight;
    let e = dom.dim() as f64 + k.alpha();
    let mut rows = Vec::new();
    for x in &grid.x {
        for y in &grid.y {
            if x == y {
                continue;
            }
            let v = k.eval(x, y)?;
            let r = dist(x, y);
            let form = r.powf(-e) * w.eval(blowup_argument(r, dom.signed_distance(x), dom.signed_distance(y), w.a0))?;
            rows.push(KernelRow { x: point(x), y: point(y), value: v.value, error: v.error, form, ratio: v.value / form });
        }
    }
    write_csv(&out.join("kernel.csv"), &rows)?;
    eprintln!("kernel: {} pairs -> {}", rows.len(), out.join("kernel.csv").display());
    Ok(true)
}

#[derive(Serialize)]
struct TailRow {
    x: String,
    delta: f64,
    r: f64,
    tail: f64,
    tail_error: f64,
    annulus: f64,
    annulus_error: f64,
    /// `r^{-α} Φ((r∧A₀)/(δ∧A₀))`.
    form: f64,
}

pub fn tail(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let k = kernel_from(cfg)?;
    let grid = cfg.grid()?;
    let dom = &k.spec.dom;
    let w = k.spec.weight;
    let mut rows = Vec::new();
    for x in &grid.x {
        let delta = dom.delta(x)?;
        for &r in &grid.radii {
            let t = k.tail_integral(x, r, f64::INFINITY)?;
            let a = k.annulus_integral(x, r)?;
            let form = r.powf(-k.alpha()) * w.eval(r.min(w.a0) / delta.min(w.a0))?;
            rows.push(TailRow {
                x: point(x),
                delta,
                r,
                tail: t.value,
                tail_error: t.error,
                annulus: a.value,
                annulus_error: a.error,
                form,
            });
        }
    }
    write_csv(&out.join("tail.csv"), &rows)?;
    eprintln!("tail: {} rows -> {}", rows.len(), out.join("tail.csv").display());
    Ok(true)
}

#[derive(Serialize)]
struct StripRow {
    x: String,
    r: f64,
    s: f64,
    volume: f64,
    error: f64,
    /// `s^q (s∨r)^{d-q}` with `q = γ/2`.
    bound: f64,
    ratio: f64,
}

pub fn aikawa(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let dom = cfg.domain()?;
    let grid = cfg.grid()?;
    let seed = cfg.resolve_seed(None)?;
    let n = grid.samples.unwrap_or(200_000);
    let d = dom.dim() as f64;
    let q = dom.gamma() / 2.0;
    let mut rows = Vec::new();
    for x in &grid.x {
        for &r in &grid.radii {
            for &s in &grid.widths {
                let v = dom.strip_volume_mc(x, r, s, n, seed.wrapping_add(rows.len() as u64))?;
                let bound = s.powf(q) * s.max(r).powf(d - q);
                rows.push(StripRow { x: point(x), r, s, volume: v.value, error: v.std_error, bound, ratio: v.value / bound });
            }
        }
    }
    let c = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    write_csv(&out.join("aikawa.csv"), &rows)?;
    eprintln!("aikawa: {} points, fitted C = {c:.4} -> {}", rows.len(), out.join("aikawa.csv").display());
    Ok(true)
}

fn sim_config(cfg: &RunConfig, seed: u64) -> Result<(SimConfig, Vec<f64>), CliError> {
    let s = cfg.sim()?;
    let mut sc = SimConfig::new(s.model.clone(), cfg.domain()?, s.alpha, s.t, s.n_paths, seed);
    sc.dt = s.dt;
    sc.validate()?;
    Ok((sc, s.x0.clone()))
}

pub fn simulate(cfg: &RunConfig, seed: u64, out: &Path) -> Result<bool, CliError> {
    let (sc, x0) = sim_config(cfg, seed)?;
    let ends = simulate_paths(&sc, &x0)?;
    let mut buf = Vec::new();
    ends.write_csv(&mut buf)?;
    write_atomic(&out.join("endpoints.csv"), &buf)?;
    let summary = json!({
        "config": sc,
        "x0": x0,
        "n": ends.n(),
        "mass": ends.mass(&sc.dom),
        "resurrected_fraction": ends.resurrected_fraction(),
        "proposals": ends.proposals,
        "cpu_seconds": ends.cpu_seconds,
    });
    write_json(&out.join("simulate.json"), &summary)?;
    eprintln!("simulate: {} paths, mass {} -> {}", ends.n(), ends.mass(&sc.dom), out.display());
    Ok(true)
}

#[derive(Serialize)]
struct HkRow {
    y: String,
    p_hat: f64,
    lower: f64,
    upper: f64,
    hits: u64,
    p_tilde: f64,
    regime: &'static str,
    ratio: f64,
}

pub fn hk_check(cfg: &RunConfig, seed: u64, out: &Path) -> Result<bool, CliError> {
    let (sc, x0) = sim_config(cfg, seed)?;
    let grid = cfg.grid()?;
    let h = cfg.sim()?.bandwidth * sc.t.powf(1.0 / sc.alpha);
    let bound = BoundSpec::new(sc.dom.clone(), cfg.weight(&sc.dom)?, sc.alpha);
    let est = estimate_heat_kernel_many(&sc, &x0, &grid.y, h)?;
    let mut rows = Vec::new();
    for (y, e) in grid.y.iter().zip(&est) {
        let b = bound.eval(sc.t, &x0, y)?;
        rows.push(HkRow {
            y: point(y),
            p_hat: e.value,
            lower: e.lower,
            upper: e.upper,
            hits: e.hits,
            p_tilde: b.p_tilde,
            regime: b.regime.name(),
            ratio: e.value / b.p_tilde,
        });
    }
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    write_csv(&out.join("hk.csv"), &rows)?;
    eprintln!("hk-check: {} targets, ratio spread {:.3} -> {}", rows.len(), hi / lo, out.join("hk.csv").display());
    Ok(true)
}

fn one_suite(name: SuiteName, cfg: &RunConfig, seed: u64, dir: &Path) -> Result<Report, CliError> {
    let report = run_suite(name, &cfg.suite, seed)?;
    write_report(dir, &report)?;
    let s = &report.summary;
    println!(
        "{name}: {} ({} cases, ratio [{:.4e}, {:.4e}], fitted C {:.4}, {:.1}s) -> {}",
        if s.pass { "PASS" } else { "FAIL" },
        report.cases.len(),
        s.min_ratio,
        s.max_ratio,
        s.fitted_c,
        report.provenance.duration_s,
        dir.display()
    );
    for g in report.failures() {
        println!("  failed group {}: statistic {:.4e} against {:?}", g.group, g.statistic, g.criterion);
    }
    Ok(report)
}

/// Runs a suite, or every configured suite for `all`.
pub fn suite(name: &str, cfg: &RunConfig, seed: u64, out: &Path) -> Result<bool, CliError> {
    if name == "all" {
        let names = cfg.suites.clone().unwrap_or_else(|| SuiteName::ALL.to_vec());
        let mut pass = true;
        for n in names {
            pass &= one_suite(n, cfg, seed, &out.join(n.as_str()))?.pass();
        }
        return Ok(pass);
    }
    let n: SuiteName = name.parse()?;
    Ok(one_suite(n, cfg, seed, out)?.pass())
}

/// Hands the report directory to the plots executable.
pub fn report(input: &Path, out: Option<PathBuf>) -> Result<bool, CliError> {
    if !input.join("report.json").is_file() && !input.is_dir() {
        return Err(CliError::Config(format!("{} is not a run directory", input.display())));
    }
    let exe = std::env::var(PLOTS_ENV).unwrap_or_else(|_| "bbhk-plots".into());
    let mut cmd = Command::new(&exe);
    cmd.arg(input);
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    match cmd.status() {
        Ok(st) => Ok(st.success()),
        Err(e) => Err(CliError::Delegate(format!("cannot run plots component '{exe}' (set {PLOTS_ENV}): {e}"))),
    }
}
