use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use rayon::prelude::*;

use super::params::*;
use super::{fmt_point, Case, Criterion, Report, SuiteName};
use crate::bounds::BoundSpec;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::inputs;
use crate::kernels::{sample_pairs, check_condition_a, Kernel, KernelKind, KernelSpec, PairRatio};
use crate::scalar::dist;
use crate::simulate::{density_at, occupation_phi_average, partition_mass, simulate_paths, HeatKernelEstimate, Model, PathEndpoints, SimConfig};
use crate::special::stable_constant;
use crate::stats::Z95;
use crate::weights::{log_grid, psi1, PsiKind, PsiSpec, WeightKind, WeightSpec};

/// `J_Neumann(1, 2)` on the half-line at `α = 1`.
pub const NEUMANN_ANCHOR: f64 = (3.0 * LN_2 - 1.0) / PI;

/// `J_trace((0,1), (0,2))` on the upper half-plane at `α = 1`.
pub const TRACE_ANCHOR: f64 = 0.160544713196322;

/// Cases and per-group criteria produced by one suite.
#[derive(Default)]
struct Sheet {
    cases: Vec<Case>,
    criteria: BTreeMap<String, Criterion>,
}

impl Sheet {
    fn push(&mut self, mut case: Case) {
        case.id = format!("{:06}", self.cases.len());
        self.cases.push(case);
    }

    fn group(&mut self, name: impl Into<String>, crit: Criterion) {
        self.criteria.insert(name.into(), crit);
    }
}

/// Runs a suite; `seed` drives every random choice.
pub fn run_suite(name: SuiteName, params: &SuiteParams, seed: u64) -> Result<Report> {
    let start = Instant::now();
    let (sheet, grid) = match name {
        SuiteName::ConditionA => {
            let p = &params.condition_a;
            p.validate()?;
            (condition_a(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::TailTwoSided => {
            let p = &params.tail_two_sided;
            p.validate()?;
            (tail_two_sided(p)?, serde_json::to_value(p))
        }
        SuiteName::Aikawa => {
            let p = &params.aikawa;
            p.validate()?;
            (aikawa(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::KernelNeumann => {
            let p = &params.kernel_neumann;
            p.validate()?;
            (kernel_neumann(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::KernelTrace => {
            let p = &params.kernel_trace;
            p.validate()?;
            (kernel_trace(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::KernelResurrected => {
            let p = &params.kernel_resurrected;
            p.validate()?;
            (kernel_resurrected(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::HkTwoSided => {
            let p = &params.hk_two_sided;
            p.validate()?;
            (hk_two_sided(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::Occupation => {
            let p = &params.occupation;
            p.validate()?;
            (occupation(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::TruncatedDecay => {
            let p = &params.truncated_decay;
            p.validate()?;
            (truncated_decay(p, seed)?, serde_json::to_value(p))
        }
        SuiteName::CrossModel => {
            let p = &params.cross_model;
            p.validate()?;
            (cross_model(p, seed)?, serde_json::to_value(p))
        }
    };
    let grid = grid.map_err(|e| Error::Config(e.to_string()))?;
    Ok(Report::assemble(name, sheet.cases, sheet.criteria, seed, grid, start.elapsed().as_secs_f64()))
}

/// Stream seed for the `k`-th group of a suite.
fn sub_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

fn dom_tag(dom: &DomainSpec<f64>) -> String {
    match *dom {
        DomainSpec::HalfLine => "half_line".into(),
        DomainSpec::HalfSpace { d } => format!("half_space{d}"),
        DomainSpec::Ball { d, .. } => format!("ball{d}"),
        DomainSpec::ExteriorBall { d, .. } => format!("exterior_ball{d}"),
        DomainSpec::Box2d { .. } => "box_2d".into(),
    }
}

fn weight_tag(w: &WeightKind<f64>) -> String {
    match w {
        WeightKind::ConstantOne => "constant".into(),
        WeightKind::Log => "log".into(),
        WeightKind::Power { beta } => format!("power{beta}"),
        WeightKind::Psi1 { psi, p } => format!("psi1_{}{p}", psi_tag(*psi)),
    }
}

fn psi_tag(k: PsiKind) -> &'static str {
    match k {
        PsiKind::ConstantOne => "constant",
        PsiKind::Power => "power",
        PsiKind::PowerCap => "power_cap",
    }
}

fn psi_name(psi: &PsiSpec<f64>) -> String {
    match psi.kind {
        PsiKind::ConstantOne => "constant".into(),
        k => format!("{}{}", psi_tag(k), psi.p),
    }
}

fn pair_case(group: &str, dom: &DomainSpec<f64>, extra: BTreeMap<String, String>, p: &PairRatio<f64>) -> Case {
    let mut inputs = inputs! {
        "x" => fmt_point(&p.x),
        "y" => fmt_point(&p.y),
        "delta_x" => dom.signed_distance(&p.x),
        "delta_y" => dom.signed_distance(&p.y),
    };
    inputs.extend(extra);
    Case::new(group, inputs, p.value, p.error, p.bound).with_ratio(p.ratio)
}

/// Adds one condition check: all sampled pairs plus the boundary approach.
fn condition_group(sheet: &mut Sheet, family: Family, d: usize, alpha: f64, pairs: usize, cap: f64, seed: u64) -> Result<()> {
    let dom = flat_domain(d);
    let group = format!("{}_d{d}_a{alpha}", family.name());
    let (spec, weight) = family.setup(dom.clone(), alpha);
    let kernel = Kernel::new(spec).map_err(|e| e.context(&group))?;
    let stats = check_condition_a(&kernel, &weight, pairs, seed, cap).map_err(|e| e.context(&group))?;
    let base = inputs! { "family" => family.name(), "d" => d, "alpha" => alpha };
    for p in &stats.pairs {
        sheet.push(pair_case(&group, &dom, base.clone(), p));
    }
    for (k, p) in stats.approach.iter().enumerate() {
        let mut extra = base.clone();
        extra.insert("approach".into(), (k + 1).to_string());
        sheet.push(pair_case(&group, &dom, extra, p));
    }
    sheet.group(group, Criterion::Spread { cap });
    Ok(())
}

fn condition_a(p: &ConditionAParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let mut k = 0;
    for &family in &p.families {
        for &d in &p.dims {
            for &alpha in &p.alphas {
                condition_group(&mut sheet, family, d, alpha, p.pairs, p.cap, sub_seed(seed, k))?;
                k += 1;
            }
        }
    }
    Ok(sheet)
}

/// `J(x,y)/J(y,x)` on sampled planar pairs.
fn symmetry_group(sheet: &mut Sheet, name: &str, spec: KernelSpec<f64>, n: usize, tol: f64, seed: u64) -> Result<()> {
    let group = format!("symmetry_{name}_a{}", spec.alpha);
    let dom = spec.dom.clone();
    let kernel = Kernel::new(spec).map_err(|e| e.context(&group))?;
    let pairs = sample_pairs(&dom, n, seed, (1e-2, 1e1))?;
    let rows: Vec<Case> = pairs
        .par_iter()
        .map(|(x, y)| {
            let a = kernel.eval(x, y)?;
            let b = kernel.eval(y, x)?;
            let inputs = inputs! { "x" => fmt_point(x), "y" => fmt_point(y), "alpha" => kernel.alpha() };
            Ok(Case::new(&group, inputs, a.value, a.error + b.error, b.value))
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e.context(&group))?;
    rows.into_iter().for_each(|c| sheet.push(c));
    sheet.group(group, Criterion::Relative { tol });
    Ok(())
}

fn anchor_case(sheet: &mut Sheet, spec: KernelSpec<f64>, x: &[f64], y: &[f64], exact: f64, tol: f64) -> Result<()> {
    let group = "anchor".to_string();
    let alpha = spec.alpha;
    let v = Kernel::new(spec)?.eval(x, y).map_err(|e| e.context(&group))?;
    let inputs = inputs! { "x" => fmt_point(x), "y" => fmt_point(y), "alpha" => alpha };
    sheet.push(Case::new(&group, inputs, v.value, v.error, exact));
    sheet.group(group, Criterion::Relative { tol });
    Ok(())
}

fn kernel_conditions(sheet: &mut Sheet, families: &[Family], p: &KernelSuiteParams, seed: u64) -> Result<()> {
    let mut k = 0;
    for &family in families {
        for &d in &p.dims {
            for &alpha in &p.alphas {
                condition_group(sheet, family, d, alpha, p.pairs, p.cap, sub_seed(seed, k))?;
                k += 1;
            }
        }
    }
    Ok(())
}

fn kernel_neumann(p: &KernelSuiteParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let spec = KernelSpec::new(KernelKind::Neumann, DomainSpec::half_line(), 1.0);
    anchor_case(&mut sheet, spec, &[1.0], &[2.0], NEUMANN_ANCHOR, p.anchor_tol)?;
    for (i, &alpha) in p.alphas.iter().enumerate() {
        let spec = KernelSpec::new(KernelKind::Neumann, DomainSpec::half_space(2), alpha);
        symmetry_group(&mut sheet, "neumann", spec, p.symmetry_pairs, p.symmetry_tol, sub_seed(seed, 100 + i))?;
    }
    kernel_conditions(&mut sheet, &[Family::Neumann], p, seed)?;
    Ok(sheet)
}

fn kernel_trace(p: &KernelSuiteParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let spec = KernelSpec::new(KernelKind::Trace, DomainSpec::half_space(2), 1.0);
    anchor_case(&mut sheet, spec, &[0.0, 1.0], &[0.0, 2.0], TRACE_ANCHOR, p.anchor_tol)?;
    for (i, &alpha) in p.alphas.iter().enumerate() {
        let spec = KernelSpec::new(KernelKind::Trace, DomainSpec::half_space(2), alpha);
        symmetry_group(&mut sheet, "trace", spec, p.symmetry_pairs, p.symmetry_tol, sub_seed(seed, 100 + i))?;
    }
    kernel_conditions(&mut sheet, &[Family::Trace], p, seed)?;
    Ok(sheet)
}

fn kernel_resurrected(p: &KernelSuiteParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let families = [Family::ResurrectedConstant, Family::ResurrectedPowerCapEighth, Family::ResurrectedPowerCapHalf];
    let mut k = 100;
    for family in families {
        for &alpha in &p.alphas {
            let psi = family.psi(alpha).expect("resurrected family");
            let spec = KernelSpec::resurrected(DomainSpec::half_space(2), alpha, psi);
            let name = format!("resurrected_{}", psi_tag(psi.kind));
            let name = if family == Family::ResurrectedPowerCapEighth { format!("{name}_eighth") } else { name };
            symmetry_group(&mut sheet, &name, spec, p.symmetry_pairs, p.symmetry_tol, sub_seed(seed, k))?;
            k += 1;
        }
    }
    kernel_conditions(&mut sheet, &families, p, seed)?;
    Ok(sheet)
}

fn cross_model(p: &CrossModelParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let mut k = 0;
    for &d in &p.dims {
        let dom = flat_domain(d);
        for &alpha in &p.alphas {
            let neumann = Kernel::new(KernelSpec::new(KernelKind::Neumann, dom.clone(), alpha))?;
            let unit = Kernel::new(KernelSpec::resurrected(dom.clone(), alpha, PsiSpec::constant()))?;
            let trace = Kernel::new(KernelSpec::new(KernelKind::Trace, dom.clone(), alpha))?;
            let half = Kernel::new(KernelSpec::resurrected(dom.clone(), alpha, PsiSpec::power_cap(alpha / 2.0)))?;
            let c = stable_constant(d, alpha);
            let pairs = sample_pairs(&dom, p.pairs, sub_seed(seed, k), (1e-3, 1e2))?;
            k += 1;
            let identity = format!("identity_d{d}_a{alpha}");
            let constant = format!("trace_d{d}_a{alpha}");
            let rows: Vec<(Case, Case)> = pairs
                .par_iter()
                .map(|(x, y)| {
                    let inputs = inputs! { "x" => fmt_point(x), "y" => fmt_point(y), "d" => d, "alpha" => alpha };
                    let n = neumann.eval(x, y)?;
                    let u = unit.eval(x, y)?;
                    let t = trace.eval(x, y)?;
                    let h = half.eval(x, y)?;
                    Ok((
                        Case::new(&identity, inputs.clone(), c * u.value, c * u.error + n.error, n.value),
                        Case::new(&constant, inputs, h.value, h.error + t.error, t.value),
                    ))
                })
                .collect::<Result<_>>()
                .map_err(|e: Error| e.context(&identity))?;
            for (a, b) in rows {
                sheet.push(a);
                sheet.push(b);
            }
            sheet.group(identity, Criterion::Relative { tol: p.identity_tol });
            sheet.group(constant, Criterion::Constant { tol: p.constant_tol });
        }
    }
    Ok(sheet)
}

/// Interior point of `dom` at boundary distance `delta`.
fn point_at_depth(dom: &DomainSpec<f64>, delta: f64) -> Vec<f64> {
    match *dom {
        DomainSpec::HalfLine => vec![delta],
        DomainSpec::HalfSpace { d } => {
            let mut x = vec![0.0; d];
            x[d - 1] = delta;
            x
        }
        DomainSpec::Ball { d, radius } => {
            let mut x = vec![0.0; d];
            x[0] = radius - delta;
            x
        }
        DomainSpec::ExteriorBall { d, radius } => {
            let mut x = vec![0.0; d];
            x[0] = radius + delta;
            x
        }
        DomainSpec::Box2d { side } => vec![side / 2.0, delta],
    }
}

fn tail_two_sided(p: &TailParams) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    for dom in &p.domains {
        let bounded = dom.r0().is_finite();
        for w in &p.weights {
            let weight = WeightSpec::new(*w).with_a0(dom.a0());
            for &alpha in &p.alphas {
                let kernel = Kernel::new(KernelSpec::comparison(dom.clone(), alpha, weight))?;
                let lambda = kernel.lambda();
                let (deltas, radii, rhos) = if bounded {
                    let half = dom.r0() / 4.0;
                    (
                        log_grid(1e-3, half, p.n_delta),
                        log_grid(1e-3, half, p.n_r),
                        log_grid(1e-3, 0.9 * dom.r0() / (2.0 * lambda), p.n_r),
                    )
                } else {
                    let r = log_grid(1e-3, 1e2, p.n_r);
                    (log_grid(1e-3, 1e1, p.n_delta), r.clone(), r)
                };
                let tag = format!("{}_{}_a{alpha}", dom_tag(dom), weight_tag(w));
                let (upper, lower) = (format!("upper_{tag}"), format!("lower_{tag}"));
                let a0 = weight.a0;
                let phi = |r: f64, delta: f64| weight.eval(r.min(a0) / delta.min(a0));
                let grid: Vec<(f64, usize)> = deltas.iter().flat_map(|&d| (0..radii.len()).map(move |i| (d, i))).collect();
                let rows: Vec<(Case, Case)> = grid
                    .par_iter()
                    .map(|&(delta, i)| {
                        let x = point_at_depth(dom, delta);
                        let (r, rho) = (radii[i], rhos[i]);
                        let up = kernel.tail_integral(&x, r, f64::INFINITY)?;
                        let lo = kernel.annulus_integral(&x, rho)?;
                        let base = inputs! { "x" => fmt_point(&x), "delta" => delta, "alpha" => alpha };
                        let mut ui = base.clone();
                        ui.insert("r".into(), r.to_string());
                        let mut li = base;
                        li.insert("rho".into(), rho.to_string());
                        Ok((
                            Case::new(&upper, ui, up.value, up.error, r.powf(-alpha) * phi(r, delta)?).with_abscissa(r / delta),
                            Case::new(&lower, li, lo.value, lo.error, rho.powf(-alpha) * phi(rho, delta)?).with_abscissa(rho / delta),
                        ))
                    })
                    .collect::<Result<_>>()
                    .map_err(|e: Error| e.context(&tag))?;
                for (a, b) in rows {
                    sheet.push(a);
                    sheet.push(b);
                }
                sheet.group(upper, Criterion::Spread { cap: p.cap });
                sheet.group(lower, Criterion::Spread { cap: p.cap });
            }
        }
    }
    Ok(sheet)
}

/// A point on `∂D`.
fn boundary_point(dom: &DomainSpec<f64>) -> Vec<f64> {
    point_at_depth(dom, 0.0)
}

fn decades(range: [f64; 2], step: f64) -> Vec<f64> {
    let n = ((range[1] - range[0]) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| 10f64.powf(range[0] + k as f64 * step)).collect()
}

fn aikawa(p: &AikawaParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    for (k, dom) in p.domains.iter().enumerate() {
        let x = boundary_point(dom);
        let d = dom.dim() as f64;
        let q = dom.gamma() / 2.0;
        let tag = dom_tag(dom);
        let coarse = format!("coarse_{tag}");
        for (group, step) in [(coarse.clone(), p.step), (format!("refined_{tag}"), p.step / 2.0)] {
            let grid: Vec<(f64, f64)> = decades(p.r_decades, step)
                .into_iter()
                .flat_map(|r| decades(p.s_decades, step).into_iter().map(move |s| (r, s)))
                .collect();
            let rows: Vec<Case> = grid
                .iter()
                .enumerate()
                .map(|(i, &(r, s))| {
                    let pt_seed = sub_seed(sub_seed(seed, k), i + if group == coarse { 0 } else { 1 << 20 });
                    let v = dom.strip_volume_mc(&x, r, s, p.samples, pt_seed)?;
                    let bound = s.powf(q) * s.max(r).powf(d - q);
                    let inputs = inputs! { "x" => fmt_point(&x), "r" => r, "s" => s, "q" => q };
                    Ok(Case::new(&group, inputs, v.value, v.std_error, bound).with_abscissa(s / r))
                })
                .collect::<Result<_>>()
                .map_err(|e: Error| e.context(&group))?;
            rows.into_iter().for_each(|c| sheet.push(c));
            let crit = if group == coarse {
                Criterion::Band { lo: 0.0, hi: p.cap }
            } else {
                Criterion::MaxStable { reference: coarse.clone(), tol: p.tol }
            };
            sheet.group(group, crit);
        }
    }
    Ok(sheet)
}

/// `σ` of a density estimate from its 95% interval.
fn sigma(e: &HeatKernelEstimate) -> f64 {
    (e.upper - e.lower) / (2.0 * Z95)
}

/// Mass and partition cases of one run. The partition covers the box of
/// half-width `reach` around `x0`, cut at the boundary.
fn conservation_cases(sheet: &mut Sheet, label: &str, ends: &PathEndpoints, dom: &DomainSpec<f64>, x0: &[f64], reach: f64) -> Result<()> {
    let mass = ends.mass(dom);
    sheet.push(Case::new("mass", inputs! { "run" => label, "n" => ends.n() }, mass, 0.0, 1.0));
    let d = ends.d;
    let lo: Vec<f64> = x0.iter().enumerate().map(|(i, &v)| if i + 1 == d { (v - reach).max(0.0) } else { v - reach }).collect();
    let hi: Vec<f64> = x0.iter().map(|&v| v + reach).collect();
    let part = partition_mass(ends, &lo, &hi, 40)?;
    let bound = 1.0 + 3.0 * part.std_error;
    let inputs = inputs! { "run" => label, "cells" => part.cells, "lo" => fmt_point(&lo), "hi" => fmt_point(&hi) };
    sheet.push(Case::new("partition", inputs, part.total, part.std_error, bound));
    Ok(())
}

fn hk_rows(
    sheet: &mut Sheet,
    group: &str,
    cfg: &SimConfig,
    bound: &BoundSpec<f64>,
    start: &HkStart,
    h: f64,
) -> Result<Vec<HeatKernelEstimate>> {
    let label = format!("{group} x={}", fmt_point(&start.x));
    let ends = simulate_paths(cfg, &start.x).map_err(|e| e.context(&label))?;
    conservation_cases(sheet, &label, &ends, &cfg.dom, &start.x, 40.0 * cfg.t.powf(1.0 / cfg.alpha))?;
    let scale = cfg.t.powf(1.0 / cfg.alpha);
    let mut out = Vec::new();
    for y in &start.targets {
        let est = density_at(&ends, &cfg.dom, y, h).map_err(|e| e.context(&label))?;
        let pt = bound.eval(cfg.t, &start.x, y).map_err(|e| e.context(&label))?;
        let inputs = inputs! {
            "x" => fmt_point(&start.x),
            "y" => fmt_point(y),
            "t" => cfg.t,
            "h" => h,
            "n" => est.n,
            "regime" => pt.regime.name(),
        };
        let case = Case::new(group, inputs, est.value, sigma(&est), pt.p_tilde)
            .with_abscissa(dist(&start.x, y) / scale)
            .with_hits(est.hits);
        sheet.push(case);
        out.push(est);
    }
    Ok(out)
}

fn hk_two_sided(p: &HkParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let h = p.bandwidth * p.scale();
    let plane = DomainSpec::half_space(2);
    let mut k = 0;
    for psi in &p.psis {
        let group = format!("resurrected_{}", psi_name(psi));
        let model = Model::Resurrected { psi: *psi };
        let bound = BoundSpec::new(plane.clone(), psi1(*psi), p.alpha);
        for (i, start) in p.planar.iter().enumerate() {
            let cfg = SimConfig::new(model.clone(), plane.clone(), p.alpha, p.t, p.n_paths, sub_seed(seed, k));
            k += 1;
            let base = hk_rows(&mut sheet, &group, &cfg, &bound, start, h)?;
            if p.dt_check == Some(i) {
                let fine = cfg.clone().with_dt(p.t / 2000.0);
                let fine = SimConfig { seed: sub_seed(seed, 1000 + k), ..fine };
                let label = format!("{group} dt/2");
                let ends = simulate_paths(&fine, &start.x).map_err(|e| e.context(&label))?;
                conservation_cases(&mut sheet, &format!("{label} x={}", fmt_point(&start.x)), &ends, &plane, &start.x, 40.0 * p.scale())?;
                for (y, coarse) in start.targets.iter().zip(&base) {
                    let est = density_at(&ends, &plane, y, h)?;
                    let s = (sigma(&est).powi(2) + sigma(coarse).powi(2)).sqrt();
                    let shift = (est.value - coarse.value).abs();
                    let inputs = inputs! {
                        "model" => &group,
                        "x" => fmt_point(&start.x),
                        "y" => fmt_point(y),
                        "p_dt" => coarse.value,
                        "p_half_dt" => est.value,
                    };
                    sheet.push(Case::new("dt_halving", inputs, shift, s, s));
                }
            }
        }
    }
    let line = DomainSpec::half_line();
    let weight = WeightKind::Log;
    let group = "ctmc_log".to_string();
    let model = Model::GenericCtmc { weight, epsilon: p.epsilon * p.scale(), cutoff: None };
    let bound = BoundSpec::new(line.clone(), WeightSpec::new(weight), p.alpha);
    for start in &p.line {
        let cfg = SimConfig::new(model.clone(), line.clone(), p.alpha, p.t, p.n_paths, sub_seed(seed, k));
        k += 1;
        hk_rows(&mut sheet, &group, &cfg, &bound, start, h)?;
    }
    let model_groups: Vec<String> = p.psis.iter().map(|psi| format!("resurrected_{}", psi_name(psi))).chain([group]).collect();
    for g in model_groups {
        sheet.group(g, Criterion::Spread { cap: p.cap });
    }
    if p.dt_check.is_some() {
        sheet.group("dt_halving", Criterion::Band { lo: 0.0, hi: p.z_max });
    }
    sheet.group("mass", Criterion::Relative { tol: 0.0 });
    sheet.group("partition", Criterion::Band { lo: 0.0, hi: 1.0 });
    Ok(sheet)
}

fn occupation(p: &OccupationParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let weight = WeightSpec::new(p.weight);
    let unit = WeightSpec::constant();
    let starts: Vec<Vec<f64>> = p.deltas.iter().map(|&d| point_at_depth(&p.dom, d)).collect();
    let deepest = p.deltas.iter().copied().fold(0.0, f64::max);
    for (i, x) in starts.iter().enumerate() {
        let label = format!("x={}", fmt_point(x));
        let cfg = SimConfig::new(Model::Neumann, p.dom.clone(), p.alpha, p.t, p.n_paths, sub_seed(seed, i));
        let est = occupation_phi_average(&cfg, x, &weight).map_err(|e| e.context(&label))?;
        let inputs = inputs! { "x" => fmt_point(x), "delta" => p.deltas[i], "t" => p.t, "n" => p.n_paths };
        sheet.push(Case::new("phi", inputs, est.value, est.std_error, 1.0).with_abscissa(p.deltas[i]));
        if p.deltas[i] == 0.0 || p.deltas[i] == deepest {
            let cfg = SimConfig { n_paths: p.unit_paths, seed: sub_seed(seed, 100 + i), ..cfg };
            let est = occupation_phi_average(&cfg, x, &unit).map_err(|e| e.context(&label))?;
            let inputs = inputs! { "x" => fmt_point(x), "delta" => p.deltas[i], "t" => p.t, "n" => p.unit_paths };
            sheet.push(Case::new("unit", inputs, est.value, est.std_error, 1.0));
        }
    }
    sheet.group("phi", Criterion::Band { lo: 0.0, hi: p.cap });
    sheet.group("unit", Criterion::Relative { tol: 0.0 });
    Ok(sheet)
}

fn truncated_decay(p: &DecayParams, seed: u64) -> Result<Sheet> {
    let mut sheet = Sheet::default();
    let eps = p.epsilon;
    let t = eps.powf(p.alpha);
    let model = Model::GenericCtmc { weight: p.weight, epsilon: p.inner * eps, cutoff: Some(eps) };
    let line = DomainSpec::half_line();
    for (i, &s) in p.starts.iter().enumerate() {
        let x = s * eps;
        let group = format!("start_{s}");
        let cfg = SimConfig::new(model.clone(), line.clone(), p.alpha, t, p.n_paths, sub_seed(seed, i));
        let ends = simulate_paths(&cfg, &[x]).map_err(|e| e.context(&group))?;
        conservation_cases(&mut sheet, &group, &ends, &line, &[x], 40.0 * eps)?;
        let n = ends.n() as f64;
        for &r in &p.radii {
            let hits = ends.iter().filter(|y| (y[0] - x).abs() > r * eps).count() as u64;
            let prob = hits as f64 / n;
            let inputs = inputs! { "x" => x, "r" => r * eps, "epsilon" => eps, "t" => t, "n" => p.n_paths };
            let case = Case::new(&group, inputs, prob, (prob * (1.0 - prob) / n).sqrt(), 1.0)
                .with_abscissa(r)
                .with_hits(hits);
            sheet.push(case);
        }
        sheet.group(group, Criterion::Decay { min_r2: p.min_r2, min_hits: p.min_hits });
    }
    sheet.group("mass", Criterion::Relative { tol: 0.0 });
    sheet.group("partition", Criterion::Band { lo: 0.0, hi: 1.0 });
    Ok(sheet)
}
