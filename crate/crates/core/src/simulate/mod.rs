//! Path simulation at desk scale.
//!
//! Two engines are available:
//!
//! * a time-stepped walk with exact isotropic stable increments; when a step
//!   lands off `D̄` the path is returned into `D` by the model's return law
//!   (Neumann, trace or resurrected),
//! * a continuous-time jump chain for comparison kernels on the half-line,
//!   with jumps shorter than `ε` removed.
//!
//! Work is split into a fixed number of batches with their own random
//! streams, so endpoints depend only on the configuration.

mod ctmc;
mod sampler;

pub use ctmc::HalfLineJumps;
pub use sampler::{ball_exit_sample, neumann_return_sample, positive_stable, stable_increment, stable_increment_into, HalfSpaceReturn};

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::rng::{split_counts, stream_rng, SimRng, DEFAULT_BATCHES};
use crate::special::stable_constant;
use crate::stats::{McEstimate, RunningStats, Z95};
use crate::weights::{PsiSpec, WeightKind, WeightSpec};

/// Proposal budget of the rejection return sampler; running out means the
/// acceptance rate is below `10⁻⁴`.
pub const MAX_RETURN_PROPOSALS: usize = 10_000;

/// Which process is simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Kernel `|x-y|^{-d-α} + q(x,y)` on a half-space. The unit jump
    /// constant makes this the stable walk run at speed `1/c_{d,α}`.
    Resurrected { psi: PsiSpec<f64> },
    Neumann,
    Trace,
    /// Comparison kernel with weight `Φ` on the half-line, jumps of length
    /// in `(epsilon, cutoff]`.
    GenericCtmc {
        weight: WeightKind<f64>,
        epsilon: f64,
        #[serde(default)]
        cutoff: Option<f64>,
    },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Resurrected { .. } => "resurrected",
            Model::Neumann => "neumann",
            Model::Trace => "trace",
            Model::GenericCtmc { .. } => "generic_ctmc",
        }
    }

    pub fn is_time_stepped(&self) -> bool {
        !matches!(self, Model::GenericCtmc { .. })
    }
}

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

/// One simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: Model,
    pub dom: DomainSpec<f64>,
    pub alpha: f64,
    /// Horizon `t`.
    pub t: f64,
    /// Step of the time-stepped engine; `None` means `t/1000`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

impl SimConfig {
    pub fn new(model: Model, dom: DomainSpec<f64>, alpha: f64, t: f64, n_paths: usize, seed: u64) -> Self {
        Self { model, dom, alpha, t, dt: None, n_paths, seed, batches: DEFAULT_BATCHES }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(self.t / 1000.0)
    }

    pub fn n_steps(&self) -> usize {
        (self.t / self.step() * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.dom.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::input("alpha must lie in (0, 2)"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::range("horizon must be positive and finite"));
        }
        let r0 = self.dom.r0();
        if r0.is_finite() && self.t > r0.powf(self.alpha) {
            return Err(Error::range(format!("horizon {} exceeds R0^α = {}", self.t, r0.powf(self.alpha))));
        }
        if self.n_paths == 0 || self.batches == 0 {
            return Err(Error::input("n_paths and batches must be positive"));
        }
        let hs = self.dom.is_half_space();
        match &self.model {
            Model::Resurrected { psi } => {
                if !hs {
                    return Err(Error::Unsupported("resurrected model needs the half-line or a half-space".into()));
                }
                psi.validate(self.alpha)?;
            }
            Model::Trace if !hs => {
                return Err(Error::Unsupported("trace model needs the half-line or a half-space".into()));
            }
            Model::GenericCtmc { weight, epsilon, cutoff } => {
                if self.dom != DomainSpec::HalfLine {
                    return Err(Error::Unsupported("the jump chain runs on the half-line only".into()));
                }
                WeightSpec::new(*weight).validate()?;
                let cap = self.t.powf(1.0 / self.alpha) / 8.0;
                if !(*epsilon > 0.0 && *epsilon <= cap * (1.0 + 1e-12)) {
                    return Err(Error::input(format!("epsilon {epsilon} must lie in (0, t^(1/α)/8 = {cap}]")));
                }
                if let Some(c) = cutoff {
                    if !(*c > *epsilon) {
                        return Err(Error::input("cutoff must exceed epsilon"));
                    }
                }
            }
            _ => {}
        }
        if self.model.is_time_stepped() {
            let dt = self.step();
            if !(dt > 0.0 && dt <= self.t / 1000.0 * (1.0 + 1e-12)) {
                return Err(Error::input(format!("dt {dt} must lie in (0, t/1000]")));
            }
        }
        Ok(())
    }

    /// Clock factor: the time-stepped engine runs the `c_{d,α}`-normalised
    /// stable walk for `clock · t`.
    fn clock(&self) -> f64 {
        match self.model {
            Model::Resurrected { .. } => 1.0 / stable_constant(self.dom.dim(), self.alpha),
            _ => 1.0,
        }
    }
}

/// Terminal states of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEndpoints {
    pub d: usize,
    /// Row-major `n × d` terminal points.
    pub points: Vec<f64>,
    /// Returns into `D` per path (time-stepped engine).
    pub resurrections: Vec<u32>,
    /// Steps (time-stepped) or jumps (jump chain) per path.
    pub events: Vec<u32>,
    /// Proposals spent by the rejection return sampler.
    pub proposals: u64,
    pub cpu_seconds: f64,
}

impl PathEndpoints {
    pub fn n(&self) -> usize {
        self.resurrections.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    /// Fraction of paths that are alive in `D̄` at the horizon.
    pub fn mass(&self, dom: &DomainSpec<f64>) -> f64 {
        let alive = self.iter().filter(|p| dom.contains_closure(p)).count();
        alive as f64 / self.n() as f64
    }

    /// Fraction of paths with at least one return.
    pub fn resurrected_fraction(&self) -> f64 {
        self.resurrections.iter().filter(|&&r| r > 0).count() as f64 / self.n() as f64
    }

    /// Writes `path_id, x_1..x_d, resurrections` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols: Vec<String> = (1..=self.d).map(|i| format!("x{i}")).collect();
        writeln!(w, "path_id,{},resurrections", cols.join(","))?;
        for (i, p) in self.iter().enumerate() {
            let xs: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{i},{},{}", xs.join(","), self.resurrections[i])?;
        }
        Ok(())
    }
}

/// How a path leaves `D̄` and comes back.
enum Returner {
    HalfSpace(HalfSpaceReturn),
    Rejection,
}

/// Prepared engine for one configuration.
enum Engine {
    Stepped { ret: Returner, clock: f64 },
    Chain { jumps: HalfLineJumps, lo: f64, hi: f64 },
}

struct Prepared<'a> {
    cfg: &'a SimConfig,
    engine: Engine,
}

#[derive(Default)]
struct PathStats {
    resurrections: u32,
    events: u32,
    proposals: u64,
}

impl<'a> Prepared<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.dom.dim();
        let engine = match &cfg.model {
            Model::GenericCtmc { weight, epsilon, cutoff } => Engine::Chain {
                jumps: HalfLineJumps::new(cfg.alpha, WeightSpec::new(*weight))?,
                lo: *epsilon,
                hi: cutoff.unwrap_or(f64::INFINITY),
            },
            model => {
                let q = match model {
                    Model::Resurrected { psi } => Some(psi.effective_power()),
                    Model::Trace => Some(cfg.alpha / 2.0),
                    Model::Neumann if cfg.dom.is_half_space() => Some(0.0),
                    _ => None,
                };
                let ret = match q {
                    Some(q) => Returner::HalfSpace(HalfSpaceReturn::new(cfg.alpha, q, d)?),
                    None => Returner::Rejection,
                };
                Engine::Stepped { ret, clock: cfg.clock() }
            }
        };
        Ok(Self { cfg, engine })
    }

    fn check_start(&self, x0: &[f64]) -> Result<()> {
        self.cfg.dom.check_point(x0)?;
        if !self.cfg.dom.contains_closure(x0) {
            return Err(Error::domain("start point must lie in the closed domain"));
        }
        if matches!(self.engine, Engine::Chain { .. }) && !self.cfg.dom.contains(x0) {
            return Err(Error::domain("the jump chain starts in the open half-line"));
        }
        Ok(())
    }

    /// Runs one path in place; `visit(x, h)` sees the state at the end of
    /// every step of length `h` (time-stepped engine only).
    fn run<F: FnMut(&[f64], f64)>(&self, x: &mut [f64], rng: &mut SimRng, inc: &mut [f64], mut visit: F) -> Result<PathStats> {
        let cfg = self.cfg;
        let mut st = PathStats::default();
        match &self.engine {
            Engine::Stepped { ret, clock } => {
                let n = cfg.n_steps();
                let dt = cfg.step();
                for k in 0..n {
                    let h = if k + 1 == n { cfg.t - dt * k as f64 } else { dt };
                    stable_increment_into(cfg.alpha, h * clock, rng, inc);
                    x.iter_mut().zip(inc.iter()).for_each(|(a, b)| *a += b);
                    if !cfg.dom.contains_closure(x) {
                        st.resurrections += 1;
                        match ret {
                            Returner::HalfSpace(s) => s.sample_into(x, rng),
                            Returner::Rejection => {
                                let (y, k) = neumann_return_sample(&cfg.dom, cfg.alpha, x, rng, MAX_RETURN_PROPOSALS)?;
                                st.proposals += k as u64;
                                x.copy_from_slice(&y);
                            }
                        }
                    }
                    visit(x, h);
                }
                st.events = n as u32;
            }
            Engine::Chain { jumps, lo, hi } => {
                let mut time = 0.0;
                loop {
                    let rate = jumps.rate(x[0], *lo, *hi);
                    if !(rate > 0.0) {
                        break;
                    }
                    let e: f64 = Exp1.sample(rng);
                    time += e / rate;
                    if time > cfg.t {
                        break;
                    }
                    x[0] = jumps.jump(x[0], *lo, *hi, rng);
                    st.events += 1;
                }
            }
        }
        Ok(st)
    }
}

/// Simulates `n_paths` independent paths from `x0` up to the horizon.
pub fn simulate_paths(cfg: &SimConfig, x0: &[f64]) -> Result<PathEndpoints> {
    let prep = Prepared::new(cfg)?;
    prep.check_start(x0)?;
    let start = std::time::Instant::now();
    let d = cfg.dom.dim();
    let counts = split_counts(cfg.n_paths, cfg.batches);
    let parts: Vec<Result<(Vec<f64>, Vec<u32>, Vec<u32>, u64)>> = counts
        .par_iter()
        .enumerate()
        .map(|(b, &m)| {
            let mut rng = stream_rng(cfg.seed, b as u64);
            let mut pts = Vec::with_capacity(m * d);
            let (mut res, mut ev) = (Vec::with_capacity(m), Vec::with_capacity(m));
            let mut props = 0;
            let mut inc = vec![0.0; d];
            let mut x = vec![0.0; d];
            for _ in 0..m {
                x.copy_from_slice(x0);
                let st = prep.run(&mut x, &mut rng, &mut inc, |_, _| {})?;
                pts.extend_from_slice(&x);
                res.push(st.resurrections);
                ev.push(st.events);
                props += st.proposals;
            }
            Ok((pts, res, ev, props))
        })
        .collect();
    let mut out = PathEndpoints { d, points: Vec::new(), resurrections: Vec::new(), events: Vec::new(), proposals: 0, cpu_seconds: 0.0 };
    for p in parts {
        let (pts, res, ev, props) = p?;
        out.points.extend(pts);
        out.resurrections.extend(res);
        out.events.extend(ev);
        out.proposals += props;
    }
    out.cpu_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Kernel density estimate `p̂(t, x0, y)` with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub hits: u64,
    pub n: u64,
    /// `m_d(B(y, h) ∩ D)`.
    pub volume: f64,
}

impl HeatKernelEstimate {
    /// Relative half-width of the interval.
    pub fn rel_half_width(&self) -> f64 {
        if self.value > 0.0 {
            (self.upper - self.lower) / (2.0 * self.value)
        } else {
            f64::INFINITY
        }
    }
}

/// Wilson score interval for a binomial proportion at 95%.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `m_d(B(y, h) ∩ D)`: exact where available, otherwise Monte Carlo with
/// `10⁶` samples.
pub fn local_volume(dom: &DomainSpec<f64>, y: &[f64], h: f64, seed: u64) -> Result<f64> {
    match dom.ball_volume_exact(y, h) {
        Some(v) => Ok(v),
        None => Ok(dom.ball_volume_mc(y, h, 1_000_000, seed)?.value),
    }
}

/// `p̂(t, x0, y)` from simulated endpoints, with bandwidth `h`.
///
/// Zero hits give the value 0 with the one-sided bound `3/(n m_d)`.
pub fn density_at(ends: &PathEndpoints, dom: &DomainSpec<f64>, y: &[f64], h: f64) -> Result<HeatKernelEstimate> {
    dom.check_point(y)?;
    if !dom.contains_closure(y) {
        return Err(Error::domain("target point must lie in the closed domain"));
    }
    let vol = local_volume(dom, y, h, 0x564f4c)?;
    let h2 = h * h;
    let hits = ends
        .iter()
        .filter(|p| p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < h2)
        .count() as u64;
    let n = ends.n() as u64;
    let (lower, upper) = if hits == 0 { (0.0, 3.0 / n as f64) } else { wilson_interval(hits, n) };
    Ok(HeatKernelEstimate {
        value: hits as f64 / (n as f64 * vol),
        lower: lower / vol,
        upper: upper / vol,
        hits,
        n,
        volume: vol,
    })
}

fn check_bandwidth(cfg: &SimConfig, h: f64) -> Result<()> {
    let cap = cfg.t.powf(1.0 / cfg.alpha) / 4.0;
    if !(h > 0.0 && h <= cap * (1.0 + 1e-12)) {
        return Err(Error::range(format!("bandwidth {h} must lie in (0, t^(1/α)/4 = {cap}]")));
    }
    Ok(())
}

/// `p̂(t, x0, y)` from a fresh run.
pub fn estimate_heat_kernel(cfg: &SimConfig, x0: &[f64], y: &[f64], h: f64) -> Result<HeatKernelEstimate> {
    check_bandwidth(cfg, h)?;
    let ends = simulate_paths(cfg, x0)?;
    density_at(&ends, &cfg.dom, y, h)
}

/// `p̂(t, x0, y)` for several targets sharing one run.
pub fn estimate_heat_kernel_many(cfg: &SimConfig, x0: &[f64], ys: &[Vec<f64>], h: f64) -> Result<Vec<HeatKernelEstimate>> {
    check_bandwidth(cfg, h)?;
    let ends = simulate_paths(cfg, x0)?;
    ys.iter().map(|y| density_at(&ends, &cfg.dom, y, h)).collect()
}

/// Monte Carlo estimate of
/// `(1/t) E^x ∫₀ᵗ Φ((t^{1/α}∧A₀)/(δ_D(X_s)∧A₀)) ds`, with the integral
/// replaced by the right-endpoint sum over steps and normalised by the
/// summed step lengths.
pub fn occupation_phi_average(cfg: &SimConfig, x0: &[f64], weight: &WeightSpec<f64>) -> Result<McEstimate> {
    if !cfg.model.is_time_stepped() {
        return Err(Error::Unsupported("occupation averages need the time-stepped engine".into()));
    }
    weight.validate()?;
    let prep = Prepared::new(cfg)?;
    prep.check_start(x0)?;
    let d = cfg.dom.dim();
    let a0 = weight.a0;
    let num = cfg.t.powf(1.0 / cfg.alpha).min(a0);
    let counts = split_counts(cfg.n_paths, cfg.batches);
    let parts: Vec<Result<RunningStats>> = counts
        .par_iter()
        .enumerate()
        .map(|(b, &m)| {
            let mut rng = stream_rng(cfg.seed, b as u64);
            let mut st = RunningStats::new();
            let mut inc = vec![0.0; d];
            let mut x = vec![0.0; d];
            for _ in 0..m {
                x.copy_from_slice(x0);
                let (mut acc, mut time) = (0.0, 0.0);
                prep.run(&mut x, &mut rng, &mut inc, |p, h| {
                    let delta = cfg.dom.signed_distance(p).max(0.0).min(a0);
                    acc += weight.eval_unchecked(num / delta) * h;
                    time += h;
                })?;
                st.push(acc / time);
            }
            Ok(st)
        })
        .collect();
    let mut all = RunningStats::new();
    for p in parts {
        all.merge(&p?);
    }
    Ok(McEstimate::from_parts(all.mean, all.std_error(), all.n))
}

/// Mass of the endpoints over a partition of the box `[lo, hi]` into
/// `cells` equal cells per axis: `Σ p̂(cell) m_d(cell ∩ D)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionMass {
    pub total: f64,
    pub std_error: f64,
    pub cells: usize,
    /// Per-cell mass `p̂ · m_d(cell ∩ D)`.
    pub cell_mass: Vec<f64>,
}

pub fn partition_mass(ends: &PathEndpoints, lo: &[f64], hi: &[f64], cells: usize) -> Result<PartitionMass> {
    let d = ends.d;
    if lo.len() != d || hi.len() != d || cells == 0 || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
        return Err(Error::input("partition box must be nondegenerate with matching dimension"));
    }
    let total_cells = cells.pow(d as u32);
    let mut counts = vec![0u64; total_cells];
    for p in ends.iter() {
        let mut idx = 0usize;
        let mut inside = true;
        for i in 0..d {
            let u = (p[i] - lo[i]) / (hi[i] - lo[i]);
            if !(0.0..1.0).contains(&u) {
                inside = false;
                break;
            }
            idx = idx * cells + ((u * cells as f64) as usize).min(cells - 1);
        }
        if inside {
            counts[idx] += 1;
        }
    }
    let n = ends.n() as f64;
    let cell_mass: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let total: f64 = cell_mass.iter().sum();
    Ok(PartitionMass { total, std_error: (total * (1.0 - total) / n).sqrt(), cells: total_cells, cell_mass })
}
