//! Singular-integral machinery: globally adaptive Gauss–Kronrod quadrature
//! with endpoint substitutions, dyadic decomposition of semi-infinite
//! ranges, and (stratified) Monte Carlo integration over simple regions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::rng::{split_counts, stream_rng, DEFAULT_BATCHES};
use crate::scalar::{lit, max, to_f64, Real};
use crate::special::unit_ball_volume;
use crate::stats::{McEstimate, RunningStats};

/// Tolerances and limits for the deterministic integrators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Maximum bisection depth of any subinterval.
    pub max_depth: usize,
    /// Cap on integrand evaluations per call.
    pub max_evals: usize,
    /// Truncation radii `(r_min, r_max)` for dyadic radial sums.
    pub annulus_range: (T, T),
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::default_rel_tol(),
            abs_tol: lit(1e-10),
            max_depth: 50,
            max_evals: 2_000_000,
            annulus_range: (lit(1e-12), lit(1e12)),
        }
    }
}

impl<T: Real> QuadConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.abs_tol > T::zero()) {
            return Err(Error::input("quadrature tolerances must be positive"));
        }
        if !(self.annulus_range.0 < self.annulus_range.1) {
            return Err(Error::input("annulus range must satisfy r_min < r_max"));
        }
        Ok(())
    }

    /// Same limits with different tolerances.
    pub fn with_tol(mut self, rel_tol: T, abs_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }
}

/// Integral value with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadValue<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

impl<T: Real> QuadValue<T> {
    pub fn zero() -> Self {
        Self { value: T::zero(), error: T::zero(), evals: 0 }
    }

    pub fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
        }
    }

    pub fn scale(self, c: T) -> Self {
        Self {
            value: self.value * c,
            error: self.error * c.abs(),
            evals: self.evals,
        }
    }
}

/// Which endpoints of a finite interval carry an integrable singularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Singular {
    None,
    Left,
    Right,
    Both,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    depth: usize,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// 15-point Kronrod rule with the embedded 7-point Gauss rule.
fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Result<(T, T)> {
    let c = (a + b) / lit(2.0);
    let h = (b - a) / lit(2.0);
    let fc = f(c);
    let mut k = fc * lit(WGK[7]);
    let mut g = fc * lit(WG[3]);
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = h * lit(XGK[j]);
        let (f1, f2) = (f(c - dx), f(c + dx));
        finite &= f1.is_finite() && f2.is_finite();
        k = k + (f1 + f2) * lit(WGK[j]);
        if j % 2 == 1 {
            g = g + (f1 + f2) * lit(WG[j / 2]);
        }
    }
    if !finite {
        return Err(Error::Accuracy {
            message: format!("integrand is not finite on [{a}, {b}]"),
            partial: f64::NAN,
            error: f64::INFINITY,
        });
    }
    Ok((k * h, ((k - g) * h).abs()))
}

fn accuracy<T: Real>(msg: &str, value: T, error: T) -> Error {
    Error::Accuracy {
        message: msg.to_string(),
        partial: to_f64(value),
        error: to_f64(error),
    }
}

/// Globally adaptive GK15 on `[a, b]`.
///
/// Subintervals with the largest error estimate are bisected until the total
/// error falls below `max(abs_tol, rel_tol |I|)`. Fails with an accuracy
/// error when an interval would exceed `max_depth`, the evaluation budget is
/// spent, or the integrand is not finite at a node.
pub fn integrate_adaptive<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    if a == b {
        return Ok(QuadValue::zero());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::input("integrate_adaptive needs finite limits"));
    }
    if b < a {
        return integrate_adaptive(f, b, a, cfg).map(|q| q.scale(-T::one()));
    }
    let (v, e) = gk15(&mut f, a, b)?;
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e, depth: 0 });
    let (mut total, mut err) = (v, e);
    loop {
        let tol = max(cfg.abs_tol, cfg.rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadValue { value: total, error: err, evals });
        }
        let worst = heap.pop().expect("heap never empty");
        if worst.depth >= cfg.max_depth {
            return Err(accuracy("maximum subdivision depth reached", total, err));
        }
        if evals >= cfg.max_evals {
            return Err(accuracy("evaluation budget exhausted", total, err));
        }
        let m = (worst.a + worst.b) / lit(2.0);
        if !(m > worst.a && m < worst.b) {
            return Err(accuracy("interval cannot be bisected further", total, err));
        }
        let (v1, e1) = gk15(&mut f, worst.a, m).map_err(|_| accuracy("integrand is not finite", total, err))?;
        let (v2, e2) = gk15(&mut f, m, worst.b).map_err(|_| accuracy("integrand is not finite", total, err))?;
        evals += 30;
        total = total - worst.value + v1 + v2;
        err = err - worst.error + e1 + e2;
        if err < T::zero() {
            err = heap.iter().fold(e1 + e2, |s, p| s + p.error);
        }
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1, depth: worst.depth + 1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2, depth: worst.depth + 1 });
    }
}

/// Adaptive quadrature after the substitution `x = a + (b-a)u²` towards each
/// tagged singular endpoint. Keeps power singularities `|x-a|^{-s}`, `s ≤ 1/2`,
/// inside the class the Kronrod rule resolves quickly.
pub fn integrate_singular<T: Real, F: FnMut(T) -> T>(
    f: F,
    a: T,
    b: T,
    sing: Singular,
    cfg: &QuadConfig<T>,
) -> Result<QuadValue<T>> {
    integrate_singular_pow(f, a, b, sing, 2, cfg)
}

/// As [`integrate_singular`] with `x = a + (b-a)u^m`; `m ≥ 1/(1-s)` removes a
/// singularity `|x-a|^{-s}` entirely. Nodes that round onto the singular
/// endpoint contribute nothing.
pub fn integrate_singular_pow<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    sing: Singular,
    m: i32,
    cfg: &QuadConfig<T>,
) -> Result<QuadValue<T>> {
    let mf: T = lit(m as f64);
    let left = |f: &mut F, lo: T, w: T, u: T| -> T {
        let x = lo + w * u.powi(m);
        if x == lo {
            T::zero()
        } else {
            f(x) * mf * w * u.powi(m - 1)
        }
    };
    match sing {
        Singular::None => integrate_adaptive(f, a, b, cfg),
        Singular::Left => integrate_adaptive(|u: T| left(&mut f, a, b - a, u), T::zero(), T::one(), cfg),
        Singular::Right => integrate_adaptive(|u: T| left(&mut f, b, a - b, u), T::zero(), T::one(), cfg).map(|q| q.scale(-T::one())),
        Singular::Both => {
            let mid = (a + b) / lit(2.0);
            let l = integrate_adaptive(|u: T| left(&mut f, a, mid - a, u), T::zero(), T::one(), cfg)?;
            let r = integrate_adaptive(|u: T| left(&mut f, b, mid - b, u), T::zero(), T::one(), cfg)?;
            Ok(l.add(r.scale(-T::one())))
        }
    }
}

/// `∫_a^∞ f` as a sum over pieces `[a + s(2^k - 1), a + s(2^{k+1} - 1)]`,
/// `k < 6`, plus the remaining tail `∫_L^∞ f(x) dx = ∫_0^1 f(L/u) L/u² du`
/// integrated with a quartic endpoint substitution. The tail form is exact
/// for any integrand and resolves power-law decay `x^{-1-α}` for `α ≥ 1/4`
/// without a singular node. `scale` is the first piece length `s`.
pub fn dyadic_radial_sum<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, scale: T, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    if !(scale > T::zero()) {
        return Err(Error::input("dyadic scale must be positive"));
    }
    let two: T = lit(2.0);
    let mut total = QuadValue::zero();
    let mut lo = a;
    let mut len = scale;
    for _ in 0..6 {
        let hi = lo + len;
        total = total.add(integrate_adaptive(&mut f, lo, hi, cfg)?);
        lo = hi;
        len = len * two;
    }
    let l = lo;
    let four: T = lit(4.0);
    let tail = integrate_adaptive(
        |v: T| {
            let u = v * v * v * v;
            if u == T::zero() {
                return T::zero();
            }
            let x = l / u;
            if x.is_infinite() {
                return T::zero();
            }
            f(x) * l / (u * u) * four * v * v * v
        },
        T::zero(),
        T::one(),
        cfg,
    )?;
    Ok(total.add(tail))
}

/// A segment of a breakpoint decomposition. `b` may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T> {
    pub a: T,
    pub b: T,
    pub sing: Singular,
}

/// Integrates over consecutive breakpoints. `singular[i]` tags breakpoint
/// `i` as a singular point; neighbouring segments then use the endpoint
/// substitution. A trailing `+∞` breakpoint uses the dyadic sum.
pub fn integrate_breakpoints<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    points: &[T],
    singular: &[bool],
    cfg: &QuadConfig<T>,
) -> Result<QuadValue<T>> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| points[i].partial_cmp(&points[j]).unwrap_or(Ordering::Equal));
    let mut pts: Vec<(T, bool)> = Vec::with_capacity(points.len());
    for i in idx {
        let s = singular.get(i).copied().unwrap_or(false);
        match pts.last_mut() {
            Some(last) if last.0 == points[i] => last.1 |= s,
            _ => pts.push((points[i], s)),
        }
    }
    let mut total = QuadValue::zero();
    for w in pts.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        let q = if b.is_infinite() {
            let span = if a.abs() > T::zero() { a.abs() } else { T::one() };
            if sa {
                let first = integrate_singular(&mut f, a, a + span, Singular::Left, cfg)?;
                first.add(dyadic_radial_sum(&mut f, a + span, span, cfg)?)
            } else {
                dyadic_radial_sum(&mut f, a, span, cfg)?
            }
        } else {
            let sing = match (sa, sb) {
                (true, true) => Singular::Both,
                (true, false) => Singular::Left,
                (false, true) => Singular::Right,
                _ => Singular::None,
            };
            integrate_singular(&mut f, a, b, sing, cfg)?
        };
        total = total.add(q);
    }
    Ok(total)
}

/// `∫_{-∞}^{∞} f` split at the given breakpoints, with dyadic tails on both
/// sides starting at the outermost breakpoints. `scale` sets the first tail
/// piece length.
pub fn integrate_real_line<T: Real, F: FnMut(T) -> T>(mut f: F, points: &[T], scale: T, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    let mut pts: Vec<T> = points.iter().copied().filter(|p| p.is_finite()).collect();
    if pts.is_empty() {
        pts.push(T::zero());
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    pts.dedup();
    let (lo, hi) = (pts[0], pts[pts.len() - 1]);
    let mut total = QuadValue::zero();
    for w in pts.windows(2) {
        total = total.add(integrate_adaptive(&mut f, w[0], w[1], cfg)?);
    }
    total = total.add(dyadic_radial_sum(&mut f, hi, scale, cfg)?);
    total = total.add(dyadic_radial_sum(|u: T| f(-u), -lo, scale, cfg)?);
    Ok(total)
}

/// Points `c ± w·ratio^k` for `k = 0..n` clipped to `(a, b)`; inserted as
/// breakpoints they resolve a near-singular peak at `c`.
pub fn geometric_points<T: Real>(a: T, b: T, c: T, width: T, ratio: T, n: usize) -> Vec<T> {
    let mut out = Vec::new();
    let mut w = width;
    for _ in 0..n {
        for p in [c - w, c + w] {
            if p > a && p < b {
                out.push(p);
            }
        }
        w = w * ratio;
    }
    if c > a && c < b {
        out.push(c);
    }
    out
}

/// Bounded integration region for Monte Carlo integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region<T> {
    Ball { center: Vec<T>, radius: T },
    Annulus { center: Vec<T>, r_in: T, r_out: T },
    /// Box `|y_i - c_i| < half_width` in the first `d-1` coordinates and
    /// `lo ≤ y_d < hi` in the last.
    Slab { center: Vec<T>, half_width: T, lo: T, hi: T },
}

impl<T: Real> Region<T> {
    fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } | Region::Annulus { center, .. } | Region::Slab { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Region::Ball { radius, .. } => *radius > T::zero(),
            Region::Annulus { r_in, r_out, .. } => *r_in >= T::zero() && r_out > r_in && r_out.is_finite(),
            Region::Slab { half_width, lo, hi, center } => {
                (*half_width > T::zero() || center.len() == 1) && hi > lo && hi.is_finite() && lo.is_finite()
            }
        };
        if !ok || self.dim() == 0 {
            return Err(Error::input("integration region has zero measure or is unbounded"));
        }
        Ok(())
    }

    /// Axis-aligned bounding box `(lo, hi)` per coordinate.
    fn bbox(&self) -> Vec<(f64, f64)> {
        match self {
            Region::Ball { center, radius: r } | Region::Annulus { center, r_out: r, .. } => {
                let r = to_f64(*r);
                center.iter().map(|&c| (to_f64(c) - r, to_f64(c) + r)).collect()
            }
            Region::Slab { center, half_width, lo, hi } => {
                let w = to_f64(*half_width);
                let d = center.len();
                center
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| if i + 1 == d { (to_f64(*lo), to_f64(*hi)) } else { (to_f64(c) - w, to_f64(c) + w) })
                    .collect()
            }
        }
    }

    fn contains_f64(&self, y: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => sq_dist(y, center) < to_f64(*radius).powi(2),
            Region::Annulus { center, r_in, r_out } => {
                let s = sq_dist(y, center);
                s >= to_f64(*r_in).powi(2) && s < to_f64(*r_out).powi(2)
            }
            Region::Slab { center, half_width, lo, hi } => {
                let d = center.len();
                let w = to_f64(*half_width);
                y.iter().enumerate().all(|(i, &v)| {
                    if i + 1 == d {
                        v >= to_f64(*lo) && v < to_f64(*hi)
                    } else {
                        (v - to_f64(center[i])).abs() < w
                    }
                })
            }
        }
    }

    /// Exact volume.
    pub fn volume(&self) -> T {
        let d = self.dim();
        let v = match self {
            Region::Ball { radius, .. } => unit_ball_volume(d) * to_f64(*radius).powi(d as i32),
            Region::Annulus { r_in, r_out, .. } => {
                unit_ball_volume(d) * (to_f64(*r_out).powi(d as i32) - to_f64(*r_in).powi(d as i32))
            }
            Region::Slab { half_width, lo, hi, .. } => {
                (2.0 * to_f64(*half_width)).powi(d as i32 - 1) * (to_f64(*hi) - to_f64(*lo))
            }
        };
        lit(v)
    }
}

fn sq_dist<T: Real>(y: &[f64], c: &[T]) -> f64 {
    y.iter().zip(c).map(|(&a, &b)| (a - to_f64(b)).powi(2)).sum()
}

/// Proposal for one stratum: a box, optionally with a radial shell in which
/// points are drawn uniformly.
#[derive(Clone, Debug)]
enum Proposal {
    Box(Vec<(f64, f64)>),
    Shell { r_in: f64, r_out: f64, d: usize },
}

impl Proposal {
    fn volume(&self) -> f64 {
        match self {
            Proposal::Box(b) => b.iter().map(|(l, h)| (h - l).max(0.0)).product(),
            Proposal::Shell { r_in, r_out, d } => unit_ball_volume(*d) * (r_out.powi(*d as i32) - r_in.powi(*d as i32)),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Proposal::Box(b) => {
                for (o, &(l, h)) in out.iter_mut().zip(b) {
                    *o = l + (h - l) * rng.random::<f64>();
                }
            }
            Proposal::Shell { r_in, r_out, d } => {
                let mut s = 0.0;
                for o in out.iter_mut() {
                    let g: f64 = rng.sample(rand_distr::StandardNormal);
                    *o = g;
                    s += g * g;
                }
                let n = s.sqrt();
                let dd = *d as f64;
                let (a, b) = (r_in.powf(dd), r_out.powf(dd));
                let r = (a + (b - a) * rng.random::<f64>()).powf(1.0 / dd);
                for o in out.iter_mut() {
                    *o *= r / n;
                }
            }
        }
    }
}

/// Strata proposals covering `{δ_D ∈ [lo, hi)}` within the bounding box.
fn shell_proposal<T: Real>(dom: &DomainSpec<T>, bbox: &[(f64, f64)], lo: f64, hi: f64) -> Proposal {
    match *dom {
        DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => {
            let mut b = bbox.to_vec();
            let last = b.len() - 1;
            b[last] = (b[last].0.max(lo), b[last].1.min(hi));
            Proposal::Box(b)
        }
        DomainSpec::Ball { d, radius } => {
            let r = to_f64(radius);
            Proposal::Shell { r_in: (r - hi).max(0.0), r_out: (r - lo).max(0.0), d }
        }
        DomainSpec::ExteriorBall { d, radius } => {
            let r = to_f64(radius);
            let reach = bbox.iter().map(|(l, h)| l.abs().max(h.abs()).powi(2)).sum::<f64>().sqrt();
            Proposal::Shell { r_in: r + lo, r_out: (r + hi).min(reach.max(r + lo)), d }
        }
        DomainSpec::Box2d { side } => {
            let l = to_f64(side);
            let b: Vec<(f64, f64)> = bbox.iter().map(|&(a, c)| (a.max(lo), c.min(l - lo))).collect();
            Proposal::Box(b)
        }
    }
}

fn run_stratum<T: Real, F: Fn(&[T]) -> T + Sync>(
    f: &F,
    region: &Region<T>,
    dom: Option<&DomainSpec<T>>,
    band: Option<(f64, f64)>,
    proposal: &Proposal,
    n: usize,
    seed: u64,
    stream_base: u64,
) -> RunningStats {
    let vol = proposal.volume();
    if vol <= 0.0 || n == 0 {
        let mut st = RunningStats::new();
        (0..n.max(1)).for_each(|_| st.push(0.0));
        return st;
    }
    let d = region.dim();
    let parts: Vec<RunningStats> = split_counts(n, DEFAULT_BATCHES)
        .par_iter()
        .enumerate()
        .map(|(b, &m)| {
            let mut rng = stream_rng(seed, stream_base + b as u64);
            let mut y = vec![0.0; d];
            let mut yt = vec![T::zero(); d];
            let mut st = RunningStats::new();
            for _ in 0..m {
                proposal.sample(&mut rng, &mut y);
                let mut keep = region.contains_f64(&y);
                if keep {
                    for (t, &v) in yt.iter_mut().zip(&y) {
                        *t = lit(v);
                    }
                    if let Some(dom) = dom {
                        let sd = to_f64(dom.signed_distance(&yt));
                        keep = sd > 0.0;
                        if let Some((lo, hi)) = band {
                            keep &= sd >= lo && sd < hi;
                        }
                    }
                }
                st.push(if keep { vol * to_f64(f(&yt)) } else { 0.0 });
            }
            st
        })
        .collect();
    let mut all = RunningStats::new();
    parts.iter().for_each(|p| all.merge(p));
    all
}

/// Monte Carlo estimate of `∫_{region ∩ D} f` (or over the bare region when
/// `dom` is `None`) with a 95% confidence half-width.
///
/// With `stratify`, the region is split into dyadic shells
/// `{δ_D ∈ [s 2^{-k-1}, s 2^{-k})}` for `k = 0..K` plus an innermost shell
/// and an outer remainder, each sampled from an exact shell proposal and
/// given an equal share of `n`.
pub fn integrate_mc_region<T: Real, F: Fn(&[T]) -> T + Sync>(
    f: F,
    region: &Region<T>,
    dom: Option<&DomainSpec<T>>,
    n: usize,
    seed: u64,
    stratify: bool,
) -> Result<McEstimate> {
    region.validate()?;
    if n == 0 {
        return Err(Error::input("sample count must be positive"));
    }
    if let Some(dom) = dom {
        if dom.dim() != region.dim() {
            return Err(Error::input("region and domain dimensions differ"));
        }
    }
    let bbox = region.bbox();
    match (dom, stratify) {
        (Some(dom), true) => {
            let scale = bbox.iter().map(|(l, h)| h - l).fold(0.0, f64::max);
            let levels = 12usize;
            let mut edges = vec![0.0];
            for k in (0..levels).rev() {
                edges.push(scale * 2f64.powi(-(k as i32)));
            }
            edges.push(f64::INFINITY);
            let strata: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
            let share = split_counts(n, strata.len());
            let mut value = 0.0;
            let mut var = 0.0;
            for (k, (&(lo, hi), &m)) in strata.iter().zip(&share).enumerate() {
                let prop = if hi.is_infinite() {
                    Proposal::Box(bbox.clone())
                } else {
                    shell_proposal(dom, &bbox, lo, hi)
                };
                let st = run_stratum(&f, region, Some(dom), Some((lo, hi)), &prop, m, seed, (k as u64 + 1) << 20);
                value += st.mean;
                var += st.std_error().powi(2);
            }
            Ok(McEstimate::from_parts(value, var.sqrt(), n as u64))
        }
        _ => {
            let st = run_stratum(&f, region, dom, None, &Proposal::Box(bbox), n, seed, 0);
            Ok(McEstimate::from_parts(st.mean, st.std_error(), st.n))
        }
    }
}
