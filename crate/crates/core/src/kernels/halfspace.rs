//! Integrals over the complementary half-space `{z_d < 0}` and the
//! Monte Carlo fallbacks.

use std::cell::RefCell;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{f64_point, neumann_norm, ComplementWeight, Kernel, KernelSpec};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_breakpoints, integrate_real_line, QuadConfig, QuadValue};
use crate::rng::{split_counts, stream_rng, DEFAULT_BATCHES};
use crate::scalar::{lit, max, min, to_f64, Real};
use crate::special::unit_sphere_area;
use crate::stats::RunningStats;
use crate::weights::PsiSpec;

/// `c, c ± w 4^k` for `w 4^k ≤ max(span, w)`.
fn peak_points<T: Real>(c: T, w: T, span: T, out: &mut Vec<T>) {
    out.push(c);
    let four: T = lit(4.0);
    let mut s = w;
    let cap = max(span, w);
    while s <= cap {
        out.push(c - s);
        out.push(c + s);
        s = s * four;
    }
}

/// Breakpoints `0, lo/64, lo/8, lo, 4lo, ..., hi, ∞` for an outer depth
/// integral whose integrand varies on the scales `lo ≤ hi`.
fn depth_points<T: Real>(lo: T, hi: T) -> (Vec<T>, Vec<bool>) {
    let mut pts = vec![T::zero(), lo / lit(64.0), lo / lit(8.0), lo];
    let four: T = lit(4.0);
    let mut s = lo * four;
    while s < hi {
        pts.push(s);
        s = s * four;
    }
    pts.push(hi);
    pts.push(hi * four);
    pts.push(T::infinity());
    let mut sing = vec![false; pts.len()];
    sing[0] = true;
    (pts, sing)
}

/// `∫_R f(z - x₁, z - y₁) dz` for an integrand with peaks of widths `wa`
/// at `x₁` and `wb` at `y₁`. Each half of the line is parametrised relative
/// to its nearer peak, so peak widths far below the spacing of `x₁` and `y₁`
/// in floating point are still resolved.
fn split_line<T: Real, F: Fn(T, T) -> T>(f: F, x1: T, y1: T, wa: T, wb: T, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    let span = (x1 - y1).abs();
    if span == T::zero() {
        let mut pts = Vec::with_capacity(32);
        peak_points(T::zero(), wa, wa, &mut pts);
        peak_points(T::zero(), wb, wb, &mut pts);
        return integrate_real_line(|t: T| f(t, t), &pts, max(wa, wb), cfg);
    }
    let half = span / lit(2.0);
    // Half-line from the peak at offset 0 towards the other peak at `gap`:
    // `∫_{-∞}^{half} g(t) dt` after orienting so the other peak is on the right.
    let side = |g: &dyn Fn(T) -> T, w: T| -> Result<QuadValue<T>> {
        let mut pts = Vec::with_capacity(32);
        peak_points(T::zero(), w, span, &mut pts);
        let mut right: Vec<T> = pts.iter().copied().filter(|&p| p >= T::zero() && p < half).collect();
        right.push(half);
        let near = integrate_breakpoints(g, &right, &vec![false; right.len()], cfg)?;
        let mut left: Vec<T> = pts.iter().copied().filter(|&p| p > T::zero()).collect();
        left.push(T::zero());
        left.push(T::infinity());
        let far = integrate_breakpoints(|u: T| g(-u), &left, &vec![false; left.len()], cfg)?;
        Ok(near.add(far))
    };
    // Orientation: `o = +1` when `y₁ > x₁`.
    let o = if y1 > x1 { T::one() } else { -T::one() };
    let gap = span;
    let a = side(&|t: T| f(o * t, o * t - o * gap), wa)?;
    let b = side(&|t: T| f(-o * t + o * gap, -o * t), wb)?;
    Ok(a.add(b))
}

/// Runs a fallible closure inside an infallible integrand; the first error
/// is kept and the integrand returns NaN so the outer rule stops.
pub(crate) struct Trap<T> {
    err: RefCell<Option<Error>>,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real> Trap<T> {
    pub(crate) fn new() -> Self {
        Self { err: RefCell::new(None), _t: std::marker::PhantomData }
    }

    pub(crate) fn run(&self, r: Result<QuadValue<T>>) -> T {
        match r {
            Ok(q) => q.value,
            Err(e) => {
                self.err.borrow_mut().get_or_insert(e);
                T::nan()
            }
        }
    }

    pub(crate) fn finish(self, r: Result<QuadValue<T>>) -> Result<QuadValue<T>> {
        match self.err.into_inner() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

fn inner_cfg<T: Real>(cfg: &QuadConfig<T>) -> QuadConfig<T> {
    let mut c = *cfg;
    c.rel_tol = cfg.rel_tol / lit(10.0);
    c.abs_tol = cfg.abs_tol / lit(10.0);
    c
}

/// `∫_{z_d<0} |x-z|^{-d-α} h(|z_d|, |y-z|²) dz` for `x, y` in the upper
/// half-space.
pub(crate) fn complement_integral<T: Real, H: ComplementWeight<T>>(
    x: &[T],
    y: &[T],
    alpha: T,
    h: &H,
    spec: &KernelSpec<T>,
) -> Result<QuadValue<T>> {
    let d = x.len();
    let cfg = &spec.quad;
    let ex = (lit::<T>(d as f64) + alpha) / lit(2.0);
    match d {
        1 => {
            let (a, b) = (x[0], y[0]);
            let (pts, sing) = depth_points(min(a, b), max(a, b));
            integrate_breakpoints(
                |s: T| {
                    let ry = b + s;
                    (a + s).powf(-T::one() - alpha) * h.h(s, ry * ry)
                },
                &pts,
                &sing,
                cfg,
            )
        }
        2 => {
            let (x1, x2, y1, y2) = (x[0], x[1], y[0], y[1]);
            let span = (x1 - y1).abs();
            let icfg = inner_cfg(cfg);
            let trap = Trap::new();
            let outer = |s: T| -> T {
                let (aa, bb) = (x2 + s, y2 + s);
                let inner = split_line(
                    |dx: T, dy: T| (dx * dx + aa * aa).powf(-ex) * h.h(s, dy * dy + bb * bb),
                    x1,
                    y1,
                    aa,
                    bb,
                    &icfg,
                );
                trap.run(inner)
            };
            let (pts, sing) = depth_points(min(x2, y2), max(max(x2, y2), span));
            let r = integrate_breakpoints(outer, &pts, &sing, cfg);
            trap.finish(r)
        }
        _ => complement_mc(x, y, alpha, spec, |z: &[f64]| {
            let zd = z[d - 1];
            if zd >= 0.0 {
                return 0.0;
            }
            let rx2: f64 = z.iter().zip(x).map(|(&a, &b)| (a - to_f64(b)).powi(2)).sum();
            let ry2: f64 = z.iter().zip(y).map(|(&a, &b)| (a - to_f64(b)).powi(2)).sum();
            rx2.powf(-to_f64(ex)) * to_f64(h.h(lit(-zd), lit(ry2)))
        }),
    }
}

/// Second term of the Neumann kernel on a non-half-space domain,
/// `c ∫_{D^c} |x-z|^{-d-α} |z-y|^{-d-α} / N(z) dz`, by Monte Carlo.
pub(crate) fn neumann_generic<T: Real>(k: &Kernel<T>, x: &[T], y: &[T]) -> Result<QuadValue<T>> {
    let spec = &k.spec;
    let dom = &spec.dom;
    let d = dom.dim();
    if d > 2 {
        return Err(Error::Unsupported("Neumann kernel outside half-spaces needs d ≤ 2".into()));
    }
    let alpha = spec.alpha;
    let e = to_f64((lit::<T>(d as f64) + alpha) / lit(2.0));
    let c = to_f64(k.stable_c);
    let mut cfg = spec.quad;
    cfg.rel_tol = max(cfg.rel_tol, lit(1e-5));
    complement_mc(x, y, alpha, spec, |z: &[f64]| {
        let zt: Vec<T> = z.iter().map(|&v| lit(v)).collect();
        if dom.signed_distance(&zt) >= T::zero() {
            return 0.0;
        }
        let n = match neumann_norm(dom, alpha, &zt, &cfg) {
            Ok(q) => to_f64(q.value),
            Err(_) => return f64::NAN,
        };
        let rx2: f64 = z.iter().zip(x).map(|(&a, &b)| (a - to_f64(b)).powi(2)).sum();
        let ry2: f64 = z.iter().zip(y).map(|(&a, &b)| (a - to_f64(b)).powi(2)).sum();
        c * rx2.powf(-e) * ry2.powf(-e) / n
    })
}

/// Importance-sampled Monte Carlo for `∫_{R^d} f`, where `f` vanishes on
/// the domain and decays like `|z - x|^{-d-α}` and `|z - y|^{-d-α}`.
///
/// Proposals are an even mixture of two radial Pareto laws centred at `x`
/// and `y` with tail index `α` and inner radius `δ_D(·)`.
fn complement_mc<T: Real, F: Fn(&[f64]) -> f64 + Sync>(
    x: &[T],
    y: &[T],
    alpha: T,
    spec: &KernelSpec<T>,
    f: F,
) -> Result<QuadValue<T>> {
    let d = x.len();
    let a = to_f64(alpha);
    let dom = &spec.dom;
    let centres = [f64_point(x), f64_point(y)];
    let radii = [to_f64(dom.signed_distance(x)), to_f64(dom.signed_distance(y))];
    let area = unit_sphere_area(d - 1);
    let density = |z: &[f64]| -> f64 {
        let mut g = 0.0;
        for (c, &rho) in centres.iter().zip(&radii) {
            let r = z.iter().zip(c).map(|(&p, &q)| (p - q).powi(2)).sum::<f64>().sqrt();
            if r >= rho {
                g += 0.5 * a * rho.powf(a) * r.powf(-a - 1.0) / (area * r.powi(d as i32 - 1));
            }
        }
        g
    };
    let n = spec.mc_samples.max(1000);
    let parts: Vec<RunningStats> = split_counts(n, DEFAULT_BATCHES)
        .par_iter()
        .enumerate()
        .map(|(b, &m)| {
            let mut rng = stream_rng(spec.seed, 0x4b45_0000 + b as u64);
            let mut st = RunningStats::new();
            let mut z = vec![0.0; d];
            for _ in 0..m {
                let k = usize::from(rng.random::<f64>() >= 0.5);
                let u: f64 = 1.0 - rng.random::<f64>();
                let r = radii[k] * u.powf(-1.0 / a);
                let mut nn = 0.0;
                for zi in z.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *zi = g;
                    nn += g * g;
                }
                let nn = nn.sqrt();
                for (zi, &ci) in z.iter_mut().zip(&centres[k]) {
                    *zi = ci + r * *zi / nn;
                }
                let g = density(&z);
                let v = if g > 0.0 { f(&z) / g } else { 0.0 };
                st.push(v);
            }
            st
        })
        .collect();
    let mut all = RunningStats::new();
    parts.iter().for_each(|p| all.merge(p));
    if !all.mean.is_finite() {
        return Err(Error::Accuracy {
            message: "Monte Carlo integrand was not finite".into(),
            partial: all.mean,
            error: f64::INFINITY,
        });
    }
    Ok(QuadValue { value: lit(all.mean), error: lit(all.std_error()), evals: n })
}

/// `∫_{R^d_+} |z_d|^α Ψ(|y - z|²/(y_d |z_d|)) |y - z|^{-d-α} dy` at
/// `z = (0, …, 0, -1)`, by quadrature.
pub(crate) fn psi_normaliser_numeric<T: Real>(d: usize, alpha: T, psi: &PsiSpec<T>, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    let ex = (lit::<T>(d as f64) + alpha) / lit(2.0);
    let pts = [T::zero(), lit(0.25), T::one(), lit(4.0), T::infinity()];
    let sing = [true, false, false, false, false];
    match d {
        1 => integrate_breakpoints(
            |u: T| {
                let r = T::one() + u;
                psi.eval(r * r / u) * r.powf(-T::one() - alpha)
            },
            &pts,
            &sing,
            cfg,
        ),
        2 => {
            let icfg = inner_cfg(cfg);
            let trap = Trap::new();
            let outer = |u: T| -> T {
                let a = T::one() + u;
                let inner = integrate_breakpoints(
                    |w: T| {
                        let r2 = w * w + a * a;
                        psi.eval(r2 / u) * r2.powf(-ex)
                    },
                    &[T::zero(), a, a * lit(4.0), T::infinity()],
                    &[false; 4],
                    &icfg,
                );
                trap.run(inner.map(|q| q.scale(lit(2.0))))
            };
            let r = integrate_breakpoints(outer, &pts, &sing, cfg);
            trap.finish(r)
        }
        _ => Err(Error::Unsupported("numeric psi normaliser needs d ≤ 2".into())),
    }
}
