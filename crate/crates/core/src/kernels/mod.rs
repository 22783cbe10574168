//! Jump kernels with boundary blow-up and their functionals.
//!
//! Five kernel families are available:
//!
//! * `comparison`: `|x-y|^{-d-α} Φ((|x-y|∧A₀)²/((δ(x)∧A₀)(δ(y)∧A₀)))` with
//!   unit constant,
//! * `plain_stable`: `c_{d,α}|x-y|^{-d-α}`,
//! * `neumann`: the stable kernel plus reflected jumps through `D^c`,
//! * `trace`: the stable kernel plus excursions through the complementary
//!   half-space,
//! * `resurrected`: `|x-y|^{-d-α} + q(x,y)` with a resurrection density
//!   generated by `Ψ`.
//!
//! The integral terms reduce, on the half-space, to
//! `∫_{z_d<0} |x-z|^{-d-α} h(|z_d|, |y-z|) dz`, integrated by 1-D adaptive
//! quadrature for `d = 1`, nested adaptive quadrature for `d = 2` and
//! importance-sampled Monte Carlo for `d ≥ 3`.

mod condition;
mod green;
mod halfspace;
mod tail;

pub use condition::{check_condition_a, sample_pairs, ConditionStats, PairRatio};
pub use green::{halfspace_green, poisson_via_green};
pub use tail::{tail_integral, TailValue};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::quadrature::{integrate_breakpoints, QuadConfig, QuadValue};
use crate::scalar::{dist, lit, min, to_f64, Real};
use crate::special::{halfspace_escape_integral, poisson_constant, power_law_normaliser, stable_constant};
use crate::weights::{blowup_argument, PsiKind, PsiSpec, WeightSpec};

/// Family of jump kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind<T> {
    Comparison,
    PlainStable,
    Neumann,
    Trace,
    Resurrected {
        psi: PsiKind,
        #[serde(default)]
        p: T,
    },
}

impl<T: Real> KernelKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Comparison => "comparison",
            KernelKind::PlainStable => "plain_stable",
            KernelKind::Neumann => "neumann",
            KernelKind::Trace => "trace",
            KernelKind::Resurrected { .. } => "resurrected",
        }
    }
}

/// Everything needed to evaluate a kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub kind: KernelKind<T>,
    pub dom: DomainSpec<T>,
    pub alpha: T,
    /// Weight of the comparison kernel.
    pub weight: WeightSpec<T>,
    pub quad: QuadConfig<T>,
    /// Sample count for the Monte Carlo paths.
    pub mc_samples: usize,
    pub seed: u64,
}

impl<T: Real> KernelSpec<T> {
    pub fn new(kind: KernelKind<T>, dom: DomainSpec<T>, alpha: T) -> Self {
        Self {
            kind,
            dom,
            alpha,
            weight: WeightSpec::constant(),
            quad: QuadConfig::default(),
            mc_samples: 200_000,
            seed: 0,
        }
    }

    pub fn comparison(dom: DomainSpec<T>, alpha: T, weight: WeightSpec<T>) -> Self {
        Self { weight, ..Self::new(KernelKind::Comparison, dom, alpha) }
    }

    pub fn resurrected(dom: DomainSpec<T>, alpha: T, psi: PsiSpec<T>) -> Self {
        Self::new(KernelKind::Resurrected { psi: psi.kind, p: psi.p }, dom, alpha)
    }

    pub fn psi(&self) -> Option<PsiSpec<T>> {
        match self.kind {
            KernelKind::Resurrected { psi, p } => Some(PsiSpec { kind: psi, p }),
            _ => None,
        }
    }
}

/// Kernel value with an error estimate (quadrature error or Monte Carlo
/// standard error).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue<T> {
    pub value: T,
    pub error: T,
}

/// A kernel with its normalising constants computed once.
#[derive(Clone, Debug)]
pub struct Kernel<T> {
    pub spec: KernelSpec<T>,
    /// `c_{d,α}`.
    pub stable_c: T,
    /// `∫_{R^d_+} |w - z|^{-d-α} dw` at unit depth, computed by ray
    /// quadrature (Neumann kernel on half-spaces).
    pub unit_escape: Option<T>,
    /// `∫_{R^d_+} p̃(z, y) dy` at unit depth, by quadrature (resurrected).
    pub psi_normaliser: Option<T>,
}

impl<T: Real> Kernel<T> {
    pub fn new(spec: KernelSpec<T>) -> Result<Self> {
        spec.dom.validate()?;
        spec.quad.validate()?;
        spec.weight.validate()?;
        let a = spec.alpha;
        if !(a > T::zero() && a < lit(2.0)) {
            return Err(Error::input("alpha must lie in (0, 2)"));
        }
        let d = spec.dom.dim();
        let stable_c = stable_constant(d, a);
        let mut unit_escape = None;
        let mut psi_normaliser = None;
        match spec.kind {
            KernelKind::Neumann if spec.dom.is_half_space() => {
                let mut z = vec![T::zero(); d];
                z[d - 1] = -T::one();
                let hs = DomainSpec::half_space(d);
                let n = if d <= 2 {
                    neumann_norm(&hs, a, &z, &spec.quad)?.value / stable_c
                } else {
                    halfspace_escape_integral(d, a)
                };
                unit_escape = Some(n);
            }
            KernelKind::Trace | KernelKind::Resurrected { .. } => {
                if !spec.dom.is_half_space() {
                    return Err(Error::Unsupported(format!(
                        "{} kernel needs the half-line or a half-space",
                        spec.kind.name()
                    )));
                }
                if let Some(psi) = spec.psi() {
                    psi.validate(a)?;
                    let c = if d <= 2 {
                        halfspace::psi_normaliser_numeric(d, a, &psi, &spec.quad)?.value
                    } else {
                        power_law_normaliser(d, a, psi.effective_power())
                    };
                    psi_normaliser = Some(c);
                }
            }
            _ => {}
        }
        Ok(Self { spec, stable_c, unit_escape, psi_normaliser })
    }

    pub fn dim(&self) -> usize {
        self.spec.dom.dim()
    }

    pub fn alpha(&self) -> T {
        self.spec.alpha
    }

    /// True when evaluation is a closed form.
    pub fn is_closed_form(&self) -> bool {
        matches!(self.spec.kind, KernelKind::Comparison | KernelKind::PlainStable)
    }

    fn check_pair(&self, x: &[T], y: &[T]) -> Result<()> {
        let dom = &self.spec.dom;
        dom.check_point(x)?;
        dom.check_point(y)?;
        if !dom.contains(x) || !dom.contains(y) {
            return Err(Error::domain("kernel arguments must lie in the open domain"));
        }
        if x == y {
            return Err(Error::domain("kernel is singular on the diagonal"));
        }
        Ok(())
    }

    /// `J(x, y)`.
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<KernelValue<T>> {
        self.check_pair(x, y)?;
        self.eval_unchecked(x, y)
    }

    pub(crate) fn eval_unchecked(&self, x: &[T], y: &[T]) -> Result<KernelValue<T>> {
        let spec = &self.spec;
        let d = self.dim();
        let a = spec.alpha;
        let r = dist(x, y);
        let base = r.powf(-(lit::<T>(d as f64) + a));
        let exact = |v: T| Ok(KernelValue { value: v, error: T::zero() });
        match spec.kind {
            KernelKind::Comparison => {
                let (dx, dy) = (spec.dom.signed_distance(x), spec.dom.signed_distance(y));
                let arg = blowup_argument(r, dx, dy, spec.weight.a0);
                exact(base * spec.weight.eval_unchecked(arg))
            }
            KernelKind::PlainStable => exact(self.stable_c * base),
            KernelKind::Neumann => {
                let extra = if spec.dom.is_half_space() {
                    let ch = self.unit_escape.expect("prepared");
                    let h = NeumannH { alpha: a, d };
                    halfspace::complement_integral(x, y, a, &h, spec)?.scale(T::one() / ch)
                } else {
                    halfspace::neumann_generic(self, x, y)?
                };
                Ok(KernelValue {
                    value: self.stable_c * (base + extra.value),
                    error: self.stable_c * extra.error,
                })
            }
            KernelKind::Trace => {
                let yd = y[d - 1];
                let h = TraceH { alpha: a, d, yd, cp: poisson_constant(d, a) };
                let extra = halfspace::complement_integral(x, y, a, &h, spec)?;
                Ok(KernelValue {
                    value: self.stable_c * (base + extra.value),
                    error: self.stable_c * extra.error,
                })
            }
            KernelKind::Resurrected { .. } => {
                let psi = spec.psi().expect("resurrected kernel has psi");
                let c = self.psi_normaliser.expect("prepared");
                let yd = y[d - 1];
                let h = ResurrectH { alpha: a, d, yd, psi };
                let extra = halfspace::complement_integral(x, y, a, &h, spec)?.scale(T::one() / c);
                Ok(KernelValue { value: base + extra.value, error: extra.error })
            }
        }
    }

    /// Resurrection density `p(z, y)` for `z_d < 0 < y_d`.
    pub fn resurrection_density(&self, z: &[T], y: &[T]) -> Result<T> {
        let psi = self
            .spec
            .psi()
            .ok_or_else(|| Error::Unsupported("resurrection density needs a resurrected kernel".into()))?;
        let c = self.psi_normaliser.expect("prepared");
        resurrection_density_with(self.spec.alpha, &psi, c, z, y)
    }
}

/// `p(z,y) = |z_d|^α Ψ(|y-z|²/(y_d|z_d|)) |y-z|^{-d-α} / c` with the
/// normaliser `c` supplied.
pub fn resurrection_density_with<T: Real>(alpha: T, psi: &PsiSpec<T>, c: T, z: &[T], y: &[T]) -> Result<T> {
    let d = z.len();
    if y.len() != d {
        return Err(Error::input("dimension mismatch"));
    }
    let (zd, yd) = (z[d - 1], y[d - 1]);
    if !(zd < T::zero() && yd > T::zero()) {
        return Err(Error::domain("resurrection density needs z_d < 0 < y_d"));
    }
    let s = -zd;
    let r2 = z.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    let e = (lit::<T>(d as f64) + alpha) / lit(2.0);
    Ok(s.powf(alpha) * psi.eval(r2 / (yd * s)) * r2.powf(-e) / c)
}

/// Resurrection density with the normaliser computed by quadrature.
pub fn resurrection_density<T: Real>(psi: &PsiSpec<T>, alpha: T, z: &[T], y: &[T], cfg: &QuadConfig<T>) -> Result<T> {
    let d = z.len();
    let c = if d <= 2 {
        halfspace::psi_normaliser_numeric(d, alpha, psi, cfg)?.value
    } else {
        power_law_normaliser(d, alpha, psi.effective_power())
    };
    resurrection_density_with(alpha, psi, c, z, y)
}

/// Weight `h(s, |y-z|²)` in `∫_{z_d<0} |x-z|^{-d-α} h dz`, with `s = |z_d|`.
pub(crate) trait ComplementWeight<T: Real>: Sync {
    fn h(&self, s: T, ry2: T) -> T;
}

/// Unnormalised Neumann weight; callers divide by the escape integral.
struct NeumannH<T> {
    alpha: T,
    d: usize,
}

impl<T: Real> ComplementWeight<T> for NeumannH<T> {
    fn h(&self, s: T, ry2: T) -> T {
        let e = (lit::<T>(self.d as f64) + self.alpha) / lit(2.0);
        s.powf(self.alpha) * ry2.powf(-e)
    }
}

struct TraceH<T> {
    alpha: T,
    d: usize,
    yd: T,
    cp: T,
}

impl<T: Real> ComplementWeight<T> for TraceH<T> {
    fn h(&self, s: T, ry2: T) -> T {
        let half = self.alpha / lit(2.0);
        self.cp * (s / self.yd).powf(half) * ry2.powf(-lit::<T>(self.d as f64) / lit(2.0))
    }
}

struct ResurrectH<T> {
    alpha: T,
    d: usize,
    yd: T,
    psi: PsiSpec<T>,
}

impl<T: Real> ComplementWeight<T> for ResurrectH<T> {
    fn h(&self, s: T, ry2: T) -> T {
        let e = (lit::<T>(self.d as f64) + self.alpha) / lit(2.0);
        s.powf(self.alpha) * self.psi.eval(ry2 / (self.yd * s)) * ry2.powf(-e)
    }
}

/// `∫_D J^α(z, w) dw` for `z` in the open complement.
///
/// Computed along rays from `z`: each ray contributes
/// `(c/α) Σ (t₁^{-α} - t₂^{-α})` over the parameter intervals it spends in
/// `D`. Directions are summed exactly for `d = 1` and integrated adaptively
/// for `d = 2`; half-spaces in `d ≥ 3` use the closed form.
pub fn neumann_norm<T: Real>(dom: &DomainSpec<T>, alpha: T, z: &[T], cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    let dc = dom.delta_complement(z)?;
    if !(dc > T::zero()) {
        return Err(Error::domain("neumann_norm needs a point of the open complement"));
    }
    let d = dom.dim();
    let c = stable_constant(d, alpha);
    let ray = |dir: &[T]| -> T {
        dom.ray_segments(z, dir, T::zero())
            .iter()
            .map(|&(t1, t2)| {
                let hi = if t2.is_infinite() { T::zero() } else { t2.powf(-alpha) };
                (t1.powf(-alpha) - hi) / alpha
            })
            .fold(T::zero(), |s, v| s + v)
    };
    match d {
        1 => {
            let v = ray(&[T::one()]) + ray(&[-T::one()]);
            Ok(QuadValue { value: c * v, error: T::zero(), evals: 2 })
        }
        2 => {
            let two_pi = T::PI() + T::PI();
            let mut pts = vec![T::zero(), two_pi];
            pts.extend(angular_breakpoints(dom, z).into_iter().filter(|&t| t > T::zero() && t < two_pi));
            let sing = vec![false; pts.len()];
            let q = integrate_breakpoints(|t: T| ray(&[t.cos(), t.sin()]), &pts, &sing, cfg)?;
            Ok(q.scale(c))
        }
        _ => {
            if dom.is_half_space() {
                Ok(QuadValue { value: neumann_norm_closed(d, alpha, dc), error: T::zero(), evals: 0 })
            } else {
                Err(Error::Unsupported("neumann_norm outside half-spaces needs d ≤ 2".into()))
            }
        }
    }
}

/// Closed form on half-spaces: `c_{d,α} C_H δ_{D^c}(z)^{-α}` where `C_H` is
/// the unit-depth escape integral.
pub fn neumann_norm_closed<T: Real>(d: usize, alpha: T, depth: T) -> T {
    stable_constant(d, alpha) * halfspace_escape_integral(d, alpha) * depth.powf(-alpha)
}

/// Directions in `[0, 2π)` from `z` at which the ray structure of `D`
/// changes (grazing rays and corners).
pub(crate) fn angular_breakpoints<T: Real>(dom: &DomainSpec<T>, z: &[T]) -> Vec<T> {
    let two_pi = T::PI() + T::PI();
    let wrap = |t: T| {
        let m = t % two_pi;
        if m < T::zero() {
            m + two_pi
        } else {
            m
        }
    };
    match *dom {
        DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => vec![T::zero(), T::PI()],
        DomainSpec::Ball { radius, .. } | DomainSpec::ExteriorBall { radius, .. } => {
            let n = crate::scalar::norm(z);
            if n <= radius {
                return vec![];
            }
            let phi = (-z[1]).atan2(-z[0]);
            let beta = min(T::one(), radius / n).asin();
            vec![wrap(phi - beta), wrap(phi), wrap(phi + beta)]
        }
        DomainSpec::Box2d { side } => {
            let corners = [(T::zero(), T::zero()), (side, T::zero()), (T::zero(), side), (side, side)];
            corners.iter().map(|&(a, b)| wrap((b - z[1]).atan2(a - z[0]))).collect()
        }
    }
}

/// Free-function forms of the kernel evaluators.
pub fn stable_kernel_constant<T: Real>(d: usize, alpha: T) -> T {
    stable_constant(d, alpha)
}

pub fn comparison_kernel<T: Real>(spec: &KernelSpec<T>, x: &[T], y: &[T]) -> Result<T> {
    let mut s = spec.clone();
    s.kind = KernelKind::Comparison;
    Ok(Kernel::new(s)?.eval(x, y)?.value)
}

pub fn neumann_kernel<T: Real>(spec: &KernelSpec<T>, x: &[T], y: &[T]) -> Result<KernelValue<T>> {
    let mut s = spec.clone();
    s.kind = KernelKind::Neumann;
    Kernel::new(s)?.eval(x, y)
}

pub fn trace_kernel<T: Real>(spec: &KernelSpec<T>, x: &[T], y: &[T]) -> Result<KernelValue<T>> {
    let mut s = spec.clone();
    s.kind = KernelKind::Trace;
    Kernel::new(s)?.eval(x, y)
}

pub fn resurrected_kernel<T: Real>(spec: &KernelSpec<T>, x: &[T], y: &[T]) -> Result<KernelValue<T>> {
    if spec.psi().is_none() {
        return Err(Error::input("resurrected kernel needs a psi"));
    }
    Kernel::new(spec.clone())?.eval(x, y)
}

pub(crate) fn f64_point<T: Real>(x: &[T]) -> Vec<f64> {
    x.iter().map(|&v| to_f64(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn comparison_examples() {
        let hl = DomainSpec::half_line();
        let k = Kernel::new(KernelSpec::comparison(hl.clone(), 1.0, WeightSpec::constant())).unwrap();
        assert_relative_eq!(k.eval(&[1.0], &[3.0]).unwrap().value, 0.25);
        let k = Kernel::new(KernelSpec::comparison(hl.clone(), 1.0, WeightSpec::log())).unwrap();
        let k2 = Kernel::new(KernelSpec::comparison(DomainSpec::half_space(2), 1.0, WeightSpec::log())).unwrap();
        let v = k2.eval(&[0.0, 1.0], &[1.0, 1.0]).unwrap().value;
        assert_relative_eq!(v, (std::f64::consts::E + 1.0).ln(), max_relative = 1e-14);
        assert_eq!(k.eval(&[1.0], &[2.0]).unwrap(), k.eval(&[2.0], &[1.0]).unwrap());
        assert!(matches!(k.eval(&[1.0], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(k.eval(&[-1.0], &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn neumann_norm_examples() {
        let cfg = QuadConfig::default();
        let hl = DomainSpec::half_line();
        assert_relative_eq!(neumann_norm(&hl, 1.0, &[-1.0], &cfg).unwrap().value, 1.0 / PI, max_relative = 1e-12);
        let hs = DomainSpec::half_space(2);
        for alpha in [0.5, 1.0, 1.5] {
            let a = neumann_norm(&hs, alpha, &[0.3, -1.0], &cfg).unwrap().value;
            let b = neumann_norm(&hs, alpha, &[0.3, -2.5], &cfg).unwrap().value;
            assert_relative_eq!(b, 2.5f64.powf(-alpha) * a, max_relative = 1e-6);
            assert_relative_eq!(a, neumann_norm_closed(2, alpha, 1.0), max_relative = 1e-6);
        }
        assert!(matches!(neumann_norm(&hs, 1.0, &[0.0, 1.0], &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn neumann_norm_bounded_domains_comparable_to_depth_power() {
        let cfg = QuadConfig::default();
        let ball = DomainSpec::ball(2, 1.0);
        let ratios: Vec<f64> = [1.001, 1.01, 1.1, 1.5]
            .iter()
            .map(|&r| neumann_norm(&ball, 1.0, &[r, 0.0], &cfg).unwrap().value * (r - 1.0))
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo < 10.0, "{ratios:?}");
    }

    #[test]
    fn neumann_anchor_half_line() {
        let spec = KernelSpec::new(KernelKind::Neumann, DomainSpec::half_line(), 1.0);
        let v = neumann_kernel(&spec, &[1.0], &[2.0]).unwrap();
        let exact = (3.0 * LN_2 - 1.0) / PI;
        assert_relative_eq!(v.value, exact, max_relative = 1e-6);
    }

    #[test]
    fn resurrection_density_identities() {
        let cfg = QuadConfig::default();
        let one = PsiSpec::constant();
        // Ψ ≡ 1: p(z,y) = J(z,y) / ∫ J(z,·).
        for (z, y) in [([0.2, -0.7], [1.0, 0.4]), ([0.0, -2.0], [-3.0, 0.1])] {
            let p = resurrection_density(&one, 1.0, &z, &y, &cfg).unwrap();
            let hs = DomainSpec::half_space(2);
            let j = stable_constant(2, 1.0) * dist::<f64>(&z, &y).powf(-3.0);
            let expected = j / neumann_norm(&hs, 1.0, &z, &cfg).unwrap().value;
            assert_relative_eq!(p, expected, max_relative = 1e-8);
        }
        // Scaling p(λz, λy) = λ^{-d} p(z, y).
        let psi = PsiSpec::power_cap(0.25);
        let (z, y) = ([0.1, -0.5], [0.7, 0.9]);
        let p1 = resurrection_density(&psi, 1.0, &z, &y, &cfg).unwrap();
        let p2 = resurrection_density(&psi, 1.0, &[0.3, -1.5], &[2.1, 2.7], &cfg).unwrap();
        assert_relative_eq!(p2, p1 / 9.0, max_relative = 1e-10);
        assert!(resurrection_density(&psi, 1.0, &[0.0, 1.0], &y, &cfg).is_err());
    }

    #[test]
    fn numeric_normalisers_match_closed_forms() {
        let cfg = QuadConfig::default();
        for d in [1usize, 2] {
            for alpha in [0.5, 1.0, 1.5] {
                for psi in [PsiSpec::constant(), PsiSpec::power_cap(alpha / 8.0), PsiSpec::power_cap(alpha / 2.0)] {
                    let num = halfspace::psi_normaliser_numeric(d, alpha, &psi, &cfg).unwrap().value;
                    let exact = power_law_normaliser(d, alpha, psi.effective_power());
                    assert_relative_eq!(num, exact, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn trace_requires_half_space() {
        let spec = KernelSpec::new(KernelKind::Trace, DomainSpec::ball(2, 1.0), 1.0);
        assert!(matches!(Kernel::new(spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn toml_shape() {
        let k: KernelKind<f64> = serde_json::from_str(r#"{"kind":"resurrected","psi":"power_cap","p":0.5}"#).unwrap();
        assert_eq!(k, KernelKind::Resurrected { psi: PsiKind::PowerCap, p: 0.5 });
    }
}
