//! Continuous-time jump chain for comparison kernels on the half-line.
//!
//! The kernel `J(x,y) = |x-y|^{-1-α} Φ(|x-y|²/(xy))` satisfies
//! `J(λx, λy) = λ^{-1-α} J(x, y)`, so all jump laws are rescalings of
//! `g(u) = J(1, u)`. Two tables of cumulative tail masses are built once:
//!
//! * right jumps `u = 1 + ρ`: `T_R(ρ) = ∫_{1+ρ}^∞ g`, tabulated in `ln ρ`,
//! * left jumps `u = 1 - v`: `T_L(v) = ∫_0^{1-v} g`, tabulated in `logit v`.
//!
//! From `x`, jumps of length in `(lo, hi]` occur at rate
//! `x^{-α}(T_R(lo/x) - T_R(hi/x) + T_L(lo/x) - T_L(hi/x))` and the target is
//! drawn by inverting the tables.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, QuadConfig};
use crate::weights::WeightSpec;

/// Tail masses `T(z_k)` on a uniform grid, stored as `ln T`. `T` is
/// decreasing in `z`; values off the grid are extrapolated linearly in `ln T`.
#[derive(Clone, Debug)]
struct LogTable {
    lo: f64,
    step: f64,
    log_t: Vec<f64>,
}

impl LogTable {
    /// Builds the table from the density `f` (in the grid variable) and the
    /// mass beyond the last node.
    fn build<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64, beyond: f64, cfg: &QuadConfig<f64>) -> Result<Self> {
        let n = ((hi - lo) / step).round() as usize;
        let mut mass = vec![0.0; n + 1];
        mass[n] = beyond;
        for k in (0..n).rev() {
            let a = lo + k as f64 * step;
            let piece = integrate_adaptive(&f, a, a + step, cfg)?.value;
            mass[k] = mass[k + 1] + piece;
        }
        if mass.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Model("jump table has a nonpositive or infinite tail mass".into()));
        }
        Ok(Self { lo, step, log_t: mass.into_iter().map(f64::ln).collect() })
    }

    fn hi(&self) -> f64 {
        self.lo + (self.log_t.len() - 1) as f64 * self.step
    }

    /// `ln T(z)`.
    fn log_mass(&self, z: f64) -> f64 {
        let n = self.log_t.len() - 1;
        let pos = (z - self.lo) / self.step;
        let k = (pos.floor().max(0.0) as usize).min(n - 1);
        let frac = pos - k as f64;
        self.log_t[k] + frac * (self.log_t[k + 1] - self.log_t[k])
    }

    fn mass(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            0.0
        } else {
            self.log_mass(z).exp()
        }
    }

    /// `z` with `ln T(z) = lt`.
    fn inverse(&self, lt: f64) -> f64 {
        let v = &self.log_t;
        let n = v.len() - 1;
        let k = if lt >= v[0] {
            0
        } else if lt <= v[n] {
            n - 1
        } else {
            // Largest k with v[k] >= lt.
            v.partition_point(|&a| a >= lt) - 1
        };
        let k = k.min(n - 1);
        let slope = v[k + 1] - v[k];
        self.lo + self.step * (k as f64 + (lt - v[k]) / slope)
    }
}

/// Jump law of the truncated chain for a comparison kernel on the
/// half-line.
#[derive(Clone, Debug)]
pub struct HalfLineJumps {
    pub alpha: f64,
    pub weight: WeightSpec<f64>,
    right: LogTable,
    left: LogTable,
}

fn logit(v: f64) -> f64 {
    (v / (1.0 - v)).ln()
}

impl HalfLineJumps {
    pub fn new(alpha: f64, weight: WeightSpec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::input("alpha must lie in (0, 2)"));
        }
        weight.validate()?;
        if weight.a0.is_finite() {
            return Err(Error::Unsupported("the jump chain needs a scale-free weight (A0 = ∞)".into()));
        }
        let cfg = QuadConfig::default().with_tol(1e-9, 0.0);
        let phi = move |r: f64| weight.eval_unchecked(r);
        // Right: u = 1 + e^λ, density ρ^{-α} Φ(ρ²/(1+ρ)) dλ.
        let fr = |l: f64| {
            let rho = l.exp();
            rho.powf(-alpha) * phi(rho * rho / (1.0 + rho))
        };
        let (rlo, rhi) = (-40.0, 60.0);
        let tail = integrate_adaptive(fr, rhi, rhi + 100.0 / alpha, &cfg)?.value;
        let right = LogTable::build(fr, rlo, rhi, 0.025, tail, &cfg)?;
        // Left: u = 1 - v, v = 1/(1+e^{-σ}), density v^{-α} (1-v) Φ(v²/(1-v)) dσ.
        let fl = |s: f64| {
            let v = 1.0 / (1.0 + (-s).exp());
            let w = 1.0 / (1.0 + s.exp());
            v.powf(-alpha) * w * phi(v * v / w)
        };
        let (llo, lhi) = (-40.0, 40.0);
        let head = integrate_adaptive(fl, lhi, lhi + 60.0, &cfg)?.value;
        let left = LogTable::build(fl, llo, lhi, 0.025, head, &cfg)?;
        Ok(Self { alpha, weight, right, left })
    }

    /// Mass of `g` over right jumps with `ρ ∈ (a, b]`.
    fn right_mass(&self, a: f64, b: f64) -> f64 {
        let hi = if b.is_finite() { self.right.mass(b.ln()) } else { 0.0 };
        (self.right.mass(a.ln()) - hi).max(0.0)
    }

    /// Mass of `g` over left jumps with `v ∈ (a, b ∧ 1)`.
    fn left_mass(&self, a: f64, b: f64) -> f64 {
        if a >= 1.0 {
            return 0.0;
        }
        let hi = if b < 1.0 { self.left.mass(logit(b)) } else { 0.0 };
        (self.left.mass(logit(a)) - hi).max(0.0)
    }

    /// Total jump rate from `x` over jump lengths in `(lo, hi]`.
    pub fn rate(&self, x: f64, lo: f64, hi: f64) -> f64 {
        let (a, b) = (lo / x, hi / x);
        x.powf(-self.alpha) * (self.right_mass(a, b) + self.left_mass(a, b))
    }

    /// Draws the target of a jump from `x` with length in `(lo, hi]`.
    pub fn jump<R: Rng + ?Sized>(&self, x: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
        let (a, b) = (lo / x, hi / x);
        let mr = self.right_mass(a, b);
        let ml = self.left_mass(a, b);
        let u: f64 = rng.random::<f64>() * (mr + ml);
        if u < mr || ml == 0.0 {
            let top = if b.is_finite() { self.right.mass(b.ln()) } else { 0.0 };
            let target = top + (mr - u).max(0.0);
            let lrho = self.right.inverse(target.max(f64::MIN_POSITIVE).ln());
            let lrho = lrho.clamp(a.ln(), if b.is_finite() { b.ln() } else { f64::INFINITY });
            x * (1.0 + lrho.exp())
        } else {
            let top = if b < 1.0 { self.left.mass(logit(b)) } else { 0.0 };
            let target = top + (u - mr).min(ml);
            let s = self.left.inverse(target.max(f64::MIN_POSITIVE).ln());
            let s = s.clamp(logit(a), self.left.hi());
            // 1 - v with v = 1/(1+e^{-s}).
            x / (1.0 + s.exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::kernels::{Kernel, KernelSpec};
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    #[test]
    fn rate_matches_tail_integral() {
        for alpha in [0.5, 1.0, 1.5] {
            let j = HalfLineJumps::new(alpha, WeightSpec::log()).unwrap();
            let k = Kernel::new(KernelSpec::comparison(DomainSpec::half_line(), alpha, WeightSpec::log())).unwrap();
            for (x, eps) in [(1.0, 0.1), (0.05, 0.2), (3.0, 2.0), (1e-3, 1e-4)] {
                let t = k.tail_integral(&[x], eps, f64::INFINITY).unwrap().value;
                assert_relative_eq!(j.rate(x, eps, f64::INFINITY), t, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn jumps_respect_window_and_law() {
        let j = HalfLineJumps::new(1.0, WeightSpec::log()).unwrap();
        let mut rng = stream_rng(4, 0);
        let (x, lo, hi) = (0.7, 0.1, 2.0);
        let n = 100_000;
        let mut far = 0usize;
        for _ in 0..n {
            let y = j.jump(x, lo, hi, &mut rng);
            let r = (y - x).abs();
            assert!(y > 0.0 && r >= lo * (1.0 - 1e-9) && r <= hi * (1.0 + 1e-9), "{y}");
            if r > 0.5 {
                far += 1;
            }
        }
        let p = far as f64 / n as f64;
        let expect = (j.rate(x, 0.5, hi)) / j.rate(x, lo, hi);
        assert!((p - expect).abs() < 4.0 * (expect * (1.0 - expect) / n as f64).sqrt(), "{p} {expect}");
    }
}
