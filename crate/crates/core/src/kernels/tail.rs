//! Tail functionals `∫_{B_D(x,R)∖B(x,r)} J(x,y) dy` and their variants.

use serde::{Deserialize, Serialize};

use super::halfspace::Trap;
use super::{angular_breakpoints, Kernel};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_breakpoints, integrate_mc_region, QuadValue, Region};
use crate::scalar::{dist, lit, max, min, Real};

/// Jump rate out of a region, with a quadrature error or Monte Carlo
/// standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailValue<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> From<QuadValue<T>> for TailValue<T> {
    fn from(q: QuadValue<T>) -> Self {
        Self { value: max(q.value, T::zero()), error: q.error }
    }
}

impl<T: Real> Kernel<T> {
    /// `Λ = 4 + 5/κ`.
    pub fn lambda(&self) -> T {
        lit::<T>(4.0) + lit::<T>(5.0) / self.spec.dom.kappa()
    }

    /// `∫_{B_D(x, r_outer)∖B(x, r)} J(x, y) dy`; `r_outer` may be infinite.
    pub fn tail_integral(&self, x: &[T], r: T, r_outer: T) -> Result<TailValue<T>> {
        self.shell_integral(x, r, r_outer, T::zero())
    }

    /// Lower-bound annulus `∫_{(B_D(x,Λρ) ∩ D_ρ)∖B(x,ρ)} J(x, y) dy` with
    /// `D_ρ = {δ_D > ρ}`.
    pub fn annulus_integral(&self, x: &[T], rho: T) -> Result<TailValue<T>> {
        self.shell_integral(x, rho, self.lambda() * rho, rho)
    }

    /// `∫ J(x, y) dy` over `y ∈ D` with `r_in ≤ |y - x| < r_out` and
    /// `δ_D(y) > margin`.
    pub fn shell_integral(&self, x: &[T], r_in: T, r_out: T, margin: T) -> Result<TailValue<T>> {
        let dom = &self.spec.dom;
        dom.check_point(x)?;
        if !dom.contains(x) {
            return Err(Error::domain("tail integrals need x in the open domain"));
        }
        if !(r_in > T::zero()) {
            return Err(Error::input("inner radius must be positive; the integral diverges at r = 0"));
        }
        if !(r_out > r_in) {
            return Err(Error::input("outer radius must exceed the inner radius"));
        }
        if margin < T::zero() {
            return Err(Error::input("margin must be nonnegative"));
        }
        let d = self.dim();
        if d == 1 || (d == 2 && self.is_closed_form()) {
            self.shell_rays(x, r_in, r_out, margin)
        } else {
            if r_out.is_infinite() {
                return Err(Error::Unsupported(format!(
                    "infinite tails of the {} kernel need d = 1",
                    self.spec.kind.name()
                )));
            }
            let region = Region::Annulus { center: x.to_vec(), r_in, r_out };
            let est = integrate_mc_region(
                |y: &[T]| {
                    if dom.signed_distance(y) <= margin {
                        return T::zero();
                    }
                    self.eval_unchecked(x, y).map(|v| v.value).unwrap_or_else(|_| T::nan())
                },
                &region,
                Some(dom),
                self.spec.mc_samples,
                self.spec.seed,
                true,
            )?;
            Ok(TailValue { value: lit(est.value.max(0.0)), error: lit(est.std_error) })
        }
    }

    /// Radial integral along one direction, weighted by `t^{d-1}`.
    fn ray_integral(&self, x: &[T], dir: &[T], r_in: T, r_out: T, margin: T) -> Result<QuadValue<T>> {
        let dom = &self.spec.dom;
        let d = self.dim();
        let four: T = lit(4.0);
        let mut total = QuadValue::zero();
        let mut y = vec![T::zero(); d];
        for (t1, t2) in dom.ray_segments(x, dir, margin) {
            let (a, b) = (max(t1, r_in), min(t2, r_out));
            if !(b > a) {
                continue;
            }
            let mut pts = vec![a];
            let mut s = a * four;
            let cap = min(b, a * lit(1e6));
            while s < cap {
                pts.push(s);
                s = s * four;
            }
            pts.push(b);
            let mut sing = vec![false; pts.len()];
            sing[0] = margin == T::zero() && t1 > r_in;
            *sing.last_mut().expect("nonempty") = margin == T::zero() && t2 <= r_out && t2.is_finite();
            let trap = Trap::new();
            let q = integrate_breakpoints(
                |t: T| {
                    for ((yi, &xi), &vi) in y.iter_mut().zip(x).zip(dir) {
                        *yi = xi + t * vi;
                    }
                    if dom.signed_distance(&y) <= margin {
                        return T::zero();
                    }
                    let j = trap.run(self.eval_unchecked(x, &y).map(|v| QuadValue { value: v.value, error: v.error, evals: 1 }));
                    j * t.powi(d as i32 - 1)
                },
                &pts,
                &sing,
                &self.spec.quad,
            );
            total = total.add(trap.finish(q)?);
        }
        Ok(total)
    }

    fn shell_rays(&self, x: &[T], r_in: T, r_out: T, margin: T) -> Result<TailValue<T>> {
        let dom = &self.spec.dom;
        match self.dim() {
            1 => {
                let a = self.ray_integral(x, &[T::one()], r_in, r_out, margin)?;
                let b = self.ray_integral(x, &[-T::one()], r_in, r_out, margin)?;
                Ok(a.add(b).into())
            }
            _ => {
                let two_pi = T::PI() + T::PI();
                let mut pts = vec![T::zero(), two_pi];
                pts.extend(angular_breakpoints(dom, x).into_iter().filter(|&t| t > T::zero() && t < two_pi));
                let sing = vec![false; pts.len()];
                let mut cfg = self.spec.quad;
                cfg.rel_tol = max(cfg.rel_tol, lit(1e-6));
                let trap = Trap::new();
                let q = integrate_breakpoints(
                    |th: T| trap.run(self.ray_integral(x, &[th.cos(), th.sin()], r_in, r_out, margin)),
                    &pts,
                    &sing,
                    &cfg,
                );
                Ok(trap.finish(q)?.into())
            }
        }
    }

    /// `∫_{B_D(z, s)} J(x, y) dy` for `x` outside `B(z, s)`.
    pub fn ball_integral(&self, x: &[T], z: &[T], s: T) -> Result<TailValue<T>> {
        let dom = &self.spec.dom;
        dom.check_point(x)?;
        dom.check_point(z)?;
        if !dom.contains(x) {
            return Err(Error::domain("x must lie in the open domain"));
        }
        if !(s > T::zero()) {
            return Err(Error::input("ball radius must be positive"));
        }
        if dist(x, z) <= s {
            return Err(Error::domain("x must lie outside the ball"));
        }
        match self.dim() {
            1 => {
                let lo = z[0] - s;
                let mut total = QuadValue::zero();
                for (t1, t2) in dom.ray_segments(&[lo], &[T::one()], T::zero()) {
                    let (a, b) = (t1, min(t2, s + s));
                    if !(b > a) {
                        continue;
                    }
                    let sing = [t1 > T::zero(), t2 <= s + s];
                    let trap = Trap::new();
                    let q = integrate_breakpoints(
                        |t: T| {
                            let y = [lo + t];
                            if !dom.contains(&y) {
                                return T::zero();
                            }
                            trap.run(self.eval_unchecked(x, &y).map(|v| QuadValue { value: v.value, error: v.error, evals: 1 }))
                        },
                        &[a, b],
                        &sing,
                        &self.spec.quad,
                    );
                    total = total.add(trap.finish(q)?);
                }
                Ok(total.into())
            }
            _ => {
                let region = Region::Ball { center: z.to_vec(), radius: s };
                let est = integrate_mc_region(
                    |y: &[T]| self.eval_unchecked(x, y).map(|v| v.value).unwrap_or_else(|_| T::nan()),
                    &region,
                    Some(dom),
                    self.spec.mc_samples,
                    self.spec.seed,
                    true,
                )?;
                Ok(TailValue { value: lit(est.value.max(0.0)), error: lit(est.std_error) })
            }
        }
    }
}

/// Free-function form of [`Kernel::tail_integral`].
pub fn tail_integral<T: Real>(k: &Kernel<T>, x: &[T], r: T, r_outer: T) -> Result<TailValue<T>> {
    k.tail_integral(x, r, r_outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::kernels::{KernelKind, KernelSpec};
    use crate::weights::WeightSpec;
    use approx::assert_relative_eq;

    fn comparison(dom: DomainSpec<f64>, alpha: f64, w: WeightSpec<f64>) -> Kernel<f64> {
        Kernel::new(KernelSpec::comparison(dom, alpha, w)).unwrap()
    }

    #[test]
    fn half_line_example() {
        let k = comparison(DomainSpec::half_line(), 1.0, WeightSpec::constant());
        let v = k.tail_integral(&[1.0], 0.5, f64::INFINITY).unwrap();
        assert_relative_eq!(v.value, 3.0, max_relative = 1e-8);
        assert!(matches!(k.tail_integral(&[1.0], 0.0, f64::INFINITY), Err(Error::Input(_))));
    }

    #[test]
    fn plain_stable_tail_in_plane() {
        // Whole-plane tail of c|y|^{-3} outside radius r is 2πc/r; the
        // half-plane deep point sees almost all of it.
        let k = Kernel::new(KernelSpec::new(KernelKind::PlainStable, DomainSpec::half_space(2), 1.0)).unwrap();
        let v = k.tail_integral(&[0.0, 1e6], 1.0, 10.0).unwrap();
        assert_relative_eq!(v.value, 0.9, max_relative = 1e-6);
        let near = k.tail_integral(&[0.0, 1.0], 1.0, f64::INFINITY).unwrap();
        // Exact: ∫ over the part of the plane above y = 0 and outside B(x,1).
        assert!(near.value < 1.0 && near.value > 0.5, "{near:?}");
    }

    #[test]
    fn monotone_in_r() {
        let k = comparison(DomainSpec::half_space(2), 1.5, WeightSpec::log());
        let x = [0.0, 0.3];
        let mut prev = f64::INFINITY;
        for r in [0.05, 0.1, 0.3, 1.0, 3.0] {
            let v = k.tail_integral(&x, r, f64::INFINITY).unwrap().value;
            assert!(v <= prev, "{r} {v} {prev}");
            prev = v;
        }
    }

    #[test]
    fn annulus_below_tail() {
        let k = comparison(DomainSpec::half_line(), 1.0, WeightSpec::log());
        let t = k.tail_integral(&[0.5], 0.1, f64::INFINITY).unwrap().value;
        let a = k.annulus_integral(&[0.5], 0.1).unwrap().value;
        assert!(a > 0.0 && a < t);
    }

    #[test]
    fn ball_integral_half_line() {
        let k = comparison(DomainSpec::half_line(), 1.0, WeightSpec::constant());
        // ∫_2^4 (y - 1)^{-2} dy = 1 - 1/3.
        let v = k.ball_integral(&[1.0], &[3.0], 1.0).unwrap();
        assert_relative_eq!(v.value, 2.0 / 3.0, max_relative = 1e-8);
        // Clipped at the boundary: ∫_0^{0.5} (2 - y)^{-2} dy.
        let v = k.ball_integral(&[2.0], &[0.2], 0.3).unwrap();
        assert_relative_eq!(v.value, 1.0 / 1.5 - 0.5, max_relative = 1e-8);
    }
}
