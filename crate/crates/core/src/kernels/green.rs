//! Green function and Poisson kernel of the stable process killed on
//! leaving a half-space.

use super::halfspace::Trap;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_breakpoints, QuadConfig, QuadValue};
use crate::scalar::{dist, lit, Real};
use crate::special::{green_constant, stable_constant};

/// `∫₀^r s^{α/2-1} (1+s)^{-d/2} ds` after `s = r u^m`, which makes the
/// integrand bounded at `u = 0`.
fn green_profile<T: Real>(d: usize, alpha: T, r: T, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    let a = alpha / lit(2.0);
    let m = (T::one() / a).ceil();
    let mi = m.to_i32().unwrap_or(4);
    let hd = lit::<T>(d as f64) / lit(2.0);
    let knee = r.powf(-T::one() / m);
    let mut pts = vec![T::zero(), T::one()];
    if knee < T::one() {
        pts.push(knee);
    }
    let sing = vec![false; pts.len()];
    let q = integrate_breakpoints(
        |u: T| {
            if u == T::zero() {
                return if m * a == T::one() { T::one() } else { T::zero() };
            }
            u.powf(m * a - T::one()) * (T::one() + r * u.powi(mi)).powf(-hd)
        },
        &pts,
        &sing,
        cfg,
    )?;
    Ok(q.scale(m * r.powf(a)))
}

/// Green function of `{w_d > 0}` for the rotationally symmetric
/// `α`-stable process:
/// `K |x-w|^{α-d} ∫₀^{4x_d w_d/|x-w|²} s^{α/2-1}(1+s)^{-d/2} ds` with
/// `K = Γ(d/2)/(2^α π^{d/2} Γ(α/2)²)`. Zero when either point is outside.
pub fn halfspace_green<T: Real>(d: usize, alpha: T, x: &[T], w: &[T], cfg: &QuadConfig<T>) -> Result<T> {
    if x.len() != d || w.len() != d {
        return Err(Error::input("dimension mismatch"));
    }
    let (xd, wd) = (x[d - 1], w[d - 1]);
    if xd <= T::zero() || wd <= T::zero() {
        return Ok(T::zero());
    }
    let r = dist(x, w);
    if r == T::zero() {
        return Err(Error::domain("Green function is singular on the diagonal"));
    }
    let ratio = lit::<T>(4.0) * xd * wd / (r * r);
    let prof = green_profile(d, alpha, ratio, cfg)?.value;
    Ok(green_constant(d, alpha) * r.powf(alpha - lit(d as f64)) * prof)
}

/// Poisson kernel of the lower half-line `(-∞, 0)` from `z < 0` to `y > 0`,
/// `∫_{-∞}^0 g(z, w) J^α(w, y) dw`, by nested quadrature over the Green
/// function.
pub fn poisson_via_green<T: Real>(alpha: T, z: T, y: T, cfg: &QuadConfig<T>) -> Result<QuadValue<T>> {
    if !(z < T::zero() && y > T::zero()) {
        return Err(Error::domain("Poisson kernel needs z < 0 < y"));
    }
    let c = stable_constant(1, alpha);
    let mut icfg = *cfg;
    icfg.rel_tol = cfg.rel_tol / lit(10.0);
    let trap = Trap::new();
    let f = |w: T| -> T {
        if w >= T::zero() || w == z {
            return T::zero();
        }
        let g = trap.run(halfspace_green(1, alpha, &[-z], &[-w], &icfg).map(|v| QuadValue { value: v, error: T::zero(), evals: 1 }));
        g * c * (y - w).powf(-T::one() - alpha)
    };
    let pts = [z + z, z, T::zero()];
    let r = integrate_breakpoints(f, &pts, &[false, true, true], cfg).and_then(|inner| {
        let tail = integrate_breakpoints(
            |t: T| {
                let w = z + z - t;
                let g = trap.run(halfspace_green(1, alpha, &[-z], &[-w], &icfg).map(|v| QuadValue { value: v, error: T::zero(), evals: 1 }));
                g * c * (y - w).powf(-T::one() - alpha)
            },
            &[T::zero(), T::infinity()],
            &[false, false],
            cfg,
        )?;
        Ok(inner.add(tail))
    });
    trap.finish(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::poisson_constant;
    use approx::assert_relative_eq;
    use statrs::function::beta::{beta, beta_reg};

    #[test]
    fn profile_matches_incomplete_beta() {
        let cfg = QuadConfig::default();
        for (d, alpha) in [(2usize, 0.5), (2, 1.0), (2, 1.5), (3, 1.2), (1, 0.5)] {
            for r in [1e-3, 0.5, 3.0, 1e4] {
                let (a, b) = (alpha / 2.0, d as f64 / 2.0 - alpha / 2.0);
                let exact = beta(a, b) * beta_reg(a, b, r / (1.0 + r));
                let num = green_profile(d, alpha, r, &cfg).unwrap().value;
                assert_relative_eq!(num, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn green_two_sided_form() {
        // g(x,w) ≍ |x-w|^{α-d} (1 ∧ δ(x)δ(w)/|x-w|²)^{α/2} for d > α.
        let cfg = QuadConfig::default();
        for alpha in [0.5, 1.0, 1.5] {
            let mut ratios = Vec::new();
            for &xd in &[1e-3, 0.1, 1.0, 10.0] {
                for &wd in &[1e-3, 0.1, 1.0, 10.0] {
                    for &h in &[0.0, 0.01, 1.0, 100.0] {
                        let (x, w): ([f64; 2], [f64; 2]) = ([0.0, xd], [h, wd]);
                        if x == w {
                            continue;
                        }
                        let r = dist(&x, &w);
                        let form = r.powf(alpha - 2.0) * (xd * wd / (r * r)).min(1.0).powf(alpha / 2.0);
                        ratios.push(halfspace_green(2, alpha, &x, &w, &cfg).unwrap() / form);
                    }
                }
            }
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            assert!(lo > 0.0 && hi / lo < 20.0, "α={alpha}: {lo} {hi}");
        }
    }

    #[test]
    fn poisson_kernel_from_green_matches_closed_form() {
        let cfg = QuadConfig::default().with_tol(1e-8, 1e-14);
        for alpha in [0.5, 1.0, 1.5] {
            for (z, y) in [(-1.0, 2.0), (-0.3, 0.1)] {
                let num = poisson_via_green(alpha, z, y, &cfg).unwrap().value;
                let cp: f64 = poisson_constant(1, alpha);
                let exact = cp * (-z / y).powf(alpha / 2.0) / (y - z);
                assert_relative_eq!(num, exact, max_relative = 1e-5);
            }
        }
    }
}
