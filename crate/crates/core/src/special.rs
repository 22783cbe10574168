//! Special functions and closed-form constants, evaluated in `f64` and
//! converted to the caller's scalar type.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::scalar::{lit, Real};

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

pub fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// `int_{R^k} (1 + |v|^2)^{-m} dv` for `m > k/2`.
pub fn power_bump_integral(k: usize, m: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let h = k as f64 / 2.0;
    std::f64::consts::PI.powf(h) * (ln_gamma(m - h) - ln_gamma(m)).exp()
}

/// Normalisation of the isotropic stable jump density,
/// `2^a Gamma((d+a)/2) / (pi^{d/2} |Gamma(-a/2)|)`.
///
/// `|Gamma(-a/2)|` is evaluated as `Gamma(1 - a/2) / (a/2)` so that the
/// negative argument never reaches the gamma routine.
pub fn stable_constant<T: Real>(d: usize, alpha: T) -> T {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    let df = d as f64;
    let abs_gamma_neg = gamma(1.0 - a / 2.0) / (a / 2.0);
    lit(2f64.powf(a) * gamma((df + a) / 2.0) / (std::f64::consts::PI.powf(df / 2.0) * abs_gamma_neg))
}

/// Constant of the stable Poisson kernel for a half-space or ball,
/// `Gamma(d/2) pi^{-d/2-1} sin(pi a / 2)`.
pub fn poisson_constant<T: Real>(d: usize, alpha: T) -> T {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    let df = d as f64;
    let pi = std::f64::consts::PI;
    lit(gamma(df / 2.0) * pi.powf(-df / 2.0 - 1.0) * (pi * a / 2.0).sin())
}

/// Constant of the half-space Green function integral representation,
/// `Gamma(d/2) / (2^a pi^{d/2} Gamma(a/2)^2)`.
pub fn green_constant<T: Real>(d: usize, alpha: T) -> T {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    let df = d as f64;
    lit(gamma(df / 2.0) / (2f64.powf(a) * std::f64::consts::PI.powf(df / 2.0) * gamma(a / 2.0).powi(2)))
}

/// `int_{R^d_+} |w - z|^{-d-a} dw` for `z` at unit depth below the
/// boundary: `pi^{(d-1)/2} Gamma((1+a)/2) / (a Gamma((d+a)/2))`.
pub fn halfspace_escape_integral<T: Real>(d: usize, alpha: T) -> T {
    power_law_normaliser(d, alpha, T::zero())
}

/// `int_{R^d_+} ((|u+e|^2/u_d))^p |u+e|^{-d-a} du`, the normaliser of the
/// half-space return density for `Psi(v) = v^p`:
/// `B(1-p, a-p) pi^{(d-1)/2} Gamma((1+a-2p)/2) / Gamma((d+a-2p)/2)`.
pub fn power_law_normaliser<T: Real>(d: usize, alpha: T, p: T) -> T {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    let p = p.to_f64().unwrap_or(f64::NAN);
    let m = (d as f64 + a - 2.0 * p) / 2.0;
    lit(beta_fn(1.0 - p, a - p) * power_bump_integral(d - 1, m))
}
