//! Blow-up weights `Φ`, scaling indices and the `Ψ → Ψ₁` transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, max, min, Real};

/// Generating function `Ψ` of the resurrected family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// `Ψ ≡ 1`.
    ConstantOne,
    /// `Ψ(v) = v^p`.
    Power,
    /// `Ψ(v) = 1 ∨ v^p`.
    PowerCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiSpec<T> {
    pub kind: PsiKind,
    #[serde(default)]
    pub p: T,
}

impl<T: Real> PsiSpec<T> {
    pub fn constant() -> Self {
        Self { kind: PsiKind::ConstantOne, p: T::zero() }
    }

    pub fn power(p: T) -> Self {
        Self { kind: PsiKind::Power, p }
    }

    pub fn power_cap(p: T) -> Self {
        Self { kind: PsiKind::PowerCap, p }
    }

    /// Exponent actually felt on `[1, ∞)`: `Ψ(v) = v^q` there.
    pub fn effective_power(&self) -> T {
        match self.kind {
            PsiKind::ConstantOne => T::zero(),
            PsiKind::Power => self.p,
            PsiKind::PowerCap => max(self.p, T::zero()),
        }
    }

    /// Weak-scaling exponents `(γ₁, γ₂)`; both equal the effective power.
    pub fn scaling_exponents(&self) -> (T, T) {
        let q = self.effective_power();
        (q, q)
    }

    /// Rejects `Ψ` whose upper exponent is not below `1 ∧ α`.
    pub fn validate(&self, alpha: T) -> Result<()> {
        if !self.p.is_finite() {
            return Err(Error::input("psi exponent must be finite"));
        }
        let (g1, g2) = self.scaling_exponents();
        let cap = min(T::one(), alpha);
        if g1 < T::zero() && self.kind == PsiKind::Power {
            return Err(Error::Model("psi power exponent must be nonnegative".into()));
        }
        if g2 >= cap {
            return Err(Error::Model(format!("psi exponent {g2} is not below 1 ∧ α = {cap}")));
        }
        Ok(())
    }

    pub fn eval(&self, v: T) -> T {
        match self.kind {
            PsiKind::ConstantOne => T::one(),
            PsiKind::Power => v.powf(self.p),
            PsiKind::PowerCap => max(T::one(), v.powf(self.p)),
        }
    }

    /// `Ψ₁(u) = ∫₁^u Ψ(v)/v dv` in closed form.
    pub fn psi1(&self, u: T) -> T {
        let q = self.effective_power();
        if u <= T::zero() {
            return T::neg_infinity();
        }
        if q == T::zero() {
            u.ln()
        } else {
            (u.powf(q) - T::one()) / q
        }
    }
}

/// Shape of a blow-up weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind<T> {
    ConstantOne,
    /// `Φ(r) = log(e + r)`.
    Log,
    /// `Φ(r) = 1 ∨ r^β`.
    Power { beta: T },
    /// `Φ(u) = 1 ∨ Ψ₁(u)`.
    Psi1 { psi: PsiKind, #[serde(default)] p: T },
}

/// A blow-up weight with its declared upper index `β̄` and truncation
/// length `A₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSpec<T> {
    pub kind: WeightKind<T>,
    pub beta_bar: T,
    pub a0: T,
}

impl<T: Real> WeightSpec<T> {
    /// Weight with its catalog index and `A₀ = ∞`.
    pub fn new(kind: WeightKind<T>) -> Self {
        let beta_bar = match kind {
            WeightKind::ConstantOne | WeightKind::Log => T::zero(),
            WeightKind::Power { beta } => beta,
            WeightKind::Psi1 { psi, p } => PsiSpec { kind: psi, p }.effective_power(),
        };
        Self { kind, beta_bar, a0: T::infinity() }
    }

    pub fn constant() -> Self {
        Self::new(WeightKind::ConstantOne)
    }

    pub fn log() -> Self {
        Self::new(WeightKind::Log)
    }

    pub fn power(beta: T) -> Self {
        Self::new(WeightKind::Power { beta })
    }

    pub fn with_a0(mut self, a0: T) -> Self {
        self.a0 = a0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightKind::Power { beta } = self.kind {
            if !(beta >= T::zero() && beta.is_finite()) {
                return Err(Error::input("power weight exponent must be finite and nonnegative"));
            }
        }
        if !(self.beta_bar >= T::zero()) {
            return Err(Error::input("beta_bar must be nonnegative"));
        }
        if !(self.a0 > T::zero()) {
            return Err(Error::input("A0 must be positive"));
        }
        Ok(())
    }

    /// `Φ(r)` for `r ≥ 0`; `r = ∞` returns the limit at infinity.
    pub fn eval(&self, r: T) -> Result<T> {
        if r.is_nan() || r < T::zero() {
            return Err(Error::input(format!("weight argument {r} must be nonnegative")));
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: T) -> T {
        match self.kind {
            WeightKind::ConstantOne => T::one(),
            WeightKind::Log => (T::E() + r).ln(),
            WeightKind::Power { beta } => {
                if beta == T::zero() {
                    T::one()
                } else {
                    max(T::one(), r.powf(beta))
                }
            }
            WeightKind::Psi1 { psi, p } => {
                if r == T::zero() {
                    T::one()
                } else {
                    max(T::one(), PsiSpec { kind: psi, p }.psi1(r))
                }
            }
        }
    }
}

/// `Ψ ↦ 1 ∨ Ψ₁`.
pub fn psi1<T: Real>(psi: PsiSpec<T>) -> WeightSpec<T> {
    WeightSpec::new(WeightKind::Psi1 { psi: psi.kind, p: psi.p })
}

/// Argument of `Φ` in the kernel and bound forms:
/// `(ℓ ∧ A)^2 / ((a ∧ A)(b ∧ A))`.
pub fn blowup_argument<T: Real>(ell: T, a: T, b: T, a0: T) -> T {
    let l = min(ell, a0);
    l * l / (min(a, a0) * min(b, a0))
}

/// Largest pairwise log-slope of `Φ` over a grid of ratios.
pub fn upper_index_estimate<T: Real>(w: &WeightSpec<T>, grid: &[T]) -> Result<T> {
    if grid.len() < 10 {
        return Err(Error::input("grid needs at least 10 points"));
    }
    if grid.iter().any(|&g| !(g > T::zero() && g.is_finite())) {
        return Err(Error::input("grid points must be positive and finite"));
    }
    let lo = grid.iter().fold(T::infinity(), |a, &b| min(a, b));
    let hi = grid.iter().fold(T::zero(), |a, &b| max(a, b));
    if (hi / lo).log10() < lit::<T>(4.0 - 1e-9) {
        return Err(Error::input("grid must span at least four decades"));
    }
    let vals: Vec<(T, T)> = grid.iter().map(|&r| (r.ln(), w.eval_unchecked(r).ln())).collect();
    let mut best = T::zero();
    for (i, &(lr, lp)) in vals.iter().enumerate() {
        for &(ls, lq) in &vals[..i] {
            if lr != ls {
                best = max(best, (lp - lq) / (lr - ls));
            }
        }
    }
    Ok(best)
}

/// `β₁ = ((γ ∧ α) + β̄)/2`; requires `β̄ < γ ∧ α`.
pub fn beta1<T: Real>(beta_bar: T, gamma: T, alpha: T) -> Result<T> {
    let cap = min(gamma, alpha);
    if !(beta_bar >= T::zero()) {
        return Err(Error::input("beta_bar must be nonnegative"));
    }
    if beta_bar >= cap {
        return Err(Error::Model(format!("beta_bar {beta_bar} is not below γ ∧ α = {cap}")));
    }
    Ok((cap + beta_bar) / lit(2.0))
}

/// Log-spaced grid of `n` points on `[lo, hi]`.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    let m = lit::<T>((n.max(2) - 1) as f64);
    (0..n).map(|i| (a + (b - a) * lit::<T>(i as f64) / m).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        assert_eq!(WeightSpec::<f64>::log().eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(WeightSpec::power(0.5).eval(4.0).unwrap(), 2.0);
        assert_eq!(WeightSpec::<f64>::constant().eval(1e9).unwrap(), 1.0);
        assert!(WeightSpec::<f64>::log().eval(-1.0).is_err());
        assert!(WeightSpec::<f64>::log().eval(f64::INFINITY).unwrap().is_infinite());
        assert_eq!(WeightSpec::<f32>::power(0.5).eval(4.0).unwrap(), 2.0);
    }

    #[test]
    fn psi1_examples() {
        let w = psi1(PsiSpec::<f64>::constant());
        assert_relative_eq!(w.eval(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-14);
        let w = psi1(PsiSpec::power(0.5));
        assert_relative_eq!(w.eval(4.0).unwrap(), 2.0, max_relative = 1e-14);
        let w = psi1(PsiSpec::power_cap(-0.3));
        assert_relative_eq!(w.eval(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(w.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn upper_index_examples() {
        let grid = log_grid(1.0, 1e6, 60);
        let b: f64 = upper_index_estimate(&WeightSpec::power(0.5), &grid).unwrap();
        assert!((b - 0.5).abs() < 1e-6);
        assert_eq!(upper_index_estimate(&WeightSpec::<f64>::constant(), &grid).unwrap(), 0.0);
        let l = upper_index_estimate(&WeightSpec::<f64>::log(), &grid).unwrap();
        assert!((0.0..=0.37).contains(&l), "{l}");
        // Moving the grid to larger scales lowers the log slope.
        let mut prev = l;
        for k in 1..4 {
            let g = log_grid(10f64.powi(k), 10f64.powi(k + 6), 60);
            let v = upper_index_estimate(&WeightSpec::<f64>::log(), &g).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(upper_index_estimate(&WeightSpec::<f64>::log(), &log_grid(1.0, 100.0, 20)).is_err());
        assert!(upper_index_estimate(&WeightSpec::<f64>::log(), &[1.0, 1e6]).is_err());
    }

    #[test]
    fn beta1_examples() {
        assert_eq!(beta1(0.5, 1.0, 1.0).unwrap(), 0.75);
        assert_eq!(beta1(0.0, 1.0, 0.5).unwrap(), 0.25);
        assert!(matches!(beta1(1.0, 1.0, 1.0), Err(Error::Model(_))));
    }

    #[test]
    fn psi_catalog_within_scaling_bound() {
        // The floor at 1 puts a kink with log-slope 1 + p where Ψ₁ crosses 1,
        // so the index is read off at scales where Ψ₁ is in its power regime.
        let grid = log_grid(1e9, 1e15, 80);
        for alpha in [0.5, 1.0, 1.5] {
            for psi in [PsiSpec::constant(), PsiSpec::power_cap(alpha / 8.0), PsiSpec::power_cap(alpha / 2.0)] {
                psi.validate(alpha).unwrap();
                let est = upper_index_estimate(&psi1(psi), &grid).unwrap();
                assert!(est <= psi.scaling_exponents().1 + 0.05, "{psi:?} {est}");
            }
        }
    }

    #[test]
    fn weight_kind_toml_shape() {
        let k: WeightKind<f64> = serde_json::from_str(r#"{"kind":"psi1","psi":"power_cap","p":0.5}"#).unwrap();
        assert_eq!(k, WeightKind::Psi1 { psi: PsiKind::PowerCap, p: 0.5 });
        let k: WeightKind<f64> = serde_json::from_str(r#"{"kind":"log"}"#).unwrap();
        assert_eq!(k, WeightKind::Log);
    }

    fn catalog() -> Vec<WeightSpec<f64>> {
        vec![
            WeightSpec::constant(),
            WeightSpec::log(),
            WeightSpec::power(0.25),
            psi1(PsiSpec::power_cap(0.25)),
            psi1(PsiSpec::constant()),
        ]
    }

    proptest! {
        #[test]
        fn weights_are_monotone_from_one(i in 0usize..5, a in 0.0f64..1e6, b in 0.0f64..1e6) {
            let w = &catalog()[i];
            prop_assert_eq!(w.eval(0.0).unwrap(), 1.0);
            let (s, r) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(w.eval(s).unwrap() <= w.eval(r).unwrap());
            prop_assert!(w.eval(s).unwrap() >= 1.0);
        }

        #[test]
        fn truncation_monotonicity(s in 1e-6f64..1e6, k in 1.0f64..1e6, a in 1e-6f64..1e6) {
            let r = s * k;
            prop_assert!((r.min(a)) / (s.min(a)) <= r / s * (1.0 + 1e-12));
        }

        #[test]
        fn monotone_scaling_fitted_constant(i in 0usize..5, seed in any::<u64>()) {
            use rand::Rng;
            let w = &catalog()[i];
            let b1 = beta1(w.beta_bar, 1.0, 1.0).unwrap();
            let fit = |lo: f64, hi: f64, seed: u64| {
                let mut rng = crate::rng::stream_rng(seed, 0);
                let mut c: f64 = 0.0;
                for _ in 0..2000 {
                    let r = (lo + (hi - lo) * rng.random::<f64>()).exp();
                    let s = (lo + (hi - lo) * rng.random::<f64>()).exp();
                    let q = w.eval(r).unwrap() / w.eval(s).unwrap();
                    c = c.max((q - 1.0) / (r / s).powf(b1));
                }
                c
            };
            let small = fit(-5.0, 5.0, seed);
            let large = fit(-20.0, 20.0, seed);
            prop_assert!(small.is_finite() && large.is_finite());
            prop_assert!(large <= 2.0 * small + 1.0);
        }
    }
}
