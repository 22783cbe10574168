//! Two-sided heat-kernel bound form
//! `p̃(t,x,y) = t^{-d/α} ∧ t|x-y|^{-d-α} Φ((|x-y|∧A₀)²/((δ(x,t)∧A₀)(δ(y,t)∧A₀)))`
//! with `δ(x,t) = δ_D(x) ∨ t^{1/α}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, ScaleContext};
use crate::scalar::{dist, lit, max, min, Real};
use crate::weights::{blowup_argument, WeightSpec};

/// Which term of the minimum is selected by `|x-y|` against `t^{1/α}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    OnDiagonal,
    OffDiagonal,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::OnDiagonal => "on_diagonal",
            Regime::OffDiagonal => "off_diagonal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HKBoundValue<T> {
    pub p_tilde: T,
    pub regime: Regime,
    pub delta_xt: T,
    pub delta_yt: T,
}

/// Parameters shared by every evaluation of the bound form.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSpec<T> {
    pub dom: DomainSpec<T>,
    pub weight: WeightSpec<T>,
    pub alpha: T,
    /// Time horizon `T`; `None` means `R₀^α`.
    pub horizon: Option<T>,
}

impl<T: Real> BoundSpec<T> {
    pub fn new(dom: DomainSpec<T>, weight: WeightSpec<T>, alpha: T) -> Self {
        Self { dom, weight, alpha, horizon: None }
    }

    pub fn validate(&self) -> Result<()> {
        self.dom.validate()?;
        self.weight.validate()?;
        if !(self.alpha > T::zero() && self.alpha < lit(2.0)) {
            return Err(Error::input("alpha must lie in (0, 2)"));
        }
        if let Some(h) = self.horizon {
            if !(h > T::zero()) {
                return Err(Error::input("horizon must be positive"));
            }
        }
        Ok(())
    }

    /// `T ∨ R₀^α`.
    pub fn time_limit(&self) -> T {
        let r0a = self.dom.r0().powf(self.alpha);
        max(self.horizon.unwrap_or(r0a), r0a)
    }

    pub fn scale_context(&self, t: T) -> ScaleContext<T> {
        let mut ctx = ScaleContext::for_domain(&self.dom, self.alpha, t);
        if let Some(h) = self.horizon {
            ctx.horizon = h;
        }
        ctx
    }

    fn check_time(&self, t: T) -> Result<()> {
        if !(t > T::zero() && t < self.time_limit()) {
            return Err(Error::range(format!("time {t} outside (0, T ∨ R0^α)")));
        }
        Ok(())
    }

    /// Evaluates `p̃(t, x, y)`.
    pub fn eval(&self, t: T, x: &[T], y: &[T]) -> Result<HKBoundValue<T>> {
        self.validate()?;
        self.check_time(t)?;
        let d = self.dom.dim();
        let dx = delta_t(&self.dom, x, t, self.alpha)?;
        let dy = delta_t(&self.dom, y, t, self.alpha)?;
        let scale = t.powf(T::one() / self.alpha);
        let on = t.powf(-lit::<T>(d as f64) / self.alpha);
        let r = dist(x, y);
        let regime = if r <= scale { Regime::OnDiagonal } else { Regime::OffDiagonal };
        let p_tilde = if r == T::zero() {
            on
        } else {
            let arg = blowup_argument(r, dx, dy, self.weight.a0);
            let jump = t * r.powf(-(lit::<T>(d as f64) + self.alpha)) * self.weight.eval(arg)?;
            min(on, jump)
        };
        Ok(HKBoundValue { p_tilde, regime, delta_xt: dx, delta_yt: dy })
    }

    /// `t^{-d/α} ∧ t Ĵ(x(t), y(t))` with the time-scale points of the
    /// geometry module; comparable to [`BoundSpec::eval`].
    pub fn eval_point_selected(&self, t: T, x: &[T], y: &[T]) -> Result<T> {
        self.validate()?;
        self.check_time(t)?;
        let ctx = self.scale_context(t);
        let xt = self.dom.point_at_scale(x, &ctx)?;
        let yt = self.dom.point_at_scale(y, &ctx)?;
        let d = self.dom.dim();
        let on = t.powf(-lit::<T>(d as f64) / self.alpha);
        let r = dist(&xt, &yt);
        if r == T::zero() {
            return Ok(on);
        }
        let arg = blowup_argument(r, self.dom.signed_distance(&xt), self.dom.signed_distance(&yt), self.weight.a0);
        let jump = t * r.powf(-(lit::<T>(d as f64) + self.alpha)) * self.weight.eval(arg)?;
        Ok(min(on, jump))
    }
}

/// `δ_D(x) ∨ t^{1/α}` for `x` in the closure of `D`.
pub fn delta_t<T: Real>(dom: &DomainSpec<T>, x: &[T], t: T, alpha: T) -> Result<T> {
    dom.check_point(x)?;
    if !dom.contains_closure(x) {
        return Err(Error::domain("point lies outside the closed domain"));
    }
    if !(t > T::zero()) {
        return Err(Error::range("time must be positive"));
    }
    Ok(max(max(dom.signed_distance(x), T::zero()), t.powf(T::one() / alpha)))
}

/// Free-function form of [`BoundSpec::eval`] with `T = R₀^α`.
pub fn hk_bound<T: Real>(dom: &DomainSpec<T>, weight: &WeightSpec<T>, alpha: T, t: T, x: &[T], y: &[T]) -> Result<HKBoundValue<T>> {
    BoundSpec::new(dom.clone(), *weight, alpha).eval(t, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn delta_t_examples() {
        let hl = DomainSpec::half_line();
        assert_eq!(delta_t(&hl, &[0.1], 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(delta_t(&hl, &[5.0], 1.0, 1.0).unwrap(), 5.0);
        assert_relative_eq!(delta_t(&hl, &[0.0], 0.01, 0.5).unwrap(), 1e-4);
        assert!(delta_t(&hl, &[-1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn bound_examples() {
        let hl: DomainSpec<f64> = DomainSpec::half_line();
        let w = WeightSpec::constant();
        let v = hk_bound(&hl, &w, 1.0, 1.0, &[0.5], &[1.0]).unwrap();
        assert_eq!(v.p_tilde, 1.0);
        assert_eq!(v.regime, Regime::OnDiagonal);
        let v = hk_bound(&hl, &w, 1.0, 1.0, &[1.0], &[3.0]).unwrap();
        assert_relative_eq!(v.p_tilde, 0.25);
        assert_eq!(v.regime, Regime::OffDiagonal);
        let v = hk_bound(&hl, &WeightSpec::log(), 1.5, 0.3, &[0.0], &[0.0]).unwrap();
        assert!(v.p_tilde.is_finite());
        let ball = DomainSpec::ball(2, 1.0);
        assert!(matches!(hk_bound(&ball, &w, 1.0, 2.5, &[0.0, 0.0], &[0.5, 0.0]), Err(Error::Range(_))));
        assert!(matches!(hk_bound(&hl, &w, 1.0, 0.0, &[1.0], &[2.0]), Err(Error::Range(_))));
    }

    proptest! {
        #[test]
        fn bound_invariants(
            t in 1e-3f64..1e2, alpha in 0.2f64..1.9,
            x in (0.0f64..50.0, 0.0f64..50.0), y in (0.0f64..50.0, 0.0f64..50.0),
        ) {
            let spec = BoundSpec::new(DomainSpec::half_space(2), WeightSpec::log(), alpha);
            let (x, y) = ([x.0, x.1], [y.0, y.1]);
            let a = spec.eval(t, &x, &y).unwrap();
            let b = spec.eval(t, &y, &x).unwrap();
            prop_assert_eq!(a.p_tilde, b.p_tilde);
            prop_assert!(a.p_tilde > 0.0);
            prop_assert!(a.p_tilde <= t.powf(-2.0 / alpha) * (1.0 + 1e-12));
            prop_assert!(a.delta_xt >= t.powf(1.0 / alpha) * (1.0 - 1e-12));
        }
    }
}
