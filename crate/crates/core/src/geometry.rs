//! Catalog of state spaces with closed-form boundary distance, fatness
//! witnesses, boundary-strip volumes and the time-scale point selection.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::rng::{split_counts, stream_rng, DEFAULT_BATCHES};
use crate::scalar::{lit, max, min, norm, to_f64, Real};
use crate::special::unit_ball_volume;
use crate::stats::{McEstimate, RunningStats};

/// A domain `D` from the catalog.
///
/// Serialized as a TOML table such as `kind = "half_space"`, `d = 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec<T> {
    /// `(0, inf)` in one dimension.
    HalfLine,
    /// `{x : x_d > 0}`.
    HalfSpace { d: usize },
    /// `B(0, radius)`.
    Ball { d: usize, radius: T },
    /// `R^d` minus the closed ball `B(0, radius)`.
    ExteriorBall { d: usize, radius: T },
    /// The square `(0, side)^2`.
    Box2d { side: T },
}

impl<T: Real> DomainSpec<T> {
    pub fn half_line() -> Self {
        DomainSpec::HalfLine
    }

    pub fn half_space(d: usize) -> Self {
        DomainSpec::HalfSpace { d }
    }

    pub fn ball(d: usize, radius: T) -> Self {
        DomainSpec::Ball { d, radius }
    }

    pub fn exterior_ball(d: usize, radius: T) -> Self {
        DomainSpec::ExteriorBall { d, radius }
    }

    pub fn box_2d(side: T) -> Self {
        DomainSpec::Box2d { side }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainSpec::HalfLine => "half_line",
            DomainSpec::HalfSpace { .. } => "half_space",
            DomainSpec::Ball { .. } => "ball",
            DomainSpec::ExteriorBall { .. } => "exterior_ball",
            DomainSpec::Box2d { .. } => "box_2d",
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            DomainSpec::HalfLine => 1,
            DomainSpec::HalfSpace { d } | DomainSpec::Ball { d, .. } | DomainSpec::ExteriorBall { d, .. } => d,
            DomainSpec::Box2d { .. } => 2,
        }
    }

    /// Checks shape parameters.
    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        match *self {
            DomainSpec::Ball { radius, .. } | DomainSpec::ExteriorBall { radius, .. } => {
                if !(radius > T::zero() && radius.is_finite()) {
                    return Err(Error::input("radius must be positive and finite"));
                }
            }
            DomainSpec::Box2d { side } => {
                if !(side > T::zero() && side.is_finite()) {
                    return Err(Error::input("side must be positive and finite"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// True for the half-line and half-space entries.
    pub fn is_half_space(&self) -> bool {
        matches!(self, DomainSpec::HalfLine | DomainSpec::HalfSpace { .. })
    }

    pub fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "point has dimension {}, domain has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("point has non-finite coordinates"));
        }
        Ok(())
    }

    /// Distance to the boundary, positive inside `D` and negative outside.
    pub fn signed_distance(&self, x: &[T]) -> T {
        match *self {
            DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => x[x.len() - 1],
            DomainSpec::Ball { radius, .. } => radius - norm(x),
            DomainSpec::ExteriorBall { radius, .. } => norm(x) - radius,
            DomainSpec::Box2d { side } => {
                let inside = x.iter().fold(T::infinity(), |m, &v| min(m, min(v, side - v)));
                if inside >= T::zero() {
                    inside
                } else {
                    let out = x
                        .iter()
                        .map(|&v| max(T::zero(), max(-v, v - side)))
                        .fold(T::zero(), |acc, e| acc + e * e);
                    -out.sqrt()
                }
            }
        }
    }

    /// `delta_D(x)`: distance to `dD` for `x` in the closure, `0` outside.
    pub fn delta(&self, x: &[T]) -> Result<T> {
        self.check_point(x)?;
        Ok(max(T::zero(), self.signed_distance(x)))
    }

    /// Distance from a point of the complement to `dD`, `0` on the closure.
    pub fn delta_complement(&self, x: &[T]) -> Result<T> {
        self.check_point(x)?;
        Ok(max(T::zero(), -self.signed_distance(x)))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.signed_distance(x) > T::zero()
    }

    pub fn contains_closure(&self, x: &[T]) -> bool {
        self.signed_distance(x) >= T::zero()
    }

    /// Fatness constant `kappa` used for the catalog witnesses.
    pub fn kappa(&self) -> T {
        if self.is_half_space() {
            lit(0.5)
        } else {
            lit(0.25)
        }
    }

    /// Codimension of the boundary in the Assouad sense; `1` for the catalog.
    pub fn gamma(&self) -> T {
        T::one()
    }

    /// Diameter of `D`.
    pub fn diam(&self) -> T {
        match *self {
            DomainSpec::Ball { radius, .. } => radius + radius,
            DomainSpec::Box2d { side } => side * lit::<T>(2.0).sqrt(),
            _ => T::infinity(),
        }
    }

    /// Diameter of the complement.
    pub fn diam_complement(&self) -> T {
        match *self {
            DomainSpec::ExteriorBall { radius, .. } => radius + radius,
            _ => T::infinity(),
        }
    }

    /// Localization length `R_0`; the catalog uses `diam(D)`.
    pub fn r0(&self) -> T {
        self.diam()
    }

    /// Truncation length `A_0 = diam(D^c)`.
    pub fn a0(&self) -> T {
        self.diam_complement()
    }

    /// Returns `z` with `B(z, kappa r)` inside `D` and inside `B(x, r)`.
    pub fn fat_witness(&self, x: &[T], r: T) -> Result<Vec<T>> {
        self.check_point(x)?;
        if !(r > T::zero()) {
            return Err(Error::range("witness radius must be positive"));
        }
        if r >= self.r0() {
            return Err(Error::range(format!("witness radius {r} is not below R0 = {}", self.r0())));
        }
        if !self.contains_closure(x) {
            return Err(Error::domain("fat_witness needs a point of the closure"));
        }
        let kappa = self.kappa();
        if self.signed_distance(x) >= kappa * r {
            return Ok(x.to_vec());
        }
        let half = r / lit(2.0);
        let z = match *self {
            DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => {
                let mut z = x.to_vec();
                let last = z.len() - 1;
                z[last] = max(z[last], half);
                z
            }
            DomainSpec::Ball { .. } => {
                let n = norm(x);
                if n == T::zero() {
                    x.to_vec()
                } else {
                    let step = min(half, n);
                    x.iter().map(|&v| v - step * v / n).collect()
                }
            }
            DomainSpec::ExteriorBall { .. } => {
                let n = norm(x);
                x.iter().map(|&v| v + half * v / n).collect()
            }
            DomainSpec::Box2d { side } => {
                let q = r / lit(4.0);
                x.iter().map(|&v| min(max(v, q), side - q)).collect()
            }
        };
        Ok(z)
    }

    /// Parameter intervals `[t0, t1)` with `t0 >= 0` on which
    /// `origin + t dir` lies in `{y in D : delta_D(y) > margin}`.
    /// `dir` need not be normalized; lengths are in units of `|dir|`.
    pub fn ray_segments(&self, origin: &[T], dir: &[T], margin: T) -> Vec<(T, T)> {
        let zero = T::zero();
        let inf = T::infinity();
        let clip = |a: T, b: T| -> Option<(T, T)> {
            let a = max(a, zero);
            if b > a {
                Some((a, b))
            } else {
                None
            }
        };
        match *self {
            DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => {
                let k = origin.len() - 1;
                let (o, v) = (origin[k] - margin, dir[k]);
                let seg = if v > zero {
                    clip(-o / v, inf)
                } else if v < zero {
                    clip(zero, -o / v)
                } else if o > zero {
                    Some((zero, inf))
                } else {
                    None
                };
                seg.into_iter().collect()
            }
            DomainSpec::Ball { radius, .. } => {
                let rr = radius - margin;
                if rr <= zero {
                    return vec![];
                }
                match sphere_hits(origin, dir, rr) {
                    Some((t0, t1)) => clip(t0, t1).into_iter().collect(),
                    None => vec![],
                }
            }
            DomainSpec::ExteriorBall { radius, .. } => {
                let rr = radius + margin;
                match sphere_hits(origin, dir, rr) {
                    Some((t0, t1)) => [clip(zero, t0), clip(t1, inf)].into_iter().flatten().collect(),
                    None => vec![(zero, inf)],
                }
            }
            DomainSpec::Box2d { side } => {
                let (lo, hi) = (margin, side - margin);
                if hi <= lo {
                    return vec![];
                }
                let (mut a, mut b) = (zero, inf);
                for (&o, &v) in origin.iter().zip(dir) {
                    if v == zero {
                        if o <= lo || o >= hi {
                            return vec![];
                        }
                    } else {
                        let (t0, t1) = ((lo - o) / v, (hi - o) / v);
                        a = max(a, min(t0, t1));
                        b = min(b, max(t0, t1));
                    }
                }
                clip(a, b).into_iter().collect()
            }
        }
    }

    /// Exact `m_d(B(x, r) cap D)` for the half-space family and for balls
    /// lying inside `D`; `None` otherwise.
    pub fn ball_volume_exact(&self, x: &[T], r: T) -> Option<T> {
        let d = self.dim();
        let full = unit_ball_volume(d) * to_f64(r).powi(d as i32);
        let sd = to_f64(self.signed_distance(x));
        let rf = to_f64(r);
        if sd >= rf {
            return Some(lit(full));
        }
        if self.is_half_space() {
            if sd <= -rf {
                return Some(T::zero());
            }
            // Cap of height r - |a| cut off by the hyperplane at signed height a.
            let cap = |h: f64| -> f64 {
                let arg = ((2.0 * rf * h - h * h) / (rf * rf)).clamp(0.0, 1.0);
                0.5 * full * beta_reg((d as f64 + 1.0) / 2.0, 0.5, arg)
            };
            let v = if sd >= 0.0 { full - cap(rf - sd) } else { cap(rf + sd) };
            return Some(lit(v));
        }
        None
    }

    /// Uniform sample from a rectangle around `x`, rejected to `B(x, r)`.
    fn sample_ball<R: Rng>(x: &[f64], r: f64, rng: &mut R, out: &mut [f64]) {
        loop {
            let mut s = 0.0;
            for (o, &c) in out.iter_mut().zip(x) {
                let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                s += u * u;
                *o = c + r * u;
            }
            if s < 1.0 {
                return;
            }
        }
    }

    fn signed_distance_f64(&self, y: &[f64]) -> f64 {
        let yt: Vec<T> = y.iter().map(|&v| lit(v)).collect();
        to_f64(self.signed_distance(&yt))
    }

    /// Monte Carlo estimate of `m_d({y in B(x, r) cap D : delta_D(y) < s})`
    /// by rejection from the bounding box of `B(x, r)`.
    pub fn strip_volume_mc(&self, x: &[T], r: T, s: T, n: usize, seed: u64) -> Result<McEstimate> {
        self.check_point(x)?;
        if n < 1000 {
            return Err(Error::input("strip_volume_mc needs n >= 1000"));
        }
        if !(r > T::zero()) || s < T::zero() {
            return Err(Error::input("radius must be positive and strip width nonnegative"));
        }
        let d = self.dim();
        let xf: Vec<f64> = x.iter().map(|&v| to_f64(v)).collect();
        let (rf, sf) = (to_f64(r), to_f64(s));
        let box_vol = (2.0 * rf).powi(d as i32);
        let counts = split_counts(n, DEFAULT_BATCHES);
        let parts: Vec<RunningStats> = counts
            .par_iter()
            .enumerate()
            .map(|(b, &m)| {
                let mut rng = stream_rng(seed, b as u64);
                let mut st = RunningStats::new();
                let mut y = vec![0.0; d];
                for _ in 0..m {
                    let mut s2 = 0.0;
                    for (o, &c) in y.iter_mut().zip(&xf) {
                        let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                        s2 += u * u;
                        *o = c + rf * u;
                    }
                    let sd = self.signed_distance_f64(&y);
                    let hit = s2 < 1.0 && sd > 0.0 && sd < sf;
                    st.push(if hit { box_vol } else { 0.0 });
                }
                st
            })
            .collect();
        let mut all = RunningStats::new();
        parts.iter().for_each(|p| all.merge(p));
        Ok(McEstimate::from_parts(all.mean, all.std_error(), all.n))
    }

    /// Monte Carlo estimate of `m_d(B(x, r) cap D)`.
    pub fn ball_volume_mc(&self, x: &[T], r: T, n: usize, seed: u64) -> Result<McEstimate> {
        self.strip_volume_mc(x, r, T::infinity(), n, seed)
    }

    /// Time-scale point `x(t)`: `x` itself when it is already far enough from
    /// the boundary, otherwise a fatness witness at scale
    /// `(1 ∧ R0^α/T) t^{1/α}`.
    pub fn point_at_scale(&self, x: &[T], ctx: &ScaleContext<T>) -> Result<Vec<T>> {
        ctx.validate()?;
        self.check_point(x)?;
        let ell = ctx.length_scale();
        if !(ctx.t < ctx.time_limit()) {
            return Err(Error::range(format!("time {} outside (0, T ∨ R0^α)", ctx.t)));
        }
        if self.signed_distance(x) >= ctx.kappa * ell {
            return Ok(x.to_vec());
        }
        self.fat_witness(x, ell)
    }

    /// Samples a uniform point of `B(x, r)` in `f64`, used by shell-free
    /// Monte Carlo callers.
    pub fn sample_uniform_ball<R: Rng>(x: &[f64], r: f64, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        Self::sample_ball(x, r, rng, &mut out);
        out
    }
}

/// Parameters of the time-scale point selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleContext<T> {
    pub alpha: T,
    pub t: T,
    pub kappa: T,
    pub r0: T,
    pub horizon: T,
}

impl<T: Real> ScaleContext<T> {
    /// Context with the catalog `kappa`, `R0` of `dom` and `T = R0^α`.
    pub fn for_domain(dom: &DomainSpec<T>, alpha: T, t: T) -> Self {
        let r0 = dom.r0();
        Self {
            alpha,
            t,
            kappa: dom.kappa(),
            r0,
            horizon: r0.powf(alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < lit(2.0)) {
            return Err(Error::input("alpha must lie in (0, 2)"));
        }
        if !(self.kappa > T::zero() && self.kappa < T::one()) {
            return Err(Error::input("kappa must lie in (0, 1)"));
        }
        if !(self.t > T::zero() && self.r0 > T::zero() && self.horizon > T::zero()) {
            return Err(Error::input("times and lengths must be positive"));
        }
        Ok(())
    }

    /// `T ∨ R0^α`.
    pub fn time_limit(&self) -> T {
        max(self.horizon, self.r0.powf(self.alpha))
    }

    /// `(1 ∧ R0^α/T) t^{1/α}`.
    pub fn length_scale(&self) -> T {
        let factor = if self.r0.is_infinite() {
            T::one()
        } else {
            min(T::one(), self.r0.powf(self.alpha) / self.horizon)
        };
        factor * self.t.powf(T::one() / self.alpha)
    }
}

/// Entry and exit parameters of the line `o + t v` through the sphere of
/// radius `rr` centred at the origin.
fn sphere_hits<T: Real>(o: &[T], v: &[T], rr: T) -> Option<(T, T)> {
    let a = v.iter().fold(T::zero(), |s, &c| s + c * c);
    let b = o.iter().zip(v).fold(T::zero(), |s, (&p, &q)| s + p * q);
    let c = o.iter().fold(T::zero(), |s, &p| s + p * p) - rr * rr;
    let disc = b * b - a * c;
    if a == T::zero() || disc <= T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / a, (-b + sq) / a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn catalog() -> Vec<DomainSpec<f64>> {
        vec![
            DomainSpec::half_line(),
            DomainSpec::half_space(2),
            DomainSpec::half_space(3),
            DomainSpec::ball(2, 1.0),
            DomainSpec::exterior_ball(2, 1.0),
            DomainSpec::box_2d(1.0),
        ]
    }

    #[test]
    fn delta_examples() {
        assert_eq!(DomainSpec::half_space(2).delta(&[3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(DomainSpec::exterior_ball(2, 1.0).delta(&[2.0, 0.0]).unwrap(), 1.0);
        assert_eq!(DomainSpec::half_line().delta(&[0.25]).unwrap(), 0.25);
        assert_eq!(DomainSpec::half_line().delta(&[-0.25]).unwrap(), 0.0);
        assert_eq!(DomainSpec::half_line().delta_complement(&[-0.25]).unwrap(), 0.25);
        assert!(matches!(DomainSpec::half_space(2).delta(&[1.0]), Err(Error::Input(_))));
    }

    #[test]
    fn box_distance_inside_and_outside() {
        let b = DomainSpec::box_2d(1.0);
        assert_relative_eq!(b.delta(&[0.2, 0.5]).unwrap(), 0.2);
        assert_relative_eq!(b.delta_complement(&[2.0, 2.0]).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn metadata() {
        let hs = DomainSpec::<f64>::half_space(2);
        assert_eq!(hs.kappa(), 0.5);
        assert!(hs.r0().is_infinite() && hs.a0().is_infinite());
        assert_eq!(DomainSpec::ball(2, 1.0).r0(), 2.0);
        assert_eq!(DomainSpec::exterior_ball(2, 1.5).a0(), 3.0);
        assert_eq!(DomainSpec::<f64>::half_line().gamma(), 1.0);
    }

    #[test]
    fn witness_examples() {
        assert_eq!(DomainSpec::half_space(2).fat_witness(&[0.0, 0.0], 1.0).unwrap(), vec![0.0, 0.5]);
        assert_eq!(DomainSpec::half_line().fat_witness(&[0.0], 1.0).unwrap(), vec![0.5]);
        let z = DomainSpec::ball(2, 1.0).fat_witness(&[1.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(z[0], 0.75);
        assert_relative_eq!(z[1], 0.0);
        assert!(matches!(DomainSpec::ball(2, 1.0).fat_witness(&[0.0, 0.0], 2.0), Err(Error::Range(_))));
    }

    #[test]
    fn ray_segments_cover_domain() {
        let b = DomainSpec::ball(2, 1.0);
        let segs = b.ray_segments(&[0.0, 0.0], &[1.0, 0.0], 0.0);
        assert_eq!(segs, vec![(0.0, 1.0)]);
        let e = DomainSpec::exterior_ball(2, 1.0);
        let segs = e.ray_segments(&[-3.0, 0.0], &[1.0, 0.0], 0.0);
        assert_eq!(segs.len(), 2);
        assert_relative_eq!(segs[0].1, 2.0);
        assert_relative_eq!(segs[1].0, 4.0);
        let hs = DomainSpec::half_space(2);
        assert_eq!(hs.ray_segments(&[0.0, -1.0], &[0.0, 1.0], 0.0), vec![(1.0, f64::INFINITY)]);
    }

    #[test]
    fn half_space_ball_volume() {
        let hs = DomainSpec::half_space(2);
        assert_relative_eq!(hs.ball_volume_exact(&[0.0, 0.0], 1.0).unwrap(), std::f64::consts::PI / 2.0, max_relative = 1e-12);
        let hl = DomainSpec::half_line();
        assert_relative_eq!(hl.ball_volume_exact(&[0.25], 1.0).unwrap(), 1.25, max_relative = 1e-12);
        let h3 = DomainSpec::half_space(3);
        let v = h3.ball_volume_exact(&[0.0, 0.0, 0.5], 1.0).unwrap();
        // Cap of height 1/2: pi h^2 (3 - h)/3.
        let cap = std::f64::consts::PI * 0.25 * 2.5 / 3.0;
        assert_relative_eq!(v, 4.0 * std::f64::consts::PI / 3.0 - cap, max_relative = 1e-10);
    }

    #[test]
    fn strip_volume_circular_segment() {
        let hs = DomainSpec::half_space(2);
        let est = hs.strip_volume_mc(&[0.0, 0.0], 1.0, 0.1, 1_000_000, 11).unwrap();
        assert!((est.value - 0.199_666_164_872_221_8).abs() < 0.002, "{est:?}");
        let full = hs.strip_volume_mc(&[0.0, 0.0], 1.0, 5.0, 100_000, 3).unwrap();
        let all = hs.ball_volume_mc(&[0.0, 0.0], 1.0, 100_000, 3).unwrap();
        assert_eq!(full.value, all.value);
        let hl = DomainSpec::half_line();
        assert_eq!(hl.strip_volume_mc(&[1.0], 0.5, 0.0, 1000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn point_at_scale_examples() {
        let hs = DomainSpec::half_space(2);
        let ctx = ScaleContext::for_domain(&hs, 1.0, 1.0);
        assert_eq!(hs.point_at_scale(&[0.0, 5.0], &ctx).unwrap(), vec![0.0, 5.0]);
        assert_eq!(hs.point_at_scale(&[0.0, 0.0], &ctx).unwrap(), vec![0.0, 0.5]);
        let ball = DomainSpec::ball(2, 1.0);
        let ctx = ScaleContext::for_domain(&ball, 1.0, 3.0);
        assert!(matches!(ball.point_at_scale(&[0.0, 0.0], &ctx), Err(Error::Range(_))));
    }

    #[test]
    fn toml_shape() {
        let d: DomainSpec<f64> = serde_json::from_str(r#"{"kind":"half_space","d":2}"#).unwrap();
        assert_eq!(d, DomainSpec::half_space(2));
        let b: DomainSpec<f64> = serde_json::from_str(r#"{"kind":"ball","d":2,"radius":1.0}"#).unwrap();
        assert_eq!(b, DomainSpec::ball(2, 1.0));
    }

    fn point_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, d)
    }

    proptest! {
        #[test]
        fn delta_is_one_lipschitz(i in 0usize..6, seed in any::<u64>()) {
            let dom = &catalog()[i];
            let d = dom.dim();
            let mut rng = stream_rng(seed, 0);
            for _ in 0..200 {
                let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
                let y: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
                let dd = (dom.delta(&x).unwrap() - dom.delta(&y).unwrap()).abs();
                prop_assert!(dd <= crate::scalar::dist(&x, &y) + 1e-12);
                let sd = (dom.signed_distance(&x) - dom.signed_distance(&y)).abs();
                prop_assert!(sd <= crate::scalar::dist(&x, &y) + 1e-12);
            }
        }

        #[test]
        fn witness_ball_is_contained(i in 0usize..6, x in point_strategy(3), rf in 0.01f64..0.99, seed in any::<u64>()) {
            let dom = &catalog()[i];
            let d = dom.dim();
            let mut x: Vec<f64> = x[..d].to_vec();
            // Project onto the closure.
            if !dom.contains_closure(&x) {
                x = match dom {
                    DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => { let mut y = x.clone(); y[d - 1] = -y[d - 1]; y }
                    DomainSpec::Ball { .. } => x.iter().map(|v| v / (norm(&x) + 1.0)).collect(),
                    DomainSpec::ExteriorBall { .. } => { let n = norm(&x).max(1e-9); x.iter().map(|v| v / n * 1.5).collect() }
                    DomainSpec::Box2d { .. } => x.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                };
            }
            let r = if dom.r0().is_finite() { rf * dom.r0() } else { rf * 4.0 };
            let z = dom.fat_witness(&x, r).unwrap();
            let kr = dom.kappa() * r;
            let mut rng = stream_rng(seed, 1);
            for _ in 0..1000 {
                let p = DomainSpec::<f64>::sample_uniform_ball(&z, kr, &mut rng);
                prop_assert!(dom.contains(&p));
                prop_assert!(crate::scalar::dist(&p, &x) < r);
            }
        }

        #[test]
        fn point_at_scale_satisfies_both_inequalities(xd in 0.0f64..3.0, t in 0.01f64..5.0, alpha in 0.2f64..1.9) {
            let hs = DomainSpec::half_space(2);
            let x = [0.3, xd];
            let ctx = ScaleContext::for_domain(&hs, alpha, t);
            let z = hs.point_at_scale(&x, &ctx).unwrap();
            let ell = t.powf(1.0 / alpha);
            prop_assert!(crate::scalar::dist(&z, &x) < ell);
            prop_assert!(hs.delta(&z).unwrap() >= xd.max(0.5 * ell) - 1e-12);
        }
    }
}
