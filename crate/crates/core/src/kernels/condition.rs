//! Numerical check of the comparability `J(x,y) ≍ |x-y|^{-d-α} Φ(·)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::Kernel;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::rng::stream_rng;
use crate::scalar::{dist, lit, to_f64, Real};
use crate::stats::median;
use crate::weights::{blowup_argument, WeightSpec};

/// One sampled pair with the kernel value and its ratio to the weight form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRatio<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub value: T,
    pub error: T,
    /// `|x-y|^{-d-α} Φ(arg)`.
    pub bound: T,
    pub ratio: T,
}

/// Ratio statistics over the sampled pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionStats<T> {
    pub pairs: Vec<PairRatio<T>>,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    /// `max / min`.
    pub spread: f64,
    pub cap: f64,
    pub pass: bool,
    /// Pairs along the boundary approach from the pair with the largest
    /// weight argument: the shallower point's depth is shrunk by `10^{-3k}`,
    /// `k = 1..=8`.
    pub approach: Vec<PairRatio<T>>,
}

/// Deepest boundary distance available in `dom`.
fn max_depth<T: Real>(dom: &DomainSpec<T>) -> f64 {
    match *dom {
        DomainSpec::Ball { radius, .. } => to_f64(radius),
        DomainSpec::Box2d { side } => to_f64(side) / 2.0,
        _ => f64::INFINITY,
    }
}

fn unit_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// A point at boundary distance `delta`; `u` positions it along the boundary.
fn point_at_depth<T: Real, R: Rng>(dom: &DomainSpec<T>, delta: f64, u: f64, rng: &mut R) -> Vec<f64> {
    match *dom {
        DomainSpec::HalfLine => vec![delta],
        DomainSpec::HalfSpace { d } => {
            let mut p = vec![0.0; d];
            p[0] = u;
            p[d - 1] = delta;
            p
        }
        DomainSpec::Ball { d, radius } => unit_vector(d, rng).into_iter().map(|w| w * (to_f64(radius) - delta)).collect(),
        DomainSpec::ExteriorBall { d, radius } => {
            unit_vector(d, rng).into_iter().map(|w| w * (to_f64(radius) + delta)).collect()
        }
        DomainSpec::Box2d { side } => {
            let l = to_f64(side);
            let along = delta + (l - 2.0 * delta) * rng.random::<f64>();
            let p = match rng.random_range(0..4) {
                0 => [delta, along],
                1 => [l - delta, along],
                2 => [along, delta],
                _ => [along, l - delta],
            };
            p.to_vec()
        }
    }
}

/// Moves `x` along the inward normal so that `δ_D(x) = delta`.
fn with_depth<T: Real>(dom: &DomainSpec<T>, x: &[T], delta: T) -> Vec<T> {
    let mut p = x.to_vec();
    match *dom {
        DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => {
            let k = p.len() - 1;
            p[k] = delta;
        }
        DomainSpec::Ball { radius, .. } | DomainSpec::ExteriorBall { radius, .. } => {
            let n = crate::scalar::norm(x);
            let target = if matches!(dom, DomainSpec::Ball { .. }) { radius - delta } else { radius + delta };
            p.iter_mut().for_each(|v| *v = *v * target / n);
        }
        DomainSpec::Box2d { side } => {
            let (i, low) = (0..2)
                .flat_map(|i| [(i, true), (i, false)])
                .min_by(|a, b| {
                    let da = if a.1 { x[a.0] } else { side - x[a.0] };
                    let db = if b.1 { x[b.0] } else { side - x[b.0] };
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("two axes");
            p[i] = if low { delta } else { side - delta };
        }
    }
    p
}

/// Latin-hypercube pairs with `log δ(x)`, `log δ(y)` and the log tangential
/// offset each stratified over `delta_range`. Depths are clipped below the
/// deepest point of bounded domains.
pub fn sample_pairs<T: Real>(dom: &DomainSpec<T>, n: usize, seed: u64, delta_range: (f64, f64)) -> Result<Vec<(Vec<T>, Vec<T>)>> {
    dom.validate()?;
    let (lo, hi) = delta_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::input("delta range must satisfy 0 < lo < hi"));
    }
    let hi = hi.min(0.95 * max_depth(dom));
    if !(hi > lo) {
        return Err(Error::input("delta range does not fit inside the domain"));
    }
    let mut rng = stream_rng(seed, 0x5041_4952);
    let mut strata: Vec<Vec<usize>> = (0..3).map(|_| (0..n).collect()).collect();
    for s in &mut strata {
        s.shuffle(&mut rng);
    }
    let (la, lb) = (lo.ln(), hi.ln());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let q: Vec<f64> = strata
            .iter()
            .map(|s| (la + (lb - la) * (s[i] as f64 + rng.random::<f64>()) / n as f64).exp())
            .collect();
        let x = point_at_depth(dom, q[0], 0.0, &mut rng);
        let mut y = point_at_depth(dom, q[1], q[2], &mut rng);
        if x == y {
            y = point_at_depth(dom, q[1] * 1.5, q[2], &mut rng);
        }
        out.push((x.into_iter().map(lit).collect(), y.into_iter().map(lit).collect()));
    }
    Ok(out)
}

/// Samples `n_pairs` pairs over `δ ∈ [10⁻³, 10²]` and reports
/// `J(x,y)|x-y|^{d+α}/Φ((|x-y|∧A₀)²/((δ(x)∧A₀)(δ(y)∧A₀)))`, with `A₀`
/// taken from `weight`. The shallower point of the pair with the largest
/// argument is then pushed toward the boundary over 24 more decades. Passes iff the spread of all
/// ratios, `max/min`, is at most `cap`.
pub fn check_condition_a<T: Real>(
    kernel: &Kernel<T>,
    weight: &WeightSpec<T>,
    n_pairs: usize,
    seed: u64,
    cap: f64,
) -> Result<ConditionStats<T>> {
    if n_pairs < 50 {
        return Err(Error::input("condition (A) check needs at least 50 pairs"));
    }
    weight.validate()?;
    let dom = &kernel.spec.dom;
    let pairs = sample_pairs(dom, n_pairs, seed, (1e-3, 1e2))?;
    let exponent = lit::<T>(dom.dim() as f64) + kernel.alpha();
    let arg_of = |x: &[T], y: &[T]| blowup_argument(dist(x, y), dom.signed_distance(x), dom.signed_distance(y), weight.a0);
    let ratio_of = |x: Vec<T>, y: Vec<T>| -> Result<PairRatio<T>> {
        let v = kernel.eval(&x, &y)?;
        let bound = dist(&x, &y).powf(-exponent) * weight.eval(arg_of(&x, &y))?;
        Ok(PairRatio { ratio: v.value / bound, value: v.value, error: v.error, bound, x, y })
    };
    let ratios: Vec<PairRatio<T>> = pairs.into_par_iter().map(|(x, y)| ratio_of(x, y)).collect::<Result<_>>()?;
    let extreme = ratios
        .iter()
        .max_by(|a, b| arg_of(&a.x, &a.y).partial_cmp(&arg_of(&b.x, &b.y)).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least 50 pairs");
    let (mut px, mut py) = (extreme.x.clone(), extreme.y.clone());
    if dom.signed_distance(&py) < dom.signed_distance(&px) {
        std::mem::swap(&mut px, &mut py);
    }
    let d0 = dom.signed_distance(&px);
    let floor = match *dom {
        DomainSpec::HalfLine | DomainSpec::HalfSpace { .. } => T::zero(),
        _ => lit::<T>(1e-12) * lit(max_depth(dom).min(to_f64(dom.r0())).min(1e3)),
    };
    let approach: Vec<PairRatio<T>> = (1..=8)
        .into_par_iter()
        .map(|k| {
            let depth = crate::scalar::max(d0 * lit(10f64.powi(-3 * k)), floor);
            ratio_of(with_depth(dom, &px, depth), py.clone())
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = ratios.iter().map(|p| to_f64(p.ratio)).collect();
    let tail: Vec<f64> = approach.iter().map(|p| to_f64(p.ratio)).collect();
    let all = vals.iter().chain(&tail);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(0.0, f64::max);
    let spread = hi / lo;
    Ok(ConditionStats {
        min: lo,
        max: hi,
        median: median(&vals),
        spread,
        cap,
        pass: spread.is_finite() && spread <= cap,
        pairs: ratios,
        approach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelKind, KernelSpec};
    use approx::assert_relative_eq;

    #[test]
    fn comparison_self_ratio_is_one() {
        for dom in [DomainSpec::half_line(), DomainSpec::half_space(2), DomainSpec::ball(2, 1.0)] {
            let w = WeightSpec::log().with_a0(dom.a0());
            let k = Kernel::new(KernelSpec::comparison(dom, 1.0, w)).unwrap();
            let s = check_condition_a(&k, &w, 60, 3, 50.0).unwrap();
            assert_relative_eq!(s.min, 1.0, max_relative = 1e-12);
            assert_relative_eq!(s.max, 1.0, max_relative = 1e-12);
            assert!(s.pass);
        }
    }

    #[test]
    fn plain_stable_against_log_fails() {
        let k = Kernel::new(KernelSpec::new(KernelKind::PlainStable, DomainSpec::half_line(), 1.0)).unwrap();
        let s = check_condition_a(&k, &WeightSpec::log(), 200, 1, 50.0).unwrap();
        assert!(!s.pass, "{}", s.spread);
        assert!(s.min < 0.05 * s.max);
    }

    #[test]
    fn pairs_are_stratified_and_inside() {
        let dom = DomainSpec::box_2d(2.0);
        let pairs = sample_pairs(&dom, 100, 9, (1e-3, 1e2)).unwrap();
        assert_eq!(pairs.len(), 100);
        for (x, y) in &pairs {
            assert!(dom.contains(x) && dom.contains(y));
        }
        let hs: DomainSpec<f64> = DomainSpec::half_space(2);
        let pairs = sample_pairs(&hs, 100, 9, (1e-3, 1e2)).unwrap();
        let mut decades = [0usize; 5];
        for (x, _) in &pairs {
            decades[((x[1].log10() + 3.0).floor() as usize).min(4)] += 1;
        }
        assert!(decades.iter().all(|&c| c == 20), "{decades:?}");
        assert!(check_condition_a(
            &Kernel::new(KernelSpec::comparison(hs, 1.0, WeightSpec::constant())).unwrap(),
            &WeightSpec::constant(),
            10,
            0,
            50.0
        )
        .is_err());
    }
}
