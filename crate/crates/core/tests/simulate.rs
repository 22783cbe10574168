use bbhk_core::geometry::DomainSpec;
use bbhk_core::kernels::{neumann_norm, Kernel, KernelSpec};
use bbhk_core::quadrature::{integrate_adaptive, integrate_singular, QuadConfig, Singular};
use bbhk_core::rng::stream_rng;
use bbhk_core::simulate::*;
use bbhk_core::special::{stable_constant, unit_sphere_area};
use bbhk_core::weights::{PsiSpec, WeightKind, WeightSpec};
use bbhk_core::Error;

fn cauchy_tail(x: f64) -> f64 {
    0.5 - x.atan() / std::f64::consts::PI
}

#[test]
fn cauchy_increment_tail_and_sign() {
    let mut rng = stream_rng(11, 0);
    let n = 100_000;
    let (mut big, mut pos) = (0usize, 0usize);
    for _ in 0..n {
        let x = stable_increment(1.0, 1, 1.0, &mut rng)[0];
        big += usize::from(x.abs() > 1.0);
        pos += usize::from(x > 0.0);
    }
    let p = big as f64 / n as f64;
    assert!((p - 0.5).abs() < 0.01, "{p}");
    let sigma = (0.25 / n as f64).sqrt();
    assert!((pos as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn increments_are_self_similar() {
    for alpha in [0.7, 1.3, 1.8] {
        let mut rng = stream_rng(12, 0);
        let n = 20_000;
        let dt = 0.01f64;
        let small: Vec<f64> = (0..n).map(|_| stable_increment(alpha, 1, dt, &mut rng)[0] / dt.powf(1.0 / alpha)).collect();
        let unit: Vec<f64> = (0..n).map(|_| stable_increment(alpha, 1, 1.0, &mut rng)[0]).collect();
        let d = ks_statistic(small, unit);
        // 1% critical value of the two-sample test.
        assert!(d < 1.63 * (2.0 / n as f64).sqrt(), "{alpha} {d}");
    }
}

#[test]
fn ball_exit_radial_tail_matches_density() {
    let (alpha, r, x) = (1.0f64, 1.0, 0.5);
    // d = 1 exit density: (sin(πα/2)/π) ((r²-x²)/(z²-r²))^{α/2} / |x-z|.
    let f = |z: f64| {
        (std::f64::consts::FRAC_PI_2 * alpha).sin() / std::f64::consts::PI * ((r * r - x * x) / (z * z - r * r)).powf(alpha / 2.0)
            / (x - z).abs()
    };
    let rho = 2.0;
    let cfg = QuadConfig::default();
    let side = |sgn: f64| integrate_adaptive(|u: f64| if u == 0.0 { 0.0 } else { f(sgn * rho / u) * rho / (u * u) }, 0.0, 1.0, &cfg).unwrap().value;
    let oracle = side(1.0) + side(-1.0);
    let mut rng = stream_rng(13, 0);
    let n = 50_000;
    let mut far = 0usize;
    for _ in 0..n {
        let (z, _) = ball_exit_sample(alpha, &[x], &[0.0], r, &mut rng).unwrap();
        assert!(z[0].abs() > r);
        far += usize::from(z[0].abs() > rho);
    }
    let p = far as f64 / n as f64;
    let sigma = (oracle * (1.0 - oracle) / n as f64).sqrt();
    assert!((p - oracle).abs() < 3.0 * sigma, "{p} {oracle}");
    assert!(matches!(ball_exit_sample(alpha, &[1.5], &[0.0], r, &mut rng), Err(Error::Input(_))));
}

#[test]
fn centred_exit_is_rotationally_uniform() {
    let mut rng = stream_rng(14, 0);
    let bins = 8;
    let n = 40_000;
    let mut counts = vec![0usize; bins];
    for _ in 0..n {
        let (z, _) = ball_exit_sample(1.2, &[0.0, 0.0], &[0.0, 0.0], 1.0, &mut rng).unwrap();
        let a = z[1].atan2(z[0]) + std::f64::consts::PI;
        counts[((a / (2.0 * std::f64::consts::PI) * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let e = n as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 0.1% critical value of χ² with 7 degrees of freedom.
    assert!(chi2 < 24.3, "{chi2}");
}

#[test]
fn neumann_rejection_acceptance_matches_norm() {
    let dom = DomainSpec::box_2d(1.0);
    let alpha = 1.0;
    let z = [1.5, 0.5];
    let mut rng = stream_rng(15, 0);
    let n = 20_000;
    let mut props = 0usize;
    for _ in 0..n {
        let (y, k) = neumann_return_sample(&dom, alpha, &z, &mut rng, MAX_RETURN_PROPOSALS).unwrap();
        assert!(dom.contains(&y));
        props += k;
    }
    let dc = 0.5f64;
    let norm = neumann_norm(&dom, alpha, &z, &QuadConfig::default()).unwrap().value;
    let accept = norm * alpha * dc.powf(alpha) / (stable_constant(2, alpha) * unit_sphere_area(1));
    let observed = n as f64 / props as f64;
    let sigma = (accept * (1.0 - accept) / props as f64).sqrt();
    assert!((observed - accept).abs() < 4.0 * sigma, "{observed} {accept}");
}

#[test]
fn neumann_rejection_stall_is_reported() {
    let dom = DomainSpec::box_2d(1.0);
    let mut rng = stream_rng(16, 0);
    let far = neumann_return_sample(&dom, 1.0, &[1e4, 0.5], &mut rng, MAX_RETURN_PROPOSALS);
    assert!(far.is_ok());
    // Tiny α: Pareto radii overshoot the square almost surely.
    let r = neumann_return_sample(&dom, 1e-5, &[1.2, 0.5], &mut rng, MAX_RETURN_PROPOSALS);
    assert!(matches!(r, Err(Error::Sampler(_))), "{r:?}");
}

#[test]
fn half_line_return_law_matches_density() {
    for (psi, alpha) in [(PsiSpec::constant(), 1.0), (PsiSpec::power_cap(0.5), 1.0), (PsiSpec::power(0.2), 0.6)] {
        let k = Kernel::new(KernelSpec::resurrected(DomainSpec::half_line(), alpha, psi)).unwrap();
        let cfg = QuadConfig::default();
        let oracle = integrate_singular(|y: f64| if y == 0.0 { 0.0 } else { k.resurrection_density(&[-1.0], &[y]).unwrap() }, 0.0, 1.0, Singular::Left, &cfg)
            .unwrap()
            .value;
        let s = HalfSpaceReturn::new(alpha, psi.effective_power(), 1).unwrap();
        let mut rng = stream_rng(17, 0);
        let n = 50_000;
        let mut below = 0usize;
        for _ in 0..n {
            let mut z = [-1.0];
            s.sample_into(&mut z, &mut rng);
            below += usize::from(z[0] < 1.0);
        }
        let p = below as f64 / n as f64;
        let sigma = (oracle * (1.0 - oracle) / n as f64).sqrt();
        assert!((p - oracle).abs() < 4.0 * sigma, "{psi:?} {p} {oracle}");
    }
}

#[test]
fn runs_are_conservative_and_deterministic() {
    let models = [
        (Model::Neumann, DomainSpec::half_space(2), vec![0.3, 0.0]),
        (Model::Trace, DomainSpec::half_line(), vec![0.0]),
        (Model::Resurrected { psi: PsiSpec::power_cap(0.5) }, DomainSpec::half_space(2), vec![0.0, 0.1]),
        (Model::Neumann, DomainSpec::ball(2, 1.0), vec![0.9, 0.0]),
        (Model::Neumann, DomainSpec::box_2d(1.0), vec![0.0, 0.5]),
        (Model::GenericCtmc { weight: WeightKind::Log, epsilon: 0.05, cutoff: None }, DomainSpec::half_line(), vec![0.01]),
    ];
    for (model, dom, x0) in models {
        let cfg = SimConfig::new(model, dom.clone(), 1.0, 0.5, 2_000, 21);
        let a = simulate_paths(&cfg, &x0).unwrap();
        assert_eq!(a.n(), 2_000);
        assert_eq!(a.mass(&dom), 1.0);
        let b = simulate_paths(&cfg, &x0).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.resurrections, b.resurrections);
    }
}

#[test]
fn config_preconditions_are_enforced() {
    let base = SimConfig::new(Model::Neumann, DomainSpec::half_line(), 1.0, 1.0, 10, 0);
    assert!(base.clone().with_dt(0.01).validate().is_err());
    let ctmc = SimConfig::new(
        Model::GenericCtmc { weight: WeightKind::Log, epsilon: 0.2, cutoff: None },
        DomainSpec::half_line(),
        1.0,
        1.0,
        10,
        0,
    );
    assert!(ctmc.validate().is_err());
    let res = SimConfig::new(Model::Resurrected { psi: PsiSpec::constant() }, DomainSpec::ball(2, 1.0), 1.0, 0.5, 10, 0);
    assert!(matches!(res.validate(), Err(Error::Unsupported(_))));
    assert!(estimate_heat_kernel(&base, &[1.0], &[1.0], 0.5).is_err());
    assert!(simulate_paths(&base, &[-1.0]).is_err());
}

#[test]
fn deep_starts_rarely_return() {
    let t = 1.0f64;
    // Standard stable clock: the 0.05 level holds at δ = 10 t^{1/α}.
    let cfg = SimConfig::new(Model::Trace, DomainSpec::half_line(), 1.0, t, 20_000, 5);
    let ends = simulate_paths(&cfg, &[10.0]).unwrap();
    assert!(ends.resurrected_fraction() <= 0.05, "{}", ends.resurrected_fraction());
    // Unit jump constant: reflection bound 2 P(S_t < -δ) with S at speed 1/c.
    let cfg = SimConfig::new(Model::Resurrected { psi: PsiSpec::constant() }, DomainSpec::half_line(), 1.0, t, 20_000, 5);
    let ends = simulate_paths(&cfg, &[10.0]).unwrap();
    let c = stable_constant(1, 1.0f64);
    let bound = 2.0 * cauchy_tail(10.0 * c / t);
    assert!(ends.resurrected_fraction() <= bound, "{} {bound}", ends.resurrected_fraction());
}

#[test]
fn density_is_roughly_symmetric() {
    let cfg = SimConfig::new(Model::Trace, DomainSpec::half_line(), 1.0, 1.0, 40_000, 31);
    let h = 0.25;
    let a = estimate_heat_kernel(&cfg, &[1.0], &[2.0], h).unwrap();
    let b = estimate_heat_kernel(&cfg, &[2.0], &[1.0], h).unwrap();
    let sa = (a.upper - a.lower) / (2.0 * 1.96);
    let sb = (b.upper - b.lower) / (2.0 * 1.96);
    assert!((a.value - b.value).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a:?} {b:?}");
}

#[test]
fn partition_mass_is_at_most_one() {
    let cfg = SimConfig::new(Model::Neumann, DomainSpec::half_space(2), 1.0, 1.0, 20_000, 41);
    let ends = simulate_paths(&cfg, &[0.0, 0.5]).unwrap();
    let p = partition_mass(&ends, &[-20.0, 0.0], &[20.0, 20.0], 40).unwrap();
    assert!(p.total <= 1.0 + 3.0 * p.std_error);
    assert!(p.total > 0.9);
    let zero = density_at(&ends, &cfg.dom, &[1000.0, 1000.0], 0.25).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(zero.upper > 0.0);
}

#[test]
fn occupation_averages() {
    let cfg = SimConfig::new(Model::Neumann, DomainSpec::half_line(), 1.0, 1.0, 4_000, 51);
    let one = occupation_phi_average(&cfg, &[0.0], &WeightSpec::constant()).unwrap();
    assert_eq!(one.value, 1.0);
    let deep = occupation_phi_average(&cfg, &[10.0], &WeightSpec::log()).unwrap();
    assert!(deep.value >= 1.0 && deep.value <= 1.5, "{deep:?}");
    let edge = occupation_phi_average(&cfg, &[0.0], &WeightSpec::log()).unwrap();
    assert!(edge.value.is_finite() && edge.value > deep.value);
}
