use std::collections::BTreeMap;

use bbhk_core::geometry::DomainSpec;
use bbhk_core::verify::{judge, run_suite, Case, Criterion, Family, Report, SuiteName, SuiteParams};
use bbhk_core::Error;
use proptest::prelude::*;

fn small_aikawa() -> SuiteParams {
    let mut p = SuiteParams::default();
    p.aikawa.domains = vec![DomainSpec::half_space(2)];
    p.aikawa.samples = 20_000;
    p
}

#[test]
fn same_seed_gives_identical_canonical_json() {
    let p = small_aikawa();
    let a = run_suite(SuiteName::Aikawa, &p, 11).unwrap();
    let b = run_suite(SuiteName::Aikawa, &p, 11).unwrap();
    assert_eq!(a.canonical().to_json(), b.canonical().to_json());
    assert_eq!(a.canonical().provenance.duration_s, 0.0);
}

#[test]
fn deserialized_report_rejudges_to_its_summary() {
    let r = run_suite(SuiteName::Aikawa, &small_aikawa(), 5).unwrap();
    let back: Report = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back.rejudge(), r.summary);
    assert_eq!(back, r);
}

#[test]
fn aikawa_half_plane_passes() {
    let r = run_suite(SuiteName::Aikawa, &small_aikawa(), 3).unwrap();
    assert!(r.pass(), "{:?}", r.failures());
    assert!(r.cases.iter().all(|c| c.bound > 0.0));
}

#[test]
fn plain_stable_kernel_fails_condition_a() {
    let mut p = SuiteParams::default();
    p.condition_a.families = vec![Family::PlainStable];
    p.condition_a.dims = vec![1];
    p.condition_a.alphas = vec![1.0];
    p.condition_a.pairs = 50;
    let r = run_suite(SuiteName::ConditionA, &p, 2).unwrap();
    assert!(!r.pass());
    assert!(r.summary.fitted_c > p.condition_a.cap.sqrt());
}

#[test]
fn suite_names_round_trip() {
    for n in SuiteName::ALL {
        assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
        assert_eq!(n.to_string().replace('_', "-").parse::<SuiteName>().unwrap(), n);
    }
    assert!(matches!("bogus".parse::<SuiteName>(), Err(Error::Config(_))));
}

#[test]
fn hk_rejects_targets_inside_the_truncation_scale() {
    let mut p = SuiteParams::default();
    let x = p.hk_two_sided.line[1].x[0];
    let eps = p.hk_two_sided.epsilon;
    p.hk_two_sided.line[1].targets.push(vec![x + 4.0 * eps]);
    assert!(matches!(run_suite(SuiteName::HkTwoSided, &p, 1), Err(Error::Config(_))));

    let mut p = SuiteParams::default();
    p.hk_two_sided.bandwidth = 0.3;
    assert!(matches!(run_suite(SuiteName::HkTwoSided, &p, 1), Err(Error::Config(_))));
}

#[test]
fn groups_without_criteria_fail() {
    let cases = vec![Case::new("a", BTreeMap::new(), 1.0, 0.0, 1.0)];
    let s = judge(&cases, &BTreeMap::new());
    assert!(!s.pass);
    let mut crit = BTreeMap::new();
    crit.insert("a".to_string(), Criterion::Relative { tol: 0.0 });
    crit.insert("b".to_string(), Criterion::Relative { tol: 0.0 });
    assert!(!judge(&cases, &crit).pass);
    crit.remove("b");
    assert!(judge(&cases, &crit).pass);
}

fn cases_from(ratios: &[f64], scale: f64) -> Vec<Case> {
    ratios.iter().map(|r| Case::new("g", BTreeMap::new(), r * scale, 0.0, 1.0)).collect()
}

proptest! {
    #[test]
    fn spread_verdict_ignores_overall_scale(
        ratios in prop::collection::vec(0.01f64..100.0, 1..30),
        scale in 1e-3f64..1e3,
        cap in 1.0f64..1e4,
    ) {
        let mut crit = BTreeMap::new();
        crit.insert("g".to_string(), Criterion::Spread { cap });
        let a = judge(&cases_from(&ratios, 1.0), &crit);
        let b = judge(&cases_from(&ratios, scale), &crit);
        let (sa, sb) = (a.groups[0].statistic, b.groups[0].statistic);
        prop_assert!((sa / sb - 1.0).abs() < 1e-9);
        if (sa / cap - 1.0).abs() > 1e-9 {
            prop_assert_eq!(a.pass, b.pass);
        }
        prop_assert!((a.fitted_c - a.groups[0].fitted_c).abs() < 1e-12);
    }

    #[test]
    fn summary_survives_json(ratios in prop::collection::vec(0.0f64..10.0, 0..20), lo in 0.0f64..1.0) {
        let mut crit = BTreeMap::new();
        crit.insert("g".to_string(), Criterion::Band { lo, hi: 5.0 });
        let s = judge(&cases_from(&ratios, 1.0), &crit);
        let text = serde_json::to_string(&s).unwrap();
        let back: bbhk_core::verify::Summary = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}
