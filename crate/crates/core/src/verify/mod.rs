//! Named verification suites and their machine-readable reports.
//!
//! A report is a case table plus, per group of cases, the criterion that
//! decides it. [`judge`] recomputes every group result and the pass flag
//! from those two pieces alone.

mod params;
mod suites;

pub use params::*;
pub use suites::{run_suite, NEUMANN_ANCHOR, TRACE_ANCHOR};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{linear_fit, median};

pub const SCHEMA_VERSION: u32 = 1;

/// The suite catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    ConditionA,
    TailTwoSided,
    Aikawa,
    KernelNeumann,
    KernelTrace,
    KernelResurrected,
    HkTwoSided,
    Occupation,
    TruncatedDecay,
    CrossModel,
}

impl SuiteName {
    pub const ALL: [SuiteName; 10] = [
        SuiteName::ConditionA,
        SuiteName::TailTwoSided,
        SuiteName::Aikawa,
        SuiteName::KernelNeumann,
        SuiteName::KernelTrace,
        SuiteName::KernelResurrected,
        SuiteName::HkTwoSided,
        SuiteName::Occupation,
        SuiteName::TruncatedDecay,
        SuiteName::CrossModel,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::ConditionA => "condition_a",
            SuiteName::TailTwoSided => "tail_two_sided",
            SuiteName::Aikawa => "aikawa",
            SuiteName::KernelNeumann => "kernel_neumann",
            SuiteName::KernelTrace => "kernel_trace",
            SuiteName::KernelResurrected => "kernel_resurrected",
            SuiteName::HkTwoSided => "hk_two_sided",
            SuiteName::Occupation => "occupation",
            SuiteName::TruncatedDecay => "truncated_decay",
            SuiteName::CrossModel => "cross_model",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == key)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// One row of the case table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    /// Sortable identifier, unique within the report.
    pub id: String,
    pub group: String,
    pub inputs: BTreeMap<String, String>,
    pub measured: f64,
    /// Quadrature error, standard error or interval half-width of
    /// `measured`.
    pub error: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Abscissa for fitted groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abscissa: Option<f64>,
    /// Monte Carlo hit count behind `measured`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hits: Option<u64>,
}

impl Case {
    pub fn new(group: impl Into<String>, inputs: BTreeMap<String, String>, measured: f64, error: f64, bound: f64) -> Self {
        Self {
            id: String::new(),
            group: group.into(),
            inputs,
            measured,
            error,
            bound,
            ratio: measured / bound,
            abscissa: None,
            hits: None,
        }
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.ratio = ratio;
        self
    }

    pub fn with_abscissa(mut self, x: f64) -> Self {
        self.abscissa = Some(x);
        self
    }

    pub fn with_hits(mut self, n: u64) -> Self {
        self.hits = Some(n);
        self
    }
}

/// Builds an `inputs` map from `key = value` pairs.
#[macro_export]
macro_rules! inputs {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = ::std::collections::BTreeMap::new();
        $( m.insert($k.to_string(), format!("{}", $v)); )*
        m
    }};
}

/// Formats a point for the `inputs` map.
pub fn fmt_point(p: &[f64]) -> String {
    let xs: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
    format!("({})", xs.join(" "))
}

/// How a group of cases is decided.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// Two-sided comparability: `max/min` of the ratios at most `cap`.
    Spread { cap: f64 },
    /// Every ratio in `[lo, hi]`.
    Band { lo: f64, hi: f64 },
    /// Every ratio within `tol` of 1.
    Relative { tol: f64 },
    /// Every ratio within `tol` of the group median.
    Constant { tol: f64 },
    /// Least-squares fit of `ln ratio` against the abscissa over cases with
    /// at least `min_hits` hits: negative slope, `R² ≥ min_r2`, three or more
    /// points.
    Decay { min_r2: f64, min_hits: u64 },
    /// Largest ratio within `tol` (relative) of the largest ratio of the
    /// `reference` group.
    MaxStable { reference: String, tol: f64 },
}

/// Verdict for one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub group: String,
    pub criterion: Criterion,
    pub n: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Centre `√(min·max)` of the log-ratio range.
    pub center: f64,
    /// Half-width `√(max/min)`: ratios lie in `center·[1/C, C]`.
    pub fitted_c: f64,
    /// The number compared against the criterion.
    pub statistic: f64,
    /// Fit slope for `Decay` groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Largest per-group `fitted_c` over the `Spread` groups.
    pub fitted_c: f64,
    pub pass: bool,
    pub groups: Vec<GroupResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Parameters that generated the case table.
    pub grid: serde_json::Value,
    /// Criterion per group.
    pub tolerances: BTreeMap<String, Criterion>,
    pub duration_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub suite: String,
    pub cases: Vec<Case>,
    pub summary: Summary,
    pub provenance: Provenance,
}

fn finite_or(x: f64, alt: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        alt
    }
}

fn judge_group(name: &str, crit: &Criterion, cases: &[&Case], all: &BTreeMap<String, Vec<&Case>>) -> GroupResult {
    let ratios: Vec<f64> = cases.iter().map(|c| c.ratio).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ok = !ratios.is_empty() && ratios.iter().all(|r| r.is_finite());
    let mut slope = None;
    let (statistic, pass) = match crit {
        Criterion::Spread { cap } => {
            let s = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            (s, ok && s <= *cap)
        }
        Criterion::Band { lo: a, hi: b } => {
            let worst = if lo < *a { lo } else { hi };
            (worst, ok && lo >= *a && hi <= *b)
        }
        Criterion::Relative { tol } => {
            let dev = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
            (dev, ok && dev <= *tol)
        }
        Criterion::Constant { tol } => {
            let m = median(&ratios);
            let dev = ratios.iter().map(|r| (r / m - 1.0).abs()).fold(0.0, f64::max);
            (dev, ok && m > 0.0 && dev <= *tol)
        }
        Criterion::Decay { min_r2, min_hits } => {
            let pts: Vec<(f64, f64)> = cases
                .iter()
                .filter(|c| c.hits.unwrap_or(0) >= *min_hits && c.ratio > 0.0)
                .filter_map(|c| c.abscissa.map(|x| (x, c.ratio.ln())))
                .collect();
            if pts.len() < 3 {
                (0.0, false)
            } else {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                let (b, _, r2) = linear_fit(&xs, &ys);
                slope = Some(b);
                (r2, b < 0.0 && r2 >= *min_r2)
            }
        }
        Criterion::MaxStable { reference, tol } => {
            let rmax = all
                .get(reference)
                .map(|cs| cs.iter().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max))
                .unwrap_or(f64::NAN);
            let dev = hi / rmax - 1.0;
            (dev, ok && dev.abs() <= *tol)
        }
    };
    let (center, fitted_c) = if lo > 0.0 && hi.is_finite() { ((lo * hi).sqrt(), (hi / lo).sqrt()) } else { (f64::NAN, f64::INFINITY) };
    GroupResult {
        group: name.to_string(),
        criterion: crit.clone(),
        n: cases.len(),
        min_ratio: finite_or(lo, 0.0),
        max_ratio: finite_or(hi, 0.0),
        center: finite_or(center, 0.0),
        fitted_c: finite_or(fitted_c, f64::MAX),
        statistic: finite_or(statistic, f64::MAX),
        slope,
        pass,
    }
}

/// Decides every group of `cases` with its criterion. Groups without a
/// criterion, and criteria without cases, fail.
pub fn judge(cases: &[Case], criteria: &BTreeMap<String, Criterion>) -> Summary {
    let mut by_group: BTreeMap<String, Vec<&Case>> = BTreeMap::new();
    for c in cases {
        by_group.entry(c.group.clone()).or_default().push(c);
    }
    let mut groups = Vec::new();
    let mut pass = !cases.is_empty();
    for name in by_group.keys().chain(criteria.keys().filter(|k| !by_group.contains_key(*k))) {
        let members = by_group.get(name).cloned().unwrap_or_default();
        let g = match criteria.get(name) {
            Some(crit) => judge_group(name, crit, &members, &by_group),
            None => {
                let mut g = judge_group(name, &Criterion::Relative { tol: 0.0 }, &members, &by_group);
                g.pass = false;
                g
            }
        };
        pass &= g.pass;
        groups.push(g);
    }
    let ratios: Vec<f64> = cases.iter().map(|c| c.ratio).collect();
    let fitted_c = groups
        .iter()
        .filter(|g| matches!(g.criterion, Criterion::Spread { .. }))
        .map(|g| g.fitted_c)
        .fold(1.0, f64::max);
    Summary {
        min_ratio: finite_or(ratios.iter().copied().fold(f64::INFINITY, f64::min), 0.0),
        max_ratio: finite_or(ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max), 0.0),
        median_ratio: finite_or(median(&ratios), 0.0),
        fitted_c,
        pass,
        groups,
    }
}

impl Report {
    /// Assembles a report: cases are sorted by `(group, id)` and renumbered.
    pub fn assemble(
        suite: SuiteName,
        mut cases: Vec<Case>,
        criteria: BTreeMap<String, Criterion>,
        seed: u64,
        grid: serde_json::Value,
        duration_s: f64,
    ) -> Self {
        cases.sort_by(|a, b| (&a.group, &a.id).cmp(&(&b.group, &b.id)));
        for (i, c) in cases.iter_mut().enumerate() {
            c.id = format!("{i:05}");
        }
        let summary = judge(&cases, &criteria);
        Report {
            schema_version: SCHEMA_VERSION,
            suite: suite.as_str().to_string(),
            cases,
            summary,
            provenance: Provenance { seed, grid, tolerances: criteria, duration_s },
        }
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    /// Recomputes the summary from the case table and tolerances.
    pub fn rejudge(&self) -> Summary {
        judge(&self.cases, &self.provenance.tolerances)
    }

    /// The report with wall time zeroed; equal configurations give equal
    /// canonical reports.
    pub fn canonical(&self) -> Report {
        let mut r = self.clone();
        r.provenance.duration_s = 0.0;
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Group results that failed, for diagnostics.
    pub fn failures(&self) -> Vec<&GroupResult> {
        self.summary.groups.iter().filter(|g| !g.pass).collect()
    }
}
