//! Suite parameters. Every field has a default, so a config only names
//! what it changes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::kernels::{KernelKind, KernelSpec};
use crate::weights::{psi1, PsiSpec, WeightKind, WeightSpec};

/// Kernel family checked against its weight form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Comparison kernel against its own weight (`Φ = log`).
    Comparison,
    /// Plain stable kernel against `Φ = log`; not comparable.
    PlainStable,
    /// Neumann kernel against `Φ = log`.
    Neumann,
    /// Trace kernel against `Φ(r) = 1 ∨ r^{α/2}`.
    Trace,
    /// Resurrected kernels against `Ψ₁`.
    ResurrectedConstant,
    ResurrectedPowerCapEighth,
    ResurrectedPowerCapHalf,
}

impl Family {
    pub const ADMISSIBLE: [Family; 6] = [
        Family::Comparison,
        Family::Neumann,
        Family::Trace,
        Family::ResurrectedConstant,
        Family::ResurrectedPowerCapEighth,
        Family::ResurrectedPowerCapHalf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Comparison => "comparison",
            Family::PlainStable => "plain_stable",
            Family::Neumann => "neumann",
            Family::Trace => "trace",
            Family::ResurrectedConstant => "resurrected_constant",
            Family::ResurrectedPowerCapEighth => "resurrected_power_cap_eighth",
            Family::ResurrectedPowerCapHalf => "resurrected_power_cap_half",
        }
    }

    pub fn psi(&self, alpha: f64) -> Option<PsiSpec<f64>> {
        match self {
            Family::ResurrectedConstant => Some(PsiSpec::constant()),
            Family::ResurrectedPowerCapEighth => Some(PsiSpec::power_cap(alpha / 8.0)),
            Family::ResurrectedPowerCapHalf => Some(PsiSpec::power_cap(alpha / 2.0)),
            _ => None,
        }
    }

    /// Kernel and reference weight on `dom`.
    pub fn setup(&self, dom: DomainSpec<f64>, alpha: f64) -> (KernelSpec<f64>, WeightSpec<f64>) {
        let log = WeightSpec::log();
        match self {
            Family::Comparison => (KernelSpec::comparison(dom, alpha, log), log),
            Family::PlainStable => (KernelSpec::new(KernelKind::PlainStable, dom, alpha), log),
            Family::Neumann => (KernelSpec::new(KernelKind::Neumann, dom, alpha), log),
            Family::Trace => (KernelSpec::new(KernelKind::Trace, dom, alpha), WeightSpec::power(alpha / 2.0)),
            _ => {
                let psi = self.psi(alpha).expect("resurrected family");
                (KernelSpec::resurrected(dom, alpha, psi), psi1(psi))
            }
        }
    }
}

fn three_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 1.5]
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 2.0)) {
        return Err(Error::Config("alphas must be nonempty and lie in (0, 2)".into()));
    }
    Ok(())
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > 3) {
        return Err(Error::Config("dims must be nonempty and lie in 1..=3".into()));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{name} must be positive and finite")));
    }
    Ok(())
}

/// The half-line for `d = 1`, the half-space otherwise.
pub fn flat_domain(d: usize) -> DomainSpec<f64> {
    if d == 1 {
        DomainSpec::half_line()
    } else {
        DomainSpec::half_space(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionAParams {
    pub families: Vec<Family>,
    pub alphas: Vec<f64>,
    pub dims: Vec<usize>,
    pub pairs: usize,
    pub cap: f64,
}

impl Default for ConditionAParams {
    fn default() -> Self {
        Self { families: Family::ADMISSIBLE.to_vec(), alphas: three_alphas(), dims: vec![1, 2], pairs: 200, cap: 50.0 }
    }
}

impl ConditionAParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&self.alphas)?;
        check_dims(&self.dims)?;
        check_positive("cap", self.cap)?;
        if self.families.is_empty() {
            return Err(Error::Config("families must be nonempty".into()));
        }
        if self.pairs < 50 {
            return Err(Error::Config("condition checks need at least 50 pairs".into()));
        }
        Ok(())
    }
}

/// Shared by the three kernel suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSuiteParams {
    pub alphas: Vec<f64>,
    pub dims: Vec<usize>,
    pub pairs: usize,
    pub cap: f64,
    /// Pairs per symmetry group, on the plane.
    pub symmetry_pairs: usize,
    pub symmetry_tol: f64,
    pub anchor_tol: f64,
}

impl Default for KernelSuiteParams {
    fn default() -> Self {
        Self {
            alphas: three_alphas(),
            dims: vec![1, 2],
            pairs: 200,
            cap: 50.0,
            symmetry_pairs: 12,
            symmetry_tol: 1e-5,
            anchor_tol: 1e-6,
        }
    }
}

impl KernelSuiteParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&self.alphas)?;
        check_dims(&self.dims)?;
        check_positive("cap", self.cap)?;
        check_positive("symmetry_tol", self.symmetry_tol)?;
        check_positive("anchor_tol", self.anchor_tol)?;
        if self.pairs < 50 {
            return Err(Error::Config("condition checks need at least 50 pairs".into()));
        }
        if self.symmetry_pairs == 0 {
            return Err(Error::Config("symmetry_pairs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossModelParams {
    pub alphas: Vec<f64>,
    pub dims: Vec<usize>,
    pub pairs: usize,
    pub identity_tol: f64,
    pub constant_tol: f64,
}

impl Default for CrossModelParams {
    fn default() -> Self {
        Self { alphas: three_alphas(), dims: vec![1, 2], pairs: 50, identity_tol: 1e-6, constant_tol: 0.1 }
    }
}

impl CrossModelParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&self.alphas)?;
        check_dims(&self.dims)?;
        check_positive("identity_tol", self.identity_tol)?;
        check_positive("constant_tol", self.constant_tol)?;
        if self.pairs < 2 {
            return Err(Error::Config("cross_model needs at least two pairs".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailParams {
    pub domains: Vec<DomainSpec<f64>>,
    pub weights: Vec<WeightKind<f64>>,
    pub alphas: Vec<f64>,
    /// Grid sizes for `δ_D(x)` and `r`.
    pub n_delta: usize,
    pub n_r: usize,
    pub cap: f64,
}

impl Default for TailParams {
    fn default() -> Self {
        Self {
            domains: vec![DomainSpec::half_line(), DomainSpec::half_space(2), DomainSpec::ball(2, 1.0)],
            weights: vec![WeightKind::Log, WeightKind::Power { beta: 0.125 }],
            alphas: three_alphas(),
            n_delta: 5,
            n_r: 6,
            cap: 30.0,
        }
    }
}

impl TailParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&self.alphas)?;
        check_positive("cap", self.cap)?;
        if self.n_delta < 2 || self.n_r < 2 {
            return Err(Error::Config("tail grids need at least two points per axis".into()));
        }
        for dom in &self.domains {
            dom.validate().map_err(|e| Error::Config(e.to_string()))?;
            if matches!(dom, DomainSpec::ExteriorBall { .. } | DomainSpec::Box2d { .. }) || dom.dim() > 2 {
                return Err(Error::Config(format!("tail suite supports half-lines, planar half-spaces and balls, not {}", dom.name())));
            }
        }
        for w in &self.weights {
            let spec = WeightSpec::new(*w);
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
            for &a in &self.alphas {
                if !(spec.beta_bar < a) {
                    return Err(Error::Config(format!("weight upper index {} must be below alpha {a}", spec.beta_bar)));
                }
            }
        }
        if self.domains.is_empty() || self.weights.is_empty() {
            return Err(Error::Config("domains and weights must be nonempty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AikawaParams {
    pub domains: Vec<DomainSpec<f64>>,
    /// `log10` range of the ball radius `r`.
    pub r_decades: [f64; 2],
    /// `log10` range of the strip width `s`.
    pub s_decades: [f64; 2],
    /// Spacing of the coarse grid in decades; the refined grid halves it.
    pub step: f64,
    pub samples: usize,
    /// Largest admissible fitted constant.
    pub cap: f64,
    /// Allowed relative change of the fitted constant under refinement.
    pub tol: f64,
}

impl Default for AikawaParams {
    fn default() -> Self {
        Self {
            domains: vec![
                DomainSpec::half_line(),
                DomainSpec::half_space(2),
                DomainSpec::half_space(3),
                DomainSpec::ball(2, 1.0),
                DomainSpec::ball(3, 1.0),
                DomainSpec::exterior_ball(2, 1.0),
                DomainSpec::box_2d(1.0),
            ],
            r_decades: [-2.0, 0.0],
            s_decades: [-2.0, -0.5],
            step: 0.5,
            samples: 200_000,
            cap: 10.0,
            tol: 0.2,
        }
    }
}

impl AikawaParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("step", self.step)?;
        check_positive("cap", self.cap)?;
        check_positive("tol", self.tol)?;
        if self.domains.is_empty() {
            return Err(Error::Config("domains must be nonempty".into()));
        }
        for dom in &self.domains {
            dom.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for [a, b] in [self.r_decades, self.s_decades] {
            if !(a.is_finite() && b >= a) {
                return Err(Error::Config("decade ranges must be finite and ordered".into()));
            }
        }
        if self.samples < 1000 {
            return Err(Error::Config("samples must be at least 1000".into()));
        }
        Ok(())
    }
}

/// A start point and the targets at which the density is estimated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HkStart {
    pub x: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
}

fn hk_start(x: &[f64], targets: &[&[f64]]) -> HkStart {
    HkStart { x: x.to_vec(), targets: targets.iter().map(|t| t.to_vec()).collect() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HkParams {
    pub alpha: f64,
    pub t: f64,
    pub n_paths: usize,
    /// Bandwidth as a fraction of `t^{1/α}`; at most `1/4`.
    pub bandwidth: f64,
    /// Truncation `ε` of the jump chain as a fraction of `t^{1/α}`.
    pub epsilon: f64,
    /// `Ψ` of the planar resurrected models.
    pub psis: Vec<PsiSpec<f64>>,
    pub planar: Vec<HkStart>,
    pub line: Vec<HkStart>,
    /// Index into `planar` of the start rerun with half the step.
    pub dt_check: Option<usize>,
    pub cap: f64,
    /// Largest admissible `|Δ|/σ` under step halving.
    pub z_max: f64,
}

impl Default for HkParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            t: 1.0,
            n_paths: 100_000,
            bandwidth: 0.25,
            epsilon: 1.0 / 32.0,
            psis: vec![PsiSpec::constant(), PsiSpec::power_cap(0.5)],
            planar: vec![
                hk_start(&[0.0, 0.05], &[&[0.0, 0.3], &[1.0, 0.3], &[2.5, 1.0], &[0.0, 4.0]]),
                hk_start(&[0.0, 1.0], &[&[0.0, 1.5], &[1.5, 0.2], &[3.0, 1.0], &[0.0, 5.0]]),
                hk_start(&[0.0, 4.0], &[&[0.0, 4.5], &[2.0, 3.0], &[0.0, 0.2], &[4.0, 1.0]]),
            ],
            line: vec![
                hk_start(&[0.05], &[&[0.4], &[1.0], &[2.5], &[5.0]]),
                hk_start(&[1.0], &[&[0.1], &[1.5], &[3.0], &[6.0]]),
                hk_start(&[4.0], &[&[0.5], &[2.5], &[5.0], &[9.0]]),
            ],
            dt_check: Some(0),
            cap: 400.0,
            z_max: 3.0,
        }
    }
}

impl HkParams {
    pub fn scale(&self) -> f64 {
        self.t.powf(1.0 / self.alpha)
    }

    /// Rejects grids that break the estimator's preconditions.
    pub fn validate(&self) -> Result<()> {
        check_alphas(&[self.alpha])?;
        check_positive("t", self.t)?;
        check_positive("cap", self.cap)?;
        check_positive("z_max", self.z_max)?;
        if !(self.bandwidth > 0.0 && self.bandwidth <= 0.25) {
            return Err(Error::Config("bandwidth must lie in (0, 1/4] (units of t^(1/α))".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.125) {
            return Err(Error::Config("epsilon must lie in (0, 1/8] (units of t^(1/α))".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        for p in &self.psis {
            p.validate(self.alpha).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(i) = self.dt_check {
            if i >= self.planar.len() {
                return Err(Error::Config(format!("dt_check index {i} has no planar start")));
            }
        }
        let eps = self.epsilon * self.scale();
        for (dim, starts) in [(2usize, &self.planar), (1, &self.line)] {
            for s in starts {
                if s.x.len() != dim || s.targets.iter().any(|y| y.len() != dim) {
                    return Err(Error::Config(format!("hk points must have dimension {dim}")));
                }
                if s.x[dim - 1] < 0.0 || s.targets.iter().any(|y| y[dim - 1] < 0.0) {
                    return Err(Error::Config("hk points must lie in the closed domain".into()));
                }
                if dim == 1 {
                    if !(s.x[0] > 0.0) {
                        return Err(Error::Config("jump chain starts must lie in the open half-line".into()));
                    }
                    for y in &s.targets {
                        if (y[0] - s.x[0]).abs() < 8.0 * eps {
                            return Err(Error::Config(format!(
                                "target {} lies within 8ε = {} of start {}",
                                y[0],
                                8.0 * eps,
                                s.x[0]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupationParams {
    pub dom: DomainSpec<f64>,
    pub alpha: f64,
    pub t: f64,
    pub weight: WeightKind<f64>,
    /// Boundary distances of the start points.
    pub deltas: Vec<f64>,
    pub n_paths: usize,
    /// Paths for the `Φ ≡ 1` runs.
    pub unit_paths: usize,
    pub cap: f64,
}

impl Default for OccupationParams {
    fn default() -> Self {
        Self {
            dom: DomainSpec::half_line(),
            alpha: 1.0,
            t: 1.0,
            weight: WeightKind::Log,
            deltas: vec![0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0],
            n_paths: 20_000,
            unit_paths: 2_000,
            cap: 20.0,
        }
    }
}

impl OccupationParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&[self.alpha])?;
        check_positive("t", self.t)?;
        check_positive("cap", self.cap)?;
        if !self.dom.is_half_space() {
            return Err(Error::Config("occupation suite runs on the half-line or a half-space".into()));
        }
        WeightSpec::new(self.weight).validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::Config("deltas must be nonempty, finite and nonnegative".into()));
        }
        if self.n_paths == 0 || self.unit_paths == 0 {
            return Err(Error::Config("path counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayParams {
    pub alpha: f64,
    pub weight: WeightKind<f64>,
    /// Jump cutoff `ε`; the horizon is `t = ε^α`.
    pub epsilon: f64,
    /// Shortest kept jump as a fraction of `ε`; at most `1/8`.
    pub inner: f64,
    /// Start points in units of `ε`.
    pub starts: Vec<f64>,
    /// Exceedance radii in units of `ε`.
    pub radii: Vec<f64>,
    pub n_paths: usize,
    pub min_r2: f64,
    pub min_hits: u64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            weight: WeightKind::Log,
            epsilon: 1.0,
            inner: 1.0 / 16.0,
            starts: vec![1.0, 10.0, 100.0],
            radii: (1..=16).map(|k| 0.5 * k as f64).collect(),
            n_paths: 1_000_000,
            min_r2: 0.9,
            min_hits: 20,
        }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&[self.alpha])?;
        check_positive("epsilon", self.epsilon)?;
        if !(self.inner > 0.0 && self.inner <= 0.125) {
            return Err(Error::Config("inner must lie in (0, 1/8]".into()));
        }
        WeightSpec::new(self.weight).validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.starts.is_empty() || self.starts.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Config("starts must be nonempty and positive".into()));
        }
        if self.radii.len() < 3 || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("radii need at least three positive values".into()));
        }
        if !(self.min_r2 >= 0.0 && self.min_r2 <= 1.0) {
            return Err(Error::Config("min_r2 must lie in [0, 1]".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters of every suite; a TOML config overrides any subset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    pub condition_a: ConditionAParams,
    pub tail_two_sided: TailParams,
    pub aikawa: AikawaParams,
    pub kernel_neumann: KernelSuiteParams,
    pub kernel_trace: KernelSuiteParams,
    pub kernel_resurrected: KernelSuiteParams,
    pub hk_two_sided: HkParams,
    pub occupation: OccupationParams,
    pub truncated_decay: DecayParams,
    pub cross_model: CrossModelParams,
}
