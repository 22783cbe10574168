//! Exact samplers: stable increments, stable exit positions from balls, and
//! return positions after a jump out of the domain.

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;

/// Positive `β`-stable variable with `E e^{-λS} = e^{-λ^β}`, `β ∈ (0, 1)`,
/// by Kanter's representation.
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = std::f64::consts::PI * (1.0 - rng.random::<f64>());
    let e: f64 = Exp1.sample(rng);
    let a = (beta * u).sin() / u.sin().powf(1.0 / beta);
    let b = ((1.0 - beta) * u).sin() / e;
    a * b.powf((1.0 - beta) / beta)
}

/// Writes an increment of the isotropic `α`-stable process with
/// `E e^{iξX_t} = e^{-t|ξ|^α}` over time `dt` into `out`.
///
/// Uses subordination: `X = (2S)^{1/2} G dt^{1/α}` with `S` positive
/// `α/2`-stable and `G` standard normal.
pub fn stable_increment_into<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R, out: &mut [f64]) {
    let s = positive_stable(alpha / 2.0, rng);
    let scale = (2.0 * s).sqrt() * dt.powf(1.0 / alpha);
    for v in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v = scale * g;
    }
}

pub fn stable_increment<R: Rng + ?Sized>(alpha: f64, d: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; d];
    stable_increment_into(alpha, dt, rng, &mut out);
    out
}

fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Exit position of the stable process started at the centre of `B(c, r)`.
/// With `w = r²/|z-c|²`, `w ~ Beta(α/2, 1-α/2)` and the direction is
/// uniform.
fn centred_exit<R: Rng + ?Sized>(beta: &Beta<f64>, c: &[f64], r: f64, rng: &mut R) -> Vec<f64> {
    let w: f64 = beta.sample(rng);
    let rho = r / w.sqrt();
    let u = unit_vector(c.len(), rng);
    c.iter().zip(&u).map(|(&ci, &ui)| ci + rho * ui).collect()
}

/// Exit position from `B(c, r)` of the stable process started at `x`, by
/// walk on spheres: from the current point `p`, jump to the exit position of
/// the largest ball centred at `p` inside `B(c, r)` until the walk lands
/// outside `B̄(c, r)`. Returns the exit point and the number of steps.
pub fn ball_exit_sample<R: Rng + ?Sized>(alpha: f64, x: &[f64], c: &[f64], r: f64, rng: &mut R) -> Result<(Vec<f64>, usize)> {
    if x.len() != c.len() || x.is_empty() {
        return Err(Error::input("dimension mismatch"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::input("alpha must lie in (0, 2)"));
    }
    let dist = |p: &[f64]| p.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if !(r > 0.0) || dist(x) >= r {
        return Err(Error::input("start point must lie inside the ball"));
    }
    let beta = Beta::new(alpha / 2.0, 1.0 - alpha / 2.0).map_err(|e| Error::Sampler(e.to_string()))?;
    let mut p = x.to_vec();
    for step in 1..=1_000_000 {
        let rad = r - dist(&p);
        p = centred_exit(&beta, &p, rad, rng);
        if dist(&p) > r {
            return Ok((p, step));
        }
    }
    Err(Error::Sampler("walk on spheres did not leave the ball after 10^6 steps".into()))
}

/// Exact sampler for the return position from `z` (with `z_d < 0`) into the
/// upper half-space under the density
/// `∝ |z_d|^α (|y-z|²/(y_d|z_d|))^q |y-z|^{-d-α}`, `0 ≤ q < 1 ∧ α`.
///
/// At unit depth write `y - z = w`; then `1/w_d ~ Beta(α-q, 1-q)` and,
/// given `w_d`, `w'/w_d` is a multivariate t vector with `1+α-2q` degrees
/// of freedom in the scaling `G/√χ²`.
#[derive(Clone, Debug)]
pub struct HalfSpaceReturn {
    depth: Beta<f64>,
    chi: Option<ChiSquared<f64>>,
}

impl HalfSpaceReturn {
    pub fn new(alpha: f64, q: f64, d: usize) -> Result<Self> {
        if !(q >= 0.0 && q < 1.0_f64.min(alpha)) {
            return Err(Error::Model(format!("return exponent {q} must lie in [0, 1 ∧ α)")));
        }
        let depth = Beta::new(alpha - q, 1.0 - q).map_err(|e| Error::Sampler(e.to_string()))?;
        let chi = if d > 1 {
            Some(ChiSquared::new(1.0 + alpha - 2.0 * q).map_err(|e| Error::Sampler(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { depth, chi })
    }

    /// Overwrites `z` (a point with `z_d < 0`) with the return position.
    pub fn sample_into<R: Rng + ?Sized>(&self, z: &mut [f64], rng: &mut R) {
        let d = z.len();
        let s = -z[d - 1];
        let tau: f64 = self.depth.sample(rng);
        let wd = 1.0 / tau;
        if let Some(chi) = &self.chi {
            let k: f64 = chi.sample(rng);
            let scale = s * wd / k.sqrt();
            for zi in z[..d - 1].iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *zi += scale * g;
            }
        }
        z[d - 1] = s * (wd - 1.0);
    }
}

/// Axis-aligned box containing a bounded catalog domain.
fn bounding_box(dom: &DomainSpec<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    match *dom {
        DomainSpec::Ball { d, radius } => Some((vec![-radius; d], vec![radius; d])),
        DomainSpec::Box2d { side } => Some((vec![0.0; 2], vec![side; 2])),
        _ => None,
    }
}

/// Return from `z ∉ D̄` with density `∝ |y - z|^{-d-α}` on `D`, by rejection.
/// Returns the point and the number of proposals.
///
/// Two envelopes are used. The radial Pareto law on `{|y - z| > δ_{D^c}(z)}`
/// with a uniform direction, accepted when `y ∈ D`, suits points close to
/// `D`. For bounded domains and `z` far away, uniform proposals from the
/// bounding box accepted with probability `(δ_{D^c}(z)/|y-z|)^{d+α}` keep the
/// acceptance rate away from zero; they are used when
/// `(δ/(δ + diam))^{d+α} ≥ 0.05`.
pub fn neumann_return_sample<R: Rng + ?Sized>(
    dom: &DomainSpec<f64>,
    alpha: f64,
    z: &[f64],
    rng: &mut R,
    max_proposals: usize,
) -> Result<(Vec<f64>, usize)> {
    let dc = dom.delta_complement(z)?;
    if !(dc > 0.0) {
        return Err(Error::domain("return sampling needs a point off the closed domain"));
    }
    let d = z.len();
    let e = d as f64 + alpha;
    let uniform = bounding_box(dom).filter(|_| (dc / (dc + dom.diam())).powf(e) >= 0.05);
    for k in 1..=max_proposals {
        let y: Vec<f64> = match &uniform {
            Some((lo, hi)) => {
                let y: Vec<f64> = lo.iter().zip(hi).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect();
                let r = y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if rng.random::<f64>() >= (dc / r).powf(e) {
                    continue;
                }
                y
            }
            None => {
                let r = dc * (1.0 - rng.random::<f64>()).powf(-1.0 / alpha);
                let u = unit_vector(d, rng);
                z.iter().zip(&u).map(|(&a, &b)| a + r * b).collect()
            }
        };
        if dom.contains(&y) {
            return Ok((y, k));
        }
    }
    Err(Error::Sampler(format!(
        "return sampler from {z:?} accepted nothing in {max_proposals} proposals (acceptance below {:e})",
        1.0 / max_proposals as f64
    )))
}
