//! Sampled BMO and `Lip_α` seminorms of potentials `P∗μ`.
//!
//! Both estimators are sups over random samples and therefore lower
//! estimates of the seminorms. Samplers work in the frame of the support's
//! bounding cube `Q^0` (positions relative to its corner, lengths in units
//! of its side), so translating the configuration leaves the sample set
//! unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Cube;
use crate::kernel::{random_direction, KernelKind};
use crate::measure::{growth_constant, CubeUnionMeasure, GrowthProbe, Measure};
use crate::point::SpaceTimePoint;
use crate::potential::{Direct, PotentialEvaluator};

/// Slack on the growth precondition.
pub const GROWTH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeminormKind {
    #[serde(rename = "BMO")]
    Bmo,
    #[serde(rename = "Lip")]
    Lip,
}

impl SeminormKind {
    pub fn name(self) -> &'static str {
        match self {
            SeminormKind::Bmo => "BMO",
            SeminormKind::Lip => "Lip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    None,
    Cube { cube: Cube },
    Pair { x: SpaceTimePoint, y: SpaceTimePoint },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeminormReport {
    pub kind: SeminormKind,
    pub alpha: Option<f64>,
    pub value: f64,
    /// 95% Monte Carlo half-width of the winning cube's mean oscillation.
    pub half_width: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub worst_witness: Witness,
}

#[derive(Debug, Clone)]
pub struct SeminormOptions {
    pub kernel: KernelKind,
    pub tol: f64,
    pub evaluator: Arc<dyn PotentialEvaluator>,
    pub probe: GrowthProbe,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        Self { kernel: KernelKind::P, tol: 1e-4, evaluator: Arc::new(Direct::default()), probe: GrowthProbe::default() }
    }
}

fn require_growth(mu: &CubeUnionMeasure, d: f64, probe: &GrowthProbe) -> Result<()> {
    let c = growth_constant(mu, d, probe.trials, probe.seed)?;
    if c > 1.0 + GROWTH_SLACK {
        return Err(Error::Argument(format!(
            "measure has {d}-growth constant {c:.6} > 1; rescale it first"
        )));
    }
    Ok(())
}

/// Uniform point of the 2-neighbourhood of `Q^0`.
fn neighbourhood_point<R: Rng>(rng: &mut R, root: &Cube) -> SpaceTimePoint {
    let mut p = root.corner;
    for i in 0..root.dim() {
        p[i] += root.side * (rng.random::<f64>() * 5.0 - 2.0);
    }
    p
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Sup over `cubes` random cubes of the Monte Carlo mean oscillation
/// `|Q|^{-1} ∫_Q |f − f_Q|` of `f = K∗μ`, each with `nodes_per_cube`
/// uniform nodes. Cube centres lie in the 2-neighbourhood of `Q^0`, sides
/// are log-uniform in `[ℓ_k/4, 4]`.
pub fn bmo_estimate_with(
    mu: &CubeUnionMeasure,
    cubes: usize,
    nodes_per_cube: usize,
    seed: u64,
    opts: &SeminormOptions,
) -> Result<SeminormReport> {
    if nodes_per_cube < 16 {
        return Err(Error::Argument(format!("need at least 16 nodes per cube, got {nodes_per_cube}")));
    }
    if cubes == 0 {
        return Err(Error::Argument("need at least one cube".into()));
    }
    let mut report = SeminormReport {
        kind: SeminormKind::Bmo,
        alpha: None,
        value: 0.0,
        half_width: Some(0.0),
        samples: cubes * nodes_per_cube,
        seed,
        worst_witness: Witness::None,
    };
    if mu.is_zero() {
        return Ok(report);
    }
    require_growth(mu, mu.n() as f64, &opts.probe)?;
    let root = mu.support().bounding_cube();
    let dim = root.dim();
    let fine = mu.support().side();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(cubes);
    for _ in 0..cubes {
        let c = neighbourhood_point(&mut rng, &root);
        let side = log_uniform(&mut rng, 0.25 * fine, 4.0 * root.side);
        let mut corner = c;
        for i in 0..dim {
            corner[i] -= 0.5 * side;
        }
        let q = Cube { corner, side };
        let nodes: Vec<SpaceTimePoint> = (0..nodes_per_cube)
            .map(|_| {
                let mut p = corner;
                for i in 0..dim {
                    p[i] += side * rng.random::<f64>();
                }
                p
            })
            .collect();
        jobs.push((q, nodes));
    }
    let measure = Measure::CubeUnion(mu.clone());
    let kernel = opts.kernel.kernel();
    let eval = opts.evaluator.as_ref();
    let results: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|(_, nodes)| {
            let mut f = Vec::with_capacity(nodes.len());
            for p in nodes {
                f.push(eval.evaluate(&measure, kernel.as_ref(), p, opts.tol)?.value);
            }
            let m = f.len() as f64;
            let mean = f.iter().sum::<f64>() / m;
            let dev: Vec<f64> = f.iter().map(|v| (v - mean).abs()).collect();
            let osc = dev.iter().sum::<f64>() / m;
            let var = dev.iter().map(|d| (d - osc).powi(2)).sum::<f64>() / (m - 1.0);
            Ok((osc, 1.96 * (var / m).sqrt()))
        })
        .collect();
    for ((q, _), r) in jobs.iter().zip(results) {
        let (osc, hw) = r?;
        if osc > report.value {
            report.value = osc;
            report.half_width = Some(hw);
            report.worst_witness = Witness::Cube { cube: *q };
        }
    }
    Ok(report)
}

pub fn bmo_estimate(mu: &CubeUnionMeasure, cubes: usize, nodes_per_cube: usize, seed: u64) -> Result<SeminormReport> {
    bmo_estimate_with(mu, cubes, nodes_per_cube, seed, &SeminormOptions::default())
}

/// Smallest admissible pair separation.
pub const MIN_SEPARATION: f64 = 1e-12;

/// Sup of `|f(x) − f(y)| / |x − y|^α` over `pairs` random pairs: `x` uniform
/// in the 2-neighbourhood of `Q^0`, `y = x + r·u` with `u` a random unit
/// vector and `r` log-uniform in `[ℓ_k/4, 8]`.
pub fn lip_alpha_estimate_with(
    mu: &CubeUnionMeasure,
    alpha: f64,
    pairs: usize,
    seed: u64,
    opts: &SeminormOptions,
) -> Result<SeminormReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if pairs == 0 {
        return Err(Error::Argument("need at least one pair".into()));
    }
    let mut report = SeminormReport {
        kind: SeminormKind::Lip,
        alpha: Some(alpha),
        value: 0.0,
        half_width: None,
        samples: pairs,
        seed,
        worst_witness: Witness::None,
    };
    if mu.is_zero() {
        return Ok(report);
    }
    require_growth(mu, mu.n() as f64 + alpha, &opts.probe)?;
    let root = mu.support().bounding_cube();
    let dim = root.dim();
    let fine = mu.support().side();
    let (r_lo, r_hi) = (0.25 * fine, 8.0 * root.side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(pairs);
    while jobs.len() < pairs {
        let x = neighbourhood_point(&mut rng, &root);
        let r = log_uniform(&mut rng, r_lo, r_hi);
        let y = x + random_direction(&mut rng, dim) * r;
        let sep = x.dist(&y);
        if sep < MIN_SEPARATION * root.side {
            continue;
        }
        jobs.push((x, y, sep));
    }
    let measure = Measure::CubeUnion(mu.clone());
    let kernel = opts.kernel.kernel();
    let eval = opts.evaluator.as_ref();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|(x, y, sep)| {
            let fx = eval.evaluate(&measure, kernel.as_ref(), x, opts.tol)?.value;
            let fy = eval.evaluate(&measure, kernel.as_ref(), y, opts.tol)?.value;
            Ok((fx - fy).abs() / sep.powf(alpha))
        })
        .collect();
    for ((x, y, _), r) in jobs.iter().zip(results) {
        let v = r?;
        if v > report.value {
            report.value = v;
            report.worst_witness = Witness::Pair { x: *x, y: *y };
        }
    }
    Ok(report)
}

pub fn lip_alpha_estimate(mu: &CubeUnionMeasure, alpha: f64, pairs: usize, seed: u64) -> Result<SeminormReport> {
    lip_alpha_estimate_with(mu, alpha, pairs, seed, &SeminormOptions::default())
}
