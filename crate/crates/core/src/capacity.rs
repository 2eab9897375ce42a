//! Two-sided estimates of the (1/2,+)-caloric capacity of `E_k`.
//!
//! * lower: `1/s` with `s` the sup of `P∗μ_k` found by the search. The
//!   measure `μ_k/s` has potential at most one wherever we looked, so this
//!   is a lower bound up to the coverage of the search.
//! * symmetric upper: for `ν` with `‖P_sy∗ν‖_∞ ≤ 1`, Tonelli gives
//!   `∫ P_sy∗μ_k dν ≤ 1`, hence `ν(E_k) ≤ 1/inf_{E_k} P_sy∗μ_k`.
//! * one-sided upper: the same with `P` and `P*∗μ_k`.
//!
//! The combined upper bound is `min(2·upper_sym, upper_onesided)`, using
//! `P ≤ 2 P_sy`.

use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{CantorSpec, Generation};
use crate::kernel::KernelKind;
use crate::measure::{uniform_on_generation, Measure};
use crate::point::SpaceTimePoint;
use crate::potential::{inf_potential_on_set, sup_potential, ExtremumReport, PotentialEvaluator, SearchOptions, Tree};

/// Default tolerance by depth: the leaf count grows like `2^{k(n+1)}`.
pub fn default_tol(k: usize) -> f64 {
    if k <= 4 {
        1e-3
    } else {
        1e-2
    }
}

#[derive(Debug, Clone)]
pub struct CapacityOptions {
    pub evaluator: Arc<dyn PotentialEvaluator>,
    pub search: SearchOptions,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self { evaluator: Arc::new(Tree::default()), search: SearchOptions::default() }
    }
}

/// A generation with its uniform probability measure, oriented so that
/// `forward` is the kernel whose capacity is estimated (`P`, or `P*` for a
/// time-reflected problem).
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    pub gen: Arc<Generation>,
    pub forward: KernelKind,
    /// `gen` in its canonical frame; searches run there.
    frame: Arc<Generation>,
    offset: SpaceTimePoint,
    measure: Measure,
}

impl CapacityProblem {
    pub fn new(gen: Arc<Generation>, forward: KernelKind) -> Result<Self> {
        if forward == KernelKind::PSym {
            return Err(Error::Argument("the forward kernel must be P or Pstar".into()));
        }
        let (frame, offset) = gen.canonical_frame();
        let frame = Arc::new(frame);
        let measure = uniform_on_generation(frame.clone())?.into();
        Ok(Self { gen, forward, frame, offset, measure })
    }

    pub fn from_spec(spec: &CantorSpec, k: usize) -> Result<Self> {
        Self::new(Arc::new(spec.build_generation(k)?), KernelKind::P)
    }

    /// The uniform measure, carried by the canonical frame of `gen`.
    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    fn search(&self, kernel: KernelKind, sup: bool, tol: f64, opts: &CapacityOptions) -> Result<ExtremumReport> {
        let k = kernel.kernel();
        let eval = opts.evaluator.as_ref();
        let mut r = if sup {
            sup_potential(&self.measure, k.as_ref(), &self.frame, tol, eval, &opts.search)?
        } else {
            inf_potential_on_set(&self.measure, k.as_ref(), &self.frame, tol, eval, &opts.search)?
        };
        r.argpoint = r.argpoint + self.offset;
        r.search_box.corner = r.search_box.corner + self.offset;
        Ok(r)
    }

    /// `1/Σ_j θ_j` from the side lengths of the hierarchy, so that it
    /// follows any rescaling of the configuration.
    pub fn theta_sum_inv(&self) -> Result<f64> {
        theta_sum_of(&self.gen).map(|s| 1.0 / s)
    }
}

/// `Σ_{j≤k} 1/(ℓ_j^n 2^{j(n+1)})` read off a hierarchical generation.
pub fn theta_sum_of(gen: &Generation) -> Result<f64> {
    if !gen.is_hierarchical() {
        return Err(Error::Unsupported("theta sums need the generation hierarchy".into()));
    }
    let n = gen.n() as i32;
    Ok((0..=gen.level())
        .map(|j| {
            let cubes = gen.level_cubes(j).unwrap();
            1.0 / (cubes[0].side.powi(n) * cubes.len() as f64)
        })
        .sum())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub report: ExtremumReport,
}

pub fn lower_estimate(problem: &CapacityProblem, tol: f64, opts: &CapacityOptions) -> Result<Estimate> {
    check_tol(tol)?;
    let r = problem.search(problem.forward, true, tol, opts)?;
    if r.flags.non_converged {
        return Err(Error::Divergence(format!("sup search did not settle near {:?}", r.argpoint)));
    }
    if !(r.extremum > 0.0) {
        return Err(Error::Engine(format!("non-positive sup {}", r.extremum)));
    }
    Ok(Estimate { value: 1.0 / r.extremum, report: r })
}

/// Inverts an inf after subtracting its error allowance.
fn dual_bound(r: ExtremumReport, what: &str) -> Result<Estimate> {
    let m = r.extremum - r.err;
    if !(m > 0.0) {
        return Err(Error::Inconclusive(format!(
            "{what}: inf {:.3e} minus allowance {:.3e} is not positive at {:?}",
            r.extremum, r.err, r.argpoint
        )));
    }
    Ok(Estimate { value: 1.0 / m, report: r })
}

pub fn upper_sym_estimate(problem: &CapacityProblem, tol: f64, opts: &CapacityOptions) -> Result<Estimate> {
    check_tol(tol)?;
    let r = problem.search(KernelKind::PSym, false, tol, opts)?;
    dual_bound(r, "symmetric upper bound")
}

/// One-sided estimate together with the reflected inf it is cross-checked
/// against.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OneSided {
    pub estimate: Estimate,
    pub reflected: ExtremumReport,
}

pub fn upper_onesided_estimate(problem: &CapacityProblem, tol: f64, opts: &CapacityOptions) -> Result<OneSided> {
    check_tol(tol)?;
    let r = problem.search(problem.forward.reversed(), false, tol, opts)?;
    let reflected = problem.search(problem.forward, false, tol, opts)?;
    let scale = problem.measure.total_mass() / problem.gen.bounding_cube().side.powi(problem.gen.n() as i32);
    if (r.extremum - reflected.extremum).abs() > 4.0 * tol * scale.max(r.extremum.abs()) {
        return Err(Error::Engine(format!(
            "time-reflection cross-check failed: {} vs {}",
            r.extremum, reflected.extremum
        )));
    }
    let estimate = dual_bound(r, "one-sided upper bound")?;
    Ok(OneSided { estimate, reflected })
}

pub fn lower_bound(spec: &CantorSpec, k: usize, tol: f64) -> Result<f64> {
    lower_estimate(&CapacityProblem::from_spec(spec, k)?, tol, &CapacityOptions::default()).map(|e| e.value)
}

pub fn upper_bound_sym(spec: &CantorSpec, k: usize, tol: f64) -> Result<f64> {
    upper_sym_estimate(&CapacityProblem::from_spec(spec, k)?, tol, &CapacityOptions::default()).map(|e| e.value)
}

pub fn upper_bound_onesided(spec: &CantorSpec, k: usize, tol: f64) -> Result<f64> {
    upper_onesided_estimate(&CapacityProblem::from_spec(spec, k)?, tol, &CapacityOptions::default())
        .map(|o| o.estimate.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityBounds {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub theta_sum_inv: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    pub tol: f64,
    pub upper_sym: f64,
    /// `None` when the one-sided bound was inconclusive.
    pub upper_onesided: Option<f64>,
    pub onesided_note: Option<String>,
    pub lower_report: ExtremumReport,
    pub upper_sym_report: ExtremumReport,
    pub onesided_reports: Option<[ExtremumReport; 2]>,
}

pub fn bounds_for(problem: &CapacityProblem, tol: f64, opts: &CapacityOptions) -> Result<CapacityBounds> {
    let lower = lower_estimate(problem, tol, opts)?;
    let sym = upper_sym_estimate(problem, tol, opts)?;
    let (onesided, note, reports) = match upper_onesided_estimate(problem, tol, opts) {
        Ok(o) => (Some(o.estimate.value), None, Some([o.estimate.report, o.reflected])),
        Err(Error::Inconclusive(msg)) => (None, Some(msg), None),
        Err(e) => return Err(e),
    };
    let upper = onesided.map_or(2.0 * sym.value, |o| o.min(2.0 * sym.value));
    if !(lower.value > 0.0 && lower.value <= upper) {
        return Err(Error::Engine(format!("bounds out of order: lower {} > upper {upper}", lower.value)));
    }
    let theta_sum_inv = problem.theta_sum_inv()?;
    Ok(CapacityBounds {
        k: problem.gen.level(),
        lower: lower.value,
        upper,
        theta_sum_inv,
        ratio_lower: lower.value / theta_sum_inv,
        ratio_upper: upper / theta_sum_inv,
        tol,
        upper_sym: sym.value,
        upper_onesided: onesided,
        onesided_note: note,
        lower_report: lower.report,
        upper_sym_report: sym.report,
        onesided_reports: reports,
    })
}

pub fn bounds(spec: &CantorSpec, k: usize, tol: f64) -> Result<CapacityBounds> {
    bounds_for(&CapacityProblem::from_spec(spec, k)?, tol, &CapacityOptions::default())
}
