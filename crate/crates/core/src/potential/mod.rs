//! Potentials `K∗μ(p) = ∫ K(p − y) dμ(y)` of cube-union and atomic
//! measures, and extremum searches over them.
//!
//! Tolerances are relative: `tol` is measured against the natural scale
//! `‖μ‖ / ℓ(Q^0)^n` of the potential, where `Q^0` is the bounding cube of
//! the support. This makes every decision of the engine invariant under
//! scaling the configuration.

mod direct;
mod search;
mod tree;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measure::{CubeUnionMeasure, Measure};
use crate::point::SpaceTimePoint;
use crate::quadrature::QuadratureOptions;
use crate::registry::Registry;

pub use direct::potential_direct_with;
pub use search::{
    inf_potential_on_set, sup_potential, sup_potential_atomic, symmetries_of, ExtremumReport, SearchFlags,
    SearchOptions, Symmetries,
};
pub use tree::{potential_tree_with, TreeStats};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialValue {
    pub value: f64,
    pub err: f64,
    /// Bound on the contribution of excluded singular neighbourhoods.
    pub singular_excluded: f64,
    /// Atoms sitting exactly at the evaluation point, left out of the sum.
    #[serde(default)]
    pub skipped_atoms: usize,
}

impl PotentialValue {
    /// Conservative lower end of the enclosure.
    pub fn lower(&self) -> f64 {
        self.value - self.err
    }

    /// Conservative upper end of the enclosure.
    pub fn upper(&self) -> f64 {
        self.value + self.err + self.singular_excluded
    }
}

/// A potential evaluation strategy.
pub trait PotentialEvaluator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn evaluate(&self, mu: &Measure, kernel: &dyn Kernel, p: &SpaceTimePoint, tol: f64) -> Result<PotentialValue>;
}

/// Per-cube adaptive quadrature over the whole support.
#[derive(Debug, Clone, Copy, Default)]
pub struct Direct {
    pub quadrature: QuadratureOptions,
}

impl PotentialEvaluator for Direct {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn evaluate(&self, mu: &Measure, kernel: &dyn Kernel, p: &SpaceTimePoint, tol: f64) -> Result<PotentialValue> {
        potential_direct_with(mu, kernel, p, tol, &self.quadrature)
    }
}

/// Hierarchical far-field summation. Atomic measures and flat supports
/// are handed to [`Direct`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Tree {
    pub quadrature: QuadratureOptions,
}

impl PotentialEvaluator for Tree {
    fn name(&self) -> &'static str {
        "tree"
    }

    fn evaluate(&self, mu: &Measure, kernel: &dyn Kernel, p: &SpaceTimePoint, tol: f64) -> Result<PotentialValue> {
        match mu {
            Measure::CubeUnion(m) if m.support().is_hierarchical() => {
                potential_tree_with(m, kernel, p, tol, &self.quadrature).map(|(v, _)| v)
            }
            _ => potential_direct_with(mu, kernel, p, tol, &self.quadrature),
        }
    }
}

pub fn evaluator_registry() -> Registry<dyn PotentialEvaluator> {
    let mut r: Registry<dyn PotentialEvaluator> = Registry::new("evaluator");
    r.register("direct", Arc::new(Direct::default()));
    r.register("tree", Arc::new(Tree::default()));
    r
}

/// Direct evaluation with default quadrature options.
pub fn potential_direct(mu: &Measure, kernel: &dyn Kernel, p: &SpaceTimePoint, tol: f64) -> Result<PotentialValue> {
    potential_direct_with(mu, kernel, p, tol, &QuadratureOptions::default())
}

/// Tree evaluation with default quadrature options. Requires a
/// hierarchical support.
pub fn potential_tree(mu: &CubeUnionMeasure, kernel: &dyn Kernel, p: &SpaceTimePoint, tol: f64) -> Result<PotentialValue> {
    potential_tree_with(mu, kernel, p, tol, &QuadratureOptions::default()).map(|(v, _)| v)
}

pub(crate) fn check_args(dim: usize, p: &SpaceTimePoint, tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    if p.dim() != dim {
        return Err(Error::Argument(format!(
            "point of dimension {} for a measure in dimension {dim}",
            p.dim()
        )));
    }
    Ok(())
}

/// `‖μ‖ / ℓ(Q^0)^n`.
pub(crate) fn potential_scale(mu: &CubeUnionMeasure) -> f64 {
    mu.total_mass() / mu.support().bounding_cube().side.powi(mu.n() as i32)
}
