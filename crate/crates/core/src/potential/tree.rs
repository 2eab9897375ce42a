use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{calibration, Kernel};
use crate::measure::CubeUnionMeasure;
use crate::point::SpaceTimePoint;
use crate::quadrature::{integrate_cube, QuadratureOptions};

use super::{check_args, potential_scale, PotentialValue};

/// Safety factor applied to the empirically calibrated kernel constants.
const SAFETY: f64 = 2.0;

/// Instrumentation of one tree traversal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TreeStats {
    pub visits: usize,
    pub monopoles: usize,
    pub leaves: usize,
}

struct Walk<'a> {
    mu: &'a CubeUnionMeasure,
    kernel: &'a dyn Kernel,
    p: SpaceTimePoint,
    tol: f64,
    /// Absolute tolerance per leaf, the same share the direct evaluator
    /// gives each cube.
    leaf_tol: f64,
    opts: &'a QuadratureOptions,
    moments: Vec<f64>,
    lipschitz: f64,
    hessian: f64,
    n: i32,
    out: PotentialValue,
    stats: TreeStats,
}

impl Walk<'_> {
    fn visit(&mut self, level: usize, idx: usize) {
        self.stats.visits += 1;
        let g = self.mu.support();
        let node = g.level_cubes(level).unwrap()[idx];
        let t = g.dim() - 1;
        let (zt_lo, zt_hi) = (self.p[t] - node.hi(t), self.p[t] - node.lo(t));
        if self.kernel.vanishes_on(zt_lo, zt_hi) {
            return;
        }
        let mass = self.mu.level_mass(level).unwrap();
        let centre = node.center();
        let d = self.p.dist(&centre);
        let rho = 0.5 * node.diameter();
        if level == g.level() {
            self.stats.leaves += 1;
            let density = self.mu.density();
            let share = self.leaf_tol / density;
            let r = integrate_cube(self.kernel, &self.p, &node, share, self.opts);
            self.out.value += density * r.value;
            self.out.err += density * r.err;
            self.out.singular_excluded += density * r.excluded;
            return;
        }
        if 2.0 * rho <= 0.5 * d {
            let i = self.moments[level];
            let budget = if zt_lo < 0.0 && zt_hi > 0.0 {
                // The kernel has a kink on {t = 0} inside the node: only the
                // first-order smoothness bound applies.
                SAFETY * self.lipschitz * mass * i.sqrt() / d.powi(self.n + 1)
            } else {
                0.5 * SAFETY * self.hessian * mass * i / (d - rho).powi(self.n + 2)
            };
            if budget <= self.tol * mass / d.powi(self.n) {
                self.stats.monopoles += 1;
                self.out.value += mass * self.kernel.eval_unchecked(&(self.p - centre));
                self.out.err += budget;
                return;
            }
        }
        let b = g.branching();
        for c in 0..b {
            self.visit(level + 1, idx * b + c);
        }
    }
}

/// Tree evaluation with instrumentation.
///
/// A node of diameter `δ` at distance `d` from `p` is replaced by a point
/// mass at its centre when `δ ≤ d/2` and its error budget is below
/// `tol · mass / d^n`. Nodes are centrally symmetric, so the first-order
/// Taylor term vanishes and the budget is second order, except for nodes
/// straddling the hyperplane `{y_t = p_t}` where the first-order bound is
/// used. Leaves are integrated directly.
pub fn potential_tree_with(
    mu: &CubeUnionMeasure,
    kernel: &dyn Kernel,
    p: &SpaceTimePoint,
    tol: f64,
    opts: &QuadratureOptions,
) -> Result<(PotentialValue, TreeStats)> {
    let g = mu.support();
    check_args(g.dim(), p, tol)?;
    let Some(moments) = g.second_moments() else {
        return Err(Error::Unsupported("tree evaluation needs a hierarchical support".into()));
    };
    if mu.is_zero() {
        return Ok((PotentialValue::default(), TreeStats::default()));
    }
    let cal = calibration(g.n());
    let mut w = Walk {
        mu,
        kernel,
        p: *p,
        tol,
        leaf_tol: tol * potential_scale(mu) / g.cubes().len() as f64,
        opts,
        moments,
        lipschitz: cal.lipschitz,
        hessian: cal.hessian,
        n: g.n() as i32,
        out: PotentialValue::default(),
        stats: TreeStats::default(),
    };
    w.visit(0, 0);
    Ok((w.out, w.stats))
}
