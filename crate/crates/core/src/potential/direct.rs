use crate::error::Result;
use crate::kernel::Kernel;
use crate::measure::{AtomicMeasure, CubeUnionMeasure, Measure};
use crate::point::SpaceTimePoint;
use crate::quadrature::{integrate_cube, QuadratureOptions};

use super::{check_args, potential_scale, PotentialValue};

pub fn potential_direct_with(
    mu: &Measure,
    kernel: &dyn Kernel,
    p: &SpaceTimePoint,
    tol: f64,
    opts: &QuadratureOptions,
) -> Result<PotentialValue> {
    check_args(mu.dim(), p, tol)?;
    Ok(match mu {
        Measure::Atomic(m) => atomic(m, kernel, p),
        Measure::CubeUnion(m) => cube_union(m, kernel, p, tol, opts),
    })
}

fn atomic(mu: &AtomicMeasure, kernel: &dyn Kernel, p: &SpaceTimePoint) -> PotentialValue {
    let mut out = PotentialValue::default();
    for a in mu.atoms() {
        let z = *p - a.point;
        if z.is_origin() {
            out.skipped_atoms += 1;
            continue;
        }
        out.value += a.weight * kernel.eval_unchecked(&z);
    }
    out
}

fn cube_union(mu: &CubeUnionMeasure, kernel: &dyn Kernel, p: &SpaceTimePoint, tol: f64, opts: &QuadratureOptions) -> PotentialValue {
    let mut out = PotentialValue::default();
    if mu.is_zero() {
        return out;
    }
    let rho = mu.density();
    let per_cube = tol * potential_scale(mu) / mu.cubes().len() as f64 / rho;
    for c in mu.cubes() {
        let r = integrate_cube(kernel, p, c, per_cube, opts);
        out.value += rho * r.value;
        out.err += rho * r.err;
        out.singular_excluded += rho * r.excluded;
    }
    out
}
