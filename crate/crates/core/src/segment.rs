//! Sup-potentials of discretised segments as the number of atoms grows.
//!
//! For a segment with atoms of weight `1/m`, the sup of `P∗μ` over points
//! at distance at least `|b − a|/m` from the atoms grows like `ln m` when the
//! segment has a time component, and stays bounded when it is horizontal.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelKind;
use crate::measure::segment_measure;
use crate::point::SpaceTimePoint;
use crate::potential::{sup_potential_atomic, ExtremumReport, SearchOptions};

/// Endpoints `(0, 0)` and `L (cos α e_1, sin α)`: `α = 0` is horizontal,
/// `α = π/2` vertical.
pub fn segment_endpoints(n: usize, alpha: f64, length: f64) -> Result<(SpaceTimePoint, SpaceTimePoint)> {
    if n == 0 || n + 1 > crate::point::MAX_AMBIENT {
        return Err(Error::Argument(format!("unsupported spatial dimension {n}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Argument(format!("segment length must be positive, got {length}")));
    }
    let a = SpaceTimePoint::zeros(n + 1);
    let mut b = a;
    b[0] = length * alpha.cos();
    b[n] = length * alpha.sin();
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SegmentRow {
    pub m: usize,
    pub sup: f64,
    pub report: ExtremumReport,
}

/// `sup P∗μ_m` for each `m`, over points at distance ≥ `|b − a|/m` from
/// the atoms.
pub fn segment_sweep(
    a: &SpaceTimePoint,
    b: &SpaceTimePoint,
    ms: &[usize],
    kernel: KernelKind,
    tol: f64,
) -> Result<Vec<SegmentRow>> {
    let k = kernel.kernel();
    let len = a.dist(b);
    let opts = SearchOptions { refine_best: 8, ..Default::default() };
    ms.iter()
        .map(|&m| {
            let mu = segment_measure(a, b, m)?;
            let report = sup_potential_atomic(&mu, k.as_ref(), len / m as f64, tol, &opts)?;
            Ok(SegmentRow { m, sup: report.extremum, report })
        })
        .collect()
}

/// Average growth of the sup per decade of `m` between the first and last
/// rows.
pub fn growth_per_decade(rows: &[SegmentRow]) -> Option<f64> {
    let (first, last) = (rows.first()?, rows.last()?);
    let decades = (last.m as f64 / first.m as f64).log10();
    (decades > 0.0).then(|| (last.sup - first.sup) / decades)
}
