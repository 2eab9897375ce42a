//! Brackets for the Hausdorff content `H^d_∞(E_k)`.

use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{CantorSpec, Generation};
use crate::measure::{growth_constant, uniform_on_generation, GrowthProbe};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContentBracket {
    pub d: f64,
    pub lower: f64,
    pub upper: f64,
}

fn check_d(d: f64) -> Result<()> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Argument(format!("content exponent must be non-negative, got {d}")));
    }
    Ok(())
}

/// Best cover by a single generation: `min_{j≤k} N_j (√(n+1) ℓ_j)^d`,
/// sides read off the hierarchy.
pub fn content_upper_of(gen: &Generation, d: f64) -> Result<f64> {
    check_d(d)?;
    if !gen.is_hierarchical() {
        return Err(Error::Unsupported("covering sums need the generation hierarchy".into()));
    }
    Ok((0..=gen.level())
        .map(|j| {
            let cubes = gen.level_cubes(j).unwrap();
            cubes.len() as f64 * cubes[0].diameter().powf(d)
        })
        .fold(f64::INFINITY, f64::min))
}

pub fn content_upper(spec: &CantorSpec, k: usize, d: f64) -> Result<f64> {
    check_d(d)?;
    let root = ((spec.n() + 1) as f64).sqrt();
    let mut best = f64::INFINITY;
    for j in 0..=k {
        let count = crate::geometry::cube_count(spec.n(), j) as f64;
        best = best.min(count * (root * spec.side_length(j)?).powf(d));
    }
    Ok(best)
}

/// Mass-distribution lower bound `μ_k(E_k)/C` with `C` the empirical
/// `d`-growth constant of `μ_k`. This is the mass of the Frostman-rescaled
/// measure whenever `C ≥ 1`; it is not clamped, so the bound keeps its
/// `λ^d` scaling for configurations much smaller than the unit cube. For
/// `d = 0` every non-empty set has content 1.
pub fn content_lower_of(gen: Arc<Generation>, d: f64) -> Result<f64> {
    check_d(d)?;
    if d == 0.0 {
        return Ok(1.0);
    }
    let mu = uniform_on_generation(gen)?;
    let probe = GrowthProbe::default();
    let c = growth_constant(&mu, d, probe.trials, probe.seed)?;
    Ok(mu.total_mass() / c)
}

pub fn content_lower(spec: &CantorSpec, k: usize, d: f64) -> Result<f64> {
    content_lower_of(Arc::new(spec.build_generation(k)?), d)
}

pub fn content_bracket(spec: &CantorSpec, k: usize, d: f64) -> Result<ContentBracket> {
    let gen = Arc::new(spec.build_generation(k)?);
    let upper = content_upper_of(&gen, d)?;
    let lower = content_lower_of(gen, d)?;
    Ok(ContentBracket { d, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Transform;

    #[test]
    fn upper_examples() {
        let q = CantorSpec::constant(1, 0.25).unwrap();
        for k in 0..=6 {
            assert!((content_upper(&q, k, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        }
        let t = CantorSpec::constant(1, 1.0 / 3.0).unwrap();
        for k in 0..=6 {
            assert!((content_upper(&t, k, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        }
        let mut prev = f64::INFINITY;
        for k in 0..=6 {
            let v = content_upper(&t, k, 2.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert_eq!(content_upper(&t, 3, 0.0).unwrap(), 1.0);
        assert!(content_upper(&t, 3, -1.0).is_err());
    }

    #[test]
    fn spec_and_generation_forms_agree() {
        for (n, lam) in [(1, 0.25), (1, 0.3), (2, 1.0 / 3.0)] {
            let s = CantorSpec::constant(n, lam).unwrap();
            let g = s.build_generation(3).unwrap();
            for d in [0.5, n as f64, n as f64 + 0.2, n as f64 + 1.0] {
                let a = content_upper(&s, 3, d).unwrap();
                let b = content_upper_of(&g, d).unwrap();
                assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn lower_examples() {
        let q = CantorSpec::constant(1, 0.25).unwrap();
        for k in 0..=4 {
            let l = content_lower(&q, k, 1.0).unwrap();
            assert!(l >= 1.0 / 16.0, "k={k}: {l}");
            assert!(l <= content_upper(&q, k, 1.0).unwrap());
        }
        assert_eq!(content_lower(&q, 3, 0.0).unwrap(), 1.0);

        // Where the growth constant is at least one this is the mass of the
        // Frostman-rescaled measure.
        let g = Arc::new(q.build_generation(3).unwrap());
        let mu = uniform_on_generation(g.clone()).unwrap();
        let f = crate::measure::frostman_rescale(&mu, 1.0).unwrap();
        assert_eq!(content_lower_of(g, 1.0).unwrap(), f.total_mass());
    }

    #[test]
    fn brackets_are_ordered_on_the_suite() {
        for (n, lam) in [(1, 0.25), (1, 1.0 / 3.0), (1, 0.3), (2, 0.25)] {
            let s = CantorSpec::constant(n, lam).unwrap();
            let kmax = if n == 1 { 4 } else { 2 };
            for k in 0..=kmax {
                for d in [n as f64, n as f64 + 0.2, n as f64 + 0.5, n as f64 + 1.0] {
                    let b = content_bracket(&s, k, d).unwrap();
                    assert!(b.lower <= b.upper, "n={n} λ={lam} k={k} d={d}: {b:?}");
                }
            }
        }
    }

    #[test]
    fn scaling_of_both_bounds() {
        let s = CantorSpec::constant(1, 0.3).unwrap();
        let g = Arc::new(s.build_generation(3).unwrap());
        let f = 2.0;
        let g2 = Arc::new(g.apply(&Transform::Scale(f)).unwrap());
        for d in [1.0, 1.2, 1.5] {
            let u = content_upper_of(&g, d).unwrap();
            let u2 = content_upper_of(&g2, d).unwrap();
            assert!((u2 - f.powf(d) * u).abs() <= 1e-9 * u2);
            let l = content_lower_of(g.clone(), d).unwrap();
            let l2 = content_lower_of(g2.clone(), d).unwrap();
            assert!((l2 - f.powf(d) * l).abs() <= 1e-9 * l2, "{l2} vs {}", f.powf(d) * l);
        }
    }
}
