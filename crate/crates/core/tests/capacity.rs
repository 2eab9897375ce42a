use std::sync::Arc;

use cclab_core::capacity::{
    bounds, bounds_for, default_tol, lower_bound, theta_sum_of, upper_bound_onesided, upper_bound_sym,
    upper_onesided_estimate, CapacityOptions, CapacityProblem,
};
use cclab_core::geometry::{CantorSpec, Transform};
use cclab_core::kernel::KernelKind;
use cclab_core::potential::{inf_potential_on_set, potential_direct, SearchOptions, Tree};
use cclab_core::{Error, SpaceTimePoint};

fn spec(n: usize, lam: f64) -> CantorSpec {
    CantorSpec::constant(n, lam).unwrap()
}

fn transformed(s: &CantorSpec, k: usize, map: &Transform, forward: KernelKind) -> CapacityProblem {
    let g = s.build_generation(k).unwrap().apply(map).unwrap();
    CapacityProblem::new(Arc::new(g), forward).unwrap()
}

#[test]
fn k0_examples() {
    let s = spec(1, 0.25);
    let l = lower_bound(&s, 0, 1e-3).unwrap();
    assert!(l > 0.0 && l <= 1.0);
    // sup ≥ value at the top centre, computed by the direct evaluator.
    let mu = CapacityProblem::from_spec(&s, 0).unwrap();
    let top = potential_direct(mu.measure(), KernelKind::P.kernel().as_ref(), &SpaceTimePoint::new(&[0.5], 1.0).unwrap(), 1e-6)
        .unwrap();
    assert!(1.0 / l >= top.value - top.err - 1e-3);
    assert!(1.0 / l >= 1.0 / 2f64.sqrt());

    let u = upper_bound_sym(&s, 0, 1e-3).unwrap();
    assert!(u.is_finite() && u >= l);
    let b = bounds(&s, 0, 1e-3).unwrap();
    assert!(b.ratio_lower > 0.0 && b.ratio_upper.is_finite());
}

#[test]
fn onesided_bound_is_inconclusive_on_cantor_generations() {
    // `P*∗μ_k` vanishes on the top faces of the topmost cubes, so the inf
    // over E_k is zero and the one-sided dual bound carries no information.
    let s = spec(1, 0.25);
    for k in [0, 2] {
        assert!(matches!(upper_bound_onesided(&s, k, 1e-3), Err(Error::Inconclusive(_))));
    }
    let b = bounds(&s, 1, 1e-3).unwrap();
    assert!(b.upper_onesided.is_none());
    assert_eq!(b.upper, 2.0 * b.upper_sym);
}

#[test]
fn reflected_infs_cross_check() {
    // inf P∗μ_k and inf P*∗μ_k on E_k agree (time symmetry), and
    // P_sy = (P + P*)/2 gives inf_sym ≥ (inf_P + inf_P*)/2.
    let s = spec(1, 0.25);
    let opts = SearchOptions::default();
    for k in 0..=2 {
        let p = CapacityProblem::from_spec(&s, k).unwrap();
        let tol = 1e-3;
        let inf = |kind: KernelKind| {
            inf_potential_on_set(p.measure(), kind.kernel().as_ref(), &p.gen, tol, &Tree::default(), &opts).unwrap()
        };
        let (a, b, c) = (inf(KernelKind::P), inf(KernelKind::PStar), inf(KernelKind::PSym));
        assert!((a.extremum - b.extremum).abs() <= 4.0 * tol);
        assert!(c.extremum >= 0.5 * (a.extremum + b.extremum) - tol);
        let o = upper_onesided_estimate(&p, tol, &CapacityOptions::default());
        assert!(matches!(o, Err(Error::Inconclusive(_))));
    }
}

#[test]
fn theta_sums() {
    let t = spec(1, 1.0 / 3.0);
    // Σ_{j≤5} (3/4)^j = 4(1 − (3/4)^6) = 3367/1024.
    let direct: f64 = (0..=5).map(|j| 0.75f64.powi(j)).sum();
    assert!((direct - 3367.0 / 1024.0).abs() < 1e-12);
    let g = t.build_generation(5).unwrap();
    assert!((theta_sum_of(&g).unwrap() - direct).abs() < 1e-12);
    assert!((1.0 / t.theta_sum(5).unwrap() - 1024.0 / 3367.0).abs() < 1e-12);
    for (k, want) in [(0, 1.0), (1, 4.0 / 7.0), (2, 16.0 / 37.0), (3, 64.0 / 175.0)] {
        assert!((1.0 / t.theta_sum(k).unwrap() - want).abs() < 1e-12);
    }
    let half = spec(1, 0.25);
    for k in 0..=3 {
        let g = half.build_generation(k).unwrap();
        assert!((theta_sum_of(&g).unwrap() - (k + 1) as f64).abs() < 1e-12);
    }
}

#[test]
fn default_tolerances() {
    assert_eq!(default_tol(0), 1e-3);
    assert_eq!(default_tol(4), 1e-3);
    assert_eq!(default_tol(5), 1e-2);
    assert_eq!(default_tol(6), 1e-2);
}

#[test]
fn scaling_translation_reflection() {
    let s = spec(1, 0.25);
    let opts = CapacityOptions::default();
    for k in 0..=2 {
        let tol = default_tol(k);
        let base = bounds(&s, k, tol).unwrap();
        let scaled = bounds_for(&transformed(&s, k, &Transform::Scale(2.0), KernelKind::P), tol, &opts).unwrap();
        assert!((scaled.lower - 2.0 * base.lower).abs() <= 1e-3 * scaled.lower);
        assert!((scaled.upper - 2.0 * base.upper).abs() <= 1e-3 * scaled.upper);
        let shift = SpaceTimePoint::new(&[-3.75], 12.5).unwrap();
        let moved = bounds_for(&transformed(&s, k, &Transform::Translate(shift), KernelKind::P), tol, &opts).unwrap();
        assert!((moved.lower - base.lower).abs() <= 1e-9 * base.lower, "k={k} {} {} / {} {}", moved.lower, base.lower, moved.upper, base.upper);
        assert!((moved.upper - base.upper).abs() <= 1e-9 * base.upper);
        let refl = transformed(&s, k, &Transform::ReflectTime { about: 0.5 }, KernelKind::PStar);
        let r = bounds_for(&refl, tol, &opts).unwrap();
        assert!((r.lower - base.lower).abs() <= 4.0 * tol * base.lower, "{} vs {}", r.lower, base.lower);
        assert!((r.upper - base.upper).abs() <= 4.0 * tol * base.upper);
    }
}

#[test]
fn ordering_and_trend_n1() {
    for lam in [0.25, 1.0 / 3.0, 0.3] {
        let s = spec(1, lam);
        let mut prev_upper = f64::INFINITY;
        for k in 0..=4 {
            let b = bounds(&s, k, default_tol(k)).unwrap();
            assert!(0.0 < b.lower && b.lower <= b.upper, "λ={lam} k={k}: {b:?}");
            assert!((b.theta_sum_inv - 1.0 / s.theta_sum(k).unwrap()).abs() < 1e-12);
            if lam == 0.25 {
                assert!(b.upper <= prev_upper * (1.0 + 1e-9));
            }
            prev_upper = b.upper;
        }
    }
}

#[test]
fn upper_sym_band_for_constant_theta() {
    let s = spec(1, 0.25);
    let first = 2.0 * upper_bound_sym(&s, 1, default_tol(1)).unwrap();
    for k in 2..=5 {
        let v = (k + 1) as f64 * upper_bound_sym(&s, k, default_tol(k)).unwrap();
        assert!(v >= 0.5 * first && v <= 1.5 * first, "k={k}: {v} vs band around {first}");
    }
}

#[test]
fn ordering_n2_shallow() {
    for lam in [0.25, 1.0 / 3.0, 0.3] {
        let s = spec(2, lam);
        for k in 0..=2 {
            let b = bounds(&s, k, default_tol(k)).unwrap();
            assert!(0.0 < b.lower && b.lower <= b.upper, "λ={lam} k={k}: {b:?}");
        }
    }
}

/// The deeper part of the n = 2 suite; a few minutes each on one core.
#[test]
#[ignore]
fn ordering_n2_deep() {
    for lam in [0.25, 1.0 / 3.0, 0.3] {
        let s = spec(2, lam);
        for k in 3..=4 {
            let b = bounds(&s, k, default_tol(k)).unwrap();
            assert!(0.0 < b.lower && b.lower <= b.upper, "λ={lam} k={k}: {b:?}");
        }
    }
}

#[test]
fn invalid_inputs() {
    let s = spec(1, 0.25);
    assert!(lower_bound(&s, 1, 0.0).is_err());
    assert!(matches!(CantorSpec::constant(1, 0.6), Err(e) if e.is_config()));
    let g = Arc::new(s.build_generation(1).unwrap());
    assert!(CapacityProblem::new(g, KernelKind::PSym).is_err());
}
