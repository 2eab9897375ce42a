use cclab_core::kernel::KernelKind;
use cclab_core::potential::potential_direct;
use cclab_core::segment::{growth_per_decade, segment_endpoints, segment_sweep};
use cclab_core::measure::segment_measure;
use cclab_core::SpaceTimePoint;

fn harmonic(m: usize) -> f64 {
    (1..=m).map(|j| 1.0 / j as f64).sum()
}

#[test]
fn endpoints() {
    let (a, b) = segment_endpoints(1, std::f64::consts::FRAC_PI_2, 1.0).unwrap();
    assert_eq!(a, SpaceTimePoint::new(&[0.0], 0.0).unwrap());
    assert!(b[0].abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15);
    let (_, b) = segment_endpoints(2, 0.0, 2.0).unwrap();
    assert_eq!(b, SpaceTimePoint::new(&[2.0, 0.0], 0.0).unwrap());
}

#[test]
fn harmonic_oracle_at_the_top() {
    let (a, b) = segment_endpoints(1, std::f64::consts::FRAC_PI_2, 1.0).unwrap();
    for m in [10, 100, 1000] {
        let mu = segment_measure(&a, &b, m).unwrap().into();
        let v = potential_direct(&mu, KernelKind::P.kernel().as_ref(), &b, 1e-9).unwrap();
        assert!((v.value - harmonic(m)).abs() < 1e-12 * harmonic(m));
    }
}

#[test]
fn vertical_sup_dominates_the_harmonic_sum() {
    let (a, b) = segment_endpoints(1, std::f64::consts::FRAC_PI_2, 1.0).unwrap();
    let rows = segment_sweep(&a, &b, &[10, 100], KernelKind::P, 1e-3).unwrap();
    for r in &rows {
        assert!(r.sup >= harmonic(r.m) * (1.0 - 1e-9), "m={}: {} < H", r.m, r.sup);
    }
    let g = growth_per_decade(&rows).unwrap();
    assert!(g > 2.0 && g < 2.6, "{g}");
}

#[test]
fn horizontal_sup_stays_bounded() {
    let (a, b) = segment_endpoints(1, 0.0, 1.0).unwrap();
    let rows = segment_sweep(&a, &b, &[10, 100, 1000], KernelKind::P, 1e-3).unwrap();
    assert!(rows[2].sup <= 1.5 * rows[0].sup, "{:?}", rows.iter().map(|r| r.sup).collect::<Vec<_>>());
}

#[test]
fn tilted_segment_still_diverges() {
    let (a, b) = segment_endpoints(1, 0.3, 1.0).unwrap();
    let rows = segment_sweep(&a, &b, &[10, 100, 1000], KernelKind::P, 1e-3).unwrap();
    assert!(rows[1].sup > rows[0].sup && rows[2].sup > rows[1].sup);
    assert!(growth_per_decade(&rows).unwrap() > 0.5);
}

#[test]
fn degenerate_inputs() {
    let p = SpaceTimePoint::new(&[0.0], 0.0).unwrap();
    assert!(segment_measure(&p, &p, 10).is_err());
    assert!(segment_endpoints(1, 0.5, 0.0).is_err());
}
