//! Measures on cube unions and finite atomic measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Generation};
use crate::point::SpaceTimePoint;

/// Constant-density measure `density · L^{n+1}` restricted to a disjoint
/// cube family.
#[derive(Debug, Clone)]
pub struct CubeUnionMeasure {
    support: Arc<Generation>,
    density: f64,
    /// Mass of one cube at each level (hierarchical supports only).
    level_mass: Vec<f64>,
}

impl CubeUnionMeasure {
    /// `density` must be positive; use [`CubeUnionMeasure::zero_on`] for the
    /// zero measure.
    pub fn new(support: Arc<Generation>, density: f64) -> Result<Self> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::Argument(format!("density must be positive, got {density}")));
        }
        Ok(Self::build(support, density))
    }

    /// The zero measure, kept on a support so that samplers know where to look.
    pub fn zero_on(support: Arc<Generation>) -> Self {
        Self::build(support, 0.0)
    }

    fn build(support: Arc<Generation>, density: f64) -> Self {
        let level_mass = if support.is_hierarchical() {
            let leaf = density * support.cubes()[0].volume();
            let b = support.branching() as f64;
            let k = support.level();
            (0..=k).map(|j| leaf * b.powi((k - j) as i32)).collect()
        } else {
            Vec::new()
        };
        Self { support, density, level_mass }
    }

    pub fn support(&self) -> &Arc<Generation> {
        &self.support
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn n(&self) -> usize {
        self.support.n()
    }

    pub fn cubes(&self) -> &[Cube] {
        self.support.cubes()
    }

    pub fn is_zero(&self) -> bool {
        self.density == 0.0
    }

    pub fn total_mass(&self) -> f64 {
        if let Some(m) = self.level_mass.first() {
            return *m;
        }
        self.density * self.cubes().iter().map(Cube::volume).sum::<f64>()
    }

    /// Mass of a single cube of generation `j` (hierarchical supports).
    pub fn level_mass(&self, j: usize) -> Option<f64> {
        self.level_mass.get(j).copied()
    }

    /// `factor · μ`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(Error::Argument(format!("mass factor must be non-negative, got {factor}")));
        }
        Ok(Self::build(self.support.clone(), self.density * factor))
    }

    /// Exact `μ(Q)`: density times the summed overlap volumes.
    pub fn measure_of_cube(&self, q: &Cube) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.support.is_hierarchical() {
            let mut acc = 0.0;
            self.accumulate(q, 0, 0, &mut acc);
            acc
        } else {
            self.density * self.cubes().iter().map(|c| c.intersection_volume(q)).sum::<f64>()
        }
    }

    fn accumulate(&self, q: &Cube, level: usize, idx: usize, acc: &mut f64) {
        let node = &self.support.level_cubes(level).unwrap()[idx];
        if node.intersection_volume(q) == 0.0 {
            return;
        }
        if q.contains_cube(node) {
            *acc += self.level_mass[level];
            return;
        }
        if level == self.support.level() {
            *acc += self.density * node.intersection_volume(q);
            return;
        }
        let b = self.support.branching();
        for c in 0..b {
            self.accumulate(q, level + 1, idx * b + c, acc);
        }
    }

    /// Every ancestor cube of the support (or the support cubes and the
    /// bounding cube for flat families).
    fn dyadic_candidates(&self) -> Vec<(Cube, f64)> {
        let g = &self.support;
        if g.is_hierarchical() {
            (0..=g.level())
                .flat_map(|j| {
                    let m = self.level_mass[j];
                    g.level_cubes(j).unwrap().iter().map(move |c| (*c, m))
                })
                .collect()
        } else {
            let mut v: Vec<(Cube, f64)> =
                g.cubes().iter().map(|c| (*c, self.density * c.volume())).collect();
            let b = g.bounding_cube();
            v.push((b, self.measure_of_cube(&b)));
            v
        }
    }
}

/// Sampling parameters for [`growth_constant`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthProbe {
    pub trials: usize,
    pub seed: u64,
}

impl Default for GrowthProbe {
    fn default() -> Self {
        Self { trials: 4096, seed: 0x6A0_7711 }
    }
}

/// Empirical `sup_Q μ(Q)/ℓ(Q)^d`.
///
/// Candidates are every dyadic ancestor cube (deterministic) plus `trials`
/// random cubes with centres in the 2-neighbourhood of the support and
/// sides log-uniform in `[ℓ_k, 4]`, both in units of the root side.
pub fn growth_constant(mu: &CubeUnionMeasure, d: f64, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Argument("growth_constant needs at least one trial".into()));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Argument(format!("growth exponent must be non-negative, got {d}")));
    }
    if mu.is_zero() {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for (c, m) in mu.dyadic_candidates() {
        best = best.max(m / c.side.powf(d));
    }
    let g = mu.support();
    let root = g.bounding_cube();
    let scale = root.side;
    let dim = g.dim();
    let fine = g.side();
    let (log_lo, log_hi) = (fine.ln(), (4.0 * scale).ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let side = if log_hi > log_lo { rng.random_range(log_lo..log_hi).exp() } else { fine };
        let mut corner = SpaceTimePoint::zeros(dim);
        for i in 0..dim {
            let centre = root.lo(i) - 2.0 * scale + rng.random::<f64>() * 5.0 * scale;
            corner[i] = centre - 0.5 * side;
        }
        let q = Cube { corner, side };
        best = best.max(mu.measure_of_cube(&q) / side.powf(d));
    }
    Ok(best)
}

/// Rescales `μ` so its empirical `d`-growth constant (default probe) is at
/// most one. Never scales up.
pub fn frostman_rescale(mu: &CubeUnionMeasure, d: f64) -> Result<CubeUnionMeasure> {
    let probe = GrowthProbe::default();
    let c = growth_constant(mu, d, probe.trials, probe.seed)?;
    if c == 0.0 {
        return Err(Error::Argument("cannot rescale the zero measure".into()));
    }
    mu.scaled((1.0 / c).min(1.0))
}

/// The probability measure `μ_k`: uniform on the generation cubes.
pub fn uniform_on_generation(gen: Arc<Generation>) -> Result<CubeUnionMeasure> {
    let vol: f64 = gen.cubes().iter().map(Cube::volume).sum();
    if vol <= 0.0 {
        return Err(Error::Argument("empty generation".into()));
    }
    CubeUnionMeasure::new(gen, 1.0 / vol)
}

/// Finite sum of weighted point masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: SpaceTimePoint,
    pub weight: f64,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Argument("atomic measure needs at least one atom".into()));
        }
        let dim = atoms[0].point.dim();
        for a in &atoms {
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::Argument(format!("atom weight must be positive, got {}", a.weight)));
            }
            if a.point.dim() != dim {
                return Err(Error::Argument("atoms of mixed dimension".into()));
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].point.dim()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// `m` atoms of weight `1/m` at the left endpoints of `m` equal pieces of
/// `[a, b)`.
pub fn segment_measure(a: &SpaceTimePoint, b: &SpaceTimePoint, m: usize) -> Result<AtomicMeasure> {
    if m == 0 {
        return Err(Error::Argument("segment measure needs m >= 1".into()));
    }
    if a.dim() != b.dim() || a == b {
        return Err(Error::Argument("degenerate segment".into()));
    }
    let dir = *b - *a;
    let w = 1.0 / m as f64;
    let atoms = (0..m)
        .map(|j| Atom { point: *a + dir * (j as f64 / m as f64), weight: w })
        .collect();
    AtomicMeasure::new(atoms)
}

/// Either kind of measure the potential engine accepts.
#[derive(Debug, Clone)]
pub enum Measure {
    CubeUnion(CubeUnionMeasure),
    Atomic(AtomicMeasure),
}

impl Measure {
    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::CubeUnion(m) => m.total_mass(),
            Measure::Atomic(m) => m.total_mass(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::CubeUnion(m) => m.support().dim(),
            Measure::Atomic(m) => m.dim(),
        }
    }

    /// JSON export; cube-union measures refer to their generation by name.
    pub fn to_json(&self, generation_ref: &str) -> MeasureJson {
        match self {
            Measure::CubeUnion(m) => MeasureJson::CubeUnion {
                density: m.density(),
                generation_ref: generation_ref.to_string(),
            },
            Measure::Atomic(m) => MeasureJson::Atomic { atoms: m.atoms().to_vec() },
        }
    }
}

impl From<CubeUnionMeasure> for Measure {
    fn from(m: CubeUnionMeasure) -> Self {
        Measure::CubeUnion(m)
    }
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

/// `{density, generation_ref}` or `{atoms: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureJson {
    CubeUnion { density: f64, generation_ref: String },
    Atomic { atoms: Vec<Atom> },
}

impl MeasureJson {
    /// Rebuilds the measure, resolving `generation_ref` through `resolve`.
    pub fn into_measure<F>(self, resolve: F) -> Result<Measure>
    where
        F: FnOnce(&str) -> Result<Arc<Generation>>,
    {
        match self {
            MeasureJson::CubeUnion { density, generation_ref } => {
                let g = resolve(&generation_ref)?;
                Ok(Measure::CubeUnion(CubeUnionMeasure::new(g, density)?))
            }
            MeasureJson::Atomic { atoms } => Ok(Measure::Atomic(AtomicMeasure::new(atoms)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CantorSpec, Transform};

    fn pt(c: &[f64]) -> SpaceTimePoint {
        SpaceTimePoint::from_coords(c).unwrap()
    }

    fn mu(n: usize, lam: f64, k: usize) -> CubeUnionMeasure {
        let g = CantorSpec::constant(n, lam).unwrap().build_generation(k).unwrap();
        uniform_on_generation(Arc::new(g)).unwrap()
    }

    #[test]
    fn uniform_measure_examples() {
        let m0 = mu(1, 0.25, 0);
        assert_eq!(m0.density(), 1.0);
        assert_eq!(m0.total_mass(), 1.0);
        let m1 = mu(1, 0.25, 1);
        assert_eq!(m1.density(), 4.0);
        for c in m1.cubes() {
            assert_eq!(m1.measure_of_cube(c), 0.25);
        }
        assert_eq!(m1.measure_of_cube(&Cube::new(SpaceTimePoint::zeros(2), 1.0).unwrap()), 1.0);
        let half = Cube::new(SpaceTimePoint::zeros(2), 0.5).unwrap();
        assert_eq!(m1.measure_of_cube(&half), 0.25);
        let away = Cube::new(pt(&[5.0, 5.0]), 1.0).unwrap();
        assert_eq!(m1.measure_of_cube(&away), 0.0);
    }

    #[test]
    fn ancestor_mass_law() {
        for (n, lam, k) in [(1, 0.25, 4), (1, 1.0 / 3.0, 3), (2, 0.3, 2)] {
            let m = mu(n, lam, k);
            let g = m.support().clone();
            for j in 0..=k {
                let expected = 2f64.powi(-((j * (n + 1)) as i32));
                for c in g.level_cubes(j).unwrap() {
                    let got = m.measure_of_cube(c);
                    assert!((got - expected).abs() <= 1e-14 * expected, "{got} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn hierarchical_and_flat_masses_agree() {
        let m = mu(1, 1.0 / 3.0, 3);
        let flat_gen = Arc::new(Generation::flat(3, m.cubes().to_vec()).unwrap());
        let flat = CubeUnionMeasure::new(flat_gen, m.density()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let side = rng.random_range(0.01..0.7);
            let c = pt(&[rng.random_range(-0.2..1.0), rng.random_range(-0.2..1.0)]);
            let q = Cube::new(c, side).unwrap();
            let a = m.measure_of_cube(&q);
            let b = flat.measure_of_cube(&q);
            assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn scaling_covariance_of_cube_mass() {
        // Scaling support and query by s with density fixed multiplies the
        // mass by s^{n+1}.
        let m = mu(1, 0.25, 2);
        let s = 2.0;
        let g2 = Arc::new(m.support().apply(&Transform::Scale(s)).unwrap());
        let m2 = CubeUnionMeasure::new(g2, m.density()).unwrap();
        let q = Cube::new(pt(&[0.1, 0.05]), 0.4).unwrap();
        let q2 = Transform::Scale(s).apply_cube(&q);
        assert_eq!(m2.measure_of_cube(&q2), s * s * m.measure_of_cube(&q));
    }

    #[test]
    fn growth_examples() {
        let m0 = mu(1, 0.25, 0);
        assert!(growth_constant(&m0, 2.0, 100, 1).unwrap() >= 1.0);
        for seed in [1, 2, 3] {
            for k in 0..=5 {
                let g = growth_constant(&mu(1, 0.25, k), 1.0, 2000, seed).unwrap();
                assert!(g >= 1.0 && g <= 16.0, "k={k} growth {g}");
            }
        }
        let m3 = mu(1, 0.25, 3);
        let a = growth_constant(&m3, 1.0, 500, 9).unwrap();
        let b = growth_constant(&m3.scaled(0.5).unwrap(), 1.0, 500, 9).unwrap();
        assert_eq!(b, 0.5 * a);
        assert!(growth_constant(&m3, 1.0, 0, 9).is_err());
    }

    #[test]
    fn frostman_rescaling() {
        let m = mu(1, 0.25, 3);
        let p = GrowthProbe::default();
        let c = growth_constant(&m, 1.0, p.trials, p.seed).unwrap();
        let r = frostman_rescale(&m, 1.0).unwrap();
        assert!((r.total_mass() - 1.0 / c).abs() < 1e-15);
        let again = growth_constant(&r, 1.0, p.trials, p.seed).unwrap();
        assert!(again <= 1.0 + 1e-12);

        // Already compliant: the factor is clamped at one.
        let tiny = m.scaled(1e-3).unwrap();
        let t = frostman_rescale(&tiny, 1.0).unwrap();
        assert_eq!(t.total_mass(), tiny.total_mass());

        // d = n + α below the dimension (≈ 1.26) keeps positive mass.
        let m13 = mu(1, 1.0 / 3.0, 4);
        let r13 = frostman_rescale(&m13, 1.2).unwrap();
        assert!(r13.total_mass() > 0.0);

        let zero = CubeUnionMeasure::zero_on(m.support().clone());
        assert!(frostman_rescale(&zero, 1.0).is_err());
    }

    #[test]
    fn segment_atoms() {
        let s = segment_measure(&pt(&[0.0, 0.0]), &pt(&[0.0, 1.0]), 2).unwrap();
        assert_eq!(s.atoms().len(), 2);
        assert_eq!(s.atoms()[0].point, pt(&[0.0, 0.0]));
        assert_eq!(s.atoms()[1].point, pt(&[0.0, 0.5]));
        assert!(s.atoms().iter().all(|a| a.weight == 0.5));
        for m in [1, 7, 100] {
            let s = segment_measure(&pt(&[0.0, 0.0]), &pt(&[1.0, 2.0]), m).unwrap();
            assert!((s.total_mass() - 1.0).abs() < 1e-12);
        }
        assert!(segment_measure(&pt(&[0.0, 0.0]), &pt(&[0.0, 0.0]), 3).is_err());
        assert!(segment_measure(&pt(&[0.0, 0.0]), &pt(&[0.0, 1.0]), 0).is_err());
    }

    #[test]
    fn measure_json_shapes() {
        let m = Measure::from(mu(1, 0.25, 1));
        let js = serde_json::to_value(m.to_json("gen.json")).unwrap();
        assert_eq!(js, serde_json::json!({"density": 4.0, "generation_ref": "gen.json"}));
        let s: Measure = segment_measure(&pt(&[0.0, 0.0]), &pt(&[0.0, 1.0]), 2).unwrap().into();
        let js = serde_json::to_value(s.to_json("")).unwrap();
        assert_eq!(js["atoms"][1]["weight"], 0.5);
        let back: MeasureJson = serde_json::from_value(js).unwrap();
        let rebuilt = back.into_measure(|_| unreachable!()).unwrap();
        assert_eq!(rebuilt.total_mass(), 1.0);
    }
}
