//! Corner-type Cantor sets in ℝ^{n+1}.
//!
//! Generation `k` consists of `2^{k(n+1)}` closed cubes of side
//! `ℓ_k = λ_1⋯λ_k`. Every cube of generation `k−1` is replaced by the
//! `2^{n+1}` cubes of side `λ_k ℓ_{k−1}` sitting at its corners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{SpaceTimePoint, MAX_AMBIENT};

/// Generations with more than `2^HARD_DEPTH_BITS` cubes are refused.
pub const HARD_DEPTH_BITS: usize = 28;
/// Default working cap on the number of cubes, as a power of two.
pub const DEFAULT_DEPTH_BITS: usize = 20;

/// The contraction sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSeq {
    /// `λ_j = c` for every `j`.
    Constant(f64),
    /// `λ_1, …, λ_m`; depth is limited to `m`.
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    n: usize,
    lambdas: LambdaSeq,
    tau0: f64,
}

impl CantorSpec {
    /// Validates `n ≥ 1` and `0 < λ_j ≤ τ_0 < 1/2`. When `tau0` is `None`
    /// the largest supplied `λ_j` is used.
    pub fn new(n: usize, lambdas: LambdaSeq, tau0: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("spatial dimension n must be at least 1".into()));
        }
        if n + 1 > MAX_AMBIENT {
            return Err(Error::Config(format!(
                "ambient dimension n+1 = {} exceeds the supported maximum {MAX_AMBIENT}",
                n + 1
            )));
        }
        let values: &[f64] = match &lambdas {
            LambdaSeq::Constant(c) => std::slice::from_ref(c),
            LambdaSeq::List(v) => v,
        };
        for (j, &l) in values.iter().enumerate() {
            if !(l.is_finite() && l > 0.0 && l < 0.5) {
                return Err(Error::Config(format!(
                    "lambda_{} = {l} violates the constraint 0 < lambda < 1/2",
                    j + 1
                )));
            }
        }
        let max_l = values.iter().cloned().fold(0.0, f64::max);
        let tau0 = tau0.unwrap_or(max_l);
        if !(tau0 < 0.5) {
            return Err(Error::Config(format!("tau0 = {tau0} must be < 1/2")));
        }
        if max_l > tau0 {
            return Err(Error::Config(format!(
                "lambda = {max_l} exceeds tau0 = {tau0}"
            )));
        }
        Ok(Self { n, lambdas, tau0 })
    }

    /// Constant contraction `λ_j ≡ lambda`.
    pub fn constant(n: usize, lambda: f64) -> Result<Self> {
        Self::new(n, LambdaSeq::Constant(lambda), None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn lambdas(&self) -> &LambdaSeq {
        &self.lambdas
    }

    /// Number of available contraction factors, `None` when unbounded.
    pub fn available_depth(&self) -> Option<usize> {
        match &self.lambdas {
            LambdaSeq::Constant(_) => None,
            LambdaSeq::List(v) => Some(v.len()),
        }
    }

    /// Largest depth allowed by the default cube-count cap.
    pub fn default_max_depth(&self) -> usize {
        let cap = DEFAULT_DEPTH_BITS / (self.n + 1);
        self.available_depth().map_or(cap, |d| d.min(cap))
    }

    fn check_depth(&self, k: usize) -> Result<()> {
        if let Some(d) = self.available_depth() {
            if k > d {
                return Err(Error::Config(format!(
                    "depth {k} exceeds the {d} supplied contraction factors"
                )));
            }
        }
        if k * (self.n + 1) > HARD_DEPTH_BITS {
            return Err(Error::Config(format!(
                "depth {k} would produce 2^{} cubes (limit 2^{HARD_DEPTH_BITS})",
                k * (self.n + 1)
            )));
        }
        Ok(())
    }

    /// `λ_j` for `j ≥ 1`.
    pub fn lambda(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::Argument("contraction factors are indexed from 1".into()));
        }
        match &self.lambdas {
            LambdaSeq::Constant(c) => Ok(*c),
            LambdaSeq::List(v) => v.get(j - 1).copied().ok_or_else(|| {
                Error::Config(format!(
                    "depth {j} exceeds the {} supplied contraction factors",
                    v.len()
                ))
            }),
        }
    }

    /// `ℓ_k = ∏_{j≤k} λ_j`, with `ℓ_0 = 1`.
    pub fn side_length(&self, k: usize) -> Result<f64> {
        self.check_depth(k)?;
        (1..=k).try_fold(1.0, |acc, j| Ok(acc * self.lambda(j)?))
    }

    /// `θ_k = 1 / (ℓ_k^n 2^{k(n+1)})`, with `θ_0 = 1`.
    pub fn theta(&self, k: usize) -> Result<f64> {
        let l = self.side_length(k)?;
        Ok(1.0 / (l.powi(self.n as i32) * cube_count(self.n, k) as f64))
    }

    /// `Σ_{j=0}^k θ_j`.
    pub fn theta_sum(&self, k: usize) -> Result<f64> {
        (0..=k).try_fold(0.0, |acc, j| Ok(acc + self.theta(j)?))
    }

    /// The cubes of generation `k` inside `Q^0 = [0,1]^{n+1}`.
    ///
    /// Children are enumerated by corner bit pattern: bit `i` of the child
    /// index set means the child is offset by `ℓ_{k−1} − ℓ_k` along
    /// coordinate `i`. Parents keep their own order, so the children of
    /// parent `p` occupy indices `p·2^{n+1} .. (p+1)·2^{n+1}`.
    pub fn build_generation(&self, k: usize) -> Result<Generation> {
        self.check_depth(k)?;
        let dim = self.n + 1;
        let mut levels = vec![vec![Cube::new(SpaceTimePoint::zeros(dim), 1.0)?]];
        let mut side = 1.0;
        for j in 1..=k {
            let child_side = side * self.lambda(j)?;
            let offset = side - child_side;
            let parents = levels.last().unwrap();
            let mut next = Vec::with_capacity(parents.len() << dim);
            for parent in parents {
                for bits in 0..(1usize << dim) {
                    let mut corner = parent.corner;
                    for i in 0..dim {
                        if bits >> i & 1 == 1 {
                            corner[i] += offset;
                        }
                    }
                    next.push(Cube { corner, side: child_side });
                }
            }
            levels.push(next);
            side = child_side;
        }
        Ok(Generation::from_levels(k, levels))
    }
}

/// `2^{k(n+1)}`.
pub fn cube_count(n: usize, k: usize) -> usize {
    1usize << (k * (n + 1))
}

/// Closed axis-aligned cube `corner + [0, side]^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: SpaceTimePoint,
    pub side: f64,
}

impl Cube {
    pub fn new(corner: SpaceTimePoint, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Argument(format!("cube side must be positive, got {side}")));
        }
        Ok(Self { corner, side })
    }

    pub fn dim(&self) -> usize {
        self.corner.dim()
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.corner[i]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.corner[i] + self.side
    }

    pub fn center(&self) -> SpaceTimePoint {
        let mut c = self.corner;
        for v in c.as_mut_slice() {
            *v += 0.5 * self.side;
        }
        c
    }

    pub fn diameter(&self) -> f64 {
        self.side * (self.dim() as f64).sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn contains_point(&self, p: &SpaceTimePoint) -> bool {
        (0..self.dim()).all(|i| p[i] >= self.lo(i) && p[i] <= self.hi(i))
    }

    /// Exact containment `other ⊂ self`.
    pub fn contains_cube(&self, other: &Cube) -> bool {
        (0..self.dim()).all(|i| other.lo(i) >= self.lo(i) && other.hi(i) <= self.hi(i))
    }

    /// Volume of `self ∩ other`, the product of per-axis overlaps.
    pub fn intersection_volume(&self, other: &Cube) -> f64 {
        let mut v = 1.0;
        for i in 0..self.dim() {
            let w = self.hi(i).min(other.hi(i)) - self.lo(i).max(other.lo(i));
            if w <= 0.0 {
                return 0.0;
            }
            v *= w;
        }
        v
    }

    /// Euclidean distance from `p` to the cube (zero inside).
    pub fn distance_to(&self, p: &SpaceTimePoint) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let d = (self.lo(i) - p[i]).max(p[i] - self.hi(i)).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }

    /// Largest per-coordinate gap between two cubes (zero if they overlap
    /// in every coordinate projection).
    pub fn coordinate_gap(&self, other: &Cube) -> f64 {
        (0..self.dim())
            .map(|i| (other.lo(i) - self.hi(i)).max(self.lo(i) - other.hi(i)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One generation of the construction, with all of its ancestors.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    level: usize,
    /// `levels[j]` holds the generation-`j` cubes; empty-ancestry
    /// generations (imported from a flat cube list) carry only the last.
    levels: Vec<Vec<Cube>>,
}

impl Generation {
    fn from_levels(level: usize, levels: Vec<Vec<Cube>>) -> Self {
        Self { level, levels }
    }

    /// A flat (non-hierarchical) family. Tree evaluation is unavailable.
    pub fn flat(level: usize, cubes: Vec<Cube>) -> Result<Self> {
        if cubes.is_empty() {
            return Err(Error::Argument("empty cube family".into()));
        }
        let dim = cubes[0].dim();
        if cubes.iter().any(|c| c.dim() != dim) {
            return Err(Error::Argument("cubes of mixed dimension".into()));
        }
        Ok(Self { level, levels: vec![cubes] })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n(&self) -> usize {
        self.cubes()[0].dim() - 1
    }

    pub fn dim(&self) -> usize {
        self.cubes()[0].dim()
    }

    pub fn cubes(&self) -> &[Cube] {
        self.levels.last().unwrap()
    }

    /// Side length of the finest cubes (assumes a uniform family).
    pub fn side(&self) -> f64 {
        self.cubes()[0].side
    }

    /// True when every ancestor generation is available.
    pub fn is_hierarchical(&self) -> bool {
        self.levels.len() == self.level + 1
    }

    /// Cubes of generation `j ≤ level`, when the ancestry is known.
    pub fn level_cubes(&self, j: usize) -> Option<&[Cube]> {
        if self.is_hierarchical() {
            self.levels.get(j).map(|v| v.as_slice())
        } else if j == self.level {
            Some(self.cubes())
        } else {
            None
        }
    }

    /// The generation-0 cube `Q^0` (or its image), when known.
    pub fn root(&self) -> Option<&Cube> {
        self.level_cubes(0).map(|c| &c[0])
    }

    /// Smallest cube containing every support cube (equals the root for
    /// hierarchical families).
    pub fn bounding_cube(&self) -> Cube {
        if let Some(r) = self.root() {
            return *r;
        }
        let dim = self.dim();
        let mut lo = SpaceTimePoint::splat(dim, f64::INFINITY);
        let mut hi = SpaceTimePoint::splat(dim, f64::NEG_INFINITY);
        for c in self.cubes() {
            for i in 0..dim {
                lo[i] = lo[i].min(c.lo(i));
                hi[i] = hi[i].max(c.hi(i));
            }
        }
        let side = (0..dim).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
        Cube { corner: lo, side }
    }

    /// Number of children per cube, `2^{n+1}`.
    pub fn branching(&self) -> usize {
        1 << self.dim()
    }

    /// Second moment about the centre, per unit mass, of the uniform
    /// measure on the generation-`level` cubes inside one generation-`j`
    /// cube. Requires the hierarchy.
    pub fn second_moments(&self) -> Option<Vec<f64>> {
        if !self.is_hierarchical() {
            return None;
        }
        let dim = self.dim() as f64;
        let sides: Vec<f64> = self.levels.iter().map(|l| l[0].side).collect();
        let mut m = vec![0.0; sides.len()];
        m[self.level] = dim * sides[self.level].powi(2) / 12.0;
        for j in (0..self.level).rev() {
            let off = 0.5 * (sides[j] - sides[j + 1]);
            m[j] = dim * off * off + m[j + 1];
        }
        Some(m)
    }

    pub fn apply(&self, map: &Transform) -> Result<Generation> {
        if let Transform::Scale(s) = map {
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::Argument(format!("scale factor must be positive, got {s}")));
            }
        }
        if let Transform::Translate(v) = map {
            if v.dim() != self.dim() {
                return Err(Error::Argument("translation of the wrong dimension".into()));
            }
        }
        if let Transform::ReflectSpace { axis, .. } = map {
            if *axis >= self.n() {
                return Err(Error::Argument(format!("no spatial axis {axis}")));
            }
        }
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().map(|c| map.apply_cube(c)).collect())
            .collect();
        Ok(Generation { level: self.level, levels })
    }

    /// The family moved so that its bounding corner sits at the origin,
    /// with every corner snapped to a grid of pitch `2^-30` bounding sides,
    /// and the offset that moves it back. Translated copies of a family
    /// share one frame bit for bit, so estimates computed in it are exactly
    /// translation invariant.
    pub fn canonical_frame(&self) -> (Generation, SpaceTimePoint) {
        let b = self.bounding_cube();
        let pitch = b.side * (-30f64).exp2();
        let levels = self
            .levels
            .iter()
            .map(|l| {
                l.iter()
                    .map(|c| {
                        let mut corner = c.corner - b.corner;
                        for i in 0..corner.dim() {
                            corner[i] = (corner[i] / pitch).round() * pitch;
                        }
                        Cube { corner, side: c.side }
                    })
                    .collect()
            })
            .collect();
        (Generation { level: self.level, levels }, b.corner)
    }

    pub fn to_json(&self) -> GenerationJson {
        GenerationJson {
            level: self.level,
            side: self.side(),
            cubes: self.cubes().to_vec(),
        }
    }
}

/// Export schema `{level, side, cubes: [{corner, side}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationJson {
    pub level: usize,
    pub side: f64,
    pub cubes: Vec<Cube>,
}

impl GenerationJson {
    /// Imports as a flat family; the ancestry is not part of the schema.
    pub fn into_generation(self) -> Result<Generation> {
        Generation::flat(self.level, self.cubes)
    }
}

/// Similarity maps used by the covariance checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Translate(SpaceTimePoint),
    /// Dilation about the origin.
    Scale(f64),
    /// `x_axis ↦ 2c − x_axis`.
    ReflectSpace { axis: usize, about: f64 },
    /// `t ↦ 2c − t`.
    ReflectTime { about: f64 },
}

impl Transform {
    pub fn apply_point(&self, p: &SpaceTimePoint) -> SpaceTimePoint {
        let mut q = *p;
        match *self {
            Transform::Translate(v) => q = q + v,
            Transform::Scale(s) => q = q * s,
            Transform::ReflectSpace { axis, about } => q[axis] = 2.0 * about - q[axis],
            Transform::ReflectTime { about } => {
                let i = q.dim() - 1;
                q[i] = 2.0 * about - q[i];
            }
        }
        q
    }

    pub fn apply_cube(&self, c: &Cube) -> Cube {
        let mut corner = self.apply_point(&c.corner);
        let mut side = c.side;
        match *self {
            Transform::Translate(_) => {}
            Transform::Scale(s) => side *= s,
            Transform::ReflectSpace { axis, .. } => corner[axis] -= side,
            Transform::ReflectTime { .. } => {
                let i = corner.dim() - 1;
                corner[i] -= side;
            }
        }
        Cube { corner, side }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> SpaceTimePoint {
        SpaceTimePoint::from_coords(c).unwrap()
    }

    #[test]
    fn first_generation_sits_at_the_corners() {
        let spec = CantorSpec::constant(1, 0.25).unwrap();
        let g = spec.build_generation(1).unwrap();
        let corners: Vec<_> = g.cubes().iter().map(|c| c.corner.as_slice().to_vec()).collect();
        assert_eq!(
            corners,
            vec![vec![0.0, 0.0], vec![0.75, 0.0], vec![0.0, 0.75], vec![0.75, 0.75]]
        );
        assert!(g.cubes().iter().all(|c| c.side == 0.25));
    }

    #[test]
    fn generation_zero_is_the_unit_cube() {
        for n in 1..4 {
            let g = CantorSpec::constant(n, 0.3).unwrap().build_generation(0).unwrap();
            assert_eq!(g.cubes().len(), 1);
            assert_eq!(g.cubes()[0].side, 1.0);
            assert!(g.cubes()[0].corner.is_origin());
        }
    }

    #[test]
    fn second_generation_coordinates() {
        let spec = CantorSpec::new(1, LambdaSeq::List(vec![0.25, 0.25]), None).unwrap();
        let g = spec.build_generation(2).unwrap();
        assert_eq!(g.cubes().len(), 16);
        let allowed = [0.0, 3.0 / 16.0, 0.75, 15.0 / 16.0];
        for c in g.cubes() {
            assert_eq!(c.side, 1.0 / 16.0);
            for &v in c.corner.as_slice() {
                assert!(allowed.contains(&v), "unexpected coordinate {v}");
            }
        }
        let mut seen: Vec<_> = g.cubes().iter().map(|c| (c.corner[0], c.corner[1])).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        seen.dedup();
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn side_length_theta_and_sums() {
        let q = CantorSpec::constant(1, 0.25).unwrap();
        assert_eq!(q.side_length(3).unwrap(), 1.0 / 64.0);
        assert_eq!(q.side_length(0).unwrap(), 1.0);
        assert_eq!(q.theta(0).unwrap(), 1.0);
        for k in 0..8 {
            assert_eq!(q.theta(k).unwrap(), 1.0);
        }
        assert_eq!(q.theta_sum(4).unwrap(), 5.0);
        assert_eq!(q.theta_sum(0).unwrap(), 1.0);

        let l = CantorSpec::new(1, LambdaSeq::List(vec![1.0 / 3.0, 0.25]), None).unwrap();
        assert!((l.side_length(2).unwrap() - 1.0 / 12.0).abs() < 1e-16);

        let t = CantorSpec::constant(1, 1.0 / 3.0).unwrap();
        assert!((t.theta(2).unwrap() - 9.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_theta_series_converges_to_four() {
        // θ_j = (3/4)^j; summing directly to convergence is the oracle.
        let t = CantorSpec::constant(1, 1.0 / 3.0).unwrap();
        let mut direct: f64 = 0.0;
        let mut term = 1.0;
        while term > 1e-17 {
            direct += term;
            term *= 0.75;
        }
        assert!((direct - 4.0).abs() < 1e-12);
        let partial = t.theta_sum(13).unwrap();
        assert!(partial < 4.0 && partial > 3.9);
    }

    #[test]
    fn depth_guards() {
        let l = CantorSpec::new(1, LambdaSeq::List(vec![0.25]), None).unwrap();
        assert!(matches!(l.build_generation(2), Err(Error::Config(_))));
        let c = CantorSpec::constant(1, 0.25).unwrap();
        assert!(c.build_generation(15).is_err());
        assert_eq!(c.default_max_depth(), 10);
    }

    #[test]
    fn invalid_lambda_is_a_config_error() {
        let e = CantorSpec::constant(1, 0.6).unwrap_err();
        assert!(e.is_config());
        assert!(e.to_string().contains("1/2"));
        assert!(CantorSpec::constant(1, 0.0).is_err());
        assert!(CantorSpec::constant(0, 0.25).is_err());
        assert!(CantorSpec::new(1, LambdaSeq::Constant(0.3), Some(0.2)).is_err());
    }

    /// Containment up to rounding in the last place.
    fn inside(outer: &Cube, inner: &Cube) -> bool {
        let eps = 1e-14 * outer.side.max(1.0);
        (0..outer.dim())
            .all(|i| inner.lo(i) >= outer.lo(i) - eps && inner.hi(i) <= outer.hi(i) + eps)
    }

    #[test]
    fn nesting_and_sibling_separation() {
        for (n, lam) in [(1, 0.25), (1, 1.0 / 3.0), (2, 0.3)] {
            let spec = CantorSpec::constant(n, lam).unwrap();
            let kmax = if n == 1 { 5 } else { 3 };
            let g = spec.build_generation(kmax).unwrap();
            let b = g.branching();
            for k in 1..=kmax {
                let parents = g.level_cubes(k - 1).unwrap();
                let kids = g.level_cubes(k).unwrap();
                assert_eq!(kids.len(), cube_count(n, k));
                let expected_gap = spec.side_length(k - 1).unwrap() * (1.0 - 2.0 * lam);
                for (i, kid) in kids.iter().enumerate() {
                    let owners = parents.iter().filter(|p| inside(p, kid)).count();
                    assert_eq!(owners, 1);
                    assert!(inside(&parents[i / b], kid));
                }
                for fam in kids.chunks(b) {
                    let mut min_gap = f64::INFINITY;
                    for a in 0..fam.len() {
                        for c in a + 1..fam.len() {
                            min_gap = min_gap.min(fam[a].coordinate_gap(&fam[c]));
                        }
                    }
                    assert!((min_gap - expected_gap).abs() <= 1e-15 * spec.side_length(k - 1).unwrap() * 4.0);
                    assert!(min_gap > 0.0);
                }
            }
        }
    }

    #[test]
    fn total_volume_matches_closed_form() {
        for (n, lam) in [(1, 0.25), (1, 0.3), (2, 1.0 / 3.0)] {
            let spec = CantorSpec::constant(n, lam).unwrap();
            for k in 0..=if n == 1 { 6 } else { 3 } {
                let g = spec.build_generation(k).unwrap();
                let vol: f64 = g.cubes().iter().map(|c| c.volume()).sum();
                let l = spec.side_length(k).unwrap();
                let expected = (cube_count(n, 1) as f64).powi(k as i32) * l.powi(n as i32 + 1);
                assert!(((vol - expected) / expected).abs() < 1e-12);
                let th = spec.theta(k).unwrap();
                assert!((th * l.powi(n as i32) * cube_count(n, k) as f64 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transforms() {
        let spec = CantorSpec::constant(1, 0.25).unwrap();
        let g0 = spec.build_generation(0).unwrap();
        let moved = g0.apply(&Transform::Translate(pt(&[1.0, 1.0]))).unwrap();
        assert_eq!(moved.cubes()[0].corner, pt(&[1.0, 1.0]));
        assert_eq!(moved.cubes()[0].side, 1.0);

        let g1 = spec.build_generation(1).unwrap();
        let big = g1.apply(&Transform::Scale(2.0)).unwrap();
        for c in big.cubes() {
            assert_eq!(c.side, 0.5);
            assert!(Cube::new(SpaceTimePoint::zeros(2), 2.0).unwrap().contains_cube(c));
        }
        assert!(g1.apply(&Transform::Scale(0.0)).is_err());
        assert!(g1.apply(&Transform::Scale(-1.0)).is_err());

        let flipped = g0.apply(&Transform::ReflectTime { about: 0.5 }).unwrap();
        assert_eq!(flipped.cubes(), g0.cubes());

        // Reflection maps the generation onto itself as a set.
        let g2 = spec.build_generation(2).unwrap();
        let r = g2.apply(&Transform::ReflectSpace { axis: 0, about: 0.5 }).unwrap();
        for c in r.cubes() {
            assert!(g2.cubes().iter().any(|d| d == c));
        }
    }

    #[test]
    fn second_moment_of_a_single_cube() {
        let g = CantorSpec::constant(1, 0.25).unwrap().build_generation(0).unwrap();
        assert_eq!(g.second_moments().unwrap(), vec![2.0 / 12.0]);
        // Level-1 oracle: average of |y - c|^2 over the four corner cubes.
        let g1 = CantorSpec::constant(1, 0.25).unwrap().build_generation(1).unwrap();
        let m = g1.second_moments().unwrap();
        let offset: f64 = 0.375;
        assert!((m[0] - (2.0 * offset * offset + 2.0 * 0.0625 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn json_schema_round_trip() {
        let g = CantorSpec::constant(1, 0.25).unwrap().build_generation(1).unwrap();
        let js = serde_json::to_value(g.to_json()).unwrap();
        assert_eq!(js["level"], 1);
        assert_eq!(js["side"], 0.25);
        assert_eq!(js["cubes"][1]["corner"], serde_json::json!([0.75, 0.0]));
        let back: GenerationJson = serde_json::from_value(js).unwrap();
        let flat = back.into_generation().unwrap();
        assert_eq!(flat.cubes(), g.cubes());
        assert!(!flat.is_hierarchical());
    }
}
