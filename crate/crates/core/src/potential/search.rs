//! Deterministic extremum searches: seeded grids, parallel evaluation into
//! indexed arrays, then coordinate-wise golden-section refinement of the
//! best seeds.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Generation};
use crate::kernel::Kernel;
use crate::measure::{AtomicMeasure, Measure};
use crate::point::{SpaceTimePoint, MAX_AMBIENT};

use super::{PotentialEvaluator, PotentialValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Number of best seeds that are refined.
    pub refine_best: usize,
    pub max_sweeps: usize,
    /// Restrict seeds to a fundamental domain of the detected symmetries.
    pub use_symmetry: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { refine_best: 32, max_sweeps: 40, use_symmetry: true }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchFlags {
    /// The extremum sits on the boundary of the search box.
    pub boundary: bool,
    /// Refinement of the winning seed did not settle; for a sup this
    /// signals divergence.
    pub non_converged: bool,
    /// The decay radius exceeded the default box, which was kept anyway.
    pub region_truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremumReport {
    pub extremum: f64,
    pub argpoint: SpaceTimePoint,
    pub samples_used: usize,
    pub refinement_levels: usize,
    /// Evaluation error at `argpoint`.
    pub err: f64,
    pub singular_excluded: f64,
    pub search_box: Cube,
    pub flags: SearchFlags,
}

/// Symmetries of a cube family inherited by potentials of kernels that are
/// radial in `x`: reflections about the centre of the bounding cube and
/// permutations of the spatial axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symmetries {
    pub centre: SpaceTimePoint,
    /// `reflect[i]`: invariant under `y_i ↦ 2c_i − y_i`.
    pub reflect: [bool; MAX_AMBIENT],
    /// Invariant under every permutation of the spatial axes.
    pub permute_space: bool,
    scale: f64,
}

impl Symmetries {
    fn none(gen: &Generation) -> Self {
        let b = gen.bounding_cube();
        Self { centre: b.center(), reflect: [false; MAX_AMBIENT], permute_space: false, scale: b.side }
    }

    /// Whether `p` lies in the fundamental domain; the time reflection is
    /// only used for time-even kernels.
    fn contains(&self, p: &SpaceTimePoint, time_even: bool) -> bool {
        let dim = p.dim();
        let eta = 1e-12 * self.scale;
        for i in 0..dim {
            if i == dim - 1 && !time_even {
                continue;
            }
            if self.reflect[i] && p[i] > self.centre[i] + eta {
                return false;
            }
        }
        if self.permute_space {
            for i in 1..dim - 1 {
                if p[i - 1] > p[i] + eta {
                    return false;
                }
            }
        }
        true
    }
}

/// Detects the reflection and spatial permutation symmetries of `gen`.
/// Distinct cubes of the family differ by at least one side length in some
/// coordinate, which makes a quarter-side lattice an exact matching key.
pub fn symmetries_of(gen: &Generation) -> Symmetries {
    let mut sym = Symmetries::none(gen);
    let cubes = gen.cubes();
    if cubes.iter().any(|c| c.side != cubes[0].side) {
        return sym;
    }
    let dim = gen.dim();
    let b = gen.bounding_cube();
    let unit = 0.25 * cubes[0].side;
    let key = |p: &SpaceTimePoint| -> [i64; MAX_AMBIENT] {
        let mut k = [0i64; MAX_AMBIENT];
        for i in 0..dim {
            k[i] = ((p[i] - b.lo(i)) / unit).round() as i64;
        }
        k
    };
    let set: std::collections::HashSet<[i64; MAX_AMBIENT]> = cubes.iter().map(|c| key(&c.corner)).collect();
    let present = |p: &SpaceTimePoint| -> bool {
        let k = key(p);
        // Check the 3^dim neighbouring keys to absorb rounding.
        let mut off = [-1i64; MAX_AMBIENT];
        loop {
            let mut q = k;
            for i in 0..dim {
                q[i] += off[i];
            }
            if set.contains(&q) {
                return true;
            }
            let mut i = 0;
            loop {
                off[i] += 1;
                if off[i] <= 1 {
                    break;
                }
                off[i] = -1;
                i += 1;
                if i == dim {
                    return false;
                }
            }
        }
    };
    let c = b.center();
    for i in 0..dim {
        sym.reflect[i] = cubes.iter().all(|q| {
            let mut corner = q.corner;
            corner[i] = 2.0 * c[i] - q.hi(i);
            present(&corner)
        });
    }
    let n = dim - 1;
    sym.permute_space = n >= 2
        && (1..n).all(|i| {
            cubes.iter().all(|q| {
                let mut corner = q.corner;
                corner[i - 1] = c[i - 1] + (q.corner[i] - c[i]);
                corner[i] = c[i] + (q.corner[i - 1] - c[i - 1]);
                present(&corner)
            })
        });
    sym
}

fn time_even(kernel: &dyn Kernel) -> bool {
    kernel.reversed_name() == kernel.name()
}

fn measure_symmetries(mu: &Measure, gen: &Generation, opts: &SearchOptions) -> Symmetries {
    match mu {
        Measure::CubeUnion(m) if opts.use_symmetry && m.support().as_ref() == gen => symmetries_of(gen),
        _ => Symmetries::none(gen),
    }
}

/// Orientation-free objective: larger is better.
#[derive(Debug, Clone, Copy)]
struct Scored {
    score: f64,
    value: PotentialValue,
}

struct Refiner<'a, F: Fn(&SpaceTimePoint) -> Result<Option<Scored>> + Sync> {
    f: &'a F,
    dim: usize,
    move_tol: f64,
    value_tol: f64,
    max_sweeps: usize,
}

struct Refined {
    point: SpaceTimePoint,
    best: Scored,
    sweeps: usize,
    evaluations: usize,
    converged: bool,
}

const INVPHI: f64 = 0.618_033_988_749_894_9;

impl<F: Fn(&SpaceTimePoint) -> Result<Option<Scored>> + Sync> Refiner<'_, F> {
    fn score(&self, p: &SpaceTimePoint, count: &mut usize) -> Result<Option<Scored>> {
        *count += 1;
        (self.f)(p)
    }

    /// Golden-section maximisation along axis `i` on `[a, b]`.
    fn line(
        &self,
        p: &SpaceTimePoint,
        i: usize,
        (mut a, mut b): (f64, f64),
        current: Scored,
        count: &mut usize,
    ) -> Result<(SpaceTimePoint, Scored)> {
        let at = |x: f64| -> SpaceTimePoint {
            let mut q = *p;
            q[i] = x;
            q
        };
        let val = |s: Option<Scored>| s.map_or(f64::NEG_INFINITY, |s| s.score);
        let mut best = (*p, current);
        let mut x1 = b - INVPHI * (b - a);
        let mut x2 = a + INVPHI * (b - a);
        let mut f1 = self.score(&at(x1), count)?;
        let mut f2 = self.score(&at(x2), count)?;
        for s in [(x1, f1), (x2, f2)] {
            if let Some(v) = s.1 {
                if v.score > best.1.score {
                    best = (at(s.0), v);
                }
            }
        }
        while b - a > 0.5 * self.move_tol {
            if val(f1) >= val(f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INVPHI * (b - a);
                f1 = self.score(&at(x1), count)?;
                if let Some(v) = f1 {
                    if v.score > best.1.score {
                        best = (at(x1), v);
                    }
                }
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INVPHI * (b - a);
                f2 = self.score(&at(x2), count)?;
                if let Some(v) = f2 {
                    if v.score > best.1.score {
                        best = (at(x2), v);
                    }
                }
            }
        }
        Ok(best)
    }

    fn run(&self, start: SpaceTimePoint, start_val: Scored, h0: f64, lo: &SpaceTimePoint, hi: &SpaceTimePoint) -> Result<Refined> {
        let mut p = start;
        let mut cur = start_val;
        let mut h = h0;
        let mut count = 0;
        for sweep in 1..=self.max_sweeps {
            let before = p;
            let before_val = cur.score;
            for i in 0..self.dim {
                let a = (p[i] - h).max(lo[i]);
                let b = (p[i] + h).min(hi[i]);
                if b > a {
                    let (q, v) = self.line(&p, i, (a, b), cur, &mut count)?;
                    p = q;
                    cur = v;
                }
            }
            let moved = p.dist(&before);
            let gained = (cur.score - before_val).abs();
            if moved <= self.move_tol && gained <= self.value_tol {
                return Ok(Refined { point: p, best: cur, sweeps: sweep, evaluations: count, converged: true });
            }
            h = (0.5 * h).max(2.0 * moved).min(h0);
        }
        Ok(Refined { point: p, best: cur, sweeps: self.max_sweeps, evaluations: count, converged: false })
    }
}

struct Candidate {
    point: SpaceTimePoint,
    scored: Scored,
    /// Refinement box.
    lo: SpaceTimePoint,
    hi: SpaceTimePoint,
}

type Seed = (SpaceTimePoint, SpaceTimePoint, SpaceTimePoint);

/// Evaluates the seeds in parallel into an indexed array, dropping
/// inadmissible ones, best first (stable among ties).
fn evaluate_seeds<F>(seeds: Vec<Seed>, f: &F) -> Result<Vec<Candidate>>
where
    F: Fn(&SpaceTimePoint) -> Result<Option<Scored>> + Sync,
{
    let evaluated: Vec<Result<Option<Scored>>> = seeds.par_iter().map(|(p, _, _)| f(p)).collect();
    let mut cands = Vec::with_capacity(seeds.len());
    for ((p, lo, hi), r) in seeds.into_iter().zip(evaluated) {
        if let Some(s) = r? {
            cands.push(Candidate { point: p, scored: s, lo, hi });
        }
    }
    if cands.is_empty() {
        return Err(Error::Engine("no admissible seed point".into()));
    }
    cands.sort_by(|a, b| b.scored.score.total_cmp(&a.scored.score));
    Ok(cands)
}

struct Outcome {
    winner: Candidate,
    samples: usize,
    levels: usize,
    converged: bool,
}

/// Refines the best `refine_best` candidates and returns the winner.
fn refine_top<F>(cands: &[Candidate], f: &F, h0: f64, move_tol: f64, value_tol: f64, opts: &SearchOptions) -> Result<Outcome>
where
    F: Fn(&SpaceTimePoint) -> Result<Option<Scored>> + Sync,
{
    let refiner = Refiner { f, dim: cands[0].point.dim(), move_tol, value_tol, max_sweeps: opts.max_sweeps };
    let top = opts.refine_best.min(cands.len());
    let refined: Vec<Result<Refined>> = cands[..top]
        .par_iter()
        .map(|c| refiner.run(c.point, c.scored, h0, &c.lo, &c.hi))
        .collect();
    let mut best = 0;
    let mut best_ref: Option<Refined> = None;
    let mut levels = 0;
    let mut samples = cands.len();
    for (i, r) in refined.into_iter().enumerate() {
        let r = r?;
        levels = levels.max(r.sweeps);
        samples += r.evaluations;
        if best_ref.as_ref().is_none_or(|b| r.best.score > b.best.score) {
            best = i;
            best_ref = Some(r);
        }
    }
    let r = best_ref.unwrap();
    let mut converged = r.converged;
    if converged {
        // The line searches cannot resolve below `move_tol`; probe the
        // winner's neighbourhood on finer scales for values that keep
        // growing, the signature of a singular sup.
        let mut delta = 0.5 * move_tol;
        'probe: for _ in 0..20 {
            for i in 0..r.point.dim() {
                for s in [-1.0, 1.0] {
                    let mut q = r.point;
                    q[i] += s * delta;
                    samples += 1;
                    if let Some(v) = f(&q)? {
                        if v.score > r.best.score + 0.01 * r.best.score.abs() + value_tol {
                            converged = false;
                            break 'probe;
                        }
                    }
                }
            }
            delta *= 0.5;
        }
    }
    let winner = Candidate { point: r.point, scored: r.best, lo: cands[best].lo, hi: cands[best].hi };
    Ok(Outcome { winner, samples, levels, converged })
}

fn scale_of(mu: &Measure, gen: &Generation) -> f64 {
    mu.total_mass() / gen.bounding_cube().side.powi(gen.n() as i32)
}

fn expanded(c: &Cube, e: f64) -> Cube {
    let mut corner = c.corner;
    for v in corner.as_mut_slice() {
        *v -= e;
    }
    Cube { corner, side: c.side + 2.0 * e }
}

fn box_of(c: &Cube) -> (SpaceTimePoint, SpaceTimePoint) {
    let mut hi = c.corner;
    for v in hi.as_mut_slice() {
        *v += c.side;
    }
    (c.corner, hi)
}

fn on_boundary(c: &Cube, p: &SpaceTimePoint) -> bool {
    let eta = 1e-9 * c.side;
    (0..c.dim()).any(|i| p[i] <= c.lo(i) + eta || p[i] >= c.hi(i) - eta)
}

/// Grid of `steps + 1` points per axis from `corner − pad`, spacing `step`.
fn grid(cube: &Cube, pad: f64, step: f64, steps: usize, out: &mut Vec<SpaceTimePoint>) {
    let dim = cube.dim();
    let mut idx = [0usize; MAX_AMBIENT];
    loop {
        let mut p = cube.corner;
        for i in 0..dim {
            p[i] += idx[i] as f64 * step - pad;
        }
        out.push(p);
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] <= steps {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == dim {
                return;
            }
        }
    }
}

fn check_support(mu: &Measure, gen: &Generation, tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    if mu.dim() != gen.dim() {
        return Err(Error::Argument("measure and generation live in different dimensions".into()));
    }
    Ok(())
}

/// Lower estimate of `sup_{ℝ^{n+1}} K∗μ`.
///
/// Seeds: a grid of spacing `ℓ_k/2` over every generation cube and a
/// collar one cube wide, inside `3·Q^0`. After seeding, the box is shrunk
/// to the radius beyond which the decay `K∗μ ≤ ‖μ‖/d^n` cannot beat the
/// best seed.
pub fn sup_potential(
    mu: &Measure,
    kernel: &dyn Kernel,
    gen: &Generation,
    tol: f64,
    eval: &dyn PotentialEvaluator,
    opts: &SearchOptions,
) -> Result<ExtremumReport> {
    check_support(mu, gen, tol)?;
    let root = gen.bounding_cube();
    let n = gen.n() as i32;
    let sym = measure_symmetries(mu, gen, opts);
    let even = time_even(kernel);
    let ell = gen.side();
    let mut pts = Vec::new();
    for c in gen.cubes() {
        grid(c, ell, 0.5 * ell, 6, &mut pts);
    }
    let outer = expanded(&root, root.side);
    let (olo, ohi) = box_of(&outer);
    let seeds: Vec<_> = pts
        .into_iter()
        .filter(|p| sym.contains(p, even) && outer.contains_point(p))
        .map(|p| (p, olo, ohi))
        .collect();

    let vscale = scale_of(mu, gen);
    let f = |p: &SpaceTimePoint| -> Result<Option<Scored>> {
        let v = eval.evaluate(mu, kernel, p, tol)?;
        Ok(Some(Scored { score: v.value, value: v }))
    };
    let mut cands = evaluate_seeds(seeds, &f)?;
    let best_seed = cands[0].scored.score;
    let mut flags = SearchFlags::default();
    let mut region = outer;
    if best_seed > 0.0 {
        let r = (mu.total_mass() / best_seed).powf(1.0 / n as f64);
        if r > root.side {
            flags.region_truncated = true;
        } else {
            region = expanded(&root, r.max(ell));
        }
    }
    let (rlo, rhi) = box_of(&region);
    cands.retain(|c| region.contains_point(&c.point));
    for c in &mut cands {
        c.lo = rlo;
        c.hi = rhi;
    }
    let out = refine_top(&cands, &f, 0.5 * ell, tol * ell, tol * vscale, opts)?;
    let w = &out.winner;
    flags.non_converged = !out.converged;
    flags.boundary = on_boundary(&region, &w.point);
    Ok(ExtremumReport {
        extremum: w.scored.value.value,
        argpoint: w.point,
        samples_used: out.samples,
        refinement_levels: out.levels,
        err: w.scored.value.err,
        singular_excluded: w.scored.value.singular_excluded,
        search_box: region,
        flags,
    })
}

/// Estimate of `inf_{E_k} K∗μ`, reported conservatively as the minimum of
/// `value − singular_excluded`.
///
/// Seeds: a grid of spacing `ℓ_k/4` in every generation cube (corners and
/// centre included); the refinement of each seed stays in its cube.
pub fn inf_potential_on_set(
    mu: &Measure,
    kernel: &dyn Kernel,
    gen: &Generation,
    tol: f64,
    eval: &dyn PotentialEvaluator,
    opts: &SearchOptions,
) -> Result<ExtremumReport> {
    check_support(mu, gen, tol)?;
    let sym = measure_symmetries(mu, gen, opts);
    let even = time_even(kernel);
    let ell = gen.side();
    let mut seeds = Vec::new();
    let mut pts = Vec::new();
    for c in gen.cubes() {
        pts.clear();
        grid(c, 0.0, 0.25 * ell, 4, &mut pts);
        let (lo, hi) = box_of(c);
        seeds.extend(pts.iter().filter(|p| sym.contains(p, even)).map(|p| (*p, lo, hi)));
    }
    let f = |p: &SpaceTimePoint| -> Result<Option<Scored>> {
        let v = eval.evaluate(mu, kernel, p, tol)?;
        Ok(Some(Scored { score: -(v.value - v.singular_excluded), value: v }))
    };
    let vscale = scale_of(mu, gen);
    let cands = evaluate_seeds(seeds, &f)?;
    let out = refine_top(&cands, &f, 0.25 * ell, tol * ell, tol * vscale, opts)?;
    let v = out.winner.scored.value;
    Ok(ExtremumReport {
        extremum: v.value - v.singular_excluded,
        argpoint: out.winner.point,
        samples_used: out.samples,
        refinement_levels: out.levels,
        err: v.err,
        singular_excluded: v.singular_excluded,
        search_box: gen.bounding_cube(),
        flags: SearchFlags { non_converged: !out.converged, ..Default::default() },
    })
}

/// Spatial hash of atoms for separation queries.
struct AtomGrid {
    cell: f64,
    dim: usize,
    buckets: HashMap<[i64; MAX_AMBIENT], Vec<usize>>,
}

impl AtomGrid {
    fn new(mu: &AtomicMeasure, cell: f64) -> Self {
        let dim = mu.dim();
        let mut buckets: HashMap<[i64; MAX_AMBIENT], Vec<usize>> = HashMap::new();
        for (i, a) in mu.atoms().iter().enumerate() {
            buckets.entry(Self::key(&a.point, cell, dim)).or_default().push(i);
        }
        Self { cell, dim, buckets }
    }

    fn key(p: &SpaceTimePoint, cell: f64, dim: usize) -> [i64; MAX_AMBIENT] {
        let mut k = [0i64; MAX_AMBIENT];
        for i in 0..dim {
            k[i] = (p[i] / cell).floor() as i64;
        }
        k
    }

    /// Distance from `p` to the nearest atom, if below one cell.
    fn near(&self, mu: &AtomicMeasure, p: &SpaceTimePoint) -> f64 {
        let k = Self::key(p, self.cell, self.dim);
        let mut best = f64::INFINITY;
        let mut off = [-1i64; MAX_AMBIENT];
        loop {
            let mut q = k;
            for i in 0..self.dim {
                q[i] += off[i];
            }
            if let Some(v) = self.buckets.get(&q) {
                for &j in v {
                    best = best.min(p.dist(&mu.atoms()[j].point));
                }
            }
            let mut i = 0;
            loop {
                off[i] += 1;
                if off[i] <= 1 {
                    break;
                }
                off[i] = -1;
                i += 1;
                if i == self.dim {
                    return best;
                }
            }
        }
    }
}

/// Sup of `K∗μ` for an atomic measure over points at distance at least
/// `min_separation` from every atom (the unrestricted sup is infinite).
///
/// Seeds sit at `±min_separation` along each axis from every atom.
pub fn sup_potential_atomic(
    mu: &AtomicMeasure,
    kernel: &dyn Kernel,
    min_separation: f64,
    tol: f64,
    opts: &SearchOptions,
) -> Result<ExtremumReport> {
    if !(min_separation > 0.0 && min_separation.is_finite()) {
        return Err(Error::Argument(format!("separation must be positive, got {min_separation}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let dim = mu.dim();
    let h = min_separation;
    let atoms = mu.atoms();
    let mut lo = atoms[0].point;
    let mut hi = atoms[0].point;
    for a in atoms {
        for i in 0..dim {
            lo[i] = lo[i].min(a.point[i]);
            hi[i] = hi[i].max(a.point[i]);
        }
    }
    let side = (0..dim).map(|i| hi[i] - lo[i]).fold(0.0, f64::max) + 4.0 * h;
    let mut corner = lo;
    for i in 0..dim {
        corner[i] -= 2.0 * h;
    }
    let region = Cube { corner, side };
    let (rlo, rhi) = box_of(&region);
    let index = AtomGrid::new(mu, 2.0 * h);
    let threshold = h * (1.0 - 1e-9);
    let measure = Measure::Atomic(mu.clone());
    let f = |p: &SpaceTimePoint| -> Result<Option<Scored>> {
        if index.near(mu, p) < threshold {
            return Ok(None);
        }
        let v = super::potential_direct(&measure, kernel, p, tol)?;
        Ok(Some(Scored { score: v.value, value: v }))
    };
    let mut seeds = Vec::with_capacity(2 * dim * atoms.len());
    for a in atoms {
        for i in 0..dim {
            for s in [-1.0, 1.0] {
                let mut p = a.point;
                p[i] += s * h;
                seeds.push((p, rlo, rhi));
            }
        }
    }
    let cands = evaluate_seeds(seeds, &f)?;
    let value_tol = tol * mu.total_mass() / h.powi(dim as i32 - 1);
    let out = refine_top(&cands, &f, h, tol * h, value_tol, opts)?;
    let w = &out.winner;
    Ok(ExtremumReport {
        extremum: w.scored.value.value,
        argpoint: w.point,
        samples_used: out.samples,
        refinement_levels: out.levels,
        err: 0.0,
        singular_excluded: 0.0,
        search_box: region,
        flags: SearchFlags {
            non_converged: !out.converged,
            boundary: on_boundary(&region, &w.point),
            ..Default::default()
        },
    })
}
