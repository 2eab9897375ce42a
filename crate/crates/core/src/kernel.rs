//! The 1/2-caloric kernel `P`, its time reversal `P*`, and the symmetrised
//! kernel `P_sy`.
//!
//! All three are homogeneous of degree `−n` on ℝ^{n+1} \ {0}:
//!
//! * `P(x,t)   = t / |(x,t)|^{n+1}` for `t > 0`, zero otherwise;
//! * `P*(x,t)  = P(−x,−t)`;
//! * `P_sy     = (P + P*)/2 = |t| / (2 |(x,t)|^{n+1})`.
//!
//! On `{t = 0}` every kernel vanishes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::point::{SpaceTimePoint, MAX_AMBIENT};
use crate::registry::Registry;

/// Where a kernel can be non-zero, in terms of the sign of the time
/// component of its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSupport {
    /// `t > 0` only.
    Future,
    /// `t < 0` only.
    Past,
    Both,
}

/// A translation-invariant kernel homogeneous of degree `−n`.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Kernel value at the offset `z`. The caller guarantees `z ≠ 0`.
    fn eval_unchecked(&self, z: &SpaceTimePoint) -> f64;

    fn support(&self) -> TimeSupport;

    /// Registry name of the time-reversed kernel.
    fn reversed_name(&self) -> &'static str;

    fn eval(&self, z: &SpaceTimePoint) -> Result<f64> {
        if z.is_origin() {
            return Err(Error::Singularity);
        }
        Ok(self.eval_unchecked(z))
    }

    /// True when the kernel vanishes identically for offsets whose time
    /// component lies in `[t_lo, t_hi]`.
    fn vanishes_on(&self, t_lo: f64, t_hi: f64) -> bool {
        match self.support() {
            TimeSupport::Future => t_hi <= 0.0,
            TimeSupport::Past => t_lo >= 0.0,
            TimeSupport::Both => false,
        }
    }
}

/// `|z|^{-(n+1)}` from `|z|^2`, for ambient dimension `m = n+1`.
#[inline]
pub(crate) fn inv_pow_ambient(r2: f64, m: usize) -> f64 {
    let half = (m / 2) as i32;
    if m.is_multiple_of(2) {
        1.0 / r2.powi(half)
    } else {
        1.0 / (r2.powi(half) * r2.sqrt())
    }
}

/// The fundamental solution `P`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Caloric;

/// `P*(z) = P(−z)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReversedCaloric;

/// `P_sy = (P + P*)/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetrizedCaloric;

impl Kernel for Caloric {
    fn name(&self) -> &'static str {
        KernelKind::P.name()
    }
    #[inline]
    fn eval_unchecked(&self, z: &SpaceTimePoint) -> f64 {
        let t = z.t();
        if t > 0.0 {
            t * inv_pow_ambient(z.norm_sq(), z.dim())
        } else {
            0.0
        }
    }
    fn support(&self) -> TimeSupport {
        TimeSupport::Future
    }
    fn reversed_name(&self) -> &'static str {
        KernelKind::PStar.name()
    }
}

impl Kernel for ReversedCaloric {
    fn name(&self) -> &'static str {
        KernelKind::PStar.name()
    }
    #[inline]
    fn eval_unchecked(&self, z: &SpaceTimePoint) -> f64 {
        let t = z.t();
        if t < 0.0 {
            -t * inv_pow_ambient(z.norm_sq(), z.dim())
        } else {
            0.0
        }
    }
    fn support(&self) -> TimeSupport {
        TimeSupport::Past
    }
    fn reversed_name(&self) -> &'static str {
        KernelKind::P.name()
    }
}

impl Kernel for SymmetrizedCaloric {
    fn name(&self) -> &'static str {
        KernelKind::PSym.name()
    }
    #[inline]
    fn eval_unchecked(&self, z: &SpaceTimePoint) -> f64 {
        0.5 * z.t().abs() * inv_pow_ambient(z.norm_sq(), z.dim())
    }
    fn support(&self) -> TimeSupport {
        TimeSupport::Both
    }
    fn reversed_name(&self) -> &'static str {
        KernelKind::PSym.name()
    }
}

/// Serializable tag for the built-in kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "P")]
    P,
    #[serde(rename = "Pstar")]
    PStar,
    #[serde(rename = "Psym")]
    PSym,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::P, KernelKind::PStar, KernelKind::PSym];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::P => "P",
            KernelKind::PStar => "Pstar",
            KernelKind::PSym => "Psym",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(KernelKind::P),
            "Pstar" | "pstar" | "P*" => Ok(KernelKind::PStar),
            "Psym" | "psym" | "Psy" => Ok(KernelKind::PSym),
            other => Err(Error::Unsupported(format!("unknown kernel tag {other:?}"))),
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            KernelKind::P => KernelKind::PStar,
            KernelKind::PStar => KernelKind::P,
            KernelKind::PSym => KernelKind::PSym,
        }
    }

    pub fn kernel(self) -> Arc<dyn Kernel> {
        match self {
            KernelKind::P => Arc::new(Caloric),
            KernelKind::PStar => Arc::new(ReversedCaloric),
            KernelKind::PSym => Arc::new(SymmetrizedCaloric),
        }
    }
}

/// Registry of kernels by name, pre-populated with `P`, `Pstar`, `Psym`.
pub fn kernel_registry() -> Registry<dyn Kernel> {
    let mut r = Registry::new("kernel");
    for k in KernelKind::ALL {
        r.register(k.name(), k.kernel());
    }
    r
}

pub fn eval_p(p: &SpaceTimePoint) -> Result<f64> {
    Caloric.eval(p)
}

pub fn eval_pstar(p: &SpaceTimePoint) -> Result<f64> {
    ReversedCaloric.eval(p)
}

pub fn eval_psym(p: &SpaceTimePoint) -> Result<f64> {
    SymmetrizedCaloric.eval(p)
}

/// Uniformly distributed unit vector of ℝ^{dim}.
pub(crate) fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> SpaceTimePoint {
    loop {
        let mut v = SpaceTimePoint::zeros(dim);
        for c in v.as_mut_slice() {
            *c = rng.sample(StandardNormal);
        }
        let r = v.norm();
        if r > 1e-12 {
            return v * (1.0 / r);
        }
    }
}

/// Empirical Calderón–Zygmund smoothness constant: the largest observed
/// `|K(z) − K(z′)| · |z|^{n+1} / |z − z′|` over random pairs with
/// `|z − z′| ≤ |z|/2`.
pub fn cz_smoothness(kernel: &dyn Kernel, n: usize, trials: usize, seed: u64) -> f64 {
    let dim = n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = random_direction(&mut rng, dim) * 10f64.powf(rng.random_range(-2.0..2.0));
        let r = z.norm();
        let h = random_direction(&mut rng, dim) * (0.5 * r * rng.random_range(1e-6..1.0));
        let zp = z + h;
        let diff = (kernel.eval_unchecked(&z) - kernel.eval_unchecked(&zp)).abs();
        worst = worst.max(diff * r.powi(dim as i32) / h.norm());
    }
    worst
}

/// Frobenius norm of the Hessian of `P` at `z` with `z_t > 0`.
fn hessian_frobenius_p(z: &SpaceTimePoint) -> f64 {
    let m = z.dim() as f64;
    let dim = z.dim();
    let r2 = z.norm_sq();
    let r = r2.sqrt();
    let t = z.t();
    let tt = dim - 1;
    let base = r.powf(-m - 2.0);
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut h = 0.0;
            if i == tt {
                h -= m * z[j];
            }
            if j == tt {
                h -= m * z[i];
            }
            h += t * m * (m + 2.0) * z[i] * z[j] / r2;
            if i == j {
                h -= t * m;
            }
            s += (h * base).powi(2);
        }
    }
    s.sqrt()
}

/// Empirical bounds used to budget far-field (monopole) errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Calibration {
    /// Empirical first-order CZ constant.
    pub lipschitz: f64,
    /// Empirical sup of `|∇²P(z)|_F · |z|^{n+2}` on `{t > 0}`.
    pub hessian: f64,
}

const CALIBRATION_TRIALS: usize = 20_000;
const CALIBRATION_SEED: u64 = 0xCA11_B8A7;

/// Cached calibration for spatial dimension `n`. `P*` and `P_sy` obey the
/// same bounds as `P`, so one calibration serves all three kernels.
pub fn calibration(n: usize) -> Calibration {
    static CACHE: [OnceLock<Calibration>; MAX_AMBIENT] = [const { OnceLock::new() }; MAX_AMBIENT];
    *CACHE[n].get_or_init(|| {
        let lipschitz = cz_smoothness(&Caloric, n, CALIBRATION_TRIALS, CALIBRATION_SEED);
        let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED ^ 0x5A5A);
        let mut hessian: f64 = 0.0;
        for _ in 0..CALIBRATION_TRIALS {
            let mut z = random_direction(&mut rng, n + 1);
            let i = n;
            z[i] = z[i].abs();
            hessian = hessian.max(hessian_frobenius_p(&z));
        }
        Calibration { lipschitz, hessian }
    })
}
