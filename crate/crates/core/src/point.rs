//! Fixed-capacity points of ℝ^{n+1}.
//!
//! The last coordinate is time; the first `n` coordinates are space. Points
//! are `Copy` so that quadrature inner loops never allocate.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// Largest supported ambient dimension n+1.
pub const MAX_AMBIENT: usize = 8;

/// A point `(x, t)` with `x ∈ ℝ^n` and time `t`.
#[derive(Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    coords: [f64; MAX_AMBIENT],
    dim: usize,
}

impl SpaceTimePoint {
    pub fn new(x: &[f64], t: f64) -> Result<Self> {
        let mut c = Vec::with_capacity(x.len() + 1);
        c.extend_from_slice(x);
        c.push(t);
        Self::from_coords(&c)
    }

    /// Builds a point from its full coordinate list (time last).
    pub fn from_coords(c: &[f64]) -> Result<Self> {
        if c.len() < 2 || c.len() > MAX_AMBIENT {
            return Err(Error::Argument(format!(
                "ambient dimension must lie in 2..={MAX_AMBIENT}, got {}",
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("point coordinates must be finite".into()));
        }
        let mut coords = [0.0; MAX_AMBIENT];
        coords[..c.len()].copy_from_slice(c);
        Ok(Self { coords, dim: c.len() })
    }

    /// The origin of ℝ^{dim}.
    pub fn zeros(dim: usize) -> Self {
        assert!((2..=MAX_AMBIENT).contains(&dim), "unsupported dimension {dim}");
        Self { coords: [0.0; MAX_AMBIENT], dim }
    }

    /// Constant point `(v, …, v)`.
    pub fn splat(dim: usize, v: f64) -> Self {
        let mut p = Self::zeros(dim);
        p.as_mut_slice().fill(v);
        p
    }

    /// Ambient dimension n+1.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Spatial dimension n.
    #[inline]
    pub fn n(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.coords[..self.dim - 1]
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.coords[self.dim - 1]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_origin(&self) -> bool {
        self.as_slice().iter().all(|&v| v == 0.0)
    }
}

impl Index<usize> for SpaceTimePoint {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for SpaceTimePoint {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Sub for SpaceTimePoint {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Add for SpaceTimePoint {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Mul<f64> for SpaceTimePoint {
    type Output = Self;
    #[inline]
    fn mul(mut self, s: f64) -> Self {
        for v in self.as_mut_slice() {
            *v *= s;
        }
        self
    }
}

impl std::ops::Neg for SpaceTimePoint {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl fmt::Debug for SpaceTimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Serialize for SpaceTimePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceTimePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        SpaceTimePoint::from_coords(&v).map_err(serde::de::Error::custom)
    }
}
