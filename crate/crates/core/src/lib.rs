//! Numerical estimation of 1/2-caloric capacities of corner Cantor sets.

pub mod capacity;
pub mod content;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod measure;
pub mod point;
pub mod potential;
pub mod quadrature;
pub mod registry;
pub mod segment;
pub mod regularity;

pub use error::{Error, Result};
pub use geometry::{CantorSpec, Cube, Generation, LambdaSeq, Transform};
pub use kernel::{Kernel, KernelKind};
pub use measure::{AtomicMeasure, CubeUnionMeasure, Measure};
pub use point::SpaceTimePoint;
