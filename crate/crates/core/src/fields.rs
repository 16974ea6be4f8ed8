//! Closed-form data fields and the friction coefficient.

use std::fmt;
use std::sync::Arc;

use crate::Point;

pub type VectorField = Arc<dyn Fn(Point) -> Point + Send + Sync>;
/// 2×2 matrix field, `m[i][j]`.
pub type MatrixField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;
/// Boundary datum evaluated at a point with the outward unit normal there.
pub type BoundaryField = Arc<dyn Fn(Point, Point) -> Point + Send + Sync>;
pub type AlphaFn = Arc<dyn Fn(Point, u32) -> f64 + Send + Sync>;

/// Samples at or below this value count as zero friction.
pub const ALPHA_ZERO_TOL: f64 = 1e-14;

/// Friction coefficient on Γ, sampled at boundary quadrature points.
#[derive(Clone)]
pub enum Alpha {
    Constant(f64),
    /// One value per boundary marker (`values[marker - 1]`); unlisted markers get 0.
    PerMarker(Vec<f64>),
    Field(AlphaFn),
}

impl Alpha {
    pub fn sample(&self, x: Point, marker: u32) -> f64 {
        match self {
            Alpha::Constant(a) => *a,
            Alpha::PerMarker(v) => v.get((marker as usize).wrapping_sub(1)).copied().unwrap_or(0.0),
            Alpha::Field(f) => f(x, marker),
        }
    }
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Constant(a) => write!(f, "Alpha::Constant({a})"),
            Alpha::PerMarker(v) => write!(f, "Alpha::PerMarker({v:?})"),
            Alpha::Field(_) => write!(f, "Alpha::Field(..)"),
        }
    }
}

impl From<f64> for Alpha {
    fn from(a: f64) -> Self {
        Alpha::Constant(a)
    }
}

/// Rigid rotation β(x) = (−x₂, x₁).
#[inline]
pub fn beta(x: Point) -> Point {
    [-x[1], x[0]]
}
