use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DVector;

/// A point of a catalog manifold, stored in ambient coordinates.
///
/// Sphere blocks are unit vectors; circle blocks hold one angle in `[0, 2π)`.
/// Points are produced by [`crate::Manifold::normalize_point`], which enforces both.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    ambient: DVector<f64>,
    manifold: Arc<str>,
}

impl Point {
    pub(crate) fn from_parts(ambient: DVector<f64>, manifold: Arc<str>) -> Self {
        Self { ambient, manifold }
    }

    pub fn ambient(&self) -> &DVector<f64> {
        &self.ambient
    }

    pub fn as_slice(&self) -> &[f64] {
        self.ambient.as_slice()
    }

    pub fn manifold_id(&self) -> &str {
        &self.manifold
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed minimal angular difference `b − a`, in `[−π, π)`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(TAU);
    if d >= std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}
