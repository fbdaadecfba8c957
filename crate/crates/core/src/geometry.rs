//! Points in the deployment frame.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// A point in 3D space, in meters.
///
/// Anchors, tags and solver outputs all share this type. Coordinates are
/// expected to be finite; [`Position::is_finite`] is checked by every solver
/// entry point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    /// Distance of the projections onto the floor plane.
    pub fn distance_2d(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Arithmetic mean of a set of points. Returns the origin for an empty set.
    pub fn centroid(points: &[Position]) -> Position {
        if points.is_empty() {
            return Position::default();
        }
        let sum = points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.to_vector());
        (sum / points.len() as f64).into()
    }

    /// Linear interpolation between `self` (t = 0) and `other` (t = 1).
    pub fn lerp(&self, other: &Position, t: f64) -> Position {
        (self.to_vector() + (other.to_vector() - self.to_vector()) * t).into()
    }
}

impl From<Vector3<f64>> for Position {
    fn from(v: Vector3<f64>) -> Self {
        Position::new(v.x, v.y, v.z)
    }
}

impl From<Position> for Vector3<f64> {
    fn from(p: Position) -> Self {
        p.to_vector()
    }
}

impl From<[f64; 3]> for Position {
    fn from(a: [f64; 3]) -> Self {
        Position::new(a[0], a[1], a[2])
    }
}
