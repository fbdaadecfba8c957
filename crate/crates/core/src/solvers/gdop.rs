use nalgebra::Matrix3;

use super::{SolverError, MIN_ANCHORS};
use crate::geometry::Position;

/// Smallest-to-largest eigenvalue ratio of `H'H` below which the geometry is
/// treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Geometric dilution of precision `sqrt(trace((H'H)^-1))` of a tag position,
/// where row `i` of `H` is the unit vector from the tag to anchor `i`.
///
/// Ranging carries no clock unknown, so `H` has only the three position
/// columns.
pub fn compute_gdop(anchors: &[Position], tag: &Position) -> Result<f64, SolverError> {
    if anchors.len() < MIN_ANCHORS {
        return Err(SolverError::InsufficientAnchors {
            need: MIN_ANCHORS,
            have: anchors.len(),
        });
    }
    if !tag.is_finite() {
        return Err(SolverError::NonFinite("tag"));
    }
    if !anchors.iter().all(Position::is_finite) {
        return Err(SolverError::NonFinite("anchors"));
    }
    let t = tag.to_vector();
    let mut hth = Matrix3::zeros();
    for (i, a) in anchors.iter().enumerate() {
        let v = a.to_vector() - t;
        let n = v.norm();
        if n == 0.0 {
            return Err(SolverError::CoincidentAnchor(i));
        }
        let u = v / n;
        hth += u * u.transpose();
    }
    let eig = hth.symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if !(min > RANK_TOLERANCE * max) {
        return Err(SolverError::SingularGeometry);
    }
    Ok(eig.iter().map(|e| 1.0 / e).sum::<f64>().sqrt())
}
