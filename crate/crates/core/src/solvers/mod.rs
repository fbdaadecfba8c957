//! Position solvers: range-based multilateration (an eigenvalue formulation
//! and a Levenberg-Marquardt iteration), range-difference (TDOA) solving for
//! passive listeners, and the geometric dilution of precision.
//!
//! Every solver is a pure function of its inputs.

mod gdop;
mod larsson;
pub mod lm;
mod multilateration;
mod tdoa;

pub use gdop::compute_gdop;
pub use larsson::larsson_multilaterate;
pub use multilateration::lm_multilaterate;
pub use tdoa::lm_tdoa;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Position;

/// Minimum number of anchors for a 3D fix.
pub const MIN_ANCHORS: usize = 4;

/// Distances below this are clamped while forming unit vectors, so an iterate
/// sitting exactly on an anchor never produces a NaN Jacobian row.
pub(crate) const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("need at least {need} anchors, got {have}")]
    InsufficientAnchors { need: usize, have: usize },
    #[error("{anchors} anchors but {measurements} measurements")]
    LengthMismatch { anchors: usize, measurements: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative distance {value} for anchor {index}")]
    NegativeDistance { index: usize, value: f64 },
    #[error("tag coincides with anchor {0}")]
    CoincidentAnchor(usize),
    #[error("anchor geometry is singular")]
    SingularGeometry,
}

/// Solver knobs shared by all three solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative tolerance. Early-stopping threshold for the LM iterations;
    /// eigenvector change threshold for the inverse iteration of the
    /// eigenvalue solver.
    pub tolerance: f64,
    pub max_lm_iterations: usize,
    pub max_power_iterations: usize,
    pub lm_damping_init: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-2,
            max_lm_iterations: 20,
            max_power_iterations: 1000,
            lm_damping_init: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_lm_iterations == 0 {
            return Err("max_lm_iterations must be at least 1".into());
        }
        if self.max_power_iterations == 0 {
            return Err("max_power_iterations must be at least 1".into());
        }
        if !(self.lm_damping_init.is_finite() && self.lm_damping_init > 0.0) {
            return Err(format!(
                "lm_damping_init must be positive, got {}",
                self.lm_damping_init
            ));
        }
        Ok(())
    }
}

/// Outcome of a solver run.
///
/// `converged` is false exactly when `iterations` reached the configured
/// cutoff (LM iterations, or power iterations for the eigenvalue solver).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverResult {
    pub position: Position,
    pub converged: bool,
    pub iterations: usize,
    /// Square root of the sum of squared residuals at `position`.
    pub residual_norm: f64,
}

/// Anchors plus measured ranges to each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilaterationProblem {
    pub anchors: Vec<Position>,
    pub distances: Vec<f64>,
}

impl MultilaterationProblem {
    pub fn new(anchors: Vec<Position>, distances: Vec<f64>) -> Self {
        Self { anchors, distances }
    }

    /// Builds the noise-free problem for a tag at `truth`.
    pub fn exact(anchors: Vec<Position>, truth: &Position) -> Self {
        let distances = anchors.iter().map(|a| a.distance(truth)).collect();
        Self { anchors, distances }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.anchors.len() != self.distances.len() {
            return Err(SolverError::LengthMismatch {
                anchors: self.anchors.len(),
                measurements: self.distances.len(),
            });
        }
        if self.anchors.len() < MIN_ANCHORS {
            return Err(SolverError::InsufficientAnchors {
                need: MIN_ANCHORS,
                have: self.anchors.len(),
            });
        }
        if !self.anchors.iter().all(Position::is_finite) {
            return Err(SolverError::NonFinite("anchors"));
        }
        for (index, &value) in self.distances.iter().enumerate() {
            if !value.is_finite() {
                return Err(SolverError::NonFinite("distances"));
            }
            if value < 0.0 {
                return Err(SolverError::NegativeDistance { index, value });
            }
        }
        Ok(())
    }

    /// Range-residual least-squares cost `sum_i (|p - a_i| - d_i)^2`.
    pub fn objective(&self, p: &Position) -> f64 {
        self.anchors
            .iter()
            .zip(&self.distances)
            .map(|(a, d)| (p.distance(a) - d).powi(2))
            .sum()
    }

    pub fn centroid(&self) -> Position {
        Position::centroid(&self.anchors)
    }
}

/// A passive listener's view of one exchange: the initiator position, the
/// anchors that answered, and one propagation-corrected range difference per
/// anchor.
///
/// Entry `i` of `range_differences` models
/// `|a_i - q| + |p - a_i| - |p - q|` for listener `p` and initiator `q`, i.e.
/// the speed of light times the reception-time difference after the anchor's
/// known reply delay has been removed.
#[derive(Debug, Clone, PartialEq)]
pub struct TdoaProblem {
    pub initiator: Position,
    pub anchors: Vec<Position>,
    pub range_differences: Vec<f64>,
}

impl TdoaProblem {
    pub fn new(initiator: Position, anchors: Vec<Position>, range_differences: Vec<f64>) -> Self {
        Self {
            initiator,
            anchors,
            range_differences,
        }
    }

    /// Noise-free measurements for a listener at `listener`, using
    /// `true_initiator` for the geometry and storing `initiator` (which may be
    /// an estimate) in the problem.
    pub fn exact(
        anchors: Vec<Position>,
        true_initiator: &Position,
        listener: &Position,
        initiator: Position,
    ) -> Self {
        let range_differences = anchors
            .iter()
            .map(|a| tdoa_model(a, true_initiator, listener))
            .collect();
        Self {
            initiator,
            anchors,
            range_differences,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.anchors.len() != self.range_differences.len() {
            return Err(SolverError::LengthMismatch {
                anchors: self.anchors.len(),
                measurements: self.range_differences.len(),
            });
        }
        if self.anchors.len() < MIN_ANCHORS {
            return Err(SolverError::InsufficientAnchors {
                need: MIN_ANCHORS,
                have: self.anchors.len(),
            });
        }
        if !self.initiator.is_finite() {
            return Err(SolverError::NonFinite("initiator"));
        }
        if !self.anchors.iter().all(Position::is_finite) {
            return Err(SolverError::NonFinite("anchors"));
        }
        if !self.range_differences.iter().all(|m| m.is_finite()) {
            return Err(SolverError::NonFinite("range_differences"));
        }
        Ok(())
    }

    pub fn objective(&self, p: &Position) -> f64 {
        self.anchors
            .iter()
            .zip(&self.range_differences)
            .map(|(a, m)| (m - tdoa_model(a, &self.initiator, p)).powi(2))
            .sum()
    }

    pub fn centroid(&self) -> Position {
        Position::centroid(&self.anchors)
    }

    /// Closed-form estimate for starting LM. With the initiator at the
    /// origin, `|p - a_i| = c_i + |p|` where `c_i = m_i - |a_i|`; squaring
    /// gives equations linear in `p` and `|p|`, solved here by least
    /// squares. Exact on noise-free data. None when the system is singular.
    pub fn linear_start(&self) -> Option<Position> {
        let q = self.initiator.to_vector();
        let n = self.anchors.len();
        let mut a = DMatrix::zeros(n, 4);
        let mut b = DVector::zeros(n);
        for (i, (anchor, m)) in self.anchors.iter().zip(&self.range_differences).enumerate() {
            let s = anchor.to_vector() - q;
            let c = m - s.norm();
            for k in 0..3 {
                a[(i, k)] = -2.0 * s[k];
            }
            a[(i, 3)] = -2.0 * c;
            b[i] = c * c - s.norm_squared();
        }
        let svd = a.try_svd(true, true, f64::EPSILON, 500)?;
        let sv = &svd.singular_values;
        if !(sv.min() > 1e-10 * sv.max()) {
            return None;
        }
        let x = svd.solve(&b, 0.0).ok()?;
        let p = Position::new(x[0] + q.x, x[1] + q.y, x[2] + q.z);
        p.is_finite().then_some(p)
    }

    /// The linear estimate, or the anchor centroid when that is singular.
    pub fn default_start(&self) -> Position {
        self.linear_start().unwrap_or_else(|| self.centroid())
    }
}

/// Path-length difference observed by `listener` for the response of anchor
/// `anchor` to a poll sent by `initiator`.
pub fn tdoa_model(anchor: &Position, initiator: &Position, listener: &Position) -> f64 {
    anchor.distance(initiator) + listener.distance(anchor) - listener.distance(initiator)
}

/// Mean distance of the anchors from their centroid. Used as the length scale
/// for scale-free stopping rules.
pub(crate) fn anchor_spread(anchors: &[Position]) -> f64 {
    let c = Position::centroid(anchors);
    let spread = anchors.iter().map(|a| a.distance(&c)).sum::<f64>() / anchors.len() as f64;
    if spread > 0.0 {
        spread
    } else {
        1.0
    }
}
