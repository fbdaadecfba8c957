//! Levenberg-Marquardt for three-parameter least-squares problems.
//!
//! Damping is `lambda * (trace(J'J) / 3) * I`. The isotropic form keeps the
//! iteration equivariant under rotations of the coordinate frame, which a
//! `diag(J'J)` scaling would not.

use nalgebra::{Matrix3, Vector3};

use super::{
    anchor_spread, MultilaterationProblem, SolverConfig, SolverResult, TdoaProblem, MIN_DISTANCE,
};
use crate::geometry::Position;

/// Exact-fit floor: an RMS residual below this fraction of the anchor spread
/// is treated as zero.
const EXACT_FIT_RMS: f64 = 1e-10;
const REFINE_STEPS: usize = 4;
/// Refinement steps longer than this fraction of the anchor spread mean the
/// iteration did not end at a minimum, and the step is refused.
const REFINE_MAX_STEP: f64 = 1e-6;

/// A residual vector `r(p)` over a 3D unknown.
pub trait Residuals {
    fn len(&self) -> usize;

    /// Writes `r(p)` into `r` and, if requested, `dr/dp` row by row into `jac`.
    fn evaluate(&self, p: &Vector3<f64>, r: &mut [f64], jac: Option<&mut [Vector3<f64>]>);

    /// `sum_i r_i * hess(r_i)` at `p`, the part of the cost Hessian that
    /// Gauss-Newton drops.
    fn curvature(&self, p: &Vector3<f64>, r: &[f64]) -> Matrix3<f64>;

    /// Length scale used by the exact-fit floor.
    fn scale(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Residuals for MultilaterationProblem {
    fn len(&self) -> usize {
        self.anchors.len()
    }

    fn evaluate(&self, p: &Vector3<f64>, r: &mut [f64], jac: Option<&mut [Vector3<f64>]>) {
        match jac {
            Some(jac) => {
                for (i, (a, d)) in self.anchors.iter().zip(&self.distances).enumerate() {
                    let diff = p - a.to_vector();
                    let dist = diff.norm().max(MIN_DISTANCE);
                    r[i] = dist - d;
                    jac[i] = diff / dist;
                }
            }
            None => {
                for (i, (a, d)) in self.anchors.iter().zip(&self.distances).enumerate() {
                    r[i] = (p - a.to_vector()).norm().max(MIN_DISTANCE) - d;
                }
            }
        }
    }

    fn curvature(&self, p: &Vector3<f64>, r: &[f64]) -> Matrix3<f64> {
        self.anchors
            .iter()
            .zip(r)
            .map(|(a, ri)| *ri * projector(p - a.to_vector()))
            .sum()
    }

    fn scale(&self) -> f64 {
        anchor_spread(&self.anchors)
    }
}

/// Hessian of `|v|` with respect to `v`: `(I - u u') / |v|`.
fn projector(v: Vector3<f64>) -> Matrix3<f64> {
    let d = v.norm().max(MIN_DISTANCE);
    let u = v / d;
    (Matrix3::identity() - u * u.transpose()) / d
}

impl Residuals for TdoaProblem {
    fn len(&self) -> usize {
        self.anchors.len()
    }

    // r_i = m_i - (|a_i - q| + |p - a_i| - |p - q|)
    fn evaluate(&self, p: &Vector3<f64>, r: &mut [f64], jac: Option<&mut [Vector3<f64>]>) {
        let q = self.initiator.to_vector();
        let to_q = p - q;
        let dq = to_q.norm().max(MIN_DISTANCE);
        let uq = to_q / dq;
        let mut jac = jac;
        for (i, (a, m)) in self.anchors.iter().zip(&self.range_differences).enumerate() {
            let a = a.to_vector();
            let to_a = p - a;
            let da = to_a.norm().max(MIN_DISTANCE);
            r[i] = m - ((a - q).norm() + da - dq);
            if let Some(jac) = jac.as_deref_mut() {
                jac[i] = -(to_a / da - uq);
            }
        }
    }

    fn curvature(&self, p: &Vector3<f64>, r: &[f64]) -> Matrix3<f64> {
        let hq = projector(p - self.initiator.to_vector());
        self.anchors
            .iter()
            .zip(r)
            .map(|(a, ri)| *ri * (hq - projector(p - a.to_vector())))
            .sum()
    }

    fn scale(&self) -> f64 {
        anchor_spread(&self.anchors)
    }
}

/// Full record of one LM run.
#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub result: SolverResult,
    /// Cost `sum r_i^2` at the start and after every accepted step.
    pub accepted_costs: Vec<f64>,
}

/// Runs LM from `initial` with the stopping rules of `config`.
///
/// Stops when an accepted step satisfies `|delta| <= tolerance * rms` (rms
/// taken after the step), when the RMS residual hits the exact-fit floor, or
/// when a rejected step is already that small, which happens once the cost has
/// stagnated at roundoff level. Reaching `max_iterations` always reports
/// non-convergence, even if the last step happened to satisfy the rule.
///
/// The returned point then gets a few Newton steps, each
/// limited to `1e-6` of the anchor spread. Near a minimum the cost comparison
/// stalls at roundoff; these steps take the gradient to zero instead, so the
/// answer does not depend on where the stall happened.
pub fn minimize<R: Residuals>(
    problem: &R,
    initial: Position,
    config: &SolverConfig,
    max_iterations: usize,
) -> LmReport {
    let n = problem.len();
    let floor = EXACT_FIT_RMS * problem.scale();
    let mut p = initial.to_vector();
    let mut r = vec![0.0; n];
    let mut jac = vec![Vector3::zeros(); n];
    let mut trial = vec![0.0; n];

    problem.evaluate(&p, &mut r, Some(&mut jac));
    let mut cost = sum_sq(&r);
    let mut accepted_costs = vec![cost];
    let mut lambda = config.lm_damping_init;

    // The returned point gets the gradient refinement below; flags and
    // iteration counts are those of the damped iteration.
    let finish = |p: Vector3<f64>, iterations: usize, stopped: bool, costs| {
        let position = newton_refine(problem, p.into(), REFINE_STEPS, REFINE_MAX_STEP * problem.scale());
        let mut r = vec![0.0; n];
        problem.evaluate(&position.to_vector(), &mut r, None);
        LmReport {
            result: SolverResult {
                position,
                converged: stopped && iterations < max_iterations,
                iterations,
                residual_norm: sum_sq(&r).sqrt(),
            },
            accepted_costs: costs,
        }
    };

    if (cost / n as f64).sqrt() <= floor {
        return finish(p, 0, true, accepted_costs);
    }

    for iteration in 1..=max_iterations {
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for (ri, ji) in r.iter().zip(&jac) {
            h += ji * ji.transpose();
            g += ji * *ri;
        }
        let mu = lambda * h.trace() / 3.0;
        let delta = match (h + Matrix3::identity() * mu).cholesky() {
            Some(chol) => -chol.solve(&g),
            None => {
                lambda *= 10.0;
                continue;
            }
        };
        let step = delta.norm();
        let candidate = p + delta;
        problem.evaluate(&candidate, &mut trial, None);
        let trial_cost = sum_sq(&trial);

        if trial_cost < cost {
            p = candidate;
            cost = trial_cost;
            lambda /= 10.0;
            problem.evaluate(&p, &mut r, Some(&mut jac));
            accepted_costs.push(cost);
            let rms = (cost / n as f64).sqrt();
            if step <= config.tolerance * rms || rms <= floor {
                return finish(p, iteration, true, accepted_costs);
            }
        } else {
            lambda *= 10.0;
            let rms = (cost / n as f64).sqrt();
            if step <= config.tolerance * rms {
                return finish(p, iteration, true, accepted_costs);
            }
        }
    }
    finish(p, max_iterations, false, accepted_costs)
}

/// Newton steps on the cost from a point already near a minimum. The cost
/// comparison LM relies on stalls at roundoff, which leaves flat directions
/// resolved only to about `sqrt(eps)`; Newton drives the gradient itself to
/// zero, quadratically. Stops without moving on an indefinite Hessian or a
/// step longer than `max_step`.
fn newton_refine<R: Residuals>(problem: &R, start: Position, steps: usize, max_step: f64) -> Position {
    let n = problem.len();
    let mut p = start.to_vector();
    let mut r = vec![0.0; n];
    let mut jac = vec![Vector3::zeros(); n];
    let settled = f64::EPSILON * problem.scale();
    for _ in 0..steps {
        problem.evaluate(&p, &mut r, Some(&mut jac));
        let mut h = problem.curvature(&p, &r);
        let mut g = Vector3::zeros();
        for (ri, ji) in r.iter().zip(&jac) {
            h += ji * ji.transpose();
            g += ji * *ri;
        }
        let Some(chol) = h.cholesky() else { break };
        let delta = -chol.solve(&g);
        let step = delta.norm();
        if !(step <= max_step) {
            break;
        }
        p += delta;
        if step <= settled {
            break;
        }
    }
    p.into()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tdoa_jacobian_matches_finite_differences() {
        let anchors = vec![
            Position::new(0.0, 0.0, 2.5),
            Position::new(8.0, 0.0, 2.5),
            Position::new(0.0, 8.0, 2.5),
            Position::new(8.0, 8.0, 0.5),
        ];
        let q = Position::new(2.0, 3.0, 1.0);
        let prob = TdoaProblem::exact(anchors, &q, &Position::new(5.0, 5.0, 1.0), q);
        let p = Vector3::new(4.0, 2.0, 1.2);
        let mut r = vec![0.0; 4];
        let mut jac = vec![Vector3::zeros(); 4];
        prob.evaluate(&p, &mut r, Some(&mut jac));
        let h = 1e-6;
        for axis in 0..3 {
            let mut e = Vector3::zeros();
            e[axis] = h;
            let mut rp = vec![0.0; 4];
            let mut rm = vec![0.0; 4];
            prob.evaluate(&(p + e), &mut rp, None);
            prob.evaluate(&(p - e), &mut rm, None);
            for i in 0..4 {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                assert!((fd - jac[i][axis]).abs() < 1e-7, "row {i} axis {axis}");
            }
        }
    }

    #[test]
    fn exact_start_returns_immediately() {
        let anchors = vec![
            Position::new(0.0, 0.0, 0.0),
            Position::new(5.0, 0.0, 0.0),
            Position::new(0.0, 5.0, 0.0),
            Position::new(0.0, 0.0, 5.0),
        ];
        let truth = Position::new(1.0, 2.0, 1.0);
        let prob = MultilaterationProblem::exact(anchors, &truth);
        let report = minimize(&prob, truth, &SolverConfig::default(), 20);
        assert!(report.result.converged);
        assert_eq!(report.result.iterations, 0);
    }
}
