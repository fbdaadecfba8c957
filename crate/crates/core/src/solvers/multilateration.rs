use super::lm::minimize;
use super::{MultilaterationProblem, SolverConfig, SolverError, SolverResult};
use crate::geometry::Position;

/// Range multilateration by Levenberg-Marquardt from `initial`.
///
/// Returns a local minimizer of `sum_i (|p - a_i| - d_i)^2`. The anchor
/// centroid is the usual starting point when nothing better is known.
pub fn lm_multilaterate(
    problem: &MultilaterationProblem,
    initial: Position,
    config: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    problem.validate()?;
    if !initial.is_finite() {
        return Err(SolverError::NonFinite("initial"));
    }
    Ok(minimize(problem, initial, config, config.max_lm_iterations).result)
}
