use super::lm::minimize;
use super::{SolverConfig, SolverError, SolverResult, TdoaProblem};
use crate::geometry::Position;

/// Passive-listener positioning from range differences by Levenberg-Marquardt.
///
/// Minimizes `sum_i (m_i - (|a_i - q| + |p - a_i| - |p - q|))^2` over `p` with
/// the initiator `q` held fixed. Stopping rules match [`super::lm_multilaterate`].
pub fn lm_tdoa(
    problem: &TdoaProblem,
    initial: Position,
    config: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    problem.validate()?;
    if !initial.is_finite() {
        return Err(SolverError::NonFinite("initial"));
    }
    Ok(minimize(problem, initial, config, config.max_lm_iterations).result)
}
