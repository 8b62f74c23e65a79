use super::task::Trajectory;
use crate::error::{CampError, Result};

/// Fixed surrogate rate converting node expansions to pseudo-seconds, so the
/// deterministic cost channel is scale-compatible with the wall-clock
/// trade-off weights. One expansion is billed as two microseconds.
pub const EXPANSION_SECONDS: f64 = 2e-6;

/// Which compute-cost measurement the objective charges for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CostChannel {
    /// Measured wall-clock seconds of every policy call.
    WallClock,
    /// Deterministic node-expansion counts, billed at [`EXPANSION_SECONDS`]
    /// per expansion.
    Expansions,
}

impl CostChannel {
    pub fn cost_seconds(&self, traj: &Trajectory) -> f64 {
        match self {
            CostChannel::WallClock => traj.total_compute_seconds(),
            CostChannel::Expansions => traj.total_expansions() as f64 * EXPANSION_SECONDS,
        }
    }
}

/// Mean over trajectories of discounted return minus `lambda` times the
/// cumulative compute cost on the chosen channel.
pub fn evaluate_objective(
    trajs: &[Trajectory],
    lambda: f64,
    gamma: f64,
    channel: CostChannel,
) -> Result<f64> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    if trajs.is_empty() {
        return Err(CampError::EmptyTrajectorySet);
    }
    let total: f64 = trajs
        .iter()
        .map(|t| t.discounted_return(gamma) - lambda * channel.cost_seconds(t))
        .sum();
    Ok(total / trajs.len() as f64)
}
