use super::mdp::RewardFn;
use super::vars::{FactoredAction, FactoredState, Vars};
use crate::error::{CampError, Result};
use std::sync::Arc;

/// A task: an initial state, a reward function, and the feature vector the
/// context selector conditions on.
#[derive(Clone)]
pub struct Task {
    pub id: String,
    pub initial_state: FactoredState,
    pub reward: Arc<RewardFn>,
    pub features: Vec<f64>,
}

impl Task {
    pub fn new(
        vars: &Vars,
        id: impl Into<String>,
        initial_state: FactoredState,
        reward: Arc<RewardFn>,
        features: Vec<f64>,
    ) -> Result<Self> {
        vars.validate_state(&initial_state)?;
        if features.iter().any(|f| !f.is_finite()) {
            return Err(CampError::InvalidAssignment("non-finite task feature".into()));
        }
        Ok(Self { id: id.into(), initial_state, reward, features })
    }
}

/// One rollout step. The final step of a trajectory carries no action and
/// zero compute cost; every earlier step records the policy call that
/// produced its action.
#[derive(Debug, Clone)]
pub struct Step {
    pub state: FactoredState,
    pub action: Option<FactoredAction>,
    pub reward: f64,
    pub compute_seconds: f64,
    pub expansions: u64,
}

/// An executed trajectory of at most `H + 1` steps.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// Set when any policy call fell back to a random action (timeout,
    /// exhausted search, or exhausted transferred plans).
    pub flagged: bool,
}

impl Trajectory {
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.steps
            .iter()
            .enumerate()
            .map(|(t, step)| gamma.powi(t as i32) * step.reward)
            .sum()
    }

    pub fn total_compute_seconds(&self) -> f64 {
        self.steps.iter().map(|s| s.compute_seconds).sum()
    }

    pub fn total_expansions(&self) -> u64 {
        self.steps.iter().map(|s| s.expansions).sum()
    }

    pub fn states(&self) -> impl Iterator<Item = &FactoredState> {
        self.steps.iter().map(|s| &s.state)
    }

    pub fn actions(&self) -> impl Iterator<Item = &FactoredAction> {
        self.steps.iter().filter_map(|s| s.action.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rewards: &[f64]) -> Trajectory {
        Trajectory {
            steps: rewards
                .iter()
                .map(|&r| Step {
                    state: FactoredState::new(vec![]),
                    action: None,
                    reward: r,
                    compute_seconds: 0.0,
                    expansions: 0,
                })
                .collect(),
            flagged: false,
        }
    }

    #[test]
    fn discounted_return_geometric() {
        let t = traj(&[1.0, 1.0, 1.0]);
        let g = 0.5;
        assert!((t.discounted_return(g) - (1.0 + 0.5 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn undiscounted_return_is_plain_sum() {
        let t = traj(&[0.0, 2.0, 3.0]);
        assert_eq!(t.discounted_return(1.0), 5.0);
    }
}
