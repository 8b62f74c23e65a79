use super::mdp::FactoredMdp;
use super::task::{Step, Task, Trajectory};
use super::vars::{FactoredAction, FactoredState};
use crate::error::{CampError, Result};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// The result of one policy call.
#[derive(Debug, Clone)]
pub struct PolicyStep {
    pub action: FactoredAction,
    /// Deterministic node-expansion count of the call, the
    /// machine-independent compute proxy recorded next to wall-clock time.
    pub expansions: u64,
    /// True when the call fell back (timeout, zero iterations, exhausted
    /// plans) instead of completing normally.
    pub flagged: bool,
}

impl PolicyStep {
    pub fn new(action: FactoredAction) -> Self {
        Self { action, expansions: 0, flagged: false }
    }
}

/// A state → action procedure. Stateful so planners can cache work between
/// calls (offline value tables, transferred plans, step counters).
pub trait Policy {
    fn act(&mut self, state: &FactoredState, step: usize, rng: &mut ChaCha8Rng) -> Result<PolicyStep>;
}

impl<F> Policy for F
where
    F: FnMut(&FactoredState, usize, &mut ChaCha8Rng) -> Result<PolicyStep>,
{
    fn act(&mut self, state: &FactoredState, step: usize, rng: &mut ChaCha8Rng) -> Result<PolicyStep> {
        self(state, step, rng)
    }
}

/// Executes `policy` on `task` in `mdp` for at most `H` steps, metering each
/// policy call's wall-clock time and expansion count.
///
/// The trajectory starts at the task's initial state and ends at the horizon
/// or a domain-declared terminal state; the final step records the last
/// state's reward with no action. A policy error aborts the rollout and
/// surfaces the failing step index.
pub fn rollout(
    mdp: &FactoredMdp,
    policy: &mut dyn Policy,
    task: &Task,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    mdp.vars().validate_state(&task.initial_state)?;
    let mut traj = Trajectory::default();
    let mut state = task.initial_state.clone();
    for t in 0..mdp.horizon() {
        if mdp.is_terminal(&state) {
            break;
        }
        let started = Instant::now();
        let ps = policy
            .act(&state, t, rng)
            .map_err(|e| CampError::PolicyFailure { step: t, reason: e.to_string() })?;
        let compute_seconds = started.elapsed().as_secs_f64();
        mdp.vars().validate_action(&ps.action)?;
        let next = mdp.sample_transition(&state, &ps.action, rng);
        traj.flagged |= ps.flagged;
        traj.steps.push(Step {
            state,
            action: Some(ps.action),
            reward: 0.0, // filled below from the task reward
            compute_seconds,
            expansions: ps.expansions,
        });
        state = next;
    }
    traj.steps.push(Step {
        state,
        action: None,
        reward: 0.0,
        compute_seconds: 0.0,
        expansions: 0,
    });
    for step in &mut traj.steps {
        step.reward = (task.reward)(&step.state);
    }
    debug_assert!(traj.steps.len() <= mdp.horizon() + 1);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::vars::{VariableSpec, Vars};
    use crate::core::MdpBuilder;
    use crate::rng::derive_rng;
    use std::sync::Arc;

    /// Deterministic chain: `pos` advances by one per step when the action
    /// is `advance`, capped at the end.
    fn chain_mdp(len: usize, horizon: usize) -> FactoredMdp {
        let vars = Vars::new(
            vec![VariableSpec::state_range("pos", len)],
            vec![VariableSpec::action_range("go", 2)],
        )
        .unwrap();
        let last = (len - 1) as u16;
        MdpBuilder::new(vars)
            .transition(Arc::new(
                move |s: &FactoredState, a: &FactoredAction, _rng: &mut ChaCha8Rng| {
                    let mut next = s.clone();
                    if a.values[0] == 1 && s.values[0] < last {
                        next.values[0] += 1;
                    }
                    next
                },
            ))
            .reward(Arc::new(|s: &FactoredState| s.values[0] as f64))
            .reward_vars(&["pos"])
            .horizon(horizon)
            .build()
            .unwrap()
    }

    fn constant_policy(idx: u16) -> impl Policy {
        move |_s: &FactoredState, _t: usize, _rng: &mut ChaCha8Rng| {
            Ok(PolicyStep::new(FactoredAction::new(vec![idx])))
        }
    }

    fn task_for(mdp: &FactoredMdp, start: u16) -> Task {
        Task::new(
            mdp.vars(),
            "t0",
            FactoredState::new(vec![start]),
            mdp.reward_fn().clone(),
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn one_step_mdp_yields_length_two() {
        let mdp = chain_mdp(3, 1);
        let task = task_for(&mdp, 0);
        let mut rng = derive_rng(0, &["rollout"]);
        let traj = rollout(&mdp, &mut constant_policy(1), &task, &mut rng).unwrap();
        assert_eq!(traj.steps.len(), 2);
    }

    #[test]
    fn deterministic_chain_visits_states_in_order() {
        let mdp = chain_mdp(3, 2);
        let task = task_for(&mdp, 0);
        let mut rng = derive_rng(0, &["rollout"]);
        let traj = rollout(&mdp, &mut constant_policy(1), &task, &mut rng).unwrap();
        let states: Vec<u16> = traj.states().map(|s| s.values[0]).collect();
        assert_eq!(states, vec![0, 1, 2]);
    }

    #[test]
    fn policy_error_surfaces_step_index() {
        let mdp = chain_mdp(3, 5);
        let task = task_for(&mdp, 0);
        let mut calls = 0;
        let mut failing = move |_s: &FactoredState, _t: usize, _r: &mut ChaCha8Rng| {
            calls += 1;
            if calls > 2 {
                Err(CampError::InvalidAssignment("boom".into()))
            } else {
                Ok(PolicyStep::new(FactoredAction::new(vec![1])))
            }
        };
        let mut rng = derive_rng(0, &["rollout"]);
        let err = rollout(&mdp, &mut failing, &task, &mut rng).unwrap_err();
        match err {
            CampError::PolicyFailure { step, .. } => assert_eq!(step, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let mdp = chain_mdp(5, 4);
        let task = task_for(&mdp, 0);
        let run = || {
            let mut rng = derive_rng(99, &["rollout"]);
            rollout(&mdp, &mut constant_policy(1), &task, &mut rng).unwrap()
        };
        let a = run();
        let b = run();
        let sa: Vec<_> = a.states().cloned().collect();
        let sb: Vec<_> = b.states().cloned().collect();
        assert_eq!(sa, sb);
        let aa: Vec<_> = a.actions().cloned().collect();
        let ab: Vec<_> = b.actions().cloned().collect();
        assert_eq!(aa, ab);
    }
}
