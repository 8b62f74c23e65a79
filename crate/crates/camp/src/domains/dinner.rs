//! Deterministic dinner-making domain. The agent starts in the living room
//! and can make one of three meals: ramen (2 steps, living room), a sandwich
//! (go to the kitchen, then a 15-step chain), or a steak (go to the store,
//! then a 21-step chain). Making any meal ends the task. Every non-terminal
//! step pays a timestep penalty; only the three terminal rewards vary
//! between tasks, and they are also the task features.

use crate::contexts::ContextGenConfig;
use crate::core::{
    FactoredAction, FactoredMdp, FactoredState, MdpBuilder, Task, TransitionFn, VariableSpec, Vars,
};
use crate::error::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Optimal plan lengths for ramen, sandwich, and steak.
pub const MEAL_PLAN_LENGTHS: [usize; 3] = [2, 16, 22];

const RAMEN_STEPS: usize = 2;
const SANDWICH_STEPS: usize = 15;
const STEAK_STEPS: usize = 21;

// State variable layout.
const LOC: usize = 0; // 0 living room, 1 kitchen, 2 store
const RAMEN_BASE: usize = 1;
const SW_BASE: usize = RAMEN_BASE + RAMEN_STEPS;
const ST_BASE: usize = SW_BASE + SANDWICH_STEPS;
const N_STATE_VARS: usize = ST_BASE + STEAK_STEPS;

// Operator layout (single action variable): ops 0..3 are goto
// living/kitchen/store, then the three fluent chains.
const OP_RAMEN: usize = 3;
const OP_SW: usize = OP_RAMEN + RAMEN_STEPS;
const OP_ST: usize = OP_SW + SANDWICH_STEPS;
const N_OPS: usize = OP_ST + STEAK_STEPS;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DinnerConfig {
    /// Terminal rewards for (ramen, sandwich, steak).
    pub rewards: [f64; 3],
    pub step_penalty: f64,
    pub horizon: usize,
}

impl Default for DinnerConfig {
    fn default() -> Self {
        Self { rewards: [10.0, 50.0, 100.0], step_penalty: 1.0, horizon: 25 }
    }
}

fn dinner_vars() -> Arc<Vars> {
    let mut state = vec![VariableSpec::state_range("loc", 3)];
    for i in 0..RAMEN_STEPS {
        state.push(VariableSpec::state_bool(format!("ramen{i}")));
    }
    for i in 0..SANDWICH_STEPS {
        state.push(VariableSpec::state_bool(format!("sw{i}")));
    }
    for i in 0..STEAK_STEPS {
        state.push(VariableSpec::state_bool(format!("st{i}")));
    }
    debug_assert_eq!(state.len(), N_STATE_VARS);
    Vars::new(state, vec![VariableSpec::action_range("op", N_OPS)]).unwrap()
}

struct DinnerTransition;

fn terminal_meal(s: &FactoredState) -> Option<usize> {
    if s.values[RAMEN_BASE + RAMEN_STEPS - 1] == 1 {
        Some(0)
    } else if s.values[SW_BASE + SANDWICH_STEPS - 1] == 1 {
        Some(1)
    } else if s.values[ST_BASE + STEAK_STEPS - 1] == 1 {
        Some(2)
    } else {
        None
    }
}

fn apply_op(s: &FactoredState, op: usize) -> FactoredState {
    let mut next = s.clone();
    if op < OP_RAMEN {
        next.values[LOC] = op as u16;
        return next;
    }
    // chain operators: (base var, required location, step index)
    let (base, gate, k) = if op < OP_SW {
        (RAMEN_BASE, 0u16, op - OP_RAMEN)
    } else if op < OP_ST {
        (SW_BASE, 1, op - OP_SW)
    } else {
        (ST_BASE, 2, op - OP_ST)
    };
    let prereq = k == 0 || s.values[base + k - 1] == 1;
    if s.values[LOC] == gate && prereq {
        next.values[base + k] = 1;
    }
    next
}

impl TransitionFn for DinnerTransition {
    fn sample(&self, s: &FactoredState, a: &FactoredAction, _rng: &mut ChaCha8Rng) -> FactoredState {
        apply_op(s, a.values[0] as usize)
    }

    fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
        Some(vec![(apply_op(s, a.values[0] as usize), 1.0)])
    }

    fn most_likely(&self, s: &FactoredState, a: &FactoredAction) -> Result<FactoredState> {
        Ok(apply_op(s, a.values[0] as usize))
    }
}

/// The shared deterministic MDP with this config's rewards bound.
pub fn dinner_build(cfg: &DinnerConfig) -> FactoredMdp {
    let vars = dinner_vars();
    let rewards = cfg.rewards;
    let penalty = cfg.step_penalty;
    let reward = Arc::new(move |s: &FactoredState| match terminal_meal(s) {
        Some(meal) => rewards[meal],
        None => -penalty,
    });
    MdpBuilder::new(vars)
        .transition(Arc::new(DinnerTransition))
        .reward(reward)
        .reward_vars(&[
            &format!("ramen{}", RAMEN_STEPS - 1),
            &format!("sw{}", SANDWICH_STEPS - 1),
            &format!("st{}", STEAK_STEPS - 1),
        ])
        .terminal(Arc::new(|s: &FactoredState| terminal_meal(s).is_some()))
        .horizon(cfg.horizon)
        .gamma(1.0)
        .build()
        .unwrap()
}

/// A sampled dinner task: the three terminal rewards drawn uniformly from
/// `{5, 10, ..., 100}`; everything else fixed.
pub struct DinnerTask {
    pub mdp: FactoredMdp,
    pub task: Task,
    pub rewards: [f64; 3],
}

pub fn dinner_sample_task(
    base: &DinnerConfig,
    task_id: &str,
    rng: &mut ChaCha8Rng,
) -> Result<DinnerTask> {
    let rewards = [
        5.0 * rng.gen_range(1..=20) as f64,
        5.0 * rng.gen_range(1..=20) as f64,
        5.0 * rng.gen_range(1..=20) as f64,
    ];
    dinner_bind(base, rewards, task_id)
}

/// Binds a reward triple to a task (features are the rewards themselves).
pub fn dinner_bind(base: &DinnerConfig, rewards: [f64; 3], task_id: &str) -> Result<DinnerTask> {
    let cfg = DinnerConfig { rewards, ..base.clone() };
    let mdp = dinner_build(&cfg);
    let initial_state = FactoredState::new(vec![0; N_STATE_VARS]);
    let task = Task::new(
        mdp.vars(),
        task_id,
        initial_state,
        mdp.reward_fn().clone(),
        rewards.to_vec(),
    )?;
    Ok(DinnerTask { mdp, task, rewards })
}

/// State features for the policy baselines: location one-hot plus fluents.
pub fn dinner_state_features(s: &FactoredState) -> Vec<f64> {
    let mut f = vec![0.0; 3 + N_STATE_VARS - 1];
    f[s.values[LOC] as usize] = 1.0;
    for i in 1..N_STATE_VARS {
        f[2 + i] = s.values[i] as f64;
    }
    f
}

/// Context-space settings: single-term and disjunctive constraints over the
/// location variable.
pub fn dinner_context_config() -> ContextGenConfig {
    ContextGenConfig {
        max_len: 2,
        domain_size_threshold: 8,
        conjunctions: false,
        disjunctions: true,
        variables: Some(vec!["loc".into()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planners::{optimal_search, PlannerConfig, PlannerKind};
    use crate::rng::derive_rng;
    use std::collections::{HashMap, VecDeque};

    fn optimal_cfg() -> PlannerConfig {
        PlannerConfig::new(PlannerKind::OptimalSearch)
    }

    #[test]
    fn transition_consumes_no_rng() {
        let t = dinner_bind(&DinnerConfig::default(), [10.0, 50.0, 100.0], "t").unwrap();
        let s = t.task.initial_state.clone();
        let a = FactoredAction::new(vec![OP_RAMEN as u16]);
        let mut rng1 = derive_rng(1, &["a"]);
        let mut rng2 = derive_rng(2, &["b"]);
        assert_eq!(
            t.mdp.sample_transition(&s, &a, &mut rng1),
            t.mdp.sample_transition(&s, &a, &mut rng2)
        );
    }

    /// Shortest path in steps to each meal's terminal flag, by plain BFS
    /// over the deterministic state graph.
    fn shortest_plan_lengths() -> [usize; 3] {
        let t = dinner_bind(&DinnerConfig::default(), [10.0, 50.0, 100.0], "t").unwrap();
        let mdp = &t.mdp;
        let mut dist: HashMap<FactoredState, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(t.task.initial_state.clone(), 0);
        queue.push_back(t.task.initial_state.clone());
        let mut best = [usize::MAX; 3];
        let mut rng = derive_rng(0, &["bfs"]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            if let Some(meal) = terminal_meal(&s) {
                if d < best[meal] {
                    best[meal] = d;
                }
                continue;
            }
            if d >= 30 {
                continue;
            }
            for a in mdp.joint_actions() {
                let next = mdp.sample_transition(&s, a, &mut rng);
                if !dist.contains_key(&next) {
                    dist.insert(next.clone(), d + 1);
                    queue.push_back(next);
                }
            }
        }
        best
    }

    #[test]
    fn exactly_three_meal_plans_with_expected_lengths() {
        assert_eq!(shortest_plan_lengths(), MEAL_PLAN_LENGTHS);
    }

    #[test]
    fn steak_plan_nets_78() {
        let t = dinner_bind(&DinnerConfig::default(), [10.0, 50.0, 100.0], "t").unwrap();
        let res = optimal_search(&t.mdp, &t.task.initial_state, &optimal_cfg()).unwrap();
        assert_eq!(res.actions.len(), 22);
        assert!((res.value - 78.0).abs() < 1e-9, "value {}", res.value);
    }

    #[test]
    fn ramen_plan_nets_88_when_ramen_dominates() {
        let t = dinner_bind(&DinnerConfig::default(), [90.0, 50.0, 10.0], "t").unwrap();
        let res = optimal_search(&t.mdp, &t.task.initial_state, &optimal_cfg()).unwrap();
        assert_eq!(res.actions.len(), 2);
        assert!((res.value - 88.0).abs() < 1e-9, "value {}", res.value);
    }

    #[test]
    fn features_are_the_rewards() {
        let mut rng = derive_rng(5, &["dinner"]);
        let t = dinner_sample_task(&DinnerConfig::default(), "t", &mut rng).unwrap();
        assert_eq!(t.task.features, t.rewards.to_vec());
    }

    #[test]
    fn context_space_over_location() {
        let t = dinner_bind(&DinnerConfig::default(), [10.0, 50.0, 100.0], "t").unwrap();
        let ctxs =
            crate::contexts::generate_contexts_with(t.mdp.vars(), &dinner_context_config())
                .unwrap();
        // universal + 6 literals + C(6,2) = 15 disjunctions
        assert_eq!(ctxs.len(), 22);
    }
}
