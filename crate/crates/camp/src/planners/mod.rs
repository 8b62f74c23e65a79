//! Black-box solvers: Monte Carlo tree search, breadth-first search with
//! replanning, asynchronous value iteration, and an exhaustive optimal
//! search for deterministic domains. All of them plan against [`PlanModel`],
//! which both the base factored MDP and its abstractions implement.

mod bfs;
mod mcts;
mod optimal;
mod vi;

pub use bfs::{bfs_best_path, bfs_replan_plan};
pub use mcts::mcts_plan;
pub use optimal::{optimal_search, PlanResult};
pub use vi::{value_iteration, ViTable};

use crate::abstraction::{Camp, CampState};
use crate::core::{FactoredAction, FactoredMdp, FactoredState, Policy, PolicyStep};
use crate::error::{CampError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

/// Interface planners consume: enumerated actions, black-box sampling,
/// optional exact distributions, rewards, terminals, horizon, and discount.
pub trait PlanModel: Send + Sync {
    type State: Clone + Eq + Hash + Ord + Debug + Send + Sync;

    fn actions(&self) -> &[FactoredAction];
    fn sample(&self, s: &Self::State, a: &FactoredAction, rng: &mut ChaCha8Rng) -> Self::State;
    fn dist(&self, s: &Self::State, a: &FactoredAction) -> Option<Vec<(Self::State, f64)>>;
    fn most_likely(&self, s: &Self::State, a: &FactoredAction) -> Result<Self::State>;
    fn reward(&self, s: &Self::State) -> f64;
    fn is_terminal(&self, s: &Self::State) -> bool;
    /// Absorbing violation state, skipped by search expansion.
    fn is_sink(&self, _s: &Self::State) -> bool {
        false
    }
    fn horizon(&self) -> usize;
    fn gamma(&self) -> f64;

    /// Maps a concrete environment state into this model's state space.
    fn to_model_state(&self, real: &FactoredState) -> Self::State;
    /// Maps one of this model's actions back to a concrete action.
    fn to_real_action(&self, a: &FactoredAction) -> FactoredAction;
}

impl PlanModel for FactoredMdp {
    type State = FactoredState;

    fn actions(&self) -> &[FactoredAction] {
        self.joint_actions()
    }
    fn sample(&self, s: &FactoredState, a: &FactoredAction, rng: &mut ChaCha8Rng) -> FactoredState {
        self.sample_transition(s, a, rng)
    }
    fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
        self.transition_dist(s, a)
    }
    fn most_likely(&self, s: &FactoredState, a: &FactoredAction) -> Result<FactoredState> {
        self.transition().most_likely(s, a)
    }
    fn reward(&self, s: &FactoredState) -> f64 {
        FactoredMdp::reward(self, s)
    }
    fn is_terminal(&self, s: &FactoredState) -> bool {
        FactoredMdp::is_terminal(self, s)
    }
    fn horizon(&self) -> usize {
        FactoredMdp::horizon(self)
    }
    fn gamma(&self) -> f64 {
        FactoredMdp::gamma(self)
    }
    fn to_model_state(&self, real: &FactoredState) -> FactoredState {
        real.clone()
    }
    fn to_real_action(&self, a: &FactoredAction) -> FactoredAction {
        a.clone()
    }
}

impl PlanModel for Camp {
    type State = CampState;

    fn actions(&self) -> &[FactoredAction] {
        self.abstract_actions()
    }
    fn sample(&self, s: &CampState, a: &FactoredAction, rng: &mut ChaCha8Rng) -> CampState {
        self.step(s, a, rng)
    }
    fn dist(&self, s: &CampState, a: &FactoredAction) -> Option<Vec<(CampState, f64)>> {
        Camp::dist(self, s, a)
    }
    fn most_likely(&self, s: &CampState, a: &FactoredAction) -> Result<CampState> {
        Camp::most_likely(self, s, a)
    }
    fn reward(&self, s: &CampState) -> f64 {
        Camp::reward(self, s)
    }
    fn is_terminal(&self, s: &CampState) -> bool {
        Camp::is_terminal(self, s)
    }
    fn is_sink(&self, s: &CampState) -> bool {
        s.is_sink()
    }
    fn horizon(&self) -> usize {
        self.base().horizon()
    }
    fn gamma(&self) -> f64 {
        self.base().gamma()
    }
    fn to_model_state(&self, real: &FactoredState) -> CampState {
        CampState::Interior(self.project_state(real))
    }
    fn to_real_action(&self, a: &FactoredAction) -> FactoredAction {
        self.lift_action(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlannerKind {
    Mcts,
    BfsReplan,
    ValueIteration,
    OptimalSearch,
}

/// How stochastic transitions are collapsed for deterministic search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determinization {
    MostLikely,
}

/// Planner settings. The per-call timeout is capped at 60 seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub timeout_seconds: f64,
    pub mcts_iterations_cap: usize,
    pub mcts_exploration: f64,
    pub mcts_budget_seconds: f64,
    pub vi_tolerance: f64,
    pub vi_state_cap: usize,
    /// Backward induction over steps-remaining when true; stationary
    /// discounted fixed point otherwise.
    pub vi_finite_horizon: bool,
    pub determinization: Determinization,
}

pub const MAX_TIMEOUT_SECONDS: f64 = 60.0;

impl PlannerConfig {
    pub fn new(kind: PlannerKind) -> Self {
        Self {
            kind,
            timeout_seconds: MAX_TIMEOUT_SECONDS,
            mcts_iterations_cap: 10_000,
            mcts_exploration: 1.41,
            mcts_budget_seconds: 0.25,
            vi_tolerance: 1e-6,
            vi_state_cap: 200_000,
            vi_finite_horizon: true,
            determinization: Determinization::MostLikely,
        }
    }

    pub fn with_timeout(mut self, seconds: f64) -> Self {
        self.timeout_seconds = seconds.min(MAX_TIMEOUT_SECONDS);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout_seconds > MAX_TIMEOUT_SECONDS {
            return Err(CampError::InvalidAssignment(format!(
                "planner timeout {}s exceeds the {}s cap",
                self.timeout_seconds, MAX_TIMEOUT_SECONDS
            )));
        }
        Ok(())
    }
}

/// What one planning call produced.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub action: FactoredAction,
    pub expansions: u64,
    pub flagged: bool,
}

pub(crate) fn random_action<M: PlanModel>(model: &M, rng: &mut ChaCha8Rng) -> FactoredAction {
    let actions = model.actions();
    actions[rng.gen_range(0..actions.len())].clone()
}

/// A rollout policy that plans in `model` at every step (or once, for the
/// offline planners) and lifts the chosen action back to the environment.
pub struct PlannerPolicy<M: PlanModel> {
    model: Arc<M>,
    cfg: PlannerConfig,
    vi: Option<ViTable<M::State>>,
    plan: Option<PlanResult>,
}

impl<M: PlanModel> PlannerPolicy<M> {
    pub fn new(model: Arc<M>, cfg: PlannerConfig) -> Self {
        Self { model, cfg, vi: None, plan: None }
    }

    pub fn model(&self) -> &Arc<M> {
        &self.model
    }
}

impl<M: PlanModel> Policy for PlannerPolicy<M> {
    fn act(&mut self, state: &FactoredState, step: usize, rng: &mut ChaCha8Rng) -> Result<PolicyStep> {
        self.cfg.validate()?;
        let ms = self.model.to_model_state(state);
        let (action, expansions, flagged) = match self.cfg.kind {
            PlannerKind::Mcts => {
                let out = mcts_plan(self.model.as_ref(), &ms, &self.cfg, rng)?;
                (out.action, out.expansions, out.flagged)
            }
            PlannerKind::BfsReplan => {
                let out = bfs_replan_plan(self.model.as_ref(), &ms, &self.cfg)?;
                (out.action, out.expansions, out.flagged)
            }
            PlannerKind::ValueIteration => {
                let mut expansions = 1;
                if self.vi.is_none() {
                    let table = value_iteration(self.model.as_ref(), &ms, &self.cfg)?;
                    expansions = table.backups;
                    self.vi = Some(table);
                }
                let table = self.vi.as_ref().unwrap();
                let remaining = self.model.horizon().saturating_sub(step);
                let action = table.greedy_action(self.model.as_ref(), &ms, remaining)?;
                (action, expansions, false)
            }
            PlannerKind::OptimalSearch => {
                if self.plan.is_none() {
                    self.plan = Some(optimal_search(self.model.as_ref(), &ms, &self.cfg)?);
                }
                let plan = self.plan.as_ref().unwrap();
                let expansions = if step == 0 { plan.expansions } else { 1 };
                match plan.actions.get(step) {
                    Some(a) => (a.clone(), expansions, plan.flagged),
                    // plan exhausted before the horizon: fall back
                    None => (random_action(self.model.as_ref(), rng), expansions, true),
                }
            }
        };
        Ok(PolicyStep {
            action: self.model.to_real_action(&action),
            expansions,
            flagged,
        })
    }
}

/// Enumerates the states reachable from `start` through exact transition
/// distributions, failing beyond `cap` states.
pub fn enumerate_reachable<M: PlanModel>(
    model: &M,
    start: &M::State,
    cap: usize,
) -> Result<Vec<M::State>> {
    let mut seen = std::collections::HashSet::new();
    let mut order = Vec::new();
    let mut frontier = vec![start.clone()];
    seen.insert(start.clone());
    while let Some(s) = frontier.pop() {
        order.push(s.clone());
        if order.len() > cap {
            return Err(CampError::StateSpaceTooLarge { visited: order.len(), cap });
        }
        if model.is_terminal(&s) || model.is_sink(&s) {
            continue;
        }
        for a in model.actions() {
            let dist = s_dist(model, &s, a)?;
            for (next, _) in dist {
                if seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
    }
    Ok(order)
}

pub(crate) fn s_dist<M: PlanModel>(
    model: &M,
    s: &M::State,
    a: &FactoredAction,
) -> Result<Vec<(M::State, f64)>> {
    model.dist(s, a).ok_or(CampError::NoTransitionDist)
}
