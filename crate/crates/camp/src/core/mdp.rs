use super::vars::{FactoredAction, FactoredState, Vars};
use crate::error::{CampError, Result};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Black-box transition model over factored states.
///
/// `dist` is the optional exact conditional distribution query for small
/// domains; planners and the independence learner use it when available and
/// fall back to repeated sampling otherwise.
pub trait TransitionFn: Send + Sync {
    fn sample(&self, s: &FactoredState, a: &FactoredAction, rng: &mut ChaCha8Rng) -> FactoredState;

    /// Exact successor distribution, if the model supports it.
    fn dist(&self, _s: &FactoredState, _a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
        None
    }

    /// Most-likely successor under the determinization used by replanning
    /// search; ties broken toward the lexicographically smallest state.
    fn most_likely(&self, s: &FactoredState, a: &FactoredAction) -> Result<FactoredState> {
        let dist = self.dist(s, a).ok_or(CampError::NoTransitionDist)?;
        dist.into_iter()
            .max_by(|(sa, pa), (sb, pb)| {
                pa.partial_cmp(pb)
                    .unwrap()
                    .then_with(|| sb.cmp(sa)) // prefer smaller state on ties
            })
            .map(|(s, _)| s)
            .ok_or(CampError::NoTransitionDist)
    }
}

impl<F> TransitionFn for F
where
    F: Fn(&FactoredState, &FactoredAction, &mut ChaCha8Rng) -> FactoredState + Send + Sync,
{
    fn sample(&self, s: &FactoredState, a: &FactoredAction, rng: &mut ChaCha8Rng) -> FactoredState {
        self(s, a, rng)
    }
}

pub type RewardFn = dyn Fn(&FactoredState) -> f64 + Send + Sync;
pub type TerminalFn = dyn Fn(&FactoredState) -> bool + Send + Sync;

/// A factored MDP: variable declarations plus black-box transition sampler,
/// reward evaluator, reward-variable subset, horizon, and discount.
#[derive(Clone)]
pub struct FactoredMdp {
    vars: Arc<Vars>,
    transition: Arc<dyn TransitionFn>,
    reward: Arc<RewardFn>,
    reward_vars: Vec<String>,
    terminal: Option<Arc<TerminalFn>>,
    horizon: usize,
    gamma: f64,
    joint_actions: Arc<Vec<FactoredAction>>,
}

impl FactoredMdp {
    pub fn vars(&self) -> &Arc<Vars> {
        &self.vars
    }

    pub fn transition(&self) -> &Arc<dyn TransitionFn> {
        &self.transition
    }

    pub fn reward_fn(&self) -> &Arc<RewardFn> {
        &self.reward
    }

    pub fn reward(&self, s: &FactoredState) -> f64 {
        (self.reward)(s)
    }

    pub fn reward_vars(&self) -> &[String] {
        &self.reward_vars
    }

    pub fn is_terminal(&self, s: &FactoredState) -> bool {
        self.terminal.as_ref().map_or(false, |t| t(s))
    }

    pub fn terminal_fn(&self) -> Option<&Arc<TerminalFn>> {
        self.terminal.as_ref()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The enumerated joint action space (Cartesian product of action
    /// variable domains), in lexicographic index order.
    pub fn joint_actions(&self) -> &[FactoredAction] {
        &self.joint_actions
    }

    pub fn sample_transition(
        &self,
        s: &FactoredState,
        a: &FactoredAction,
        rng: &mut ChaCha8Rng,
    ) -> FactoredState {
        self.transition.sample(s, a, rng)
    }

    /// Exact successor distribution; validates it sums to 1 (tolerance 1e-9).
    pub fn transition_dist(
        &self,
        s: &FactoredState,
        a: &FactoredAction,
    ) -> Option<Vec<(FactoredState, f64)>> {
        let dist = self.transition.dist(s, a)?;
        debug_assert!(
            (dist.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-9,
            "transition distribution must sum to 1"
        );
        Some(dist)
    }
}

fn enumerate_joint_actions(vars: &Vars) -> Vec<FactoredAction> {
    let sizes: Vec<usize> = vars.action_vars().iter().map(|v| v.size()).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0u16; sizes.len()];
    loop {
        out.push(FactoredAction::new(cur.clone()));
        // odometer increment, last variable fastest
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as usize) < sizes[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Builder for [`FactoredMdp`].
pub struct MdpBuilder {
    vars: Arc<Vars>,
    transition: Option<Arc<dyn TransitionFn>>,
    reward: Option<Arc<RewardFn>>,
    reward_vars: Vec<String>,
    terminal: Option<Arc<TerminalFn>>,
    horizon: usize,
    gamma: f64,
}

impl MdpBuilder {
    pub fn new(vars: Arc<Vars>) -> Self {
        Self {
            vars,
            transition: None,
            reward: None,
            reward_vars: Vec::new(),
            terminal: None,
            horizon: 25,
            gamma: 1.0,
        }
    }

    pub fn transition(mut self, t: Arc<dyn TransitionFn>) -> Self {
        self.transition = Some(t);
        self
    }

    pub fn reward(mut self, r: Arc<RewardFn>) -> Self {
        self.reward = Some(r);
        self
    }

    pub fn reward_vars(mut self, names: &[&str]) -> Self {
        self.reward_vars = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn terminal(mut self, t: Arc<TerminalFn>) -> Self {
        self.terminal = Some(t);
        self
    }

    pub fn horizon(mut self, h: usize) -> Self {
        self.horizon = h;
        self
    }

    pub fn gamma(mut self, g: f64) -> Self {
        self.gamma = g;
        self
    }

    pub fn build(self) -> Result<FactoredMdp> {
        let transition = self
            .transition
            .ok_or_else(|| CampError::InvalidAssignment("missing transition".into()))?;
        let reward = self
            .reward
            .ok_or_else(|| CampError::InvalidAssignment("missing reward".into()))?;
        for name in &self.reward_vars {
            let id = self.vars.lookup(name)?;
            if id.kind != super::vars::VarKind::State {
                return Err(CampError::InvalidAssignment(format!(
                    "reward variable `{name}` is not a state variable"
                )));
            }
        }
        if self.horizon == 0 {
            return Err(CampError::InvalidAssignment("horizon must be positive".into()));
        }
        let joint_actions = Arc::new(enumerate_joint_actions(&self.vars));
        Ok(FactoredMdp {
            vars: self.vars,
            transition,
            reward,
            reward_vars: self.reward_vars,
            terminal: self.terminal,
            horizon: self.horizon,
            gamma: self.gamma,
            joint_actions,
        })
    }
}
