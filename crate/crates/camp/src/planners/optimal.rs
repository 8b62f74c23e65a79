use super::{PlanModel, PlannerConfig};
use crate::core::FactoredAction;
use crate::error::Result;
use std::collections::HashMap;
use std::collections::VecDeque;
use std::time::Instant;

/// A full plan with its trajectory value.
#[derive(Debug, Clone)]
pub struct PlanResult {
    pub actions: Vec<FactoredAction>,
    /// Discounted return of the planned trajectory, including the start
    /// state's reward.
    pub value: f64,
    pub expansions: u64,
    pub flagged: bool,
}

struct SearchNode<S> {
    state: S,
    t: usize,
    /// Discounted return accumulated through this node's state.
    g: f64,
    parent: Option<(usize, usize)>, // (node index, action index)
}

/// Exhaustive search over `(state, t)` for deterministic models, returning a
/// reward-maximizing plan within the horizon.
///
/// Rewards become search costs by negation and shift; exploration keeps, per
/// `(state, t)`, only the best accumulated return, and skips self-loop
/// successors at non-positively rewarded states (waiting there cannot
/// improve a trajectory). Trajectories end at terminal states, the horizon,
/// or an absorbing sink (valued through the horizon). On timeout, the best
/// plan found so far is returned and flagged as possibly suboptimal.
pub fn optimal_search<M: PlanModel>(
    model: &M,
    start: &M::State,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    let started = Instant::now();
    let horizon = model.horizon();
    let gamma = model.gamma();

    let mut arena: Vec<SearchNode<M::State>> = vec![SearchNode {
        state: start.clone(),
        t: 0,
        g: model.reward(start),
        parent: None,
    }];
    // best accumulated return seen per (state, t)
    let mut best_g: HashMap<(M::State, usize), f64> = HashMap::new();
    best_g.insert((start.clone(), 0), arena[0].g);

    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);

    // best candidate: (value, t, node index)
    let mut best: Option<(f64, usize, usize)> = None;
    let consider = |value: f64, t: usize, node: usize, best: &mut Option<(f64, usize, usize)>| {
        let better = match best {
            None => true,
            Some((bv, bt, _)) => value > *bv || (value == *bv && t < *bt),
        };
        if better {
            *best = Some((value, t, node));
        }
    };

    let mut expansions: u64 = 0;
    let mut flagged = false;

    while let Some(idx) = queue.pop_front() {
        expansions += 1;
        if expansions % 1024 == 0 && started.elapsed().as_secs_f64() > cfg.timeout_seconds {
            flagged = true;
            break;
        }
        let (state, t, g) = {
            let n = &arena[idx];
            (n.state.clone(), n.t, n.g)
        };
        if model.is_terminal(&state) {
            consider(g, t, idx, &mut best);
            continue;
        }
        if model.is_sink(&state) {
            // absorbing: pays the sink reward for the remaining steps
            let mut value = g;
            let mut discount = gamma.powi(t as i32);
            for _ in t..horizon {
                discount *= gamma;
                value += discount * model.reward(&state);
            }
            consider(value, t, idx, &mut best);
            continue;
        }
        if t >= horizon {
            consider(g, t, idx, &mut best);
            continue;
        }
        for (action_idx, action) in model.actions().iter().enumerate() {
            let next = model.most_likely(&state, action)?;
            let next_reward = model.reward(&next);
            if next == state && next_reward <= 0.0 {
                continue;
            }
            let ng = g + gamma.powi((t + 1) as i32) * next_reward;
            let key = (next.clone(), t + 1);
            if best_g.get(&key).map_or(false, |&old| old >= ng) {
                continue;
            }
            best_g.insert(key, ng);
            arena.push(SearchNode { state: next, t: t + 1, g: ng, parent: Some((idx, action_idx)) });
            queue.push_back(arena.len() - 1);
        }
    }

    let (value, _, node) = match best {
        Some(b) => b,
        None => (arena[0].g, 0, 0), // nothing expandable: empty plan
    };
    let mut actions = Vec::new();
    let mut cur = node;
    while let Some((parent, action_idx)) = arena[cur].parent {
        actions.push(model.actions()[action_idx].clone());
        cur = parent;
    }
    actions.reverse();
    Ok(PlanResult { actions, value, expansions, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{FactoredAction, FactoredState, MdpBuilder, VariableSpec, Vars};
    use crate::planners::{PlannerConfig, PlannerKind};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    /// Corridor with goal at the right end; reward 10 at the goal, -1 per
    /// step elsewhere, terminal at the goal.
    fn corridor(len: usize) -> crate::core::FactoredMdp {
        let vars = Vars::new(
            vec![VariableSpec::state_range("x", len)],
            vec![VariableSpec::action_range("move", 2)],
        )
        .unwrap();
        let last = (len - 1) as u16;
        struct T {
            last: u16,
        }
        impl crate::core::TransitionFn for T {
            fn sample(
                &self,
                s: &FactoredState,
                a: &FactoredAction,
                _rng: &mut ChaCha8Rng,
            ) -> FactoredState {
                let x = s.values[0];
                let nx = match a.values[0] {
                    0 => x.saturating_sub(1),
                    _ => (x + 1).min(self.last),
                };
                FactoredState::new(vec![nx])
            }
            fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
                let mut rng = crate::rng::derive_rng(0, &["d"]);
                Some(vec![(self.sample(s, a, &mut rng), 1.0)])
            }
        }
        MdpBuilder::new(vars)
            .transition(Arc::new(T { last }))
            .reward(Arc::new(move |s: &FactoredState| {
                if s.values[0] == last {
                    10.0
                } else {
                    -1.0
                }
            }))
            .terminal(Arc::new(move |s: &FactoredState| s.values[0] == last))
            .horizon(25)
            .build()
            .unwrap()
    }

    #[test]
    fn goal_at_start_gives_empty_plan() {
        let mdp = corridor(4);
        let cfg = PlannerConfig::new(PlannerKind::OptimalSearch);
        let res = optimal_search(&mdp, &FactoredState::new(vec![3]), &cfg).unwrap();
        assert!(res.actions.is_empty());
        assert_eq!(res.value, 10.0);
    }

    #[test]
    fn finds_shortest_rewarding_plan() {
        let mdp = corridor(5);
        let cfg = PlannerConfig::new(PlannerKind::OptimalSearch);
        let res = optimal_search(&mdp, &FactoredState::new(vec![1]), &cfg).unwrap();
        assert_eq!(res.actions.len(), 3);
        assert!(res.actions.iter().all(|a| a.values == vec![1]));
        // value: -1 (start) -1 -1 +10 = 7
        assert!((res.value - 7.0).abs() < 1e-12);
        assert!(!res.flagged);
    }

    #[test]
    fn reproducible() {
        let mdp = corridor(6);
        let cfg = PlannerConfig::new(PlannerKind::OptimalSearch);
        let a = optimal_search(&mdp, &FactoredState::new(vec![0]), &cfg).unwrap();
        let b = optimal_search(&mdp, &FactoredState::new(vec![0]), &cfg).unwrap();
        assert_eq!(a.actions, b.actions);
        assert_eq!(a.expansions, b.expansions);
        assert_eq!(a.value, b.value);
    }
}
