use super::{PlanModel, PlanOutcome, PlannerConfig};
use crate::error::Result;
use std::collections::{HashMap, HashSet, VecDeque};
use std::time::Instant;

/// Breadth-first graph search under the most-likely-outcome determinization,
/// with duplicate detection on full states. Searches for the nearest state
/// maximizing reachable reward within the remaining horizon and returns the
/// first action of the found path; the caller replans every step.
///
/// Sparse-reward early exit: the search stops at the first terminal state
/// whose reward strictly exceeds the start state's. On timeout or an
/// exhausted frontier, the best partial path's first action is returned (the
/// first declared action if nothing improved on the start).
pub fn bfs_replan_plan<M: PlanModel>(
    model: &M,
    state: &M::State,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome> {
    let started = Instant::now();
    let first_action = || model.actions()[0].clone();
    if model.is_terminal(state) {
        return Ok(PlanOutcome { action: first_action(), expansions: 0, flagged: false });
    }

    let start_reward = model.reward(state);
    let horizon = model.horizon();

    // (state, depth, first action index of the path)
    let mut queue: VecDeque<(M::State, usize, Option<usize>)> = VecDeque::new();
    let mut visited: HashSet<M::State> = HashSet::new();
    queue.push_back((state.clone(), 0, None));
    visited.insert(state.clone());

    // best = (reward, depth, first action)
    let mut best: Option<(f64, usize, usize)> = None;
    let mut expansions: u64 = 0;
    let mut flagged = false;

    'search: while let Some((s, depth, first)) = queue.pop_front() {
        expansions += 1;
        if expansions % 1024 == 0 && started.elapsed().as_secs_f64() > cfg.timeout_seconds {
            flagged = true;
            break;
        }
        if depth >= horizon || model.is_terminal(&s) || model.is_sink(&s) {
            continue;
        }
        for (idx, action) in model.actions().iter().enumerate() {
            let next = model.most_likely(&s, action)?;
            if !visited.insert(next.clone()) {
                continue;
            }
            let first_idx = first.unwrap_or(idx);
            let reward = model.reward(&next);
            let better = match &best {
                None => reward > start_reward,
                Some((r, d, _)) => reward > *r || (reward == *r && depth + 1 < *d),
            };
            if better {
                best = Some((reward, depth + 1, first_idx));
                if model.is_terminal(&next) && reward > start_reward {
                    break 'search;
                }
            }
            queue.push_back((next, depth + 1, Some(first_idx)));
        }
    }

    match best {
        Some((_, _, first_idx)) => Ok(PlanOutcome {
            action: model.actions()[first_idx].clone(),
            expansions,
            flagged,
        }),
        None => Ok(PlanOutcome { action: first_action(), expansions, flagged }),
    }
}

/// Exposes the searched path for tests: full action sequence to the best
/// state found, following the same search rules as [`bfs_replan_plan`].
pub fn bfs_best_path<M: PlanModel>(
    model: &M,
    state: &M::State,
    cfg: &PlannerConfig,
) -> Result<Vec<usize>> {
    let started = Instant::now();
    if model.is_terminal(state) {
        return Ok(Vec::new());
    }
    let start_reward = model.reward(state);
    let horizon = model.horizon();
    let mut queue: VecDeque<(M::State, usize)> = VecDeque::new();
    let mut parent: HashMap<M::State, (M::State, usize)> = HashMap::new();
    let mut depth_of: HashMap<M::State, usize> = HashMap::new();
    queue.push_back((state.clone(), 0));
    depth_of.insert(state.clone(), 0);
    let mut best: Option<(f64, usize, M::State)> = None;
    let mut expansions: u64 = 0;

    'search: while let Some((s, depth)) = queue.pop_front() {
        expansions += 1;
        if expansions % 1024 == 0 && started.elapsed().as_secs_f64() > cfg.timeout_seconds {
            break;
        }
        if depth >= horizon || model.is_terminal(&s) || model.is_sink(&s) {
            continue;
        }
        for (idx, action) in model.actions().iter().enumerate() {
            let next = model.most_likely(&s, action)?;
            if depth_of.contains_key(&next) {
                continue;
            }
            depth_of.insert(next.clone(), depth + 1);
            parent.insert(next.clone(), (s.clone(), idx));
            let reward = model.reward(&next);
            let better = match &best {
                None => reward > start_reward,
                Some((r, d, _)) => reward > *r || (reward == *r && depth + 1 < *d),
            };
            if better {
                best = Some((reward, depth + 1, next.clone()));
                if model.is_terminal(&next) && reward > start_reward {
                    break 'search;
                }
            }
            queue.push_back((next, depth + 1));
        }
    }

    let mut path = Vec::new();
    if let Some((_, _, mut cur)) = best {
        while let Some((prev, idx)) = parent.get(&cur) {
            path.push(*idx);
            cur = prev.clone();
        }
        path.reverse();
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{FactoredAction, FactoredState, MdpBuilder, VariableSpec, Vars};
    use crate::planners::PlannerKind;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    /// Deterministic 1-D corridor with a rewarded right end.
    fn corridor(len: usize) -> crate::core::FactoredMdp {
        let vars = Vars::new(
            vec![VariableSpec::state_range("x", len)],
            vec![VariableSpec::action_range("move", 2)], // 0 = left, 1 = right
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
                    1000.0
                } else {
                    0.0
                }
            }))
            .terminal(Arc::new(move |s: &FactoredState| s.values[0] == last))
            .horizon(25)
            .build()
            .unwrap()
    }

    #[test]
    fn terminal_start_returns_first_action() {
        let mdp = corridor(4);
        let cfg = PlannerConfig::new(PlannerKind::BfsReplan);
        let out = bfs_replan_plan(&mdp, &FactoredState::new(vec![3]), &cfg).unwrap();
        assert_eq!(out.action.values, vec![0]);
        assert_eq!(out.expansions, 0);
        assert!(!out.flagged);
    }

    #[test]
    fn heads_toward_reward() {
        let mdp = corridor(5);
        let cfg = PlannerConfig::new(PlannerKind::BfsReplan);
        let out = bfs_replan_plan(&mdp, &FactoredState::new(vec![1]), &cfg).unwrap();
        assert_eq!(out.action.values, vec![1], "move right toward the goal");
        assert!(!out.flagged);
    }

    #[test]
    fn full_path_matches_distance() {
        let mdp = corridor(6);
        let cfg = PlannerConfig::new(PlannerKind::BfsReplan);
        let path = bfs_best_path(&mdp, &FactoredState::new(vec![2]), &cfg).unwrap();
        assert_eq!(path.len(), 3);
        assert!(path.iter().all(|&i| i == 1));
    }

    #[test]
    fn deterministic_replays() {
        let mdp = corridor(6);
        let cfg = PlannerConfig::new(PlannerKind::BfsReplan);
        let a = bfs_replan_plan(&mdp, &FactoredState::new(vec![2]), &cfg).unwrap();
        let b = bfs_replan_plan(&mdp, &FactoredState::new(vec![2]), &cfg).unwrap();
        assert_eq!(a.action, b.action);
        assert_eq!(a.expansions, b.expansions);
    }
}
