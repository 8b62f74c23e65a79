use super::{enumerate_reachable, s_dist, PlanModel, PlannerConfig};
use crate::core::FactoredAction;
use crate::error::{CampError, Result};
use std::collections::HashMap;

/// Value table produced by [`value_iteration`].
///
/// Finite-horizon mode stores one row per steps-remaining value, computed by
/// backward induction (exact, so the reported residual is zero). Stationary
/// mode stores a single row, the discounted fixed point reached by
/// asynchronous in-place sweeps.
pub struct ViTable<S> {
    finite: bool,
    /// `rows[h]` maps state to value with `h` steps remaining (finite mode);
    /// `rows[0]` is the stationary table otherwise.
    rows: Vec<HashMap<S, f64>>,
    pub residual: f64,
    pub backups: u64,
}

impl<S: Clone + Eq + std::hash::Hash> ViTable<S> {
    /// Value of `state` with `steps_remaining` to go (finite mode) or its
    /// stationary value.
    pub fn value(&self, state: &S, steps_remaining: usize) -> Option<f64> {
        let row = if self.finite {
            self.rows.get(steps_remaining.min(self.rows.len() - 1))?
        } else {
            &self.rows[0]
        };
        row.get(state).copied()
    }

    /// Greedy action: argmax over actions of the expected successor value,
    /// ties broken by lowest action index.
    pub fn greedy_action<M>(&self, model: &M, state: &M::State, steps_remaining: usize) -> Result<FactoredAction>
    where
        M: PlanModel<State = S>,
    {
        let h = if self.finite {
            steps_remaining.clamp(1, self.rows.len() - 1)
        } else {
            1
        };
        if self.lookup_row(h - 1).get(state).is_none() && !self.rows[0].contains_key(state) {
            return Err(CampError::InvalidAssignment(
                "state not covered by the solved value table".into(),
            ));
        }
        let mut best: Option<(f64, usize)> = None;
        for (idx, action) in model.actions().iter().enumerate() {
            let dist = s_dist(model, state, action)?;
            let q: f64 = dist
                .iter()
                .map(|(next, p)| {
                    let v = if self.finite {
                        self.lookup_row(h - 1).get(next).copied().unwrap_or(0.0)
                    } else {
                        self.rows[0].get(next).copied().unwrap_or(0.0)
                    };
                    p * v
                })
                .sum();
            if best.map_or(true, |(bq, _)| q > bq) {
                best = Some((q, idx));
            }
        }
        let (_, idx) = best.ok_or_else(|| CampError::InvalidAssignment("no actions".into()))?;
        Ok(model.actions()[idx].clone())
    }

    fn lookup_row(&self, h: usize) -> &HashMap<S, f64> {
        if self.finite {
            &self.rows[h.min(self.rows.len() - 1)]
        } else {
            &self.rows[0]
        }
    }
}

/// Offline value iteration over the states reachable from `start`.
///
/// Finite-horizon mode computes `V_h(s) = R(s) + gamma * max_a E[V_{h-1}]`
/// with `V_0 = 0` (terminal states stop accruing), giving the geometric-sum
/// values of horizon-limited evaluation. Stationary mode runs asynchronous
/// in-place sweeps until the Bellman residual drops below the tolerance.
/// Fails when the reachable space exceeds the configured cap, directing the
/// caller to an online planner.
pub fn value_iteration<M: PlanModel>(
    model: &M,
    start: &M::State,
    cfg: &PlannerConfig,
) -> Result<ViTable<M::State>> {
    let states = enumerate_reachable(model, start, cfg.vi_state_cap)?;
    let gamma = model.gamma();
    let horizon = model.horizon();
    let mut backups: u64 = 0;

    // Expected successor value under the current row.
    let backup = |s: &M::State, row: &HashMap<M::State, f64>| -> Result<f64> {
        if model.is_terminal(s) {
            return Ok(model.reward(s));
        }
        let mut best = f64::NEG_INFINITY;
        for action in model.actions() {
            let dist = s_dist(model, s, action)?;
            let q: f64 = dist
                .iter()
                .map(|(next, p)| p * row.get(next).copied().unwrap_or(0.0))
                .sum();
            if q > best {
                best = q;
            }
        }
        Ok(model.reward(s) + gamma * best)
    };

    if cfg.vi_finite_horizon {
        let mut rows: Vec<HashMap<M::State, f64>> = Vec::with_capacity(horizon + 1);
        rows.push(states.iter().map(|s| (s.clone(), 0.0)).collect());
        for h in 1..=horizon {
            let prev = &rows[h - 1];
            let mut row = HashMap::with_capacity(states.len());
            for s in &states {
                row.insert(s.clone(), backup(s, prev)?);
                backups += 1;
            }
            rows.push(row);
        }
        Ok(ViTable { finite: true, rows, residual: 0.0, backups })
    } else {
        let mut row: HashMap<M::State, f64> = states.iter().map(|s| (s.clone(), 0.0)).collect();
        let mut residual = f64::INFINITY;
        let max_sweeps = 100_000;
        for _ in 0..max_sweeps {
            residual = 0.0;
            for s in &states {
                let new = backup(s, &row)?;
                let old = row.insert(s.clone(), new).unwrap_or(0.0);
                residual = residual.max((new - old).abs());
                backups += 1;
            }
            if residual < cfg.vi_tolerance {
                break;
            }
        }
        Ok(ViTable { finite: false, rows: vec![row], residual, backups })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{FactoredAction, FactoredState, MdpBuilder, VariableSpec, Vars};
    use crate::planners::{PlannerConfig, PlannerKind};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn single_state_mdp(reward: f64, gamma: f64, horizon: usize) -> crate::core::FactoredMdp {
        let vars = Vars::new(
            vec![VariableSpec::state_range("s", 1)],
            vec![VariableSpec::action_range("a", 1)],
        )
        .unwrap();
        let r = reward;
        MdpBuilder::new(vars)
            .transition(Arc::new(
                |s: &FactoredState, _a: &FactoredAction, _r: &mut ChaCha8Rng| s.clone(),
            ))
            .reward(Arc::new(move |_s: &FactoredState| r))
            .gamma(gamma)
            .horizon(horizon)
            .build()
            .unwrap()
    }

    impl crate::core::TransitionFn for SelfLoop {
        fn sample(
            &self,
            s: &FactoredState,
            _a: &FactoredAction,
            _rng: &mut ChaCha8Rng,
        ) -> FactoredState {
            s.clone()
        }
        fn dist(&self, s: &FactoredState, _a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
            Some(vec![(s.clone(), 1.0)])
        }
    }
    struct SelfLoop;

    fn single_state_exact(reward: f64, gamma: f64, horizon: usize) -> crate::core::FactoredMdp {
        let vars = Vars::new(
            vec![VariableSpec::state_range("s", 1)],
            vec![VariableSpec::action_range("a", 1)],
        )
        .unwrap();
        MdpBuilder::new(vars)
            .transition(Arc::new(SelfLoop))
            .reward(Arc::new(move |_s: &FactoredState| reward))
            .gamma(gamma)
            .horizon(horizon)
            .build()
            .unwrap()
    }

    #[test]
    fn single_state_geometric_series() {
        let gamma: f64 = 0.99;
        let h = 25;
        let r = 3.0;
        let mdp = single_state_exact(r, gamma, h);
        let cfg = PlannerConfig::new(PlannerKind::ValueIteration);
        let table = value_iteration(&mdp, &FactoredState::new(vec![0]), &cfg).unwrap();
        let v = table.value(&FactoredState::new(vec![0]), h).unwrap();
        let expected = r * (1.0 - gamma.powi(h as i32)) / (1.0 - gamma);
        assert!((v - expected).abs() < 1e-9, "v = {v}, expected {expected}");
        let _ = single_state_mdp(r, gamma, h); // closure-based variant also builds
    }

    /// Two-state deterministic chain: from 0 you may stay (action 0) or move
    /// to 1 (action 1); 1 self-loops. Reward: 0 pays 0, 1 pays 1.
    fn chain() -> crate::core::FactoredMdp {
        let vars = Vars::new(
            vec![VariableSpec::state_range("x", 2)],
            vec![VariableSpec::action_range("go", 2)],
        )
        .unwrap();
        struct T;
        impl crate::core::TransitionFn for T {
            fn sample(
                &self,
                s: &FactoredState,
                a: &FactoredAction,
                _rng: &mut ChaCha8Rng,
            ) -> FactoredState {
                let next = if s.values[0] == 1 || a.values[0] == 1 { 1 } else { 0 };
                FactoredState::new(vec![next])
            }
            fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
                let mut rng = crate::rng::derive_rng(0, &["x"]);
                Some(vec![(self.sample(s, a, &mut rng), 1.0)])
            }
        }
        MdpBuilder::new(vars)
            .transition(Arc::new(T))
            .reward(Arc::new(|s: &FactoredState| s.values[0] as f64))
            .gamma(0.5)
            .horizon(3)
            .build()
            .unwrap()
    }

    #[test]
    fn two_state_chain_hand_backups() {
        let mdp = chain();
        let cfg = PlannerConfig::new(PlannerKind::ValueIteration);
        let table = value_iteration(&mdp, &FactoredState::new(vec![0]), &cfg).unwrap();
        // V_0 = 0 everywhere.
        // V_1:   V(0) = 0 + 0.5*max(0,0) = 0;     V(1) = 1 + 0.5*0   = 1
        // V_2:   V(0) = 0 + 0.5*max(V1(0),V1(1)) = 0.5;  V(1) = 1 + 0.5*1 = 1.5
        // V_3:   V(0) = 0 + 0.5*max(0.5,1.5) = 0.75;     V(1) = 1 + 0.5*1.5 = 1.75
        let s0 = FactoredState::new(vec![0]);
        let s1 = FactoredState::new(vec![1]);
        assert!((table.value(&s0, 3).unwrap() - 0.75).abs() < 1e-12);
        assert!((table.value(&s1, 3).unwrap() - 1.75).abs() < 1e-12);
        // Greedy at 0 moves to 1.
        let a = table.greedy_action(&mdp, &s0, 3).unwrap();
        assert_eq!(a.values, vec![1]);
    }

    #[test]
    fn stationary_mode_residual_below_tolerance() {
        let mdp = chain();
        let mut cfg = PlannerConfig::new(PlannerKind::ValueIteration);
        cfg.vi_finite_horizon = false;
        let table = value_iteration(&mdp, &FactoredState::new(vec![0]), &cfg).unwrap();
        assert!(table.residual < cfg.vi_tolerance);
        // Fixed point: V(1) = 1/(1-0.5) = 2, V(0) = 0.5*2 = 1.
        let s0 = FactoredState::new(vec![0]);
        let s1 = FactoredState::new(vec![1]);
        assert!((table.value(&s1, 0).unwrap() - 2.0).abs() < 1e-4);
        assert!((table.value(&s0, 0).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn greedy_invariant_to_positive_affine_reward_shift() {
        // argmax over actions of E[V'] is invariant when rewards are shifted
        // uniformly: compare greedy policies of chain() and a shifted copy.
        let base = chain();
        let vars = base.vars().clone();
        struct T2;
        impl crate::core::TransitionFn for T2 {
            fn sample(
                &self,
                s: &FactoredState,
                a: &FactoredAction,
                _rng: &mut ChaCha8Rng,
            ) -> FactoredState {
                let next = if s.values[0] == 1 || a.values[0] == 1 { 1 } else { 0 };
                FactoredState::new(vec![next])
            }
            fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
                let mut rng = crate::rng::derive_rng(0, &["x"]);
                Some(vec![(self.sample(s, a, &mut rng), 1.0)])
            }
        }
        let shifted = MdpBuilder::new(vars)
            .transition(Arc::new(T2))
            .reward(Arc::new(|s: &FactoredState| 2.0 * s.values[0] as f64 + 7.0))
            .gamma(0.5)
            .horizon(3)
            .build()
            .unwrap();
        let cfg = PlannerConfig::new(PlannerKind::ValueIteration);
        let ta = value_iteration(&base, &FactoredState::new(vec![0]), &cfg).unwrap();
        let tb = value_iteration(&shifted, &FactoredState::new(vec![0]), &cfg).unwrap();
        for s in [FactoredState::new(vec![0]), FactoredState::new(vec![1])] {
            for h in 1..=3 {
                assert_eq!(
                    ta.greedy_action(&base, &s, h).unwrap(),
                    tb.greedy_action(&shifted, &s, h).unwrap()
                );
            }
        }
    }

    #[test]
    fn state_cap_exceeded_is_error() {
        let mdp = chain();
        let mut cfg = PlannerConfig::new(PlannerKind::ValueIteration);
        cfg.vi_state_cap = 1;
        let res = value_iteration(&mdp, &FactoredState::new(vec![0]), &cfg);
        assert!(matches!(res.err(), Some(CampError::StateSpaceTooLarge { .. })));
    }
}
