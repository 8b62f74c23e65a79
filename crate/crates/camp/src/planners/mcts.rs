use super::{random_action, PlanModel, PlanOutcome, PlannerConfig};
use crate::core::FactoredAction;
use crate::error::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::time::Instant;

struct Node<S> {
    visits: f64,
    /// Per-action visit counts and value sums (mean backup).
    action_n: Vec<f64>,
    action_q: Vec<f64>,
    /// Children keyed by (action index, sampled successor).
    children: HashMap<(usize, S), usize>,
}

impl<S> Node<S> {
    fn new(n_actions: usize) -> Self {
        Self {
            visits: 0.0,
            action_n: vec![0.0; n_actions],
            action_q: vec![0.0; n_actions],
            children: HashMap::new(),
        }
    }

    fn select_ucb(&self, exploration: f64) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, (&n, &q)) in self.action_n.iter().zip(&self.action_q).enumerate() {
            let score = if n == 0.0 {
                f64::INFINITY
            } else {
                q / n + exploration * ((self.visits.max(1.0)).ln() / n).sqrt()
            };
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }
}

/// Anytime UCT: selection by upper confidence bound, expansion of one node
/// per iteration, uniform-random rollout to the remaining horizon, and mean
/// backup, until the per-call budget or the iteration cap. Returns the root
/// action with the highest mean value, ties broken by lowest action index.
pub fn mcts_plan<M: PlanModel>(
    model: &M,
    state: &M::State,
    cfg: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PlanOutcome> {
    let started = Instant::now();
    let budget = cfg.mcts_budget_seconds.min(cfg.timeout_seconds);
    let n_actions = model.actions().len();
    let horizon = model.horizon();
    let gamma = model.gamma();

    if n_actions == 1 {
        return Ok(PlanOutcome { action: model.actions()[0].clone(), expansions: 0, flagged: false });
    }

    let mut arena: Vec<Node<M::State>> = vec![Node::new(n_actions)];
    let mut states: Vec<M::State> = vec![state.clone()];
    let mut iterations: u64 = 0;

    while (iterations as usize) < cfg.mcts_iterations_cap && started.elapsed().as_secs_f64() < budget
    {
        // Selection: walk down until an unexpanded (action, successor) pair.
        let mut path: Vec<(usize, usize, f64)> = Vec::new(); // (node, action, step reward)
        let mut node_id = 0usize;
        let mut depth = 0usize;
        let leaf_value;
        loop {
            let s = states[node_id].clone();
            if depth >= horizon || model.is_terminal(&s) {
                leaf_value = 0.0;
                break;
            }
            if model.is_sink(&s) {
                // absorbing: the remaining steps all pay the sink reward
                leaf_value = geometric_sum(model.reward(&s), gamma, horizon - depth);
                break;
            }
            let action_idx = arena[node_id].select_ucb(cfg.mcts_exploration);
            let next = model.sample(&s, &model.actions()[action_idx], rng);
            let reward = model.reward(&next);
            let key = (action_idx, next.clone());
            if let Some(&child) = arena[node_id].children.get(&key) {
                path.push((node_id, action_idx, reward));
                node_id = child;
                depth += 1;
                continue;
            }
            // Expansion + rollout
            let child = arena.len();
            arena.push(Node::new(n_actions));
            states.push(next.clone());
            arena[node_id].children.insert(key, child);
            path.push((node_id, action_idx, reward));
            leaf_value = random_rollout(model, &next, depth + 1, rng);
            break;
        }

        // Backup: mean value of discounted return-to-go.
        let mut g = leaf_value;
        for &(node, action, reward) in path.iter().rev() {
            g = reward + gamma * g;
            arena[node].visits += 1.0;
            arena[node].action_n[action] += 1.0;
            arena[node].action_q[action] += g;
        }
        iterations += 1;
    }

    if iterations == 0 {
        return Ok(PlanOutcome {
            action: random_action(model, rng),
            expansions: 0,
            flagged: true,
        });
    }

    let root = &arena[0];
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..n_actions {
        if root.action_n[i] > 0.0 {
            let mean = root.action_q[i] / root.action_n[i];
            if mean > best_value {
                best_value = mean;
                best = i;
            }
        }
    }
    Ok(PlanOutcome {
        action: model.actions()[best].clone(),
        expansions: iterations,
        flagged: false,
    })
}

fn geometric_sum(reward: f64, gamma: f64, steps: usize) -> f64 {
    if (gamma - 1.0).abs() < 1e-12 {
        reward * steps as f64
    } else {
        reward * (1.0 - gamma.powi(steps as i32)) / (1.0 - gamma)
    }
}

/// Uniform-random rollout from `state` (already at `depth`) to the horizon;
/// returns the discounted return relative to `depth`.
fn random_rollout<M: PlanModel>(
    model: &M,
    state: &M::State,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let horizon = model.horizon();
    let gamma = model.gamma();
    let mut s = state.clone();
    let mut g = 0.0;
    let mut discount = 1.0;
    for d in depth..horizon {
        if model.is_terminal(&s) {
            break;
        }
        if model.is_sink(&s) {
            g += discount * geometric_sum(model.reward(&s), gamma, horizon - d);
            return g;
        }
        let actions = model.actions();
        let a: &FactoredAction = &actions[rng.gen_range(0..actions.len())];
        s = model.sample(&s, a, rng);
        g += discount * gamma * model.reward(&s);
        discount *= gamma;
    }
    g
}
