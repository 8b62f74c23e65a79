//! Small fully enumerable MDPs used across the test suites and benchmarks:
//! a tabular per-variable transition model, a three-state/two-action
//! influence fixture whose context severs one variable's influence, and a
//! seeded generator of random tabular MDPs.

use crate::contexts::{Atom, Context};
use crate::core::{
    FactoredAction, FactoredMdp, FactoredState, MdpBuilder, TransitionFn, VarId, VariableSpec,
    Vars,
};
use crate::rng::derive_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Dynamics of one state variable: a conditional distribution table over its
/// domain, indexed by the joint assignment of its parent variables.
#[derive(Debug, Clone)]
pub struct VarDynamics {
    pub parents: Vec<VarId>,
    /// `table[parent_index]` is a probability vector over the variable's
    /// domain; `parent_index` is the odometer index of the parents' values
    /// (last parent fastest).
    pub table: Vec<Vec<f64>>,
}

impl VarDynamics {
    fn parent_index(&self, vars: &Vars, s: &FactoredState, a: &FactoredAction) -> usize {
        let mut idx = 0usize;
        for &p in &self.parents {
            idx = idx * vars.spec(p).size() + vars.value_of(p, s, a) as usize;
        }
        idx
    }
}

/// Transition model where each next-state variable is drawn independently
/// from its own conditional table. Exposes exact distributions.
pub struct TabularTransition {
    vars: Arc<Vars>,
    pub dynamics: Vec<VarDynamics>,
}

impl TabularTransition {
    pub fn new(vars: Arc<Vars>, dynamics: Vec<VarDynamics>) -> Self {
        assert_eq!(dynamics.len(), vars.state_vars().len());
        for (i, d) in dynamics.iter().enumerate() {
            let rows: usize = d.parents.iter().map(|&p| vars.spec(p).size()).product();
            assert_eq!(d.table.len(), rows, "table rows for var {i}");
            for row in &d.table {
                assert_eq!(row.len(), vars.state_vars()[i].size());
                debug_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        Self { vars, dynamics }
    }
}

impl TransitionFn for TabularTransition {
    fn sample(&self, s: &FactoredState, a: &FactoredAction, rng: &mut ChaCha8Rng) -> FactoredState {
        let values = self
            .dynamics
            .iter()
            .map(|d| {
                let row = &d.table[d.parent_index(&self.vars, s, a)];
                let mut u: f64 = rng.gen();
                for (v, &p) in row.iter().enumerate() {
                    if u < p {
                        return v as u16;
                    }
                    u -= p;
                }
                (row.len() - 1) as u16
            })
            .collect();
        FactoredState::new(values)
    }

    fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
        let rows: Vec<&Vec<f64>> = self
            .dynamics
            .iter()
            .map(|d| &d.table[d.parent_index(&self.vars, s, a)])
            .collect();
        let mut out: Vec<(Vec<u16>, f64)> = vec![(Vec::new(), 1.0)];
        for row in rows {
            let mut next = Vec::with_capacity(out.len() * 2);
            for (prefix, p) in &out {
                for (v, &q) in row.iter().enumerate() {
                    if q > 0.0 {
                        let mut ext = prefix.clone();
                        ext.push(v as u16);
                        next.push((ext, p * q));
                    }
                }
            }
            out = next;
        }
        Some(
            out.into_iter()
                .map(|(values, p)| (FactoredState::new(values), p))
                .collect(),
        )
    }
}

/// A small MDP paired with the context its tests impose.
pub struct Fixture {
    pub mdp: FactoredMdp,
    pub context: Context,
}

/// Three binary state variables and two binary action variables, 32 joint
/// assignments. Rewards read `s1`. Base dynamics:
///
/// - `s1' = s1 XOR a1 XOR (s2 AND s3)`
/// - `s2' = s3 if s2 = 1, else a1`
/// - `s3' = s3 XOR a2`, flipped with probability 0.2
///
/// Without a context every variable is relevant. Under the fixture context
/// `s2 = 0`, the influence of `s3` on both `s1` and `s2` is severed, leaving
/// `{s1, s2, a1}` relevant and `{s3, a2}` irrelevant.
pub fn influence_fixture() -> Fixture {
    let vars = Vars::new(
        vec![
            VariableSpec::state_bool("s1"),
            VariableSpec::state_bool("s2"),
            VariableSpec::state_bool("s3"),
        ],
        vec![
            VariableSpec::action_range("a1", 2),
            VariableSpec::action_range("a2", 2),
        ],
    )
    .unwrap();

    let s1 = VarId::state(0);
    let s2 = VarId::state(1);
    let s3 = VarId::state(2);
    let a1 = VarId::action(0);
    let a2 = VarId::action(1);

    let deterministic = |v: u16| {
        let mut row = vec![0.0, 0.0];
        row[v as usize] = 1.0;
        row
    };

    // s1' over parents (s1, s2, s3, a1), odometer order, last fastest.
    let mut t1 = Vec::new();
    for s1v in 0..2u16 {
        for s2v in 0..2u16 {
            for s3v in 0..2u16 {
                for a1v in 0..2u16 {
                    t1.push(deterministic(s1v ^ a1v ^ (s2v & s3v)));
                }
            }
        }
    }
    // s2' over parents (s2, s3, a1).
    let mut t2 = Vec::new();
    for s2v in 0..2u16 {
        for s3v in 0..2u16 {
            for a1v in 0..2u16 {
                t2.push(deterministic(if s2v == 1 { s3v } else { a1v }));
            }
        }
    }
    // s3' over parents (s3, a2), with a 0.2 flip.
    let mut t3 = Vec::new();
    for s3v in 0..2u16 {
        for a2v in 0..2u16 {
            let target = (s3v ^ a2v) as usize;
            let mut row = vec![0.2, 0.2];
            row[target] = 0.8;
            t3.push(row);
        }
    }

    let transition = TabularTransition::new(
        vars.clone(),
        vec![
            VarDynamics { parents: vec![s1, s2, s3, a1], table: t1 },
            VarDynamics { parents: vec![s2, s3, a1], table: t2 },
            VarDynamics { parents: vec![s3, a2], table: t3 },
        ],
    );

    let mdp = MdpBuilder::new(vars.clone())
        .transition(Arc::new(transition))
        .reward(Arc::new(|s: &FactoredState| s.values[0] as f64))
        .reward_vars(&["s1"])
        .horizon(8)
        .gamma(0.95)
        .build()
        .unwrap();

    let context = Context::literal(Atom::new(&vars, "s2", 0, false).unwrap());
    Fixture { mdp, context }
}

/// A random fully enumerable MDP: 2-4 state variables and 1-2 action
/// variables with domain sizes 2-3 (joint assignments capped at 256), each
/// state variable given a random parent set and random conditional tables.
pub fn random_tabular_mdp(seed: u64) -> FactoredMdp {
    let mut rng = derive_rng(seed, &["random-tabular-mdp"]);
    loop {
        let n_state = rng.gen_range(2..=4);
        let n_action = rng.gen_range(1..=2);
        let state_sizes: Vec<usize> = (0..n_state).map(|_| rng.gen_range(2..=3)).collect();
        let action_sizes: Vec<usize> = (0..n_action).map(|_| rng.gen_range(2..=3)).collect();
        let joint: usize = state_sizes.iter().chain(&action_sizes).product();
        if joint > 256 {
            continue;
        }
        let vars = Vars::new(
            state_sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| VariableSpec::state_range(format!("s{i}"), n))
                .collect(),
            action_sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| VariableSpec::action_range(format!("a{i}"), n))
                .collect(),
        )
        .unwrap();

        let all_ids: Vec<VarId> = vars.iter_all().map(|(id, _)| id).collect();
        let dynamics = (0..n_state)
            .map(|i| {
                let n_parents = rng.gen_range(0..=2.min(all_ids.len()));
                let mut pool = all_ids.clone();
                let mut parents = Vec::new();
                for _ in 0..n_parents {
                    let k = rng.gen_range(0..pool.len());
                    parents.push(pool.swap_remove(k));
                }
                let rows: usize = parents.iter().map(|&p| vars.spec(p).size()).product();
                let table = (0..rows)
                    .map(|_| {
                        let raw: Vec<f64> =
                            (0..state_sizes[i]).map(|_| rng.gen::<f64>() + 0.05).collect();
                        let total: f64 = raw.iter().sum();
                        raw.into_iter().map(|x| x / total).collect()
                    })
                    .collect();
                VarDynamics { parents, table }
            })
            .collect();

        let transition = TabularTransition::new(vars.clone(), dynamics);
        let reward_var = format!("s{}", rng.gen_range(0..n_state));
        let reward_id = vars.lookup(&reward_var).unwrap();
        return MdpBuilder::new(vars)
            .transition(Arc::new(transition))
            .reward(Arc::new(move |s: &FactoredState| s.values[reward_id.index] as f64))
            .reward_vars(&[&reward_var])
            .horizon(8)
            .build()
            .unwrap();
    }
}

/// Deterministic one-step MDP with two arms paying 0 and 1.
pub fn two_armed_bandit() -> FactoredMdp {
    let vars = Vars::new(
        vec![VariableSpec::state_range("payout", 2)],
        vec![VariableSpec::action_range("arm", 2)],
    )
    .unwrap();
    MdpBuilder::new(vars)
        .transition(Arc::new(
            |_s: &FactoredState, a: &FactoredAction, _rng: &mut ChaCha8Rng| {
                FactoredState::new(vec![a.values[0]])
            },
        ))
        .reward(Arc::new(|s: &FactoredState| s.values[0] as f64))
        .reward_vars(&["payout"])
        .horizon(1)
        .build()
        .unwrap()
}
