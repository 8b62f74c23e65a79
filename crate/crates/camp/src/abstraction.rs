//! Context-specific relevance and abstract MDP construction.
//!
//! A context's CSI set induces a dependency graph; variables with no
//! directed path into a reward variable are irrelevant under that context
//! and get projected away. The abstract MDP routes any context-violating
//! transition to an absorbing sink state, keeps the base dynamics on the
//! projected variables otherwise, and lifts abstract assignments back to
//! concrete ones by filling dropped variables with fixed defaults.

use crate::contexts::Context;
use crate::core::{
    FactoredAction, FactoredMdp, FactoredState, VarId, VariableSpec, Vars,
};
use crate::csi::CsiSet;
use crate::error::{CampError, Result};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

/// Default reward of the absorbing sink. A finite stand-in for the
/// definition's unbounded penalty so value backups stay finite; planners
/// must still never prefer a sink-bound plan when an in-context alternative
/// exists.
pub const DEFAULT_SINK_REWARD: f64 = -1e9;

/// Directed dependence between variables under one context.
///
/// Nodes are the non-context variables plus the reward variables; an edge
/// `i -> j` is present exactly when the pair was not found independent.
/// Pairs involving context variables are never tested, so context variables
/// contribute no edges: a variable pinned by the context transmits nothing.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    nodes: BTreeSet<VarId>,
    edges: BTreeSet<(VarId, VarId)>,
}

impl DependencyGraph {
    pub fn from_csis(csis: &CsiSet, reward_vars: &[VarId], vars: &Vars) -> Self {
        let ctx = &csis.context;
        let tested: Vec<VarId> = vars
            .iter_all()
            .map(|(id, _)| id)
            .filter(|id| !ctx.contains_var(*id))
            .collect();
        let mut nodes: BTreeSet<VarId> = tested.iter().copied().collect();
        nodes.extend(reward_vars.iter().copied());

        let mut edges = BTreeSet::new();
        for &i in &tested {
            for &j in &tested {
                if !csis.is_independent(i, j) {
                    edges.insert((i, j));
                }
            }
        }
        Self { nodes, edges }
    }

    pub fn nodes(&self) -> &BTreeSet<VarId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(VarId, VarId)> {
        &self.edges
    }

    /// All nodes with a directed path into any target (targets included).
    pub fn reverse_reachable(&self, targets: &[VarId]) -> BTreeSet<VarId> {
        let mut reached: BTreeSet<VarId> =
            targets.iter().copied().filter(|t| self.nodes.contains(t)).collect();
        let mut frontier: Vec<VarId> = reached.iter().copied().collect();
        while let Some(to) = frontier.pop() {
            for &(i, j) in &self.edges {
                if j == to && reached.insert(i) {
                    frontier.push(i);
                }
            }
        }
        reached
    }
}

/// Variables relevant under the CSI set's context: the reward variables,
/// every variable with a directed path to a reward variable in the
/// dependency graph, and the context variables themselves (kept so context
/// membership stays decidable on the abstract state).
pub fn relevant_variables(csis: &CsiSet, reward_vars: &[VarId], vars: &Vars) -> BTreeSet<VarId> {
    let graph = DependencyGraph::from_csis(csis, reward_vars, vars);
    let mut relevant = graph.reverse_reachable(reward_vars);
    relevant.extend(reward_vars.iter().copied());
    relevant.extend(csis.context.context_vars().iter().copied());
    relevant
}

/// A state of the abstract MDP: either a projected concrete state or the
/// absorbing sink.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CampState {
    Interior(FactoredState),
    Sink,
}

impl CampState {
    pub fn is_sink(&self) -> bool {
        matches!(self, CampState::Sink)
    }

    pub fn interior(&self) -> Option<&FactoredState> {
        match self {
            CampState::Interior(s) => Some(s),
            CampState::Sink => None,
        }
    }
}

/// The context-specific abstract MDP.
#[derive(Clone)]
pub struct Camp {
    base: FactoredMdp,
    context: Context,
    /// Ascending base indices of the kept state/action variables.
    kept_state: Vec<usize>,
    kept_action: Vec<usize>,
    /// Full-length default value indices used by the right inverses.
    state_defaults: Vec<u16>,
    action_defaults: Vec<u16>,
    sink_reward: f64,
    abstract_vars: Arc<Vars>,
    abstract_actions: Arc<Vec<FactoredAction>>,
}

/// Builds the abstract MDP for `ctx` from its discovered CSI set: kept
/// variables are the relevant ones (reward and context variables included),
/// context violations absorb into the sink, and dropped variables lift to
/// the first value of their domains.
pub fn build_camp(mdp: &FactoredMdp, ctx: &Context, csis: &CsiSet) -> Result<Camp> {
    if csis.context != *ctx {
        return Err(CampError::InvalidContext(format!(
            "CSI set was learned for `{}`, not `{}`",
            csis.context.text(),
            ctx.text()
        )));
    }
    let vars = mdp.vars();
    let reward_ids: Result<Vec<VarId>> =
        mdp.reward_vars().iter().map(|n| vars.lookup(n)).collect();
    let relevant = relevant_variables(csis, &reward_ids?, vars);
    let kept_state: Vec<usize> = (0..vars.state_vars().len())
        .filter(|&i| relevant.contains(&VarId::state(i)))
        .collect();
    let kept_action: Vec<usize> = (0..vars.action_vars().len())
        .filter(|&i| relevant.contains(&VarId::action(i)))
        .collect();
    Camp::assemble(mdp.clone(), ctx.clone(), kept_state, kept_action)
}

impl Camp {
    /// The ablated abstraction: every variable kept, only the sink rule for
    /// context violations added.
    pub fn ablation(mdp: &FactoredMdp, ctx: &Context) -> Result<Self> {
        let vars = mdp.vars();
        Self::assemble(
            mdp.clone(),
            ctx.clone(),
            (0..vars.state_vars().len()).collect(),
            (0..vars.action_vars().len()).collect(),
        )
    }

    fn assemble(
        base: FactoredMdp,
        context: Context,
        kept_state: Vec<usize>,
        kept_action: Vec<usize>,
    ) -> Result<Self> {
        let vars = base.vars().clone();
        let abstract_state_specs: Vec<VariableSpec> =
            kept_state.iter().map(|&i| vars.state_vars()[i].clone()).collect();
        let abstract_action_specs: Vec<VariableSpec> =
            kept_action.iter().map(|&i| vars.action_vars()[i].clone()).collect();
        let abstract_vars = Vars::new(abstract_state_specs, abstract_action_specs)?;
        let abstract_actions = Arc::new(enumerate_actions(&abstract_vars));
        Ok(Self {
            base,
            context,
            kept_state,
            kept_action,
            state_defaults: vec![0; vars.state_vars().len()],
            action_defaults: vec![0; vars.action_vars().len()],
            sink_reward: DEFAULT_SINK_REWARD,
            abstract_vars,
            abstract_actions,
        })
    }

    pub fn with_sink_reward(mut self, sink_reward: f64) -> Self {
        self.sink_reward = sink_reward;
        self
    }

    /// Overrides the lift defaults (full-length value-index vectors over the
    /// base variables). The choice cannot change kept-variable dynamics when
    /// the dropped variables are genuinely irrelevant.
    pub fn with_defaults(mut self, state: Vec<u16>, action: Vec<u16>) -> Result<Self> {
        let vars = self.base.vars();
        if state.len() != vars.state_vars().len() || action.len() != vars.action_vars().len() {
            return Err(CampError::InvalidAssignment("default vector length mismatch".into()));
        }
        self.state_defaults = state;
        self.action_defaults = action;
        Ok(self)
    }

    pub fn base(&self) -> &FactoredMdp {
        &self.base
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn sink_reward(&self) -> f64 {
        self.sink_reward
    }

    pub fn abstract_vars(&self) -> &Arc<Vars> {
        &self.abstract_vars
    }

    pub fn kept_state_names(&self) -> Vec<&str> {
        self.kept_state
            .iter()
            .map(|&i| self.base.vars().state_vars()[i].name.as_str())
            .collect()
    }

    pub fn kept_action_names(&self) -> Vec<&str> {
        self.kept_action
            .iter()
            .map(|&i| self.base.vars().action_vars()[i].name.as_str())
            .collect()
    }

    pub fn n_dropped(&self) -> usize {
        let vars = self.base.vars();
        vars.state_vars().len() - self.kept_state.len() + vars.action_vars().len()
            - self.kept_action.len()
    }

    /// σ: drop the non-kept state variables.
    pub fn project_state(&self, s: &FactoredState) -> FactoredState {
        FactoredState::new(self.kept_state.iter().map(|&i| s.values[i]).collect())
    }

    /// τ: drop the non-kept action variables.
    pub fn project_action(&self, a: &FactoredAction) -> FactoredAction {
        FactoredAction::new(self.kept_action.iter().map(|&i| a.values[i]).collect())
    }

    /// σ⁻¹: fill dropped state variables with their defaults.
    pub fn lift_state(&self, abstract_state: &FactoredState) -> FactoredState {
        let mut values = self.state_defaults.clone();
        for (k, &i) in self.kept_state.iter().enumerate() {
            values[i] = abstract_state.values[k];
        }
        FactoredState::new(values)
    }

    /// Lift of a full abstract state, failing on the sink: the sink has no
    /// concrete counterpart.
    pub fn lift(&self, state: &CampState) -> Result<FactoredState> {
        match state {
            CampState::Interior(s) => Ok(self.lift_state(s)),
            CampState::Sink => Err(CampError::LiftSink),
        }
    }

    /// τ⁻¹: fill dropped action variables with their defaults.
    pub fn lift_action(&self, abstract_action: &FactoredAction) -> FactoredAction {
        let mut values = self.action_defaults.clone();
        for (k, &i) in self.kept_action.iter().enumerate() {
            values[i] = abstract_action.values[k];
        }
        FactoredAction::new(values)
    }

    /// The abstract joint action space (product of kept action domains).
    pub fn abstract_actions(&self) -> &[FactoredAction] {
        &self.abstract_actions
    }

    /// Is the lifted `(state, action)` pair in the context?
    pub fn in_context(
        &self,
        abstract_state: &FactoredState,
        abstract_action: &FactoredAction,
    ) -> bool {
        let s = self.lift_state(abstract_state);
        let a = self.lift_action(abstract_action);
        self.context.holds(self.base.vars(), &s, &a)
    }

    /// One abstract transition sample: sink absorbs, violations absorb into
    /// the sink, in-context pairs follow the projected base dynamics.
    pub fn step(
        &self,
        state: &CampState,
        action: &FactoredAction,
        rng: &mut ChaCha8Rng,
    ) -> CampState {
        match state {
            CampState::Sink => CampState::Sink,
            CampState::Interior(s) => {
                if !self.in_context(s, action) {
                    return CampState::Sink;
                }
                let lifted_s = self.lift_state(s);
                let lifted_a = self.lift_action(action);
                let next = self.base.sample_transition(&lifted_s, &lifted_a, rng);
                CampState::Interior(self.project_state(&next))
            }
        }
    }

    /// Exact abstract successor distribution, when the base exposes one.
    /// Projected successors are aggregated and sorted for determinism.
    pub fn dist(
        &self,
        state: &CampState,
        action: &FactoredAction,
    ) -> Option<Vec<(CampState, f64)>> {
        match state {
            CampState::Sink => Some(vec![(CampState::Sink, 1.0)]),
            CampState::Interior(s) => {
                if !self.in_context(s, action) {
                    return Some(vec![(CampState::Sink, 1.0)]);
                }
                let lifted_s = self.lift_state(s);
                let lifted_a = self.lift_action(action);
                let base_dist = self.base.transition_dist(&lifted_s, &lifted_a)?;
                let mut agg: HashMap<FactoredState, f64> = HashMap::new();
                for (next, p) in base_dist {
                    *agg.entry(self.project_state(&next)).or_insert(0.0) += p;
                }
                let mut out: Vec<(CampState, f64)> = agg
                    .into_iter()
                    .map(|(s, p)| (CampState::Interior(s), p))
                    .collect();
                out.sort_by(|(a, _), (b, _)| a.cmp(b));
                Some(out)
            }
        }
    }

    /// Most-likely abstract successor: the base determinization, projected.
    pub fn most_likely(&self, state: &CampState, action: &FactoredAction) -> Result<CampState> {
        match state {
            CampState::Sink => Ok(CampState::Sink),
            CampState::Interior(s) => {
                if !self.in_context(s, action) {
                    return Ok(CampState::Sink);
                }
                let lifted_s = self.lift_state(s);
                let lifted_a = self.lift_action(action);
                let next = self.base.transition().most_likely(&lifted_s, &lifted_a)?;
                Ok(CampState::Interior(self.project_state(&next)))
            }
        }
    }

    /// Abstract reward: the sink pays the sink reward, interior states pay
    /// the base reward of their lift.
    pub fn reward(&self, state: &CampState) -> f64 {
        match state {
            CampState::Sink => self.sink_reward,
            CampState::Interior(s) => self.base.reward(&self.lift_state(s)),
        }
    }

    /// Terminal predicate of the base, evaluated on the lift. The sink is
    /// absorbing, not terminal.
    pub fn is_terminal(&self, state: &CampState) -> bool {
        match state {
            CampState::Sink => false,
            CampState::Interior(s) => self.base.is_terminal(&self.lift_state(s)),
        }
    }
}

fn enumerate_actions(vars: &Vars) -> Vec<FactoredAction> {
    let sizes: Vec<usize> = vars.action_vars().iter().map(|v| v.size()).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0u16; sizes.len()];
    loop {
        out.push(FactoredAction::new(cur.clone()));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::{learn_csis, CsiConfig, CsiSet};
    use crate::fixtures::influence_fixture;
    use crate::rng::derive_rng;

    fn fixture_csis(universal: bool) -> (crate::fixtures::Fixture, CsiSet) {
        let fx = influence_fixture();
        let ctx = if universal { Context::universal() } else { fx.context.clone() };
        let mut rng = derive_rng(11, &["abstraction-test"]);
        let cfg = CsiConfig::with_budgets(64, 4);
        let csis =
            learn_csis(fx.mdp.vars(), fx.mdp.transition().as_ref(), &ctx, &cfg, &mut rng).unwrap();
        (fx, csis)
    }

    #[test]
    fn universal_context_keeps_everything() {
        let (fx, csis) = fixture_csis(true);
        let reward_ids = vec![VarId::state(0)];
        let relevant = relevant_variables(&csis, &reward_ids, fx.mdp.vars());
        assert_eq!(relevant.len(), fx.mdp.vars().n_vars(), "all variables relevant without context");

        let camp = build_camp(&fx.mdp, &Context::universal(), &csis).unwrap();
        assert_eq!(camp.n_dropped(), 0);
        let s = FactoredState::new(vec![1, 0, 1]);
        assert_eq!(camp.project_state(&s), s, "projection is the identity");
    }

    #[test]
    fn fixture_relevance_matches_ground_truth() {
        let (fx, csis) = fixture_csis(false);
        let vars = fx.mdp.vars();
        let relevant = relevant_variables(&csis, &[VarId::state(0)], vars);
        let names: Vec<&str> = relevant.iter().map(|id| vars.spec(*id).name.as_str()).collect();
        assert_eq!(names, vec!["s1", "s2", "a1"]);
    }

    #[test]
    fn empty_independence_set_keeps_all() {
        let fx = influence_fixture();
        let csis = CsiSet {
            context: Context::universal(),
            independent_pairs: Default::default(),
        };
        let relevant = relevant_variables(&csis, &[VarId::state(0)], fx.mdp.vars());
        assert_eq!(relevant.len(), fx.mdp.vars().n_vars());
    }

    #[test]
    fn isolated_variable_excluded() {
        // s3 gets no outgoing edges: all pairs with source s3 independent.
        let fx = influence_fixture();
        let vars = fx.mdp.vars();
        let all: Vec<VarId> = vars.iter_all().map(|(id, _)| id).collect();
        let s3 = VarId::state(2);
        let mut independent = std::collections::HashSet::new();
        for &j in &all {
            independent.insert((s3, j));
        }
        let csis = CsiSet { context: Context::universal(), independent_pairs: independent };
        let relevant = relevant_variables(&csis, &[VarId::state(0)], vars);
        assert!(!relevant.contains(&s3));
        assert!(relevant.contains(&VarId::state(0)));
    }

    #[test]
    fn sink_is_absorbing_with_sink_reward() {
        let (fx, csis) = fixture_csis(false);
        let camp = build_camp(&fx.mdp, &fx.context, &csis).unwrap();
        let mut rng = derive_rng(3, &["sink"]);
        for action in camp.abstract_actions() {
            let next = camp.step(&CampState::Sink, action, &mut rng);
            assert!(next.is_sink());
        }
        assert_eq!(camp.reward(&CampState::Sink), DEFAULT_SINK_REWARD);
    }

    #[test]
    fn violation_goes_to_sink_forever() {
        let (fx, csis) = fixture_csis(false);
        let camp = build_camp(&fx.mdp, &fx.context, &csis).unwrap();
        // Abstract state with s2 = 1 violates the context s2 = 0.
        let violating = CampState::Interior(FactoredState::new(vec![0, 1]));
        let action = camp.abstract_actions()[0].clone();
        let mut rng = derive_rng(4, &["sink2"]);
        let next = camp.step(&violating, &action, &mut rng);
        assert!(next.is_sink());
        let after = camp.step(&next, &action, &mut rng);
        assert!(after.is_sink());
    }

    #[test]
    fn project_lift_is_identity_on_abstract_states() {
        let (fx, csis) = fixture_csis(false);
        let camp = build_camp(&fx.mdp, &fx.context, &csis).unwrap();
        for s1 in 0..2u16 {
            for s2 in 0..2u16 {
                let abs = FactoredState::new(vec![s1, s2]);
                assert_eq!(camp.project_state(&camp.lift_state(&abs)), abs);
            }
        }
        assert!(camp.lift(&CampState::Sink).is_err());
    }

    #[test]
    fn lifted_reward_matches_abstract_reward() {
        let (fx, csis) = fixture_csis(false);
        let camp = build_camp(&fx.mdp, &fx.context, &csis).unwrap();
        for s1 in 0..2u16 {
            for s2 in 0..2u16 {
                let abs = FactoredState::new(vec![s1, s2]);
                let lifted = camp.lift_state(&abs);
                assert_eq!(camp.reward(&CampState::Interior(abs)), fx.mdp.reward(&lifted));
            }
        }
    }

    #[test]
    fn kept_dynamics_invariant_to_lift_defaults() {
        let (fx, csis) = fixture_csis(false);
        let camp_a = build_camp(&fx.mdp, &fx.context, &csis).unwrap();
        let camp_b = build_camp(&fx.mdp, &fx.context, &csis)
            .unwrap()
            .with_defaults(vec![0, 0, 1], vec![0, 1])
            .unwrap();
        for s1 in 0..2u16 {
            // only in-context abstract states (s2 = 0)
            let abs = CampState::Interior(FactoredState::new(vec![s1, 0]));
            for action in camp_a.abstract_actions() {
                let da = camp_a.dist(&abs, action).unwrap();
                let db = camp_b.dist(&abs, action).unwrap();
                assert_eq!(da.len(), db.len());
                for ((sa, pa), (sb, pb)) in da.iter().zip(&db) {
                    assert_eq!(sa, sb);
                    assert!((pa - pb).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ablation_keeps_all_variables() {
        let fx = influence_fixture();
        let camp = Camp::ablation(&fx.mdp, &fx.context).unwrap();
        assert_eq!(camp.n_dropped(), 0);
        // but still routes violations to the sink
        let violating = CampState::Interior(FactoredState::new(vec![0, 1, 0]));
        let action = camp.abstract_actions()[0].clone();
        let mut rng = derive_rng(5, &["ablation"]);
        assert!(camp.step(&violating, &action, &mut rng).is_sink());
    }

    #[test]
    fn csi_context_mismatch_rejected() {
        let (fx, csis) = fixture_csis(false);
        assert!(build_camp(&fx.mdp, &Context::universal(), &csis).is_err());
    }
}
