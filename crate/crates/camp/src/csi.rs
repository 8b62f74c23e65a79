//! Approximate context-specific independence discovery.
//!
//! For each ordered variable pair `(source, target)` outside the context,
//! the learner samples in-context joint assignments, perturbs the source,
//! and flags dependence whenever the conditional distribution of the target
//! at the next step changes. Pairs never flagged are returned as
//! independent; insufficient sampling therefore yields optimistic
//! independences, which the downstream pipeline tolerates.

use crate::contexts::{Context, ContextForm, ContextSpec};
use crate::core::{FactoredAction, FactoredState, TransitionFn, VarId, VarKind, Vars};
use crate::error::{CampError, Result};
use crate::rng::derive_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

/// Independences discovered under one context: `(source, target)` present
/// means the target at `t+1` is independent of the source at `t` given the
/// context. Neither member of a pair is a context variable.
#[derive(Debug, Clone)]
pub struct CsiSet {
    pub context: Context,
    pub independent_pairs: HashSet<(VarId, VarId)>,
}

impl CsiSet {
    pub fn is_independent(&self, source: VarId, target: VarId) -> bool {
        self.independent_pairs.contains(&(source, target))
    }
}

/// Budgets and thresholds for the discovery procedure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsiConfig {
    /// In-context base assignments sampled per context.
    pub k1: usize,
    /// Perturbed source values tried per base assignment.
    pub k2: usize,
    /// Successor samples per conditional query in sampling mode.
    pub samples_per_query: usize,
    /// Total-variation distance above which sampled distributions are
    /// declared different.
    pub tv_threshold: f64,
    /// Pointwise tolerance for exact distribution comparison.
    pub exact_tolerance: f64,
}

impl Default for CsiConfig {
    fn default() -> Self {
        Self {
            k1: 50,
            k2: 50,
            samples_per_query: 64,
            tv_threshold: 0.15,
            exact_tolerance: 1e-9,
        }
    }
}

impl CsiConfig {
    pub fn with_budgets(k1: usize, k2: usize) -> Self {
        Self { k1, k2, ..Self::default() }
    }
}

/// Joint domain size across all variables, or `None` on overflow.
fn joint_domain_size(vars: &Vars) -> Option<usize> {
    vars.iter_all()
        .try_fold(1usize, |acc, (_, spec)| acc.checked_mul(spec.size()))
}

fn split_assignment(vars: &Vars, joint: &[u16]) -> (FactoredState, FactoredAction) {
    let ns = vars.state_vars().len();
    (
        FactoredState::new(joint[..ns].to_vec()),
        FactoredAction::new(joint[ns..].to_vec()),
    )
}

fn in_context(vars: &Vars, ctx: &Context, joint: &[u16]) -> bool {
    let (s, a) = split_assignment(vars, joint);
    ctx.holds(vars, &s, &a)
}

/// Samples up to `k1` joint state-action assignments satisfying the context.
///
/// Small joint domains are enumerated exhaustively (and subsampled uniformly
/// if more than `k1` assignments satisfy the context); otherwise each
/// variable is drawn uniformly with the context atoms' variables pinned or
/// filtered to guarantee membership.
pub fn sample_in_context(
    vars: &Vars,
    ctx: &Context,
    k1: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(FactoredState, FactoredAction)>> {
    assert!(k1 >= 1, "k1 must be at least 1");
    if !ctx.is_satisfiable(vars) {
        return Err(CampError::UnsatisfiableContext(ctx.text()));
    }

    const ENUM_LIMIT: usize = 4096;
    if let Some(total) = joint_domain_size(vars) {
        if total <= ENUM_LIMIT {
            let all = enumerate_in_context(vars, ctx);
            if all.len() <= k1 {
                return Ok(all.iter().map(|j| split_assignment(vars, j)).collect());
            }
            let mut out = Vec::with_capacity(k1);
            for _ in 0..k1 {
                let idx = rng.gen_range(0..all.len());
                out.push(split_assignment(vars, &all[idx]));
            }
            return Ok(out);
        }
    }

    let specs: Vec<_> = vars.iter_all().collect();
    let n_state = vars.state_vars().len();
    let flat = |id: VarId| match id.kind {
        VarKind::State => id.index,
        VarKind::Action => n_state + id.index,
    };
    let mut out = Vec::with_capacity(k1);
    for _ in 0..k1 {
        let mut joint: Vec<u16> = specs
            .iter()
            .map(|(_, spec)| rng.gen_range(0..spec.size()) as u16)
            .collect();
        match ctx.form() {
            ContextForm::Universal => {}
            ContextForm::Literal | ContextForm::Conjunction => {
                for atom in ctx.atoms() {
                    let slot = flat(atom.var_id());
                    let size = vars.spec(atom.var_id()).size();
                    if atom.negated {
                        // uniform over the domain minus the excluded value
                        let mut v = rng.gen_range(0..size - 1) as u16;
                        if v >= atom.value_idx() {
                            v += 1;
                        }
                        joint[slot] = v;
                    } else {
                        joint[slot] = atom.value_idx();
                    }
                }
            }
            ContextForm::Disjunction => {
                // Resample the constrained variables until some disjunct
                // holds; satisfiable by construction, so fall back to
                // satisfying a random atom directly after bounded retries.
                let mut tries = 0;
                while !in_context(vars, ctx, &joint) {
                    tries += 1;
                    if tries > 100 {
                        let satisfiable: Vec<_> = ctx
                            .atoms()
                            .iter()
                            .filter(|a| !a.negated || vars.spec(a.var_id()).size() > 1)
                            .collect();
                        let atom = satisfiable[rng.gen_range(0..satisfiable.len())];
                        let slot = flat(atom.var_id());
                        let size = vars.spec(atom.var_id()).size();
                        if atom.negated {
                            let mut v = rng.gen_range(0..size - 1) as u16;
                            if v >= atom.value_idx() {
                                v += 1;
                            }
                            joint[slot] = v;
                        } else {
                            joint[slot] = atom.value_idx();
                        }
                        break;
                    }
                    for id in ctx.context_vars() {
                        joint[flat(*id)] = rng.gen_range(0..vars.spec(*id).size()) as u16;
                    }
                }
            }
        }
        debug_assert!(in_context(vars, ctx, &joint));
        out.push(split_assignment(vars, &joint));
    }
    Ok(out)
}

/// All joint assignments satisfying the context, odometer order.
fn enumerate_in_context(vars: &Vars, ctx: &Context) -> Vec<Vec<u16>> {
    let sizes: Vec<usize> = vars.iter_all().map(|(_, s)| s.size()).collect();
    let mut out = Vec::new();
    if sizes.is_empty() {
        if ctx.is_universal() {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0u16; sizes.len()];
    loop {
        if in_context(vars, ctx, &cur) {
            out.push(cur.clone());
        }
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

/// Result of one conditional query: a deterministic successor is kept as a
/// bare state (the common case for classical domains, compared per variable
/// without building probability vectors), anything else as per-variable
/// marginals.
enum Query {
    Deterministic(FactoredState),
    Marginal(Marginals),
}

impl Query {
    fn differs_at(&self, other: &Query, var: usize, exact: bool, cfg: &CsiConfig) -> bool {
        match (self, other) {
            (Query::Deterministic(a), Query::Deterministic(b)) => a.values[var] != b.values[var],
            (Query::Marginal(a), Query::Marginal(b)) => {
                differs(&a.per_var[var], &b.per_var[var], exact, cfg)
            }
            (Query::Deterministic(a), Query::Marginal(m))
            | (Query::Marginal(m), Query::Deterministic(a)) => {
                let row = &m.per_var[var];
                let mut point = vec![0.0; row.len()];
                point[a.values[var] as usize] = 1.0;
                differs(&point, row, exact, cfg)
            }
        }
    }
}

/// Per-target-variable conditional distributions of the next state.
struct Marginals {
    /// Indexed by state-variable position; each entry is a probability
    /// vector over that variable's domain indices.
    per_var: Vec<Vec<f64>>,
}

fn exact_marginals(vars: &Vars, dist: &[(FactoredState, f64)]) -> Marginals {
    let mut per_var: Vec<Vec<f64>> = vars
        .state_vars()
        .iter()
        .map(|spec| vec![0.0; spec.size()])
        .collect();
    for (s, p) in dist {
        for (i, &v) in s.values.iter().enumerate() {
            per_var[i][v as usize] += p;
        }
    }
    Marginals { per_var }
}

fn sampled_marginals(
    vars: &Vars,
    transition: &dyn TransitionFn,
    s: &FactoredState,
    a: &FactoredAction,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Marginals {
    let mut per_var: Vec<Vec<f64>> = vars
        .state_vars()
        .iter()
        .map(|spec| vec![0.0; spec.size()])
        .collect();
    for _ in 0..n {
        let next = transition.sample(s, a, rng);
        for (i, &v) in next.values.iter().enumerate() {
            per_var[i][v as usize] += 1.0 / n as f64;
        }
    }
    Marginals { per_var }
}

fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn differs(base: &[f64], pert: &[f64], exact: bool, cfg: &CsiConfig) -> bool {
    if exact {
        base.iter().zip(pert).any(|(a, b)| (a - b).abs() > cfg.exact_tolerance)
    } else {
        tv_distance(base, pert) > cfg.tv_threshold
    }
}

/// Learns the approximate CSI set for one context.
///
/// Initializes every ordered pair outside the context as independent, then
/// removes a pair whenever perturbing the source changes the target's
/// next-step conditional distribution on some sampled base assignment.
/// Action-variable targets are never generated by the transition model and
/// remain independent. Uses exact conditional queries when the transition
/// exposes them, empirical frequencies otherwise.
pub fn learn_csis(
    vars: &Vars,
    transition: &dyn TransitionFn,
    ctx: &Context,
    cfg: &CsiConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CsiSet> {
    assert!(cfg.k1 >= 1 && cfg.k2 >= 1, "budgets must be at least 1");
    let eligible: Vec<VarId> = vars
        .iter_all()
        .map(|(id, _)| id)
        .filter(|id| !ctx.contains_var(*id))
        .collect();
    let mut independent: HashSet<(VarId, VarId)> = eligible
        .iter()
        .flat_map(|&i| eligible.iter().map(move |&j| (i, j)))
        .collect();
    let state_targets: Vec<VarId> = eligible
        .iter()
        .copied()
        .filter(|id| id.kind == VarKind::State)
        .collect();

    // Seeds for the perturbation-order permutations and the per-query
    // successor sampling, drawn before base sampling so larger budgets
    // extend smaller ones' sample sets as prefixes instead of reshuffling.
    let perm_seed: u64 = rng.gen();
    let query_seed: u64 = rng.gen();
    let bases = sample_in_context(vars, ctx, cfg.k1, rng)?;
    if bases.is_empty() {
        return Err(CampError::UnsatisfiableContext(ctx.text()));
    }
    let exact = transition.dist(&bases[0].0, &bases[0].1).is_some();

    let mut query_idx: u64 = 0;
    let marginals_of = |s: &FactoredState, a: &FactoredAction, q: u64| -> Query {
        if exact {
            let mut dist = transition.dist(s, a).expect("exact mode");
            if dist.len() == 1 {
                Query::Deterministic(dist.pop().unwrap().0)
            } else {
                Query::Marginal(exact_marginals(vars, &dist))
            }
        } else {
            let mut qrng = derive_rng(query_seed, &["csi-query", &q.to_string()]);
            Query::Marginal(sampled_marginals(
                vars,
                transition,
                s,
                a,
                cfg.samples_per_query,
                &mut qrng,
            ))
        }
    };

    for (u_idx, (s, a)) in bases.iter().enumerate() {
        let base = marginals_of(s, a, query_idx);
        query_idx += 1;
        for &source in &eligible {
            if state_targets.iter().all(|&t| !independent.contains(&(source, t))) {
                continue;
            }
            let spec = vars.spec(source);
            let cur = vars.value_of(source, s, a);
            let values = perturbation_values(spec.size(), cur, cfg.k2, perm_seed, u_idx, source);
            for v in values {
                let mut joint_s = s.clone();
                let mut joint_a = a.clone();
                match source.kind {
                    VarKind::State => joint_s.values[source.index] = v,
                    VarKind::Action => joint_a.values[source.index] = v,
                }
                let pert = marginals_of(&joint_s, &joint_a, query_idx);
                query_idx += 1;
                for &target in &state_targets {
                    if independent.contains(&(source, target))
                        && base.differs_at(&pert, target.index, exact, cfg)
                    {
                        independent.remove(&(source, target));
                    }
                }
            }
        }
    }

    Ok(CsiSet { context: ctx.clone(), independent_pairs: independent })
}

/// Perturbed values of a source variable: its full domain (minus the current
/// value) when small, otherwise the first `k2` entries of a seeded
/// permutation, so larger budgets extend smaller ones.
fn perturbation_values(
    size: usize,
    current: u16,
    k2: usize,
    perm_seed: u64,
    u_idx: usize,
    source: VarId,
) -> Vec<u16> {
    if size <= k2 + 1 {
        return (0..size as u16).filter(|&v| v != current).collect();
    }
    let tag = format!("{}-{:?}-{}", u_idx, source.kind, source.index);
    let mut rng = derive_rng(perm_seed, &["csi-perm", &tag]);
    let mut perm: Vec<u16> = (0..size as u16).collect();
    // Fisher-Yates
    for i in (1..perm.len()).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm.into_iter().filter(|&v| v != current).take(k2).collect()
}

/// One cache record per context: canonical text, the context itself, and the
/// discovered independent pairs by variable name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsiCacheEntry {
    pub context_text: String,
    pub context: ContextSpec,
    pub independent_pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CsiCacheFile {
    pub entries: Vec<CsiCacheEntry>,
}

pub fn save_csis(path: &Path, vars: &Vars, sets: &[CsiSet]) -> Result<()> {
    let file = CsiCacheFile {
        entries: sets
            .iter()
            .map(|set| {
                let mut pairs: Vec<(String, String)> = set
                    .independent_pairs
                    .iter()
                    .map(|(i, j)| (vars.spec(*i).name.clone(), vars.spec(*j).name.clone()))
                    .collect();
                pairs.sort();
                CsiCacheEntry {
                    context_text: set.context.text(),
                    context: set.context.to_spec(),
                    independent_pairs: pairs,
                }
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_csis(path: &Path, vars: &Vars) -> Result<Vec<CsiSet>> {
    let json = std::fs::read_to_string(path)?;
    let file: CsiCacheFile = serde_json::from_str(&json)?;
    file.entries
        .iter()
        .map(|entry| {
            let context = Context::from_spec(vars, &entry.context)?;
            let pairs: Result<HashSet<(VarId, VarId)>> = entry
                .independent_pairs
                .iter()
                .map(|(i, j)| Ok((vars.lookup(i)?, vars.lookup(j)?)))
                .collect();
            Ok(CsiSet { context, independent_pairs: pairs? })
        })
        .collect()
}
