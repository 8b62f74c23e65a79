//! Contexts: variable subsets with an allowed-assignment formula, membership
//! testing, and generation of the candidate context space.

use crate::core::{FactoredAction, FactoredState, VarId, Vars};
use crate::error::{CampError, Result};
use serde::{Deserialize, Serialize};

/// A single `variable = value` (or negated) constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub variable: String,
    pub value: i64,
    pub negated: bool,
    var: VarId,
    value_idx: u16,
}

impl Atom {
    pub fn new(vars: &Vars, variable: &str, value: i64, negated: bool) -> Result<Self> {
        let var = vars.lookup(variable)?;
        let value_idx = vars
            .spec(var)
            .index_of(value)
            .ok_or(CampError::ValueNotInDomain { variable: variable.to_string(), value })?;
        Ok(Self { variable: variable.to_string(), value, negated, var, value_idx })
    }

    pub fn var_id(&self) -> VarId {
        self.var
    }

    pub fn value_idx(&self) -> u16 {
        self.value_idx
    }

    pub fn holds(&self, vars: &Vars, s: &FactoredState, a: &FactoredAction) -> bool {
        let v = vars.value_of(self.var, s, a);
        (v == self.value_idx) != self.negated
    }

    /// Atom truth on a value index of its own variable.
    pub fn holds_value(&self, value_idx: u16) -> bool {
        (value_idx == self.value_idx) != self.negated
    }

    fn text(&self) -> String {
        if self.negated {
            format!("NOT({}={})", self.variable, self.value)
        } else {
            format!("{}={}", self.variable, self.value)
        }
    }
}

/// Formula shape of a context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextForm {
    Universal,
    Literal,
    Conjunction,
    Disjunction,
}

/// A context `(C, 𝒞)`: the constrained variables are exactly those named in
/// the atoms, and the allowed assignments are those satisfying the formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    form: ContextForm,
    atoms: Vec<Atom>,
    /// Sorted, deduplicated variable set C.
    context_vars: Vec<VarId>,
}

impl Context {
    pub fn universal() -> Self {
        Self { form: ContextForm::Universal, atoms: Vec::new(), context_vars: Vec::new() }
    }

    pub fn literal(atom: Atom) -> Self {
        let context_vars = vec![atom.var];
        Self { form: ContextForm::Literal, atoms: vec![atom], context_vars }
    }

    pub fn conjunction(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.len() < 2 {
            return Err(CampError::InvalidContext("conjunction needs at least two atoms".into()));
        }
        let mut vars: Vec<VarId> = atoms.iter().map(|a| a.var).collect();
        vars.sort();
        if vars.windows(2).any(|w| w[0] == w[1]) {
            return Err(CampError::InvalidContext(
                "conjunction atoms must reference distinct variables".into(),
            ));
        }
        Ok(Self { form: ContextForm::Conjunction, atoms, context_vars: vars })
    }

    pub fn disjunction(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.len() < 2 {
            return Err(CampError::InvalidContext("disjunction needs at least two atoms".into()));
        }
        let mut vars: Vec<VarId> = atoms.iter().map(|a| a.var).collect();
        vars.sort();
        vars.dedup();
        Ok(Self { form: ContextForm::Disjunction, atoms, context_vars: vars })
    }

    pub fn form(&self) -> ContextForm {
        self.form
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// The variable set C, sorted.
    pub fn context_vars(&self) -> &[VarId] {
        &self.context_vars
    }

    pub fn is_universal(&self) -> bool {
        self.form == ContextForm::Universal
    }

    pub fn contains_var(&self, id: VarId) -> bool {
        self.context_vars.binary_search(&id).is_ok()
    }

    /// Membership test: is `(s, a)` in the context?
    pub fn holds(&self, vars: &Vars, s: &FactoredState, a: &FactoredAction) -> bool {
        match self.form {
            ContextForm::Universal => true,
            ContextForm::Literal => self.atoms[0].holds(vars, s, a),
            ContextForm::Conjunction => self.atoms.iter().all(|at| at.holds(vars, s, a)),
            ContextForm::Disjunction => self.atoms.iter().any(|at| at.holds(vars, s, a)),
        }
    }

    /// Membership test on state variables only: action atoms are ignored
    /// (treated as satisfied). Used where only a state is available, e.g.
    /// deciding whether an abstract state is a violation state.
    pub fn holds_state(&self, _vars: &Vars, s: &FactoredState) -> bool {
        let atom_holds = |at: &Atom| match at.var.kind {
            crate::core::VarKind::State => at.holds_value(s.values[at.var.index]),
            crate::core::VarKind::Action => true,
        };
        match self.form {
            ContextForm::Universal => true,
            ContextForm::Literal => atom_holds(&self.atoms[0]),
            ContextForm::Conjunction => self.atoms.iter().all(atom_holds),
            ContextForm::Disjunction => {
                // A disjunction with any action atom cannot be refuted by the
                // state alone.
                if self.atoms.iter().any(|a| a.var.kind == crate::core::VarKind::Action) {
                    true
                } else {
                    self.atoms.iter().any(atom_holds)
                }
            }
        }
    }

    /// Canonical text form, stable across runs: `TRUE`, `agent_room=2`,
    /// `NOT(agent_room=2)`, `OR(room=1,room=3)`, `AND(x=1,NOT(y=2))`.
    pub fn text(&self) -> String {
        match self.form {
            ContextForm::Universal => "TRUE".to_string(),
            ContextForm::Literal => self.atoms[0].text(),
            ContextForm::Conjunction => {
                let inner: Vec<String> = self.atoms.iter().map(Atom::text).collect();
                format!("AND({})", inner.join(","))
            }
            ContextForm::Disjunction => {
                let inner: Vec<String> = self.atoms.iter().map(Atom::text).collect();
                format!("OR({})", inner.join(","))
            }
        }
    }

    /// True when some joint assignment of the context variables satisfies
    /// the formula, checked by enumeration over the atoms' variables.
    pub fn is_satisfiable(&self, vars: &Vars) -> bool {
        match self.form {
            ContextForm::Universal => true,
            ContextForm::Literal => atom_satisfiable(vars, &self.atoms[0]),
            // Distinct variables, so the conjunction is satisfiable iff each
            // atom is satisfiable on its own variable.
            ContextForm::Conjunction => self.atoms.iter().all(|a| atom_satisfiable(vars, a)),
            ContextForm::Disjunction => self.atoms.iter().any(|a| atom_satisfiable(vars, a)),
        }
    }

    pub fn to_spec(&self) -> ContextSpec {
        ContextSpec {
            form: self.form,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomSpec { variable: a.variable.clone(), value: a.value, negated: a.negated })
                .collect(),
        }
    }

    pub fn from_spec(vars: &Vars, spec: &ContextSpec) -> Result<Self> {
        let atoms: Result<Vec<Atom>> = spec
            .atoms
            .iter()
            .map(|a| Atom::new(vars, &a.variable, a.value, a.negated))
            .collect();
        let atoms = atoms?;
        match spec.form {
            ContextForm::Universal => {
                if !atoms.is_empty() {
                    return Err(CampError::InvalidContext("universal context with atoms".into()));
                }
                Ok(Self::universal())
            }
            ContextForm::Literal => {
                if atoms.len() != 1 {
                    return Err(CampError::InvalidContext("literal needs exactly one atom".into()));
                }
                Ok(Self::literal(atoms.into_iter().next().unwrap()))
            }
            ContextForm::Conjunction => Self::conjunction(atoms),
            ContextForm::Disjunction => Self::disjunction(atoms),
        }
    }
}

fn atom_satisfiable(vars: &Vars, atom: &Atom) -> bool {
    // A positive atom is always satisfiable; a negated atom needs a second
    // domain value to exist.
    !atom.negated || vars.spec(atom.var).size() > 1
}

/// Serializable mirror of a context, re-resolved against the variable table
/// on load.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ContextSpec {
    pub form: ContextForm,
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct AtomSpec {
    pub variable: String,
    pub value: i64,
    pub negated: bool,
}

/// Which formula shapes the generator emits beyond literals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextGenConfig {
    pub max_len: usize,
    /// Variables whose domain size exceeds this threshold are excluded from
    /// context formulas.
    pub domain_size_threshold: usize,
    pub conjunctions: bool,
    pub disjunctions: bool,
    /// Restrict candidate atoms to these variables; `None` means every
    /// declared variable is a candidate.
    pub variables: Option<Vec<String>>,
}

impl ContextGenConfig {
    pub fn new(max_len: usize, domain_size_threshold: usize) -> Self {
        Self {
            max_len,
            domain_size_threshold,
            conjunctions: true,
            disjunctions: true,
            variables: None,
        }
    }
}

/// Generates the candidate context space: the universal context first, then
/// all literals, conjunctions, and disjunctions up to the configured length
/// over eligible variables, in a deterministic order (lexicographic by
/// variable name, then value, then polarity).
pub fn generate_contexts(vars: &Vars, max_len: usize, threshold: usize) -> Result<Vec<Context>> {
    generate_contexts_with(vars, &ContextGenConfig::new(max_len, threshold))
}

pub fn generate_contexts_with(vars: &Vars, cfg: &ContextGenConfig) -> Result<Vec<Context>> {
    assert!(cfg.max_len >= 1, "max_len must be at least 1");
    assert!(cfg.domain_size_threshold >= 1, "threshold must be at least 1");

    let mut eligible: Vec<(VarId, &crate::core::VariableSpec)> = vars
        .iter_all()
        .filter(|(_, spec)| spec.size() <= cfg.domain_size_threshold)
        .filter(|(_, spec)| match &cfg.variables {
            Some(names) => names.iter().any(|n| n == &spec.name),
            None => true,
        })
        .collect();
    eligible.sort_by(|(_, a), (_, b)| a.name.cmp(&b.name));

    // Atoms in canonical order: variable name, then value, then polarity
    // (positive before negated). Negated atoms over single-value domains are
    // unsatisfiable and skipped.
    let mut atoms = Vec::new();
    for (_, spec) in &eligible {
        for &value in &spec.domain {
            atoms.push(Atom::new(vars, &spec.name, value, false)?);
            if spec.size() > 1 {
                atoms.push(Atom::new(vars, &spec.name, value, true)?);
            }
        }
    }

    let mut out = vec![Context::universal()];
    for atom in &atoms {
        out.push(Context::literal(atom.clone()));
    }
    for len in 2..=cfg.max_len {
        if cfg.conjunctions {
            for combo in combinations(atoms.len(), len) {
                let chosen: Vec<Atom> = combo.iter().map(|&i| atoms[i].clone()).collect();
                let mut ids: Vec<VarId> = chosen.iter().map(|a| a.var).collect();
                ids.sort();
                ids.dedup();
                if ids.len() == len {
                    out.push(Context::conjunction(chosen).expect("distinct vars"));
                }
            }
        }
        if cfg.disjunctions {
            for combo in combinations(atoms.len(), len) {
                let chosen: Vec<Atom> = combo.iter().map(|&i| atoms[i].clone()).collect();
                out.push(Context::disjunction(chosen).expect("len >= 2"));
            }
        }
    }
    debug_assert!(out.iter().all(|c| c.is_satisfiable(vars)));
    Ok(out)
}

/// All index combinations of size `k` from `0..n`, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{FactoredAction, FactoredState, VariableSpec};

    fn test_vars() -> std::sync::Arc<Vars> {
        Vars::new(
            vec![
                VariableSpec::state_range("agent_room", 4),
                VariableSpec::state_range("big", 10),
            ],
            vec![VariableSpec::action_range("move", 2)],
        )
        .unwrap()
    }

    #[test]
    fn universal_holds_everywhere() {
        let vars = test_vars();
        let ctx = Context::universal();
        let s = FactoredState::new(vec![2, 0]);
        let a = FactoredAction::new(vec![1]);
        assert!(ctx.holds(&vars, &s, &a));
        assert_eq!(ctx.text(), "TRUE");
    }

    #[test]
    fn negated_literal() {
        let vars = test_vars();
        let ctx = Context::literal(Atom::new(&vars, "agent_room", 2, true).unwrap());
        let in_room2 = FactoredState::new(vec![2, 0]);
        let in_room1 = FactoredState::new(vec![1, 0]);
        let a = FactoredAction::new(vec![0]);
        assert!(!ctx.holds(&vars, &in_room2, &a));
        assert!(ctx.holds(&vars, &in_room1, &a));
        assert_eq!(ctx.text(), "NOT(agent_room=2)");
    }

    #[test]
    fn disjunction_any_disjunct() {
        let vars = test_vars();
        let ctx = Context::disjunction(vec![
            Atom::new(&vars, "agent_room", 1, false).unwrap(),
            Atom::new(&vars, "agent_room", 3, false).unwrap(),
        ])
        .unwrap();
        let s = FactoredState::new(vec![3, 0]);
        let a = FactoredAction::new(vec![0]);
        assert!(ctx.holds(&vars, &s, &a));
        assert_eq!(ctx.text(), "OR(agent_room=1,agent_room=3)");
    }

    #[test]
    fn conjunction_requires_distinct_vars() {
        let vars = test_vars();
        let res = Context::conjunction(vec![
            Atom::new(&vars, "agent_room", 1, false).unwrap(),
            Atom::new(&vars, "agent_room", 2, false).unwrap(),
        ]);
        assert!(res.is_err());
    }

    #[test]
    fn undeclared_variable_fails_at_construction() {
        let vars = test_vars();
        assert!(Atom::new(&vars, "ghost", 0, false).is_err());
    }

    #[test]
    fn empty_vars_yield_universal_only() {
        let vars = Vars::new(vec![], vec![]).unwrap();
        let ctxs = generate_contexts(&vars, 2, 4).unwrap();
        assert_eq!(ctxs.len(), 1);
        assert!(ctxs[0].is_universal());
    }

    #[test]
    fn literal_count_matches_hand_enumeration() {
        // V1:{0,1}, V2:{0,1,2}, max_len=1, threshold=4:
        // universal + 5 atoms x 2 polarities = 11 contexts.
        let vars = Vars::new(
            vec![
                VariableSpec::state_range("v1", 2),
                VariableSpec::state_range("v2", 3),
            ],
            vec![],
        )
        .unwrap();
        let ctxs = generate_contexts(&vars, 1, 4).unwrap();
        assert_eq!(ctxs.len(), 11);
        assert!(ctxs[0].is_universal());
    }

    #[test]
    fn oversized_domain_excluded() {
        let vars = Vars::new(vec![VariableSpec::state_range("big", 10)], vec![]).unwrap();
        let ctxs = generate_contexts(&vars, 2, 4).unwrap();
        assert_eq!(ctxs.len(), 1);
    }

    #[test]
    fn deterministic_and_satisfiable() {
        let vars = test_vars();
        let a = generate_contexts(&vars, 2, 4).unwrap();
        let b = generate_contexts(&vars, 2, 4).unwrap();
        let ta: Vec<String> = a.iter().map(Context::text).collect();
        let tb: Vec<String> = b.iter().map(Context::text).collect();
        assert_eq!(ta, tb);
        assert!(a.iter().all(|c| c.is_satisfiable(&vars)));
        // No duplicates under (form, atom-set) equality: canonical text is a
        // faithful key for generated contexts.
        let mut seen = std::collections::HashSet::new();
        assert!(ta.iter().all(|t| seen.insert(t.clone())));
    }

    #[test]
    fn spec_roundtrip() {
        let vars = test_vars();
        let ctx = Context::disjunction(vec![
            Atom::new(&vars, "agent_room", 0, false).unwrap(),
            Atom::new(&vars, "move", 1, true).unwrap(),
        ])
        .unwrap();
        let spec = ctx.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ContextSpec = serde_json::from_str(&json).unwrap();
        let ctx2 = Context::from_spec(&vars, &back).unwrap();
        assert_eq!(ctx, ctx2);
    }
}
