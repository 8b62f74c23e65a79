use crate::error::{CampError, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Whether a variable belongs to the state or the action factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    State,
    Action,
}

/// A discrete variable: a name plus an ordered, finite value domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub domain: Vec<i64>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VarKind, domain: Vec<i64>) -> Result<Self> {
        let name = name.into();
        if domain.is_empty() {
            return Err(CampError::InvalidVariableSpec {
                variable: name,
                reason: "empty domain".into(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &v in &domain {
            if !seen.insert(v) {
                return Err(CampError::InvalidVariableSpec {
                    variable: name,
                    reason: format!("duplicate domain value {v}"),
                });
            }
        }
        Ok(Self { name, kind, domain })
    }

    /// State variable with domain `0..n`.
    pub fn state_range(name: impl Into<String>, n: usize) -> Self {
        Self::new(name, VarKind::State, (0..n as i64).collect()).unwrap()
    }

    /// Action variable with domain `0..n`.
    pub fn action_range(name: impl Into<String>, n: usize) -> Self {
        Self::new(name, VarKind::Action, (0..n as i64).collect()).unwrap()
    }

    /// Boolean state variable with domain `{0, 1}`.
    pub fn state_bool(name: impl Into<String>) -> Self {
        Self::state_range(name, 2)
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn index_of(&self, value: i64) -> Option<u16> {
        self.domain.iter().position(|&v| v == value).map(|i| i as u16)
    }
}

/// Position of a variable within its kind's ordered list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId {
    pub kind: VarKind,
    pub index: usize,
}

impl VarId {
    pub fn state(index: usize) -> Self {
        Self { kind: VarKind::State, index }
    }
    pub fn action(index: usize) -> Self {
        Self { kind: VarKind::Action, index }
    }
}

/// The declared variables of a factored MDP, state variables first.
///
/// Shared (via `Arc`) between the MDP, its tasks, and any abstractions of it.
#[derive(Debug, Clone)]
pub struct Vars {
    state: Vec<VariableSpec>,
    action: Vec<VariableSpec>,
    by_name: HashMap<String, VarId>,
}

impl Vars {
    pub fn new(state: Vec<VariableSpec>, action: Vec<VariableSpec>) -> Result<Arc<Self>> {
        let mut by_name = HashMap::new();
        for (i, v) in state.iter().enumerate() {
            if v.kind != VarKind::State {
                return Err(CampError::InvalidVariableSpec {
                    variable: v.name.clone(),
                    reason: "action variable in state list".into(),
                });
            }
            if by_name.insert(v.name.clone(), VarId::state(i)).is_some() {
                return Err(CampError::InvalidVariableSpec {
                    variable: v.name.clone(),
                    reason: "duplicate variable name".into(),
                });
            }
        }
        for (i, v) in action.iter().enumerate() {
            if v.kind != VarKind::Action {
                return Err(CampError::InvalidVariableSpec {
                    variable: v.name.clone(),
                    reason: "state variable in action list".into(),
                });
            }
            if by_name.insert(v.name.clone(), VarId::action(i)).is_some() {
                return Err(CampError::InvalidVariableSpec {
                    variable: v.name.clone(),
                    reason: "duplicate variable name".into(),
                });
            }
        }
        Ok(Arc::new(Self { state, action, by_name }))
    }

    pub fn state_vars(&self) -> &[VariableSpec] {
        &self.state
    }

    pub fn action_vars(&self) -> &[VariableSpec] {
        &self.action
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| CampError::UnknownVariable(name.to_string()))
    }

    pub fn spec(&self, id: VarId) -> &VariableSpec {
        match id.kind {
            VarKind::State => &self.state[id.index],
            VarKind::Action => &self.action[id.index],
        }
    }

    /// All variables as `(id, spec)`, state variables first.
    pub fn iter_all(&self) -> impl Iterator<Item = (VarId, &VariableSpec)> {
        self.state
            .iter()
            .enumerate()
            .map(|(i, v)| (VarId::state(i), v))
            .chain(self.action.iter().enumerate().map(|(i, v)| (VarId::action(i), v)))
    }

    pub fn n_vars(&self) -> usize {
        self.state.len() + self.action.len()
    }

    /// Value index of variable `id` in the joint assignment `(s, a)`.
    pub fn value_of(&self, id: VarId, s: &FactoredState, a: &FactoredAction) -> u16 {
        match id.kind {
            VarKind::State => s.values[id.index],
            VarKind::Action => a.values[id.index],
        }
    }

    pub fn validate_state(&self, s: &FactoredState) -> Result<()> {
        if s.values.len() != self.state.len() {
            return Err(CampError::InvalidAssignment(format!(
                "state has {} values, expected {}",
                s.values.len(),
                self.state.len()
            )));
        }
        for (i, (&v, spec)) in s.values.iter().zip(&self.state).enumerate() {
            if v as usize >= spec.size() {
                return Err(CampError::InvalidAssignment(format!(
                    "state var {i} (`{}`) index {v} out of domain (size {})",
                    spec.name,
                    spec.size()
                )));
            }
        }
        Ok(())
    }

    pub fn validate_action(&self, a: &FactoredAction) -> Result<()> {
        if a.values.len() != self.action.len() {
            return Err(CampError::InvalidAssignment(format!(
                "action has {} values, expected {}",
                a.values.len(),
                self.action.len()
            )));
        }
        for (i, (&v, spec)) in a.values.iter().zip(&self.action).enumerate() {
            if v as usize >= spec.size() {
                return Err(CampError::InvalidAssignment(format!(
                    "action var {i} (`{}`) index {v} out of domain (size {})",
                    spec.name,
                    spec.size()
                )));
            }
        }
        Ok(())
    }
}

/// A full assignment to the state variables, stored as domain indices in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactoredState {
    pub values: Vec<u16>,
}

impl FactoredState {
    pub fn new(values: Vec<u16>) -> Self {
        Self { values }
    }

    /// Builds a state from `(name, raw value)` pairs, validating against `vars`.
    pub fn from_values(vars: &Vars, pairs: &[(&str, i64)]) -> Result<Self> {
        let mut values = vec![None; vars.state_vars().len()];
        for &(name, value) in pairs {
            let id = vars.lookup(name)?;
            if id.kind != VarKind::State {
                return Err(CampError::InvalidAssignment(format!("`{name}` is not a state variable")));
            }
            let spec = vars.spec(id);
            let idx = spec.index_of(value).ok_or(CampError::ValueNotInDomain {
                variable: name.to_string(),
                value,
            })?;
            values[id.index] = Some(idx);
        }
        let values: Option<Vec<u16>> = values.into_iter().collect();
        values
            .map(Self::new)
            .ok_or_else(|| CampError::InvalidAssignment("missing state variable".into()))
    }

    /// Raw domain value of the named state variable.
    pub fn value(&self, vars: &Vars, name: &str) -> Result<i64> {
        let id = vars.lookup(name)?;
        debug_assert_eq!(id.kind, VarKind::State);
        Ok(vars.spec(id).domain[self.values[id.index] as usize])
    }
}

/// A full assignment to the action variables; same encoding as states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactoredAction {
    pub values: Vec<u16>,
}

impl FactoredAction {
    pub fn new(values: Vec<u16>) -> Self {
        Self { values }
    }

    pub fn value(&self, vars: &Vars, name: &str) -> Result<i64> {
        let id = vars.lookup(name)?;
        debug_assert_eq!(id.kind, VarKind::Action);
        Ok(vars.spec(id).domain[self.values[id.index] as usize])
    }
}

impl fmt::Display for FactoredState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_domain() {
        assert!(VariableSpec::new("x", VarKind::State, vec![]).is_err());
    }

    #[test]
    fn rejects_duplicate_values() {
        assert!(VariableSpec::new("x", VarKind::State, vec![1, 1]).is_err());
    }

    #[test]
    fn rejects_duplicate_names() {
        let a = VariableSpec::state_bool("x");
        let b = VariableSpec::state_bool("x");
        assert!(Vars::new(vec![a, b], vec![]).is_err());
    }

    #[test]
    fn lookup_and_value_roundtrip() {
        let vars = Vars::new(
            vec![VariableSpec::new("pos", VarKind::State, vec![3, 5, 9]).unwrap()],
            vec![VariableSpec::action_range("move", 4)],
        )
        .unwrap();
        let s = FactoredState::from_values(&vars, &[("pos", 5)]).unwrap();
        assert_eq!(s.values, vec![1]);
        assert_eq!(s.value(&vars, "pos").unwrap(), 5);
        assert!(FactoredState::from_values(&vars, &[("pos", 4)]).is_err());
    }
}
