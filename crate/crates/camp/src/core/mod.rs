//! Factored state/action spaces, tasks, trajectories, and the
//! reward-vs-compute objective.

mod mdp;
mod objective;
mod rollout;
mod task;
mod vars;

pub use mdp::{FactoredMdp, MdpBuilder, TransitionFn};
pub use objective::{evaluate_objective, CostChannel, EXPANSION_SECONDS};
pub use rollout::{rollout, Policy, PolicyStep};
pub use task::{Step, Task, Trajectory};
pub use vars::{FactoredAction, FactoredState, VarId, VarKind, VariableSpec, Vars};
