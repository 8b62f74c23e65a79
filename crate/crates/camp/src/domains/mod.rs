//! Benchmark domains: a maze-style gridworld with stochastically moving
//! obstacles, and a deterministic dinner-making domain.

pub mod dinner;
pub mod gridworld;

pub use dinner::{
    dinner_bind, dinner_build, dinner_context_config, dinner_sample_task, dinner_state_features,
    DinnerConfig, DinnerTask, MEAL_PLAN_LENGTHS,
};
pub use gridworld::{
    gridworld_bind, gridworld_context_config, gridworld_sample_manifest, gridworld_sample_task,
    gridworld_state_features, GridLayout, GridManifest, GridTask, GridworldConfig,
};
