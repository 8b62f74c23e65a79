//! Planning with context-specific abstractions of factored MDPs.
//!
//! The pipeline: discover approximate context-specific independences (CSIs)
//! for a space of candidate contexts, derive per-context relevant variables,
//! build abstract MDPs that project away irrelevant variables and route
//! context violations to an absorbing sink, and train a selector that maps
//! task features to the context whose abstraction best trades off reward
//! against planning compute.

pub mod abstraction;
pub mod contexts;
pub mod core;
pub mod csi;
pub mod domains;
pub mod error;
pub mod fixtures;
pub mod learner;
pub mod planners;
pub mod rng;
pub mod selector;

pub use error::{CampError, Result};
