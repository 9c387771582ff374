//! Structured multi-armed bandits over finite model sets: gap quantities,
//! elimination and optimistic agents, closed-form bounds, structure builders
//! and a seeded experiment harness.

pub mod algorithms;
pub mod error;
pub mod gaps;
pub mod simulation;
pub mod structures;
pub mod suite;
pub mod theory;

pub use error::{Error, Result};
