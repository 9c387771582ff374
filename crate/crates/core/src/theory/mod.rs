//! Deterministic elimination sequences and closed-form regret bounds.

mod bounds;
mod sequences;

pub use bounds::{
    asae_bound, asae_constant_bound, confidence_failure_bound, constant_regret_horizon,
    lower_bound_cr, lower_bound_log_argument, lower_bound_term, omega, sae_bound, sucb_bound,
    ucb_reference_bound, ArmTerm, BoundReport,
};
pub use sequences::{deterministic_sequences, k_beta, phase_cap, TheorySequences};
