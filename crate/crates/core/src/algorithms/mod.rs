//! Bandit agents behind a step-wise select/observe interface, and the
//! environment loop that drives them.

mod environment;
mod phased;
mod sucb;
mod ucb;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaps::{ArmSet, ModelSubset, Structure};

pub use environment::{simulate, Environment, RunResult};
pub use phased::{next_period_horizon, phase_target, PhaseRecord, PhasedAgent};
pub use sucb::SucbAgent;
pub use ucb::Ucb1Agent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sae,
    Asae,
    Sucb,
    Ucb,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Sae => "sae",
            Algorithm::Asae => "asae",
            Algorithm::Sucb => "sucb",
            Algorithm::Ucb => "ucb",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the anytime agent counts pulls against a phase target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetCounting {
    /// Pulls over the whole run, so surplus from earlier periods carries over.
    #[default]
    Total,
    /// Pulls made since the current period started.
    WithinPeriod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    /// Name used for output files and seeding; defaults to the algorithm's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Horizon used by the fixed-horizon elimination agent. Filled in from
    /// the experiment horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Multiplier on the optimistic agent's radius, e.g. a sub-Gaussian
    /// variance factor.
    #[serde(default = "default_variance")]
    pub variance_multiplier: f64,
    #[serde(default)]
    pub target_counting: TargetCounting,
    /// Keep a per-phase log of active arms and confidence sets.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub record_phases: bool,
}

fn default_alpha() -> f64 {
    2.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    1.0
}
fn default_variance() -> f64 {
    1.0
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            label: None,
            alpha: default_alpha(),
            beta: default_beta(),
            eta: default_eta(),
            horizon: None,
            variance_multiplier: default_variance(),
            target_counting: TargetCounting::Total,
            record_phases: false,
        }
    }

    pub fn name(&self) -> &str {
        self.label.as_deref().unwrap_or(self.algorithm.label())
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_phase_log(mut self) -> Self {
        self.record_phases = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return bad(format!("beta must be at least 1, got {}", self.beta));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.variance_multiplier > 0.0 && self.variance_multiplier.is_finite()) {
            return bad(format!(
                "variance_multiplier must be positive, got {}",
                self.variance_multiplier
            ));
        }
        if self.algorithm == Algorithm::Sae {
            match self.horizon {
                None => return bad("sae needs a horizon".to_string()),
                Some(0) => return bad("horizon must be at least 1".to_string()),
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Read-only view of an agent's internal state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSnapshot {
    pub pull_counts: Vec<u64>,
    pub reward_sums: Vec<f64>,
    pub active_models: ModelSubset,
    pub active_arms: ArmSet,
    pub phase: u32,
    pub removal_threshold: f64,
    pub period: u32,
    pub period_horizon: u64,
    pub period_start_counts: Vec<u64>,
    /// Last phase (of the current period) in which each arm was active.
    pub last_active_phase: Vec<Option<u32>>,
    /// Arm pulled unconditionally after the active set collapsed.
    pub fallback_arm: Option<usize>,
}

pub trait Agent: Send {
    fn algorithm(&self) -> Algorithm;

    fn arm_count(&self) -> usize;

    /// Next arm to pull. Calling it again before `observe` returns the same arm.
    fn select(&mut self) -> usize;

    /// Feeds back the reward of the arm returned by the last `select`.
    fn observe(&mut self, arm: usize, reward: f64) -> Result<()>;

    fn snapshot(&self) -> AgentSnapshot;

    fn phase_log(&self) -> Option<&[PhaseRecord]> {
        None
    }
}

pub fn build_agent(structure: Arc<Structure>, config: &AgentConfig) -> Result<Box<dyn Agent>> {
    config.validate()?;
    Ok(match config.algorithm {
        Algorithm::Sae | Algorithm::Asae => Box::new(PhasedAgent::new(structure, config)?),
        Algorithm::Sucb => Box::new(SucbAgent::new(structure, config)),
        Algorithm::Ucb => Box::new(Ucb1Agent::new(
            structure.arm_count(),
            config.alpha,
            structure.reward(),
        )),
    })
}

/// Shared statistics bookkeeping.
#[derive(Debug, Clone)]
pub(crate) struct Stats {
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
    pub pending: Option<usize>,
    pub reward_kind: crate::gaps::RewardKind,
}

impl Stats {
    pub fn new(arm_count: usize, reward_kind: crate::gaps::RewardKind) -> Self {
        Self {
            counts: vec![0; arm_count],
            sums: vec![0.0; arm_count],
            pending: None,
            reward_kind,
        }
    }

    pub fn record(&mut self, arm: usize, reward: f64) -> Result<()> {
        match self.pending {
            Some(expected) if expected == arm => {}
            Some(expected) => {
                return Err(Error::UnexpectedObservation {
                    got: arm,
                    expected: format!("arm {expected} was selected"),
                })
            }
            None => {
                return Err(Error::UnexpectedObservation {
                    got: arm,
                    expected: "no arm was selected".to_string(),
                })
            }
        }
        if !self.reward_kind.supports(reward) {
            return Err(Error::RewardOutOfSupport {
                reward,
                kind: self.reward_kind.name(),
            });
        }
        self.pending = None;
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.sums[arm] / self.counts[arm] as f64
    }

    /// Highest empirical mean among pulled arms (lowest index on ties); arm 0
    /// if nothing was pulled yet.
    pub fn empirical_best(&self) -> usize {
        let mut best: Option<usize> = None;
        for arm in 0..self.counts.len() {
            if self.counts[arm] == 0 {
                continue;
            }
            if best.is_none_or(|b| self.mean(arm) > self.mean(b)) {
                best = Some(arm);
            }
        }
        best.unwrap_or(0)
    }
}

/// Row-major copy of a structure's means with per-model optima, for the
/// inner loops of the structured agents.
#[derive(Debug, Clone)]
pub(crate) struct ModelTable {
    pub means: Vec<f64>,
    pub arms: usize,
    pub best: Vec<usize>,
    pub best_value: Vec<f64>,
}

impl ModelTable {
    pub fn new(structure: &Structure) -> Self {
        let arms = structure.arm_count();
        let models = structure.models();
        Self {
            means: models.iter().flat_map(|m| m.means().iter().copied()).collect(),
            arms,
            best: models.iter().map(|m| m.optimal_arm()).collect(),
            best_value: models.iter().map(|m| m.optimal_value()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.best.len()
    }

    #[inline]
    pub fn row(&self, model: usize) -> &[f64] {
        &self.means[model * self.arms..(model + 1) * self.arms]
    }

    /// Whether `model` lies within `radius[i]` of every pulled arm's mean.
    /// `radius[i]` is negative for arms that were never pulled.
    #[inline]
    pub fn consistent(&self, model: usize, empirical: &[f64], radius: &[f64]) -> bool {
        self.row(model)
            .iter()
            .zip(empirical.iter().zip(radius))
            .all(|(&mu, (&hat, &r))| r < 0.0 || (hat - mu).abs() < r)
    }
}
