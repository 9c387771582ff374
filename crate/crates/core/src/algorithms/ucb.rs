//! Structure-blind UCB1 baseline.

use super::{Agent, AgentSnapshot, Algorithm, Stats};
use crate::error::Result;
use crate::gaps::{ArmSet, ModelSubset, RewardKind};

pub struct Ucb1Agent {
    alpha: f64,
    stats: Stats,
    step: u64,
}

impl Ucb1Agent {
    pub fn new(arm_count: usize, alpha: f64, reward: RewardKind) -> Self {
        Self {
            alpha,
            stats: Stats::new(arm_count, reward),
            step: 0,
        }
    }

    /// `mu_hat + sqrt(alpha ln t / T)`.
    pub fn index(&self, arm: usize, t: u64) -> f64 {
        self.stats.mean(arm) + (self.alpha * (t as f64).ln() / self.stats.counts[arm] as f64).sqrt()
    }
}

impl Agent for Ucb1Agent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ucb
    }

    fn arm_count(&self) -> usize {
        self.stats.counts.len()
    }

    fn select(&mut self) -> usize {
        if let Some(arm) = self.stats.pending {
            return arm;
        }
        self.step += 1;
        let t = self.step;
        let arm = match self.stats.counts.iter().position(|&c| c == 0) {
            Some(arm) => arm,
            None => {
                let mut best = 0;
                let mut best_index = self.index(0, t);
                for arm in 1..self.arm_count() {
                    let value = self.index(arm, t);
                    if value > best_index {
                        best = arm;
                        best_index = value;
                    }
                }
                best
            }
        };
        self.stats.pending = Some(arm);
        arm
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.stats.record(arm, reward)
    }

    fn snapshot(&self) -> AgentSnapshot {
        let arms = self.arm_count();
        AgentSnapshot {
            pull_counts: self.stats.counts.clone(),
            reward_sums: self.stats.sums.clone(),
            active_models: ModelSubset::new(),
            active_arms: (0..arms).collect::<ArmSet>(),
            phase: 0,
            removal_threshold: 0.0,
            period: 0,
            period_horizon: 0,
            period_start_counts: vec![0; arms],
            last_active_phase: vec![None; arms],
            fallback_arm: None,
        }
    }
}
