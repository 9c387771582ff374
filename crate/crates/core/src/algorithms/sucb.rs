//! Optimistic structured UCB: pull the optimal arm of the most optimistic
//! model still consistent with the data.

use std::sync::Arc;

use super::{Agent, AgentConfig, AgentSnapshot, Algorithm, ModelTable, Stats};
use crate::error::Result;
use crate::gaps::{ArmSet, ModelSubset, Structure};

pub struct SucbAgent {
    table: ModelTable,
    /// Models by decreasing optimal value, ties by increasing optimal arm.
    order: Vec<usize>,
    scale: f64,
    stats: Stats,
    step: u64,
    radius: Vec<f64>,
    empirical: Vec<f64>,
}

impl SucbAgent {
    pub fn new(structure: Arc<Structure>, config: &AgentConfig) -> Self {
        let table = ModelTable::new(&structure);
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.sort_by(|&a, &b| {
            table.best_value[b]
                .total_cmp(&table.best_value[a])
                .then(table.best[a].cmp(&table.best[b]))
                .then(a.cmp(&b))
        });
        let arms = structure.arm_count();
        Self {
            table,
            order,
            scale: config.alpha * config.variance_multiplier,
            stats: Stats::new(arms, structure.reward()),
            step: 0,
            radius: vec![-1.0; arms],
            empirical: vec![0.0; arms],
        }
    }

    /// Radii for step `t`: `sqrt(alpha * var * ln(max(t, 2)) / T_i)`.
    fn refresh(&mut self, t: u64) {
        let log_t = (t.max(2) as f64).ln();
        for arm in 0..self.table.arms {
            let n = self.stats.counts[arm];
            if n == 0 {
                self.radius[arm] = -1.0;
            } else {
                self.radius[arm] = (self.scale * log_t / n as f64).sqrt();
                self.empirical[arm] = self.stats.mean(arm);
            }
        }
    }

    fn optimistic_arm(&self) -> Option<usize> {
        self.order
            .iter()
            .find(|&&m| self.table.consistent(m, &self.empirical, &self.radius))
            .map(|&m| self.table.best[m])
    }
}

impl Agent for SucbAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Sucb
    }

    fn arm_count(&self) -> usize {
        self.table.arms
    }

    fn select(&mut self) -> usize {
        if let Some(arm) = self.stats.pending {
            return arm;
        }
        self.step += 1;
        self.refresh(self.step);
        let arm = self
            .optimistic_arm()
            .unwrap_or_else(|| self.stats.empirical_best());
        self.stats.pending = Some(arm);
        arm
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.stats.record(arm, reward)
    }

    fn snapshot(&self) -> AgentSnapshot {
        let mask: Vec<bool> = (0..self.table.len())
            .map(|m| self.table.consistent(m, &self.empirical, &self.radius))
            .collect();
        let models = ModelSubset::from_mask(&mask);
        let arms: ArmSet = models.iter().map(|m| self.table.best[m]).collect();
        AgentSnapshot {
            pull_counts: self.stats.counts.clone(),
            reward_sums: self.stats.sums.clone(),
            active_models: models,
            active_arms: arms,
            phase: 0,
            removal_threshold: 0.0,
            period: 0,
            period_horizon: 0,
            period_start_counts: vec![0; self.table.arms],
            last_active_phase: vec![None; self.table.arms],
            fallback_arm: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaps::RewardKind;
    use crate::structures::build_figure_right;

    #[test]
    fn first_pull_is_most_optimistic_arm() {
        let s = Arc::new(build_figure_right());
        let mut agent = SucbAgent::new(s, &AgentConfig::new(Algorithm::Sucb));
        assert_eq!(agent.select(), 1);
    }

    #[test]
    fn singleton_structure_pulls_its_optimum() {
        let s = Arc::new(Structure::from_means(vec![vec![0.2, 0.7]], 0, RewardKind::Bernoulli).unwrap());
        let mut agent = SucbAgent::new(s, &AgentConfig::new(Algorithm::Sucb));
        for i in 0..50 {
            let arm = agent.select();
            assert_eq!(arm, 1);
            agent.observe(arm, (i % 2) as f64).unwrap();
        }
    }

    #[test]
    fn equal_optimistic_values_break_to_lowest_arm() {
        let s = Arc::new(
            Structure::from_means(
                vec![vec![0.5, 0.1, 0.3], vec![0.1, 0.2, 0.9], vec![0.1, 0.9, 0.2]],
                0,
                RewardKind::Bernoulli,
            )
            .unwrap(),
        );
        let mut agent = SucbAgent::new(s, &AgentConfig::new(Algorithm::Sucb));
        assert_eq!(agent.select(), 1);
    }

    #[test]
    fn empty_confidence_set_falls_back_to_empirical_best() {
        // Rewards of 1 from arm 0 contradict both models once the radius shrinks.
        let s = Arc::new(
            Structure::from_means(vec![vec![0.3, 0.2], vec![0.1, 0.4]], 0, RewardKind::Bernoulli).unwrap(),
        );
        let mut agent = SucbAgent::new(s, &AgentConfig::new(Algorithm::Sucb));
        for _ in 0..200 {
            let arm = agent.select();
            let reward = if arm == 0 { 1.0 } else { 0.0 };
            agent.observe(arm, reward).unwrap();
        }
        agent.refresh(agent.step + 1);
        assert!(agent.optimistic_arm().is_none());
        assert_eq!(agent.select(), 0);
    }
}
