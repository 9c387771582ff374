use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Agent, Algorithm, PhaseRecord};
use crate::error::{Error, Result};
use crate::gaps::{RewardKind, Structure};

/// Draws rewards of the structure's true model.
pub struct Environment {
    structure: Arc<Structure>,
    rng: ChaCha8Rng,
    seed: u64,
    gaps: Vec<f64>,
}

impl Environment {
    pub fn new(structure: Arc<Structure>, seed: u64) -> Result<Self> {
        structure.reward().validate()?;
        let truth = structure.true_model();
        let gaps = truth
            .means()
            .iter()
            .map(|&m| truth.optimal_value() - m)
            .collect();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            structure,
            seed,
            gaps,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn arm_count(&self) -> usize {
        self.structure.arm_count()
    }

    /// Sub-optimality of `arm` under the true model.
    pub fn gap(&self, arm: usize) -> f64 {
        self.gaps[arm]
    }

    pub fn pull(&mut self, arm: usize) -> f64 {
        let mean = self.structure.true_model().mean(arm);
        match self.structure.reward() {
            RewardKind::Bernoulli => {
                if self.rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardKind::Gaussian { variance } => Normal::new(mean, variance.sqrt())
                .expect("variance validated at construction")
                .sample(&mut self.rng),
        }
    }
}

/// One seeded trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    /// Cumulative pseudo-regret at each checkpoint.
    pub regret: Vec<f64>,
    pub pulls: Vec<u64>,
    pub elapsed_secs: f64,
    /// Full action sequence, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseRecord>>,
    /// Last phase each arm was active in, for phased agents.
    #[serde(default)]
    pub last_active_phase: Vec<Option<u32>>,
}

/// Runs `agent` for `horizon` steps, accumulating the true gaps of the pulled
/// arms and recording the running total at every checkpoint.
pub fn simulate(
    agent: &mut dyn Agent,
    env: &mut Environment,
    horizon: u64,
    checkpoints: &[u64],
    record_actions: bool,
) -> Result<RunResult> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if agent.arm_count() != env.arm_count() {
        return Err(Error::ArmCountMismatch {
            left: agent.arm_count(),
            right: env.arm_count(),
        });
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("checkpoints must be strictly increasing".into()));
    }
    if checkpoints.last().is_some_and(|&c| c > horizon) || checkpoints.first() == Some(&0) {
        return Err(Error::InvalidParameter(format!(
            "checkpoints must lie in 1..={horizon}"
        )));
    }
    let start = Instant::now();
    let mut regret = Vec::with_capacity(checkpoints.len());
    let mut pulls = vec![0u64; env.arm_count()];
    let mut actions = record_actions.then(|| Vec::with_capacity(horizon as usize));
    let mut total = 0.0;
    let mut next = 0;
    for t in 1..=horizon {
        let arm = agent.select();
        let reward = env.pull(arm);
        agent.observe(arm, reward)?;
        pulls[arm] += 1;
        total += env.gap(arm);
        if let Some(a) = actions.as_mut() {
            a.push(arm as u32);
        }
        if next < checkpoints.len() && checkpoints[next] == t {
            regret.push(total);
            next += 1;
        }
    }
    Ok(RunResult {
        algorithm: agent.algorithm(),
        seed: env.seed(),
        checkpoints: checkpoints.to_vec(),
        regret,
        pulls,
        elapsed_secs: start.elapsed().as_secs_f64(),
        actions,
        phases: agent.phase_log().map(<[PhaseRecord]>::to_vec),
        last_active_phase: agent.snapshot().last_active_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{build_agent, AgentConfig, AgentSnapshot};
    use crate::gaps::{ArmSet, ModelSubset};
    use crate::structures::build_figure_right;
    use approx::assert_abs_diff_eq;

    struct Fixed {
        arm: usize,
        arms: usize,
        pending: bool,
    }

    impl Agent for Fixed {
        fn algorithm(&self) -> Algorithm {
            Algorithm::Ucb
        }
        fn arm_count(&self) -> usize {
            self.arms
        }
        fn select(&mut self) -> usize {
            self.pending = true;
            self.arm
        }
        fn observe(&mut self, _: usize, _: f64) -> Result<()> {
            self.pending = false;
            Ok(())
        }
        fn snapshot(&self) -> AgentSnapshot {
            AgentSnapshot {
                pull_counts: vec![],
                reward_sums: vec![],
                active_models: ModelSubset::new(),
                active_arms: ArmSet::new(),
                phase: 0,
                removal_threshold: 0.0,
                period: 0,
                period_horizon: 0,
                period_start_counts: vec![],
                last_active_phase: vec![],
                fallback_arm: None,
            }
        }
    }

    #[test]
    fn fixed_arm_regret() {
        let s = Arc::new(build_figure_right());
        let mut env = Environment::new(s.clone(), 1).unwrap();
        let mut best = Fixed { arm: 0, arms: 4, pending: false };
        let r = simulate(&mut best, &mut env, 100, &[10, 100], false).unwrap();
        assert_eq!(r.regret, vec![0.0, 0.0]);
        let mut env = Environment::new(s, 1).unwrap();
        let mut bad = Fixed { arm: 2, arms: 4, pending: false };
        let r = simulate(&mut bad, &mut env, 100, &[100], false).unwrap();
        assert_abs_diff_eq!(r.regret[0], 20.0, epsilon = 1e-9);
        assert_eq!(r.pulls, vec![0, 0, 100, 0]);
    }

    #[test]
    fn argument_checks() {
        let s = Arc::new(build_figure_right());
        let mut env = Environment::new(s, 1).unwrap();
        let mut agent = Fixed { arm: 0, arms: 3, pending: false };
        assert!(matches!(
            simulate(&mut agent, &mut env, 10, &[10], false),
            Err(Error::ArmCountMismatch { .. })
        ));
        let mut agent = Fixed { arm: 0, arms: 4, pending: false };
        assert!(simulate(&mut agent, &mut env, 10, &[11], false).is_err());
        assert!(simulate(&mut agent, &mut env, 10, &[5, 5], false).is_err());
        assert!(simulate(&mut agent, &mut env, 0, &[], false).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let s = Arc::new(build_figure_right());
        let run = || {
            let config = AgentConfig::new(Algorithm::Sae).with_horizon(5000);
            let mut agent = build_agent(s.clone(), &config).unwrap();
            let mut env = Environment::new(s.clone(), 42).unwrap();
            let mut r = simulate(agent.as_mut(), &mut env, 5000, &[1000, 5000], true).unwrap();
            r.elapsed_secs = 0.0;
            r
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn action_log_reproduces_regret() {
        let s = Arc::new(build_figure_right());
        for algorithm in [Algorithm::Sae, Algorithm::Asae, Algorithm::Sucb, Algorithm::Ucb] {
            let config = AgentConfig::new(algorithm).with_horizon(1000);
            let mut agent = build_agent(s.clone(), &config).unwrap();
            let mut env = Environment::new(s.clone(), 7).unwrap();
            let checkpoints: Vec<u64> = (1..=10).map(|k| k * 100).collect();
            let r = simulate(agent.as_mut(), &mut env, 1000, &checkpoints, true).unwrap();
            let actions = r.actions.as_ref().unwrap();
            let truth = s.true_model();
            for (c, &value) in checkpoints.iter().zip(&r.regret) {
                let recomputed: f64 = actions[..*c as usize]
                    .iter()
                    .map(|&a| truth.optimal_value() - truth.mean(a as usize))
                    .sum();
                assert_abs_diff_eq!(recomputed, value, epsilon = 1e-9);
            }
            assert!(r.regret.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(r.pulls.iter().sum::<u64>(), 1000);
        }
    }
}
