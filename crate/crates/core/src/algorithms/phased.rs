//! Phased structured arm elimination, in a fixed-horizon and an anytime
//! (period-restarting, warm-started) flavour.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentConfig, AgentSnapshot, Algorithm, ModelTable, Stats, TargetCounting};
use crate::error::Result;
use crate::gaps::{ArmSet, ModelSubset, Structure};

/// Per-arm pull target of a phase with removal threshold `threshold`:
/// `ceil(alpha ln(n) (1 + 1/beta)^2 / threshold^2)`.
pub fn phase_target(alpha: f64, log_n: f64, beta: f64, threshold: f64) -> u64 {
    let margin = (1.0 + 1.0 / beta).powi(2);
    let raw = alpha * log_n * margin / (threshold * threshold);
    if raw >= u64::MAX as f64 {
        u64::MAX
    } else {
        raw.ceil() as u64
    }
}

/// `ceil(current^(1 + eta))`, saturating. Results within relative 1e-12 of
/// an integer are snapped to it so exact powers are not bumped by rounding.
pub fn next_period_horizon(current: u64, eta: f64) -> u64 {
    let raw = (current as f64).powf(1.0 + eta);
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return u64::MAX;
    }
    let rounded = raw.round();
    let next = if (raw - rounded).abs() <= 1e-12 * raw {
        rounded
    } else {
        raw.ceil()
    };
    (next as u64).max(current + 1)
}

/// One completed phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub period: u32,
    pub phase: u32,
    pub target: u64,
    /// Active arms during the phase.
    pub active: ArmSet,
    /// Confidence set computed at the end of the phase.
    pub confidence: ModelSubset,
}

pub struct PhasedAgent {
    algorithm: Algorithm,
    table: ModelTable,
    alpha: f64,
    beta: f64,
    eta: f64,
    counting: TargetCounting,
    stats: Stats,
    log_n: f64,
    confidence: Vec<bool>,
    active: Vec<usize>,
    phase: u32,
    threshold: f64,
    target: u64,
    cursor: usize,
    last_active_phase: Vec<Option<u32>>,
    fallback: Option<usize>,
    period: u32,
    period_horizon: u64,
    period_steps: u64,
    period_start: Vec<u64>,
    log: Option<Vec<PhaseRecord>>,
    radius: Vec<f64>,
    empirical: Vec<f64>,
}

impl PhasedAgent {
    pub fn new(structure: Arc<Structure>, config: &AgentConfig) -> Result<Self> {
        config.validate()?;
        let anytime = config.algorithm == Algorithm::Asae;
        let horizon = if anytime { 2 } else { config.horizon.unwrap_or(2) };
        let arms = structure.arm_count();
        let table = ModelTable::new(&structure);
        let mut agent = Self {
            algorithm: if anytime { Algorithm::Asae } else { Algorithm::Sae },
            confidence: vec![true; table.len()],
            table,
            alpha: config.alpha,
            beta: config.beta,
            eta: config.eta,
            counting: config.target_counting,
            stats: Stats::new(arms, structure.reward()),
            log_n: (horizon as f64).ln(),
            active: Vec::new(),
            phase: 0,
            threshold: 1.0,
            target: 0,
            cursor: 0,
            last_active_phase: vec![None; arms],
            fallback: None,
            period: 0,
            period_horizon: horizon,
            period_steps: 0,
            period_start: vec![0; arms],
            log: config.record_phases.then(Vec::new),
            radius: vec![-1.0; arms],
            empirical: vec![0.0; arms],
        };
        agent.active = agent.optimal_arms_of_confidence();
        agent.begin_phase();
        Ok(agent)
    }

    fn anytime(&self) -> bool {
        self.algorithm == Algorithm::Asae
    }

    fn optimal_arms_of_confidence(&self) -> Vec<usize> {
        let mut seen = vec![false; self.table.arms];
        for (m, _) in self.confidence.iter().enumerate().filter(|(_, &c)| c) {
            seen[self.table.best[m]] = true;
        }
        (0..self.table.arms).filter(|&a| seen[a]).collect()
    }

    fn begin_phase(&mut self) {
        self.target = phase_target(self.alpha, self.log_n, self.beta, self.threshold);
        self.cursor = 0;
        for &arm in &self.active {
            self.last_active_phase[arm] = Some(self.phase);
        }
    }

    fn effective_count(&self, arm: usize) -> u64 {
        match self.counting {
            TargetCounting::Total => self.stats.counts[arm],
            TargetCounting::WithinPeriod => self.stats.counts[arm] - self.period_start[arm],
        }
    }

    fn next_round_robin(&mut self) -> Option<usize> {
        let len = self.active.len();
        for offset in 0..len {
            let pos = (self.cursor + offset) % len;
            let arm = self.active[pos];
            if self.effective_count(arm) < self.target {
                self.cursor = pos + 1;
                return Some(arm);
            }
        }
        None
    }

    fn end_phase(&mut self) {
        for arm in 0..self.table.arms {
            let n = self.stats.counts[arm];
            if n == 0 {
                self.radius[arm] = -1.0;
            } else {
                self.radius[arm] = (self.alpha * self.log_n / n as f64).sqrt();
                self.empirical[arm] = self.stats.mean(arm);
            }
        }
        for m in 0..self.table.len() {
            self.confidence[m] = self.table.consistent(m, &self.empirical, &self.radius);
        }
        let allowed = self.optimal_arms_of_confidence();
        let next: Vec<usize> = self
            .active
            .iter()
            .copied()
            .filter(|a| allowed.binary_search(a).is_ok())
            .collect();
        if let Some(log) = self.log.as_mut() {
            log.push(PhaseRecord {
                period: self.period,
                phase: self.phase,
                target: self.target,
                active: self.active.iter().copied().collect(),
                confidence: ModelSubset::from_mask(&self.confidence),
            });
        }
        if next.is_empty() {
            // A lone survivor stays; a collapse from several arms means the
            // confidence set no longer explains the data.
            if self.active.len() > 1 {
                self.fallback = Some(self.stats.empirical_best());
            }
        } else {
            self.active = next;
        }
        self.phase += 1;
        self.threshold /= 2.0;
        self.begin_phase();
    }

    fn begin_period(&mut self) {
        self.period += 1;
        self.period_horizon = next_period_horizon(self.period_horizon, self.eta);
        self.log_n = (self.period_horizon as f64).ln();
        self.period_steps = 0;
        self.period_start.clone_from(&self.stats.counts);
        self.fallback = None;
        if !self.confidence.iter().any(|&c| c) {
            self.confidence.iter_mut().for_each(|c| *c = true);
        }
        self.active = self.optimal_arms_of_confidence();
        self.last_active_phase.iter_mut().for_each(|p| *p = None);
        self.phase = 0;
        self.threshold = 1.0;
        self.begin_phase();
    }

    pub fn period_horizon(&self) -> u64 {
        self.period_horizon
    }
}

impl Agent for PhasedAgent {
    fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    fn arm_count(&self) -> usize {
        self.table.arms
    }

    fn select(&mut self) -> usize {
        if let Some(arm) = self.stats.pending {
            return arm;
        }
        if self.anytime() && self.period_steps >= self.period_horizon {
            self.begin_period();
        }
        let arm = loop {
            if let Some(arm) = self.fallback {
                break arm;
            }
            if let Some(arm) = self.next_round_robin() {
                break arm;
            }
            self.end_phase();
        };
        self.period_steps += 1;
        self.stats.pending = Some(arm);
        arm
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.stats.record(arm, reward)
    }

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            pull_counts: self.stats.counts.clone(),
            reward_sums: self.stats.sums.clone(),
            active_models: ModelSubset::from_mask(&self.confidence),
            active_arms: self.active.iter().copied().collect(),
            phase: self.phase,
            removal_threshold: self.threshold,
            period: self.period,
            period_horizon: self.period_horizon,
            period_start_counts: self.period_start.clone(),
            last_active_phase: self.last_active_phase.clone(),
            fallback_arm: self.fallback,
        }
    }

    fn phase_log(&self) -> Option<&[PhaseRecord]> {
        self.log.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{build_agent, AgentConfig};
    use crate::gaps::RewardKind;
    use crate::structures::build_figure_right;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn targets() {
        assert_eq!(phase_target(2.0, 10_000f64.ln(), 1.0, 1.0), 74);
        assert_eq!((1.0f64 + 1.0 / 1.0).powi(2), 4.0);
        assert_eq!(phase_target(2.0, 10_000f64.ln(), 1.0, 0.5), 295);
    }

    #[test]
    fn period_horizons() {
        let mut n = 2;
        let mut seen = vec![n];
        for _ in 0..4 {
            n = next_period_horizon(n, 1.0);
            seen.push(n);
        }
        assert_eq!(seen, vec![2, 4, 16, 256, 65536]);
        assert_eq!(next_period_horizon(65536, 1.0), 1 << 32);
        assert_eq!(next_period_horizon(1 << 32, 1.0), u64::MAX);
        assert_eq!(next_period_horizon(2, 0.1), 3);
        assert_eq!(next_period_horizon(2, 0.01), 3);
    }

    #[test]
    fn first_pull_is_lowest_optimal_arm() {
        // Arm 0 is optimal nowhere, so the first pull goes to arm 1.
        let s = Structure::from_means(
            vec![vec![0.1, 0.5, 0.3], vec![0.1, 0.3, 0.6]],
            0,
            RewardKind::Bernoulli,
        )
        .unwrap();
        let s = Arc::new(s);
        for algorithm in [Algorithm::Sae, Algorithm::Asae] {
            let mut agent = build_agent(s.clone(), &AgentConfig::new(algorithm).with_horizon(100)).unwrap();
            assert_eq!(agent.select(), 1);
        }
    }

    #[test]
    fn single_optimal_arm_is_pulled_forever() {
        let s = Arc::new(
            Structure::from_means(vec![vec![0.9, 0.2], vec![0.7, 0.1]], 0, RewardKind::Bernoulli).unwrap(),
        );
        let mut agent = PhasedAgent::new(s, &AgentConfig::new(Algorithm::Sae).with_horizon(1000)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let arm = agent.select();
            assert_eq!(arm, 0);
            agent.observe(arm, bernoulli(&mut rng, 0.9)).unwrap();
        }
    }

    #[test]
    fn round_robin_is_fair_within_phases() {
        let s = Arc::new(build_figure_right());
        let config = AgentConfig::new(Algorithm::Sae).with_horizon(20_000);
        let mut agent = PhasedAgent::new(s.clone(), &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut phase = agent.phase;
        let mut start = agent.stats.counts.clone();
        let mut previous_active = agent.active.clone();
        for _ in 0..20_000 {
            let arm = agent.select();
            if agent.phase != phase {
                assert!(agent.active.iter().all(|a| previous_active.contains(a)));
                phase = agent.phase;
                start = agent.stats.counts.clone();
                previous_active = agent.active.clone();
            }
            agent.observe(arm, bernoulli(&mut rng, s.true_model().mean(arm))).unwrap();
            let within: Vec<u64> = agent
                .active
                .iter()
                .filter(|&&a| start[a] < agent.target)
                .map(|&a| agent.stats.counts[a] - start[a])
                .collect();
            if let (Some(max), Some(min)) = (within.iter().max(), within.iter().min()) {
                assert!(max - min <= 1, "phase {phase}: {within:?}");
            }
        }
    }

    #[test]
    fn anytime_warm_start_is_contained() {
        let s = Arc::new(build_figure_right());
        let config = AgentConfig::new(Algorithm::Asae).with_eta(1.0).with_phase_log();
        let mut agent = PhasedAgent::new(s.clone(), &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..70_000 {
            let arm = agent.select();
            agent.observe(arm, bernoulli(&mut rng, s.true_model().mean(arm))).unwrap();
        }
        // Periods of 2, 4, 16, 256 and 65536 steps cover 65814 steps.
        assert_eq!(agent.period, 5);
        assert_eq!(agent.period_horizon, 1 << 32);
        let log = agent.log.as_ref().unwrap();
        let mut horizon = 2;
        for k in 1..=5u32 {
            horizon = next_period_horizon(horizon, 1.0);
            // Short periods can end before their first phase does.
            let Some(first) = log.iter().position(|r| r.period == k) else {
                continue;
            };
            let head = &log[first];
            // Every period restarts at phase 0 with threshold 1.
            assert_eq!(head.phase, 0);
            assert_eq!(head.target, phase_target(2.0, (horizon as f64).ln(), 1.0, 1.0));
            // The confidence set only changes at phase ends, so the last
            // earlier record holds the warm start.
            let previous = match first {
                0 => s.all_models(),
                _ => log[first - 1].confidence.clone(),
            };
            if !previous.is_empty() {
                let warm: ArmSet = previous
                    .iter()
                    .map(|m| s.model(m).optimal_arm())
                    .collect();
                assert!(head.active.is_subset(&warm), "period {k}");
            }
        }
    }

    #[test]
    fn within_period_counting_restarts_targets() {
        let s = Arc::new(build_figure_right());
        let mut config = AgentConfig::new(Algorithm::Asae).with_eta(1.0);
        config.target_counting = TargetCounting::WithinPeriod;
        let mut agent = PhasedAgent::new(s.clone(), &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2 + 4 {
            let arm = agent.select();
            agent.observe(arm, bernoulli(&mut rng, s.true_model().mean(arm))).unwrap();
        }
        // Period 2 starts on the next select and must pull again from scratch.
        agent.select();
        assert_eq!(agent.period, 2);
        assert!(agent.effective_count(agent.stats.pending.unwrap()) == 0);
    }
}
