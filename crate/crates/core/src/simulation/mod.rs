//! Seeded batch experiments: parallel independent runs, checkpointed regret,
//! Student-t aggregation and CSV/manifest output.

mod output;
mod stats;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{build_agent, simulate, AgentConfig, Algorithm, Environment, RunResult};
use crate::error::{Error, Result};
use crate::gaps::Structure;
use crate::structures::{
    build_figure_left, build_figure_right_with, generate_random, load, GeneratorSpec,
    DEFAULT_GRID, FIGURE_RIGHT_ARM2_REGION4,
};

pub use output::{read_regret_csv, write_outputs, Manifest};
pub use stats::{ln_gamma, regularized_beta, student_t_cdf, student_t_quantile, t_interval};

/// 64-bit seed derived from a base seed, a label and a run index: FNV-1a over
/// the little-endian bytes, finished with the SplitMix64 mixer. Fixed forever;
/// changing it changes every published result.
pub fn stable_seed(base: u64, label: &str, run: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let bytes = base
        .to_le_bytes()
        .into_iter()
        .chain(label.bytes())
        .chain([0xff])
        .chain(run.to_le_bytes());
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case")]
pub enum StructureSource {
    FigureLeft {
        #[serde(default = "default_grid")]
        grid_per_region: usize,
        #[serde(default = "default_true")]
        informative_arm2: bool,
    },
    FigureRight {
        #[serde(default = "default_region4")]
        arm2_region4: f64,
    },
    Random {
        #[serde(default)]
        spec: GeneratorSpec,
        /// Draw a new structure for every run instead of reusing `spec.seed`.
        #[serde(default = "default_true")]
        fresh_per_run: bool,
    },
    File {
        path: PathBuf,
    },
}

fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_true() -> bool {
    true
}
fn default_region4() -> f64 {
    FIGURE_RIGHT_ARM2_REGION4
}

impl StructureSource {
    /// Whether every run shares one structure.
    pub fn is_fixed(&self) -> bool {
        !matches!(self, StructureSource::Random { fresh_per_run: true, .. })
    }

    /// The structure for run `run`. Relative file paths resolve against `base_dir`.
    pub fn build(&self, base_seed: u64, run: u64, base_dir: &Path) -> Result<Structure> {
        match self {
            StructureSource::FigureLeft { grid_per_region, informative_arm2 } => {
                build_figure_left(*grid_per_region, *informative_arm2)
            }
            StructureSource::FigureRight { arm2_region4 } => build_figure_right_with(*arm2_region4),
            StructureSource::Random { spec, fresh_per_run } => {
                let mut spec = *spec;
                if *fresh_per_run {
                    spec.seed = stable_seed(base_seed ^ spec.seed, "structure", run);
                }
                generate_random(&spec)
            }
            StructureSource::File { path } => load(base_dir.join(path)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSchedule {
    Geometric { geometric: usize },
    List(Vec<u64>),
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        CheckpointSchedule::Geometric { geometric: 200 }
    }
}

impl CheckpointSchedule {
    /// Strictly increasing steps in `1..=horizon`, always ending at `horizon`.
    pub fn resolve(&self, horizon: u64) -> Result<Vec<u64>> {
        let mut points = match self {
            CheckpointSchedule::Geometric { geometric } => {
                let m = (*geometric).max(2);
                let ln_n = (horizon as f64).ln();
                (0..m)
                    .map(|k| ((ln_n * k as f64 / (m - 1) as f64).exp().round() as u64).clamp(1, horizon))
                    .collect::<Vec<_>>()
            }
            CheckpointSchedule::List(list) => {
                if list.iter().any(|&c| c == 0 || c > horizon) {
                    return Err(Error::InvalidParameter(format!(
                        "checkpoints must lie in 1..={horizon}"
                    )));
                }
                list.clone()
            }
        };
        points.push(horizon);
        points.sort_unstable();
        points.dedup();
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub structure: StructureSource,
    pub algorithms: Vec<AgentConfig>,
    pub horizon: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub checkpoints: CheckpointSchedule,
    #[serde(default = "default_level")]
    pub confidence_level: f64,
    /// Keep full action logs (small horizons only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub audit: bool,
}

fn default_runs() -> usize {
    100
}
fn default_level() -> f64 {
    0.95
}

impl ExperimentConfig {
    pub fn new(name: &str, structure: StructureSource, horizon: u64, runs: usize) -> Self {
        Self {
            name: name.to_string(),
            structure,
            algorithms: Vec::new(),
            horizon,
            runs,
            base_seed: 0,
            checkpoints: CheckpointSchedule::default(),
            confidence_level: default_level(),
            audit: false,
        }
    }

    pub fn with_algorithm(mut self, config: AgentConfig) -> Self {
        self.algorithms.push(config);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::InvalidParameter(format!(
                "at least 2 runs are needed for intervals, got {}",
                self.runs
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms configured".into()));
        }
        if !(self.confidence_level > 0.5 && self.confidence_level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level must lie in (0.5, 1), got {}",
                self.confidence_level
            )));
        }
        let mut names = HashSet::new();
        for config in &self.resolved_algorithms() {
            config.validate()?;
            if !names.insert(config.name().to_string()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate algorithm label {:?}",
                    config.name()
                )));
            }
        }
        self.checkpoints.resolve(self.horizon)?;
        Ok(())
    }

    /// Agent configs with the fixed-horizon agent's horizon filled in.
    pub fn resolved_algorithms(&self) -> Vec<AgentConfig> {
        self.algorithms
            .iter()
            .map(|c| {
                let mut c = c.clone();
                if c.algorithm == Algorithm::Sae && c.horizon.is_none() {
                    c.horizon = Some(self.horizon);
                }
                c
            })
            .collect()
    }
}

/// Batch statistics of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub label: String,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub degrees_of_freedom: usize,
    pub checkpoints: Vec<u64>,
    pub mean_regret: Vec<f64>,
    pub regret_half_width: Vec<f64>,
    pub mean_pulls: Vec<f64>,
    pub pulls_half_width: Vec<f64>,
}

impl AggregateResult {
    pub fn final_regret(&self) -> (f64, f64) {
        let last = self.mean_regret.len() - 1;
        (self.mean_regret[last], self.regret_half_width[last])
    }

    /// Whether this algorithm's final 95% interval lies strictly below `other`'s.
    pub fn separated_below(&self, other: &AggregateResult) -> bool {
        let (a, ha) = self.final_regret();
        let (b, hb) = other.final_regret();
        a + ha < b - hb
    }
}

pub fn aggregate(label: &str, runs: &[RunResult], level: f64) -> Result<AggregateResult> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidParameter("no runs to aggregate".into()))?;
    let column = |f: &dyn Fn(&RunResult) -> f64| -> Result<(f64, f64)> {
        let samples: Vec<f64> = runs.iter().map(f).collect();
        t_interval(&samples, level)
    };
    let mut mean_regret = Vec::new();
    let mut regret_half_width = Vec::new();
    for c in 0..first.checkpoints.len() {
        let (m, h) = column(&|r| r.regret[c])?;
        mean_regret.push(m);
        regret_half_width.push(h);
    }
    let mut mean_pulls = Vec::new();
    let mut pulls_half_width = Vec::new();
    for arm in 0..first.pulls.len() {
        let (m, h) = column(&|r| r.pulls[arm] as f64)?;
        mean_pulls.push(m);
        pulls_half_width.push(h);
    }
    Ok(AggregateResult {
        label: label.to_string(),
        algorithm: first.algorithm,
        runs: runs.len(),
        degrees_of_freedom: runs.len() - 1,
        checkpoints: first.checkpoints.clone(),
        mean_regret,
        regret_half_width,
        mean_pulls,
        pulls_half_width,
    })
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub config: ExperimentConfig,
    pub aggregates: Vec<AggregateResult>,
    /// Raw runs per algorithm, in run-index order.
    pub runs: Vec<Vec<RunResult>>,
    pub seeds: Vec<Vec<u64>>,
    /// Provenance of the shared structure, when all runs use one.
    pub structure: Option<Structure>,
}

impl BatchResult {
    pub fn get(&self, label: &str) -> Option<(&AggregateResult, &[RunResult])> {
        self.aggregates
            .iter()
            .position(|a| a.label == label)
            .map(|i| (&self.aggregates[i], self.runs[i].as_slice()))
    }
}

/// Runs every configured algorithm `runs` times. Run `r` of algorithm `a`
/// uses seed `stable_seed(base_seed, a, r)`; results do not depend on the
/// worker count. `workers = None` uses rayon's default pool size.
pub fn run_batch(config: &ExperimentConfig, workers: Option<usize>, base_dir: &Path) -> Result<BatchResult> {
    config.validate()?;
    let checkpoints = config.checkpoints.resolve(config.horizon)?;
    let algorithms = config.resolved_algorithms();
    let shared = if config.structure.is_fixed() {
        Some(Arc::new(config.structure.build(config.base_seed, 0, base_dir)?))
    } else {
        None
    };

    let jobs: Vec<(usize, u64)> = (0..algorithms.len())
        .flat_map(|a| (0..config.runs as u64).map(move |r| (a, r)))
        .collect();
    let run_job = |&(a, r): &(usize, u64)| -> Result<RunResult> {
        let agent_config = &algorithms[a];
        let seed = stable_seed(config.base_seed, agent_config.name(), r);
        let wrap = |e: Error| Error::RunFailed {
            algorithm: agent_config.name().to_string(),
            seed,
            source: Box::new(e),
        };
        let structure = match &shared {
            Some(s) => s.clone(),
            None => Arc::new(config.structure.build(config.base_seed, r, base_dir).map_err(wrap)?),
        };
        let mut agent = build_agent(structure.clone(), agent_config).map_err(wrap)?;
        let mut env = Environment::new(structure, seed).map_err(wrap)?;
        simulate(agent.as_mut(), &mut env, config.horizon, &checkpoints, config.audit).map_err(wrap)
    };

    let results: Vec<Result<RunResult>> = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(run_job).collect())
        }
        None => jobs.par_iter().map(run_job).collect(),
    };

    let mut runs: Vec<Vec<RunResult>> = vec![Vec::with_capacity(config.runs); algorithms.len()];
    for ((a, _), result) in jobs.iter().zip(results) {
        runs[*a].push(result?);
    }
    let seeds = algorithms
        .iter()
        .map(|c| (0..config.runs as u64).map(|r| stable_seed(config.base_seed, c.name(), r)).collect())
        .collect();
    let aggregates = algorithms
        .iter()
        .zip(&runs)
        .map(|(c, r)| aggregate(c.name(), r, config.confidence_level))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchResult {
        config: config.clone(),
        aggregates,
        runs,
        seeds,
        structure: shared.map(|s| (*s).clone()),
    })
}
