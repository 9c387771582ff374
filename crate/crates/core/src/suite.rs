//! The reference experiment suite: the four regret experiments on the
//! hand-coded and randomized structures plus the pull-count tables, with the
//! orderings they are expected to show.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{phase_target, AgentConfig, Algorithm};
use crate::error::{Error, Result};
use crate::simulation::{run_batch, write_outputs, BatchResult, ExperimentConfig, StructureSource};
use crate::structures::{GeneratorSpec, DEFAULT_GRID, FIGURE_RIGHT_ARM2_REGION4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// The right-structure experiment uses 25 runs instead of 100.
    Desk,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::InvalidParameter(format!(
                "unknown scale {other:?} (expected desk or full)"
            ))),
        }
    }
}

/// The four algorithms with α = 2 everywhere, β = 1 for the phased ones.
pub fn standard_algorithms(eta: f64) -> Vec<AgentConfig> {
    vec![
        AgentConfig::new(Algorithm::Ucb),
        AgentConfig::new(Algorithm::Sucb),
        AgentConfig::new(Algorithm::Sae),
        AgentConfig::new(Algorithm::Asae).with_eta(eta),
    ]
}

fn experiment(name: &str, structure: StructureSource, horizon: u64, runs: usize, eta: f64, seed: u64) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(name, structure, horizon, runs).with_seed(seed);
    config.algorithms = standard_algorithms(eta);
    config
}

pub fn fig3a(seed: u64) -> ExperimentConfig {
    let structure = StructureSource::FigureLeft {
        grid_per_region: DEFAULT_GRID,
        informative_arm2: true,
    };
    experiment("fig3a", structure, 10_000, 100, 0.1, seed)
}

pub fn fig3b(seed: u64) -> ExperimentConfig {
    let structure = StructureSource::FigureLeft {
        grid_per_region: DEFAULT_GRID,
        informative_arm2: false,
    };
    experiment("fig3b", structure, 10_000, 100, 0.1, seed)
}

pub fn fig3c(scale: Scale, seed: u64) -> ExperimentConfig {
    let runs = match scale {
        Scale::Desk => 25,
        Scale::Full => 100,
    };
    let structure = StructureSource::FigureRight {
        arm2_region4: FIGURE_RIGHT_ARM2_REGION4,
    };
    experiment("fig3c", structure, 500_000, runs, 0.01, seed)
}

pub fn fig3d(seed: u64) -> ExperimentConfig {
    let structure = StructureSource::Random {
        spec: GeneratorSpec::default(),
        fresh_per_run: true,
    };
    experiment("fig3d", structure, 10_000, 100, 0.1, seed)
}

/// One automatable expectation and whether it held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn fetch<'a>(batch: &'a BatchResult, label: &str) -> Result<&'a crate::simulation::AggregateResult> {
    batch
        .get(label)
        .map(|(a, _)| a)
        .ok_or_else(|| Error::InvalidParameter(format!("batch has no algorithm {label:?}")))
}

/// `a < b` at the final checkpoint with disjoint intervals.
pub fn ordering_check(batch: &BatchResult, a: &str, b: &str) -> Result<Check> {
    let (lo, hi) = (fetch(batch, a)?, fetch(batch, b)?);
    let (ma, ha) = lo.final_regret();
    let (mb, hb) = hi.final_regret();
    Ok(Check {
        name: format!("{}: regret({a}) < regret({b})", batch.config.name),
        passed: lo.separated_below(hi),
        detail: format!("{ma:.2} ± {ha:.2} vs {mb:.2} ± {hb:.2}"),
    })
}

/// Every SAE run keeps each sub-optimal arm within the pull target of the
/// last phase the arm was active in.
pub fn phase_cap_check(batch: &BatchResult, label: &str) -> Result<Check> {
    let (_, runs) = batch
        .get(label)
        .ok_or_else(|| Error::InvalidParameter(format!("batch has no algorithm {label:?}")))?;
    let config = batch
        .config
        .resolved_algorithms()
        .into_iter()
        .find(|c| c.name() == label)
        .expect("label present in the batch");
    let log_n = (config.horizon.unwrap_or(batch.config.horizon) as f64).ln();
    let mut violations = 0usize;
    let mut checked = 0usize;
    for (r, run) in runs.iter().enumerate() {
        let structure = match &batch.structure {
            Some(s) => s.clone(),
            None => batch.config.structure.build(batch.config.base_seed, r as u64, Path::new("."))?,
        };
        let best = structure.true_model().optimal_arm();
        for (arm, &pulls) in run.pulls.iter().enumerate() {
            if arm == best {
                continue;
            }
            checked += 1;
            let cap = match run.last_active_phase.get(arm).copied().flatten() {
                Some(h) => phase_target(config.alpha, log_n, config.beta, 0.5f64.powi(h as i32)),
                None => 0,
            };
            if pulls > cap {
                violations += 1;
            }
        }
    }
    Ok(Check {
        name: format!("{}: {label} sub-optimal pulls within the phase cap", batch.config.name),
        passed: violations == 0,
        detail: format!("{violations} violations over {checked} arm-runs"),
    })
}

pub fn mean_pulls_below(batch: &BatchResult, label: &str, arm: usize, limit: f64) -> Result<Check> {
    let agg = fetch(batch, label)?;
    let mean = agg.mean_pulls.get(arm).copied().ok_or(Error::ArmOutOfRange {
        arm,
        arm_count: agg.mean_pulls.len(),
    })?;
    Ok(Check {
        name: format!("{}: mean {label} pulls of arm {arm} < {limit}", batch.config.name),
        passed: mean < limit,
        detail: format!("{mean:.3}"),
    })
}

pub fn checks_for(figure: &str, batch: &BatchResult) -> Result<Vec<Check>> {
    Ok(match figure {
        "fig3a" => vec![
            ordering_check(batch, "asae", "sucb")?,
            ordering_check(batch, "sae", "sucb")?,
            ordering_check(batch, "sucb", "ucb")?,
            phase_cap_check(batch, "sae")?,
        ],
        "fig3b" => vec![
            ordering_check(batch, "sucb", "sae")?,
            ordering_check(batch, "sae", "ucb")?,
            phase_cap_check(batch, "sae")?,
        ],
        "fig3c" => vec![
            ordering_check(batch, "asae", "sucb")?,
            ordering_check(batch, "sae", "sucb")?,
            mean_pulls_below(batch, "sucb", 3, 2.0)?,
            phase_cap_check(batch, "sae")?,
        ],
        "fig3d" => vec![ordering_check(batch, "asae", "sucb")?],
        _ => Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub out: PathBuf,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every experiment, writing `fig3a/` .. `fig3d/` and `fig4/` under
/// `out`. The pull tables in `fig4/` are the pulls CSVs of the three
/// hand-coded experiments, prefixed by panel.
pub fn run_suite(scale: Scale, seed: u64, out: &Path, workers: Option<usize>) -> Result<SuiteReport> {
    let configs = [fig3a(seed), fig3b(seed), fig3c(scale, seed), fig3d(seed)];
    let fig4 = out.join("fig4");
    fs::create_dir_all(&fig4).map_err(|e| Error::io(&fig4, e))?;
    let mut checks = Vec::new();
    for config in &configs {
        log::info!("running {} ({} runs, horizon {})", config.name, config.runs, config.horizon);
        let dir = out.join(&config.name);
        let batch = run_batch(config, workers, out)?;
        write_outputs(&dir, &batch)?;
        checks.extend(checks_for(&config.name, &batch)?);
        let panel = match config.name.as_str() {
            "fig3a" => "a",
            "fig3b" => "b",
            "fig3c" => "c",
            _ => continue,
        };
        for agg in &batch.aggregates {
            let from = dir.join(format!("{}_pulls.csv", agg.label));
            let to = fig4.join(format!("{panel}_{}_pulls.csv", agg.label));
            fs::copy(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
    }
    Ok(SuiteReport {
        out: out.to_path_buf(),
        checks,
    })
}
