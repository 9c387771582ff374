use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BatchResult, ExperimentConfig};
use crate::error::{Error, Result};
use crate::gaps::Provenance;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegretRow {
    checkpoint: u64,
    mean_regret: f64,
    ci_half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PullsRow {
    arm: usize,
    mean_pulls: f64,
    ci_half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub seeds: Vec<u64>,
}

/// Everything needed to reproduce a batch, written next to its CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub rng: String,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Provenance>,
    pub algorithms: Vec<ManifestEntry>,
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes `<label>_regret.csv` and `<label>_pulls.csv` per algorithm plus
/// `manifest.json`. Timing is left out so reruns are byte-identical.
pub fn write_outputs(dir: &Path, batch: &BatchResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for agg in &batch.aggregates {
        let mut w = create(&dir.join(format!("{}_regret.csv", agg.label)))?;
        for (i, &checkpoint) in agg.checkpoints.iter().enumerate() {
            w.serialize(RegretRow {
                checkpoint,
                mean_regret: agg.mean_regret[i],
                ci_half_width: agg.regret_half_width[i],
            })?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
        let mut w = create(&dir.join(format!("{}_pulls.csv", agg.label)))?;
        for (arm, (&mean_pulls, &ci_half_width)) in
            agg.mean_pulls.iter().zip(&agg.pulls_half_width).enumerate()
        {
            w.serialize(PullsRow { arm, mean_pulls, ci_half_width })?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
    }
    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        rng: "ChaCha8, seeded per (base_seed, label, run) via FNV-1a + SplitMix64".to_string(),
        config: batch.config.clone(),
        structure: batch.structure.as_ref().map(|s| s.provenance().clone()),
        algorithms: batch
            .aggregates
            .iter()
            .zip(&batch.seeds)
            .map(|(a, seeds)| ManifestEntry {
                label: a.label.clone(),
                seeds: seeds.clone(),
            })
            .collect(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads back a regret CSV as `(checkpoint, mean, half_width)` rows.
pub fn read_regret_csv(path: &Path) -> Result<Vec<(u64, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<RegretRow>()
        .map(|row| {
            let row = row?;
            Ok((row.checkpoint, row.mean_regret, row.ci_half_width))
        })
        .collect()
}
