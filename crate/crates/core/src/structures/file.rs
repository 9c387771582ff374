use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaps::{Provenance, RewardKind, Structure};

/// On-disk form of a [`Structure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDocument {
    pub arm_count: usize,
    pub true_index: usize,
    #[serde(default)]
    pub reward: RewardKind,
    pub models: Vec<Vec<f64>>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl From<&Structure> for StructureDocument {
    fn from(s: &Structure) -> Self {
        StructureDocument {
            arm_count: s.arm_count(),
            true_index: s.true_index(),
            reward: s.reward(),
            models: s.models().iter().map(|m| m.means().to_vec()).collect(),
            provenance: s.provenance().clone(),
        }
    }
}

impl StructureDocument {
    pub fn into_structure(self) -> Result<Structure> {
        if let Some((index, m)) = self
            .models
            .iter()
            .enumerate()
            .find(|(_, m)| m.len() != self.arm_count)
        {
            return Err(Error::InvalidStructure(format!(
                "model {index} has {} means but arm_count is {}",
                m.len(),
                self.arm_count
            )));
        }
        Ok(Structure::from_means(self.models, self.true_index, self.reward)?
            .with_provenance(self.provenance))
    }
}

pub fn save(structure: &Structure, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&StructureDocument::from(structure)).map_err(|e| {
        Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Structure> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: StructureDocument = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    doc.into_structure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{build_figure_left, generate_random, GeneratorSpec};

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        for s in [
            build_figure_left(17, true).unwrap(),
            generate_random(&GeneratorSpec { seed: 3, ..Default::default() }).unwrap(),
        ] {
            save(&s, &path).unwrap();
            assert_eq!(load(&path).unwrap(), s);
        }
    }

    #[test]
    fn missing_field_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(&path, r#"{"arm_count": 2, "models": [[0.1, 0.2]]}"#).unwrap();
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("true_index"), "{err}");
    }

    #[test]
    fn out_of_range_mean_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"arm_count": 2, "true_index": 0, "models": [[0.1, 0.2], [1.2, 0.3]]}"#,
        )
        .unwrap();
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("[0,1]") && err.contains("model 1"), "{err}");
    }
}
