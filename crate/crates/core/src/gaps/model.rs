//! Bandit models, structures and the index-set newtypes used to talk about
//! subsets of arms and models.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for equality of derived real quantities and for tie
/// detection between means.
pub const TOLERANCE: f64 = 1e-12;

/// Equality up to [`TOLERANCE`]; infinities compare equal to themselves.
pub fn approx_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TOLERANCE
}

/// Index of the unique maximum of `means`.
///
/// Fails when the top two values are within [`TOLERANCE`] of each other.
pub fn optimal_arm_of(means: &[f64]) -> Result<usize> {
    if means.is_empty() {
        return Err(Error::InvalidModel("model has no arms".into()));
    }
    let mut best = 0;
    for (arm, &mean) in means.iter().enumerate().skip(1) {
        if mean > means[best] {
            best = arm;
        }
    }
    if let Some((arm, _)) = means
        .iter()
        .enumerate()
        .find(|&(arm, &mean)| arm != best && (means[best] - mean).abs() <= TOLERANCE)
    {
        return Err(Error::InvalidModel(format!(
            "tied optimal arms {} and {} (mean {})",
            best.min(arm),
            best.max(arm),
            means[best]
        )));
    }
    Ok(best)
}

/// One candidate bandit problem: a mean reward per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditModel {
    means: Vec<f64>,
    best: usize,
}

impl BanditModel {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        for (arm, &mean) in means.iter().enumerate() {
            if !mean.is_finite() || !(0.0..=1.0).contains(&mean) {
                return Err(Error::InvalidModel(format!(
                    "arm {arm}: mean {mean} outside [0,1]"
                )));
            }
        }
        let best = optimal_arm_of(&means)?;
        Ok(Self { means, best })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    #[inline]
    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn arm_count(&self) -> usize {
        self.means.len()
    }

    #[inline]
    pub fn optimal_arm(&self) -> usize {
        self.best
    }

    #[inline]
    pub fn optimal_value(&self) -> f64 {
        self.means[self.best]
    }

    pub fn into_means(self) -> Vec<f64> {
        self.means
    }
}

/// Reward distribution attached to every arm of the true model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RewardKind {
    #[default]
    Bernoulli,
    Gaussian { variance: f64 },
}

impl RewardKind {
    pub fn name(&self) -> &'static str {
        match self {
            RewardKind::Bernoulli => "bernoulli",
            RewardKind::Gaussian { .. } => "gaussian",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardKind::Bernoulli => Ok(()),
            RewardKind::Gaussian { variance } if variance > 0.0 && variance.is_finite() => Ok(()),
            RewardKind::Gaussian { variance } => Err(Error::InvalidParameter(format!(
                "gaussian variance must be positive, got {variance}"
            ))),
        }
    }

    /// Whether `reward` can be produced by this distribution.
    pub fn supports(&self, reward: f64) -> bool {
        match self {
            RewardKind::Bernoulli => reward == 0.0 || reward == 1.0,
            RewardKind::Gaussian { .. } => reward.is_finite(),
        }
    }
}

/// Where a structure came from; carried through files for reproducibility.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub builder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// A finite set of candidate models plus the index of the true one.
///
/// The true index is environment knowledge. Agents receive the structure but
/// must never read it.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    models: Vec<BanditModel>,
    arm_count: usize,
    true_index: usize,
    reward: RewardKind,
    provenance: Provenance,
}

impl Structure {
    pub fn new(models: Vec<BanditModel>, true_index: usize, reward: RewardKind) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::InvalidStructure("structure has no models".into()));
        };
        let arm_count = first.arm_count();
        if let Some((index, model)) = models
            .iter()
            .enumerate()
            .find(|(_, m)| m.arm_count() != arm_count)
        {
            return Err(Error::InvalidStructure(format!(
                "model {index} has {} arms, expected {arm_count}",
                model.arm_count()
            )));
        }
        if true_index >= models.len() {
            return Err(Error::InvalidStructure(format!(
                "true_index {true_index} out of range for {} models",
                models.len()
            )));
        }
        reward.validate()?;
        Ok(Self {
            models,
            arm_count,
            true_index,
            reward,
            provenance: Provenance::default(),
        })
    }

    /// Builds a structure from raw mean vectors, reporting the offending
    /// model on failure.
    pub fn from_means(means: Vec<Vec<f64>>, true_index: usize, reward: RewardKind) -> Result<Self> {
        let models = means
            .into_iter()
            .enumerate()
            .map(|(index, m)| {
                BanditModel::new(m).map_err(|e| match e {
                    Error::InvalidModel(msg) => Error::InvalidModel(format!("model {index}, {msg}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(models, true_index, reward)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn models(&self) -> &[BanditModel] {
        &self.models
    }

    pub fn model(&self, index: usize) -> &BanditModel {
        &self.models[index]
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn arm_count(&self) -> usize {
        self.arm_count
    }

    pub fn true_index(&self) -> usize {
        self.true_index
    }

    pub fn true_model(&self) -> &BanditModel {
        &self.models[self.true_index]
    }

    pub fn reward(&self) -> RewardKind {
        self.reward
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn all_models(&self) -> ModelSubset {
        ModelSubset::from_sorted_unchecked((0..self.models.len()).collect())
    }

    pub fn all_arms(&self) -> ArmSet {
        ArmSet::from_sorted_unchecked((0..self.arm_count).collect())
    }
}

macro_rules! index_set {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Vec<usize>);

        impl $name {
            pub fn new() -> Self {
                Self(Vec::new())
            }

            fn from_sorted_unchecked(members: Vec<usize>) -> Self {
                debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
                Self(members)
            }

            pub fn singleton(index: usize) -> Self {
                Self(vec![index])
            }

            pub fn contains(&self, index: usize) -> bool {
                self.0.binary_search(&index).is_ok()
            }

            pub fn insert(&mut self, index: usize) -> bool {
                match self.0.binary_search(&index) {
                    Ok(_) => false,
                    Err(pos) => {
                        self.0.insert(pos, index);
                        true
                    }
                }
            }

            pub fn remove(&mut self, index: usize) -> bool {
                match self.0.binary_search(&index) {
                    Ok(pos) => {
                        self.0.remove(pos);
                        true
                    }
                    Err(_) => false,
                }
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
                self.0.iter().copied()
            }

            pub fn as_slice(&self) -> &[usize] {
                &self.0
            }

            pub fn first(&self) -> Option<usize> {
                self.0.first().copied()
            }

            pub fn is_subset(&self, other: &Self) -> bool {
                self.iter().all(|i| other.contains(i))
            }

            pub fn union(&self, other: &Self) -> Self {
                self.iter().chain(other.iter()).collect()
            }

            pub fn intersection(&self, other: &Self) -> Self {
                Self(self.iter().filter(|&i| other.contains(i)).collect())
            }

            pub fn difference(&self, other: &Self) -> Self {
                Self(self.iter().filter(|&i| !other.contains(i)).collect())
            }

            /// Fails if any member is `>= bound`.
            pub fn check_bound(&self, bound: usize) -> std::result::Result<(), usize> {
                match self.0.last() {
                    Some(&last) if last >= bound => Err(last),
                    _ => Ok(()),
                }
            }

            /// Members of a boolean mask.
            pub fn from_mask(mask: &[bool]) -> Self {
                Self(mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
            }
        }

        impl FromIterator<usize> for $name {
            fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
                let mut members: Vec<usize> = iter.into_iter().collect();
                members.sort_unstable();
                members.dedup();
                Self(members)
            }
        }

        impl<const N: usize> From<[usize; N]> for $name {
            fn from(members: [usize; N]) -> Self {
                members.into_iter().collect()
            }
        }

        impl From<Vec<usize>> for $name {
            fn from(members: Vec<usize>) -> Self {
                members.into_iter().collect()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{{")?;
                for (k, i) in self.0.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{i}")?;
                }
                write!(f, "}}")
            }
        }
    };
}

index_set!(
    /// A de-duplicated, sorted set of arm indices.
    ArmSet
);
index_set!(
    /// A de-duplicated, sorted set of model indices into a [`Structure`].
    ModelSubset
);
