//! Gap quantities, arm/model index sets and structure classifiers.
//!
//! Everything here is a pure function of an immutable [`Structure`]. Model
//! gaps are always measured against the structure's true model.

mod model;

pub use model::{
    approx_eq, optimal_arm_of, ArmSet, BanditModel, ModelSubset, Provenance, RewardKind,
    Structure, TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::TheorySequences;

pub fn optimal_arm(model: &BanditModel) -> usize {
    model.optimal_arm()
}

/// `mu*(model) - mu_arm(model)`.
pub fn suboptimality_gap(model: &BanditModel, arm: usize) -> Result<f64> {
    if arm >= model.arm_count() {
        return Err(Error::ArmOutOfRange {
            arm,
            arm_count: model.arm_count(),
        });
    }
    Ok(model.optimal_value() - model.mean(arm))
}

/// `|mu_arm(a) - mu_arm(b)|`.
pub fn model_gap(a: &BanditModel, b: &BanditModel, arm: usize) -> Result<f64> {
    if a.arm_count() != b.arm_count() {
        return Err(Error::ArmCountMismatch {
            left: a.arm_count(),
            right: b.arm_count(),
        });
    }
    if arm >= a.arm_count() {
        return Err(Error::ArmOutOfRange {
            arm,
            arm_count: a.arm_count(),
        });
    }
    Ok((a.mean(arm) - b.mean(arm)).abs())
}

fn check_subset(structure: &Structure, subset: &ModelSubset) -> Result<()> {
    subset
        .check_bound(structure.model_count())
        .map_err(|index| Error::ModelOutOfRange {
            index,
            model_count: structure.model_count(),
        })
}

fn check_arms(structure: &Structure, arms: &ArmSet) -> Result<()> {
    arms.check_bound(structure.arm_count())
        .map_err(|arm| Error::ArmOutOfRange {
            arm,
            arm_count: structure.arm_count(),
        })
}

/// Arms that are optimal for at least one model of `subset`.
pub fn optimal_arm_set(structure: &Structure, subset: &ModelSubset) -> Result<ArmSet> {
    if subset.is_empty() {
        return Err(Error::EmptyModelSubset);
    }
    check_subset(structure, subset)?;
    Ok(subset
        .iter()
        .map(|m| structure.model(m).optimal_arm())
        .collect())
}

/// Models in which `arm` is the optimal arm (possibly none).
pub fn models_with_optimal_arm(structure: &Structure, arm: usize) -> ModelSubset {
    structure
        .models()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.optimal_arm() == arm)
        .map(|(i, _)| i)
        .collect()
}

/// Models with optimal arm `arm` whose optimal value strictly exceeds that of
/// the true model.
pub fn optimistic_models(structure: &Structure, arm: usize) -> ModelSubset {
    let target = structure.true_model().optimal_value();
    structure
        .models()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.optimal_arm() == arm && m.optimal_value() > target)
        .map(|(i, _)| i)
        .collect()
}

/// Optimistic models for `arm` that match the true model on every other arm
/// (up to [`TOLERANCE`]).
pub fn indistinguishable_optimistic_models(structure: &Structure, arm: usize) -> ModelSubset {
    let truth = structure.true_model();
    optimistic_models(structure, arm)
        .iter()
        .filter(|&m| {
            let model = structure.model(m);
            (0..structure.arm_count())
                .filter(|&j| j != arm)
                .all(|j| (model.mean(j) - truth.mean(j)).abs() <= TOLERANCE)
        })
        .collect()
}

/// Value and minimiser of `min_{model in subset} max_{j in arms} Gamma_j(model, truth)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub value: f64,
    pub argmin: Option<usize>,
}

/// Squared best distinguishing gap over `arms` against the hardest model of
/// `subset`. An empty subset yields `+inf` with no minimiser; ties go to the
/// lowest model index.
pub fn psi(structure: &Structure, subset: &ModelSubset, arms: &ArmSet) -> Result<Psi> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    check_subset(structure, subset)?;
    check_arms(structure, arms)?;
    Ok(psi_unchecked(structure, subset.iter(), arms.as_slice()))
}

pub(crate) fn psi_unchecked(
    structure: &Structure,
    subset: impl Iterator<Item = usize>,
    arms: &[usize],
) -> Psi {
    let truth = structure.true_model();
    let mut best = Psi {
        value: f64::INFINITY,
        argmin: None,
    };
    for m in subset {
        let model = structure.model(m);
        let widest = arms
            .iter()
            .map(|&j| (model.mean(j) - truth.mean(j)).abs())
            .fold(0.0_f64, f64::max);
        let value = widest * widest;
        if best.argmin.is_none() || value < best.value {
            best = Psi {
                value,
                argmin: Some(m),
            };
        }
    }
    best
}

fn competitors(structure: &Structure) -> impl Iterator<Item = &BanditModel> {
    let best = structure.true_model().optimal_arm();
    structure
        .models()
        .iter()
        .filter(move |m| m.optimal_arm() != best)
}

/// Smallest gap at the true optimal arm between the true model and any model
/// with a different optimal arm; `+inf` when there is none.
pub fn gamma_star(structure: &Structure) -> f64 {
    let truth = structure.true_model();
    let best = truth.optimal_arm();
    competitors(structure)
        .map(|m| (m.mean(best) - truth.mean(best)).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Smallest sub-optimality of the true optimal arm inside models where it is
/// not optimal; `+inf` when there is none.
pub fn delta_floor(structure: &Structure) -> f64 {
    let best = structure.true_model().optimal_arm();
    competitors(structure)
        .map(|m| m.optimal_value() - m.mean(best))
        .fold(f64::INFINITY, f64::min)
}

/// Membership of a structure in the worst-case, optimistic and worst-case
/// constant-regret classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub worst_case: bool,
    /// `None` when no elimination sequences were supplied.
    pub optimistic: Option<bool>,
    pub constant_regret: bool,
}

impl Classification {
    pub fn require_optimistic(&self) -> Result<bool> {
        self.optimistic.ok_or(Error::MissingSequences)
    }
}

pub fn classify(structure: &Structure, sequences: Option<&TheorySequences>) -> Classification {
    Classification {
        worst_case: is_worst_case(structure),
        optimistic: sequences.map(|s| is_optimistic(structure, s)),
        constant_regret: is_constant_regret(structure),
    }
}

pub fn is_worst_case(structure: &Structure) -> bool {
    let best = structure.true_model().optimal_arm();
    (0..structure.arm_count())
        .filter(|&i| i != best)
        .all(|i| {
            let all = psi_unchecked(structure, optimistic_models(structure, i).iter(), &[i]);
            let flat = psi_unchecked(
                structure,
                indistinguishable_optimistic_models(structure, i).iter(),
                &[i],
            );
            approx_eq(all.value, flat.value)
        })
}

/// Arms without an `A_i*` entry (not optimal anywhere) trivially satisfy the
/// test: both infima run over empty sets.
pub fn is_optimistic(structure: &Structure, sequences: &TheorySequences) -> bool {
    let best = structure.true_model().optimal_arm();
    (0..structure.arm_count())
        .filter(|&i| i != best)
        .all(|i| match sequences.a_star_for(i) {
            None => true,
            Some(arms) => {
                let plus = psi_unchecked(
                    structure,
                    optimistic_models(structure, i).iter(),
                    arms.as_slice(),
                );
                let all = psi_unchecked(
                    structure,
                    models_with_optimal_arm(structure, i).iter(),
                    arms.as_slice(),
                );
                approx_eq(plus.value, all.value)
            }
        })
}

pub fn is_constant_regret(structure: &Structure) -> bool {
    let truth = structure.true_model();
    let best = truth.optimal_arm();
    let floor = gamma_star(structure);
    competitors(structure).all(|m| {
        let own = m.optimal_arm();
        approx_eq((m.mean(best) - truth.mean(best)).abs(), floor)
            && (0..structure.arm_count())
                .filter(|&j| j != own && j != best)
                .all(|j| (m.mean(j) - truth.mean(j)).abs() <= TOLERANCE)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::build_figure_right;
    use approx::assert_abs_diff_eq;

    fn model(means: &[f64]) -> BanditModel {
        BanditModel::new(means.to_vec()).unwrap()
    }

    #[test]
    fn optimal_arm_examples() {
        assert_eq!(optimal_arm(&model(&[0.8, 0.7, 0.6, 0.5])), 0);
        assert_eq!(optimal_arm(&model(&[1.0])), 0);
        assert_eq!(optimal_arm(&model(&[0.8, 0.92, 0.6, 0.5])), 1);
        assert!(optimal_arm_of(&[0.3, 0.7, 0.7]).is_err());
    }

    #[test]
    fn suboptimality_gap_examples() {
        let m = model(&[0.8, 0.7, 0.6, 0.5]);
        assert_abs_diff_eq!(suboptimality_gap(&m, 2).unwrap(), 0.2, epsilon = 1e-12);
        assert_eq!(suboptimality_gap(&m, 0).unwrap(), 0.0);
        let m = model(&[0.8, 0.2, 0.86]);
        assert_abs_diff_eq!(suboptimality_gap(&m, 1).unwrap(), 0.66, epsilon = 1e-12);
        assert!(matches!(
            suboptimality_gap(&m, 3),
            Err(Error::ArmOutOfRange { arm: 3, arm_count: 3 })
        ));
    }

    #[test]
    fn model_gap_examples() {
        let s = build_figure_right();
        let (r1, r2, r3) = (s.model(0), s.model(1), s.model(2));
        assert_abs_diff_eq!(model_gap(r1, r3, 3).unwrap(), 0.38, epsilon = 1e-12);
        assert_eq!(model_gap(r1, r1, 2).unwrap(), 0.0);
        assert_eq!(model_gap(r1, r2, 0).unwrap(), 0.0);
        assert!(matches!(
            model_gap(r1, &model(&[0.1, 0.2]), 0),
            Err(Error::ArmCountMismatch { .. })
        ));
    }

    #[test]
    fn index_set_examples_on_figure_right() {
        let s = build_figure_right();
        assert_eq!(
            optimal_arm_set(&s, &s.all_models()).unwrap().as_slice(),
            &[0, 1, 2, 3]
        );
        assert_eq!(
            optimal_arm_set(&s, &ModelSubset::singleton(0)).unwrap().as_slice(),
            &[0]
        );
        assert!(matches!(
            optimal_arm_set(&s, &ModelSubset::new()),
            Err(Error::EmptyModelSubset)
        ));
        assert_eq!(models_with_optimal_arm(&s, 2).as_slice(), &[1]);
        assert_eq!(models_with_optimal_arm(&s, 0).as_slice(), &[0]);
        assert!(models_with_optimal_arm(&s, 7).is_empty());
        assert_eq!(optimistic_models(&s, 2).as_slice(), &[1]);
        assert_eq!(optimistic_models(&s, 1).as_slice(), &[3]);
        assert!(optimistic_models(&s, 0).is_empty());
    }

    #[test]
    fn psi_examples_on_figure_right() {
        let s = build_figure_right();
        let theta3 = models_with_optimal_arm(&s, 2);
        let p = psi(&s, &theta3, &s.all_arms()).unwrap();
        assert_abs_diff_eq!(p.value, 0.16, epsilon = 1e-12);
        assert_eq!(p.argmin, Some(1));
        let p = psi(&s, &theta3, &ArmSet::singleton(2)).unwrap();
        assert_abs_diff_eq!(p.value, 0.0576, epsilon = 1e-12);
        let p = psi(&s, &s.all_models(), &[1, 3].into()).unwrap();
        assert_eq!((p.value, p.argmin), (0.0, Some(0)));
        let p = psi(&s, &ModelSubset::new(), &[1].into()).unwrap();
        assert_eq!((p.value, p.argmin), (f64::INFINITY, None));
        assert!(matches!(
            psi(&s, &theta3, &ArmSet::new()),
            Err(Error::EmptyArmSet)
        ));
    }

    #[test]
    fn psi_ties_go_to_lowest_index() {
        let s = Structure::from_means(
            vec![vec![0.5, 0.3], vec![0.5, 0.6], vec![0.5, 0.0]],
            0,
            RewardKind::Bernoulli,
        )
        .unwrap();
        let p = psi(&s, &[1, 2].into(), &[1].into()).unwrap();
        assert_eq!(p.argmin, Some(1));
    }

    #[test]
    fn gamma_star_and_delta_floor_on_figure_right() {
        let s = build_figure_right();
        assert_eq!(gamma_star(&s), 0.0);
        assert_abs_diff_eq!(delta_floor(&s), 0.04, epsilon = 1e-12);
        let single = Structure::from_means(vec![vec![0.3, 0.6]], 0, RewardKind::Bernoulli).unwrap();
        assert_eq!(gamma_star(&single), f64::INFINITY);
        assert_eq!(delta_floor(&single), f64::INFINITY);
        let pair = Structure::from_means(
            vec![vec![0.7, 0.4], vec![0.65, 0.9]],
            0,
            RewardKind::Bernoulli,
        )
        .unwrap();
        assert_abs_diff_eq!(delta_floor(&pair), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_star(&pair), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn worst_case_requires_flat_optimistic_models() {
        // No model equals the truth off arm 1, so the flat set is empty.
        let s = Structure::from_means(
            vec![vec![0.7, 0.4], vec![0.6, 0.9]],
            0,
            RewardKind::Bernoulli,
        )
        .unwrap();
        assert!(!is_worst_case(&s));
    }

    #[test]
    fn product_grid_is_worst_case() {
        // 2-arm, 9-model product grid; arm values never coincide so optima
        // are unique.
        let mut means = Vec::new();
        for a in [0.3, 0.5, 0.7] {
            for b in [0.2, 0.4, 0.6] {
                means.push(vec![a, b]);
            }
        }
        let s = Structure::from_means(means, 3, RewardKind::Bernoulli).unwrap();
        assert_eq!(s.true_model().means(), &[0.5, 0.2]);
        // Direct evaluation of both sides for arm 1.
        let all = psi(&s, &optimistic_models(&s, 1), &[1].into()).unwrap();
        let flat = psi(&s, &indistinguishable_optimistic_models(&s, 1), &[1].into()).unwrap();
        assert_abs_diff_eq!(all.value, 0.16, epsilon = 1e-12);
        assert_abs_diff_eq!(flat.value, 0.16, epsilon = 1e-12);
        assert!(is_worst_case(&s));
        assert!(!classify(&s, None).constant_regret);
    }

    #[test]
    fn constant_regret_construction() {
        let g = 1e-4;
        let s = Structure::from_means(
            vec![
                vec![0.7, 0.5, 0.4],
                vec![0.7 - g, 0.8, 0.4],
                vec![0.7 + g, 0.5, 0.85],
            ],
            0,
            RewardKind::Bernoulli,
        )
        .unwrap();
        let c = classify(&s, None);
        assert!(c.constant_regret);
        assert!(matches!(c.require_optimistic(), Err(Error::MissingSequences)));
    }
}
