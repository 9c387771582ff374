use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaps::{models_with_optimal_arm, optimal_arm_set, ArmSet, Structure, TOLERANCE};

/// `(1/(beta-1)) * sqrt((beta+1)^2 + 1/ln n)`; `None` when `beta <= 1`.
pub fn k_beta(beta: f64, n: u64) -> Option<f64> {
    if beta <= 1.0 || n < 2 {
        return None;
    }
    let ln_n = (n as f64).ln();
    Some(((beta + 1.0).powi(2) + 1.0 / ln_n).sqrt() / (beta - 1.0))
}

/// Number of phases the sequences are followed for: `ceil(log2 n)`.
pub fn phase_cap(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as usize
    }
}

/// The deterministic active, eliminated and guaranteed-active arm sets of the
/// elimination analysis, indexed by phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySequences {
    pub alpha: f64,
    pub beta: f64,
    pub n: u64,
    pub k_beta: f64,
    /// `active[h]` is `A_h`; one extra trailing entry holds the set left after
    /// the last computed phase.
    pub active: Vec<ArmSet>,
    pub eliminated: Vec<ArmSet>,
    pub guaranteed: Vec<ArmSet>,
    /// Last phase in which each arm is active. `None` for the optimal arm and
    /// for arms that are optimal in no model.
    pub last_active: Vec<Option<usize>>,
    pub a_star: Vec<Option<ArmSet>>,
    /// Arms still active when the phase cap was hit; their `last_active` is
    /// the cap.
    pub unresolved: ArmSet,
    /// Set when `alpha != beta^2`, outside the regime of the regret theorem.
    pub alpha_mismatch: bool,
}

impl TheorySequences {
    pub fn phases(&self) -> usize {
        self.eliminated.len()
    }

    pub fn a_star_for(&self, arm: usize) -> Option<&ArmSet> {
        self.a_star.get(arm).and_then(Option::as_ref)
    }
}

pub fn deterministic_sequences(
    structure: &Structure,
    alpha: f64,
    beta: f64,
    n: u64,
) -> Result<TheorySequences> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("horizon must be at least 2, got {n}")));
    }
    let k = k_beta(beta, n).ok_or_else(|| {
        Error::InvalidParameter(format!("k_beta is undefined for beta = {beta} (need beta > 1)"))
    })?;

    let truth = structure.true_model();
    let best = truth.optimal_arm();
    let arm_count = structure.arm_count();
    let a0 = optimal_arm_set(structure, &structure.all_models())?;
    let cap = phase_cap(n);

    // Per arm, the gap vectors |mu_j(theta) - mu_j(theta*)| of every model in
    // which that arm is optimal.
    let gaps_by_arm: Vec<Vec<Vec<f64>>> = (0..arm_count)
        .map(|i| {
            models_with_optimal_arm(structure, i)
                .iter()
                .map(|m| {
                    let model = structure.model(m);
                    (0..arm_count)
                        .map(|j| (model.mean(j) - truth.mean(j)).abs())
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut last_active: Vec<Option<usize>> = vec![None; arm_count];
    let mut active = vec![a0.clone()];
    let mut eliminated = Vec::new();
    let mut guaranteed = Vec::new();
    let mut unresolved = ArmSet::new();

    for h in 0..=cap {
        let current = active[h].clone();
        let under = if h == 0 {
            a0.clone()
        } else {
            let threshold = 0.5_f64.powi(h as i32 - 1);
            // Still-active arms take the zero exponent; eliminated arms are
            // discounted by the phases elapsed since they left.
            let scale: Vec<f64> = (0..arm_count)
                .map(|j| match last_active[j] {
                    Some(last) if !current.contains(j) => {
                        0.5_f64.powi((h as i64 - last as i64 - 1).max(0) as i32)
                    }
                    _ => 1.0,
                })
                .collect();
            current
                .iter()
                .filter(|&i| {
                    let inf = gaps_by_arm[i]
                        .iter()
                        .map(|g| a0.iter().map(|j| g[j] * scale[j]).fold(0.0, f64::max))
                        .fold(f64::INFINITY, f64::min);
                    threshold > k * inf
                })
                .collect()
        };
        let threshold = 0.5_f64.powi(h as i32);
        let gone: ArmSet = current
            .iter()
            .filter(|&i| {
                let inf = gaps_by_arm[i]
                    .iter()
                    .map(|g| {
                        under
                            .iter()
                            .chain(std::iter::once(i))
                            .map(|j| g[j])
                            .fold(0.0, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min);
                threshold <= inf + TOLERANCE
            })
            .collect();
        for i in gone.iter() {
            last_active[i] = Some(h);
        }
        let next = current.difference(&gone);
        guaranteed.push(under);
        eliminated.push(gone);
        let done = next.iter().all(|i| i == best);
        if !done && h == cap {
            for i in next.iter().filter(|&i| i != best) {
                last_active[i] = Some(cap);
                unresolved.insert(i);
            }
        }
        active.push(next);
        if done {
            break;
        }
    }

    let a_star = (0..arm_count)
        .map(|i| {
            last_active[i].map(|h| {
                let mut set = guaranteed[h].clone();
                set.insert(i);
                set
            })
        })
        .collect();

    Ok(TheorySequences {
        alpha,
        beta,
        n,
        k_beta: k,
        active,
        eliminated,
        guaranteed,
        last_active,
        a_star,
        unresolved,
        alpha_mismatch: (alpha - beta * beta).abs() > TOLERANCE,
    })
}
