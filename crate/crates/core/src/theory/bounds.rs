use std::collections::BTreeMap;
use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use super::TheorySequences;
use crate::error::{Error, Result};
use crate::gaps::{
    delta_floor, gamma_star, is_constant_regret, models_with_optimal_arm, optimal_arm_set,
    optimistic_models, psi_unchecked, ArmSet, Structure,
};

/// One row of a bound's per-arm breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTerm {
    pub arm: usize,
    pub delta: f64,
    pub psi: f64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub constant: f64,
    pub terms: Vec<ArmTerm>,
    pub flags: BTreeMap<String, bool>,
    /// Auxiliary quantities, e.g. the constant-regret horizon or a log argument.
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(name: &str, constant: f64, terms: Vec<ArmTerm>) -> Self {
        let value = terms.iter().map(|t| t.value).sum::<f64>() + constant;
        BoundReport {
            name: name.to_string(),
            value,
            constant,
            terms,
            flags: BTreeMap::new(),
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn flag(mut self, name: &str, value: bool) -> Self {
        self.flags.insert(name.to_string(), value);
        self
    }

    fn detail(mut self, name: &str, value: f64) -> Self {
        self.details.insert(name.to_string(), value);
        self
    }

    pub fn term(&self, arm: usize) -> Option<&ArmTerm> {
        self.terms.iter().find(|t| t.arm == arm)
    }
}

fn suboptimal_optimal_arms(structure: &Structure) -> Result<(ArmSet, usize)> {
    let a_star = optimal_arm_set(structure, &structure.all_models())?;
    let best = structure.true_model().optimal_arm();
    Ok((a_star, best))
}

fn true_gap(structure: &Structure, arm: usize) -> f64 {
    let truth = structure.true_model();
    truth.optimal_value() - truth.mean(arm)
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")))
    }
}

/// Regret bound of the fixed-horizon elimination algorithm, with
/// `c_beta = 4(1 + beta^2)`.
pub fn sae_bound(structure: &Structure, sequences: &TheorySequences, n: u64) -> Result<BoundReport> {
    if n < 64 {
        return Err(Error::InvalidParameter(format!("bound requires n >= 64, got {n}")));
    }
    if sequences.n != n {
        return Err(Error::InvalidParameter(format!(
            "sequences were computed for n = {}, not {n}",
            sequences.n
        )));
    }
    let (a_star, best) = suboptimal_optimal_arms(structure)?;
    let c_beta = 4.0 * (1.0 + sequences.beta * sequences.beta);
    let ln_n = (n as f64).ln();
    let mut vacuous = false;
    let terms = a_star
        .iter()
        .filter(|&i| i != best)
        .map(|i| {
            let arms = sequences
                .a_star_for(i)
                .ok_or(Error::MissingSequences)?;
            let psi = psi_unchecked(
                structure,
                models_with_optimal_arm(structure, i).iter(),
                arms.as_slice(),
            )
            .value;
            let delta = true_gap(structure, i);
            let (value, note) = if psi > 0.0 {
                (c_beta * delta * ln_n / psi, None)
            } else {
                vacuous = true;
                (f64::INFINITY, Some("psi is zero; bound is vacuous".to_string()))
            };
            Ok(ArmTerm { arm: i, delta, psi, value, note })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = BoundReport::new("sae", 2.0 * a_star.len() as f64, terms)
        .flag("alpha_equals_beta_squared", !sequences.alpha_mismatch)
        .flag("vacuous", vacuous)
        .flag("sequences_resolved", sequences.unresolved.is_empty())
        .detail("c_beta", c_beta);
    if sequences.alpha_mismatch {
        report.notes.push(format!(
            "alpha = {} differs from beta^2 = {}; the bound is stated for alpha = beta^2",
            sequences.alpha,
            sequences.beta * sequences.beta
        ));
    }
    Ok(report)
}

fn pair_terms(structure: &Structure, factor: f64) -> Result<(ArmSet, Vec<ArmTerm>)> {
    let (a_star, best) = suboptimal_optimal_arms(structure)?;
    let terms = a_star
        .iter()
        .filter(|&i| i != best)
        .map(|i| {
            let pair = ArmSet::from(vec![i, best]);
            let psi = psi_unchecked(
                structure,
                models_with_optimal_arm(structure, i).iter(),
                pair.as_slice(),
            )
            .value;
            let delta = true_gap(structure, i);
            let (value, note) = if psi > 0.0 {
                (factor * delta / psi, None)
            } else {
                (f64::INFINITY, Some("psi is zero; bound is vacuous".to_string()))
            };
            ArmTerm { arm: i, delta, psi, value, note }
        })
        .collect();
    Ok((a_star, terms))
}

/// Anytime regret bound (eta = 1, alpha = 2, beta = 1).
pub fn asae_bound(structure: &Structure, n: u64) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("bound requires n >= 2, got {n}")));
    }
    let (a_star, terms) = pair_terms(structure, 192.0 * (n as f64).ln())?;
    let vacuous = terms.iter().any(|t| t.value.is_infinite());
    Ok(BoundReport::new("asae", 6.0 * a_star.len() as f64, terms).flag("vacuous", vacuous))
}

/// Horizon after which the anytime algorithm stops paying regret under an
/// informative optimal arm: `20|A*| ln 2 / gamma*^2 + 2|A*|`.
pub fn constant_regret_horizon(optimal_arms: usize, gamma_star: f64) -> f64 {
    let a = optimal_arms as f64;
    if gamma_star.is_infinite() {
        2.0 * a
    } else {
        20.0 * a * LN_2 / (gamma_star * gamma_star) + 2.0 * a
    }
}

/// Horizon-independent anytime bound; requires `gamma* > 0`.
pub fn asae_constant_bound(structure: &Structure) -> Result<BoundReport> {
    let g = gamma_star(structure);
    if g <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "Assumption 1 violated (Γ* = {g})"
        )));
    }
    let a_count = optimal_arm_set(structure, &structure.all_models())?.len();
    let t_bar = constant_regret_horizon(a_count, g);
    let (a_star, terms) = pair_terms(structure, 480.0 * t_bar.ln())?;
    Ok(BoundReport::new("asae_constant", 9.0 * a_star.len() as f64, terms)
        .detail("t_bar", t_bar)
        .detail("gamma_star", g))
}

/// Regret bound of the optimistic structured UCB; arms that are optimistic in
/// no model are never pulled and contribute nothing.
pub fn sucb_bound(structure: &Structure, n: u64, c: f64, c_prime: f64) -> Result<BoundReport> {
    check_positive("c", c)?;
    check_positive("c'", c_prime)?;
    let (_, best) = suboptimal_optimal_arms(structure)?;
    let a_star = optimal_arm_set(structure, &structure.all_models())?;
    let ln_n = (n.max(1) as f64).ln();
    let terms = a_star
        .iter()
        .filter(|&i| i != best)
        .map(|i| {
            let delta = true_gap(structure, i);
            let plus = optimistic_models(structure, i);
            if plus.is_empty() {
                return ArmTerm {
                    arm: i,
                    delta,
                    psi: f64::INFINITY,
                    value: 0.0,
                    note: Some("no optimistic model; arm is never pulled".to_string()),
                };
            }
            let psi = psi_unchecked(structure, plus.iter(), &[i]).value;
            ArmTerm { arm: i, delta, psi, value: c * delta * ln_n / psi, note: None }
        })
        .collect();
    Ok(BoundReport::new("sucb", c_prime, terms).detail("c", c))
}

/// Structure-blind reference `sum_i c ln n / Delta_i + c'`.
pub fn ucb_reference_bound(structure: &Structure, n: u64, c: f64, c_prime: f64) -> Result<BoundReport> {
    check_positive("c", c)?;
    check_positive("c'", c_prime)?;
    let ln_n = (n.max(1) as f64).ln();
    let terms = (0..structure.arm_count())
        .filter_map(|i| {
            let delta = true_gap(structure, i);
            (delta > 0.0).then(|| ArmTerm {
                arm: i,
                delta,
                psi: delta * delta,
                value: c * ln_n / delta,
                note: None,
            })
        })
        .collect();
    Ok(BoundReport::new("ucb_reference", c_prime, terms).detail("c", c))
}

/// `ln(delta^2 / (4 e^2 c gamma^2 ln(1/gamma^2)))`, the shared factor of the
/// constant-regret lower bound.
pub fn lower_bound_log_argument(delta_floor: f64, gamma_star: f64, c: f64) -> f64 {
    let g2 = gamma_star * gamma_star;
    delta_floor * delta_floor / (4.0 * E * E * c * g2 * (1.0 / g2).ln())
}

/// One arm's contribution `(delta_i / (2 psi_i)) ln(arg)`, floored at zero.
pub fn lower_bound_term(delta_i: f64, psi_i: f64, delta_floor: f64, gamma_star: f64, c: f64) -> f64 {
    let arg = lower_bound_log_argument(delta_floor, gamma_star, c);
    if arg <= 1.0 || !psi_i.is_finite() {
        0.0
    } else {
        delta_i / (2.0 * psi_i) * arg.ln()
    }
}

/// Lower bound for super-fast convergent strategies on a constant-regret
/// structure. Validity of the small-`gamma*` regime is reported in flags.
pub fn lower_bound_cr(structure: &Structure, c: f64, n: u64) -> Result<BoundReport> {
    check_positive("c", c)?;
    if !is_constant_regret(structure) {
        return Err(Error::InvalidStructure(
            "lower bound needs a worst-case constant-regret structure".to_string(),
        ));
    }
    let (a_star, best) = suboptimal_optimal_arms(structure)?;
    let g = gamma_star(structure);
    let floor = delta_floor(structure);
    let truth = structure.true_model();
    let d: f64 = (0..structure.arm_count())
        .filter(|&i| i != best)
        .map(|i| (truth.optimal_value() - truth.mean(i)).powi(-2))
        .sum();
    let arg = lower_bound_log_argument(floor, g, c);
    let vacuous = arg.is_nan() || arg <= 1.0 || !g.is_finite() || g >= 1.0;
    let terms = a_star
        .iter()
        .filter(|&i| i != best)
        .map(|i| {
            let delta = true_gap(structure, i);
            let psi = psi_unchecked(structure, models_with_optimal_arm(structure, i).iter(), &[i]).value;
            let value = if vacuous { 0.0 } else { lower_bound_term(delta, psi, floor, g, c) };
            ArmTerm { arm: i, delta, psi, value, note: None }
        })
        .collect();
    let horizon_ok = g.is_finite() && (n as f64) >= 1.0 / (g * g);
    let gamma_ok = g.is_finite() && g <= (1.0 / omega(2.0 * c * d) as f64).sqrt();
    let mut report = BoundReport::new("lower_bound_cr", 0.0, terms)
        .flag("vacuous", vacuous)
        .flag("horizon_condition", horizon_ok)
        .flag("gamma_condition", gamma_ok)
        .detail("gamma_star", g)
        .detail("delta_floor", floor)
        .detail("log_argument", arg)
        .detail("d", d);
    if vacuous {
        report.notes.push("log argument is at most 1; bound is vacuous".to_string());
    }
    Ok(report)
}

/// Smallest natural `y` with `z >= x ln z` for every real `z >= y`.
pub fn omega(x: f64) -> u64 {
    if x.is_nan() || x <= E {
        // z - x ln z has its minimum x(1 - ln x) >= 0 at z = x.
        return 1;
    }
    let f = |z: f64| z - x * z.ln();
    // The larger root lies above the minimiser z = x.
    let mut lo = x;
    let mut hi = 2.0 * x;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.ceil() as u64
}

/// Probability bound for the confidence set ever losing the true model:
/// `count * n^(-2 alpha / beta^2) * (log2 n + 2)^2`.
pub fn confidence_failure_bound(n: u64, alpha: f64, beta: f64, a_star_count: usize) -> f64 {
    let n = n as f64;
    a_star_count as f64 * n.powf(-2.0 * alpha / (beta * beta)) * (n.log2() + 2.0).powi(2)
}
