//! Hand-coded structures, the randomized generator and structure files.

mod file;

pub use file::{load, save, StructureDocument};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaps::{Provenance, RewardKind, Structure};

/// Top-two gap below which a builder treats a model as tied.
pub const TIE_GAP: f64 = 1e-9;
/// Amount added to the leading arm of a tied model.
pub const TIE_NUDGE: f64 = 1e-6;

/// Default number of grid points per region of the three-region structure.
pub const DEFAULT_GRID: usize = 17;

/// Raises the leading arm of a near-tied mean vector. Returns whether a nudge
/// happened.
pub fn nudge_ties(means: &mut [f64]) -> Result<bool> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    if order.len() < 2 || means[order[0]] - means[order[1]] >= TIE_GAP {
        return Ok(false);
    }
    let top = order[0];
    let raised = (means[top] + TIE_NUDGE).min(1.0);
    if raised - means[order[1]] < TIE_GAP {
        return Err(Error::InvalidModel(format!(
            "cannot separate tied arms {} and {} at mean {}",
            top, order[1], means[top]
        )));
    }
    means[top] = raised;
    Ok(true)
}

fn lerp(from: f64, to: f64, t: f64) -> f64 {
    from + (to - from) * t
}

/// Three-region structure with three arms. The middle arm (index 1) is informative
/// (it drops to 0.2 in the second region) unless `informative_arm2` is false,
/// in which case it is 0.8 everywhere.
///
/// Each region holds `grid` models at interior points `(k+1)/(grid+1)`; the
/// true model is the first-region point closest to the region's midpoint.
pub fn build_figure_left(grid: usize, informative_arm2: bool) -> Result<Structure> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid_per_region must be at least 2, got {grid}"
        )));
    }
    let mut means = Vec::with_capacity(3 * grid);
    let mut flags = Vec::new();
    for region in 0..3 {
        for k in 0..grid {
            let t = (k + 1) as f64 / (grid + 1) as f64;
            let (a0, a1, a2) = match region {
                0 => (lerp(0.85, 0.8, t), 0.8, lerp(0.6, 0.8, t)),
                1 => (lerp(0.8, 0.4, t), 0.2, 0.86),
                _ => (0.4, 0.8, lerp(0.8, 0.6, t)),
            };
            let a1 = if informative_arm2 { a1 } else { 0.8 };
            let mut m = vec![a0, a1, a2];
            if nudge_ties(&mut m)? {
                flags.push(format!("nudged model {}", means.len()));
            }
            means.push(m);
        }
    }
    let true_index = (0..grid)
        .min_by(|&a, &b| {
            let da = ((a + 1) as f64 / (grid + 1) as f64 - 0.5).abs();
            let db = ((b + 1) as f64 / (grid + 1) as f64 - 0.5).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    if !informative_arm2 {
        flags.push("non-informative arm index 1".to_string());
    }
    Ok(Structure::from_means(means, true_index, RewardKind::Bernoulli)?.with_provenance(
        Provenance {
            builder: format!("figure_left(grid={grid})"),
            seed: None,
            flags,
        },
    ))
}

/// Value of the second arm (index 1) in the fourth region of the four-region
/// structure, as drawn in the plot of the structure. Parameter names count
/// arms from 1 like the figures; indices everywhere else are 0-based.
pub const FIGURE_RIGHT_ARM2_REGION4: f64 = 0.92;
/// The same value as listed in the textual description, which makes the
/// second arm optimal nowhere.
pub const FIGURE_RIGHT_ARM2_REGION4_TEXT: f64 = 0.2;

/// Four-region, four-arm structure with region-constant means; the true
/// model is the first region.
pub fn build_figure_right() -> Structure {
    build_figure_right_with(FIGURE_RIGHT_ARM2_REGION4).expect("hand-coded structure is valid")
}

/// [`build_figure_right`] with an explicit second-arm value for the fourth region.
pub fn build_figure_right_with(arm2_region4: f64) -> Result<Structure> {
    let means = vec![
        vec![0.8, 0.7, 0.6, 0.5],
        vec![0.8, 0.7, 0.84, 0.1],
        vec![0.8, 0.4, 0.6, 0.88],
        vec![0.8, arm2_region4, 0.6, 0.5],
    ];
    let mut flags = Vec::new();
    if arm2_region4 != FIGURE_RIGHT_ARM2_REGION4 {
        flags.push(format!("arm index 1 region 4 = {arm2_region4}"));
    }
    Ok(
        Structure::from_means(means, 0, RewardKind::Bernoulli)?.with_provenance(Provenance {
            builder: "figure_right".to_string(),
            seed: None,
            flags,
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub base_model_count: usize,
    pub arm_count: usize,
    pub hard_model_count: usize,
    pub seed: u64,
    pub optimistic_scale: f64,
    pub shrink_factor: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            base_model_count: 100,
            arm_count: 50,
            hard_model_count: 50,
            seed: 0,
            optimistic_scale: 0.2,
            shrink_factor: 0.1,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_model_count == 0 || self.hard_model_count == 0 {
            return Err(Error::InvalidParameter("model counts must be positive".into()));
        }
        if self.arm_count < 3 {
            return Err(Error::InvalidParameter(format!(
                "arm_count must be at least 3, got {}",
                self.arm_count
            )));
        }
        if !(self.optimistic_scale > 0.0 && self.optimistic_scale <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "optimistic_scale must lie in (0, 1], got {}",
                self.optimistic_scale
            )));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrink_factor must lie in (0, 1), got {}",
                self.shrink_factor
            )));
        }
        Ok(())
    }
}

/// Smallest accepted draw of the optimistic raise; smaller draws are redrawn
/// so every hard model is strictly optimistic.
const MIN_EPSILON: f64 = 1e-6;

/// Uniform random base models plus "hard" copies of the true model in which
/// one sub-optimal arm becomes optimal and optimistic and another arm shrinks.
pub fn generate_random(spec: &GeneratorSpec) -> Result<Structure> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let arms = spec.arm_count;
    let mut flags = Vec::new();
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(spec.base_model_count + spec.hard_model_count);
    for index in 0..spec.base_model_count {
        let mut m: Vec<f64> = (0..arms).map(|_| rng.random::<f64>()).collect();
        if nudge_ties(&mut m)? {
            flags.push(format!("nudged model {index}"));
        }
        means.push(m);
    }
    let true_index = rng.random_range(0..spec.base_model_count);
    let truth = means[true_index].clone();
    let best = (0..arms)
        .max_by(|&a, &b| truth[a].total_cmp(&truth[b]))
        .unwrap_or(0);
    let top = truth[best];

    for h in 0..spec.hard_model_count {
        let index = means.len();
        let mut m = truth.clone();
        let raised = loop {
            let arm = rng.random_range(0..arms);
            if arm != best {
                break arm;
            }
        };
        let shrunk = loop {
            let arm = rng.random_range(0..arms);
            if arm != best && arm != raised {
                break arm;
            }
        };
        let epsilon = loop {
            let e: f64 = rng.random();
            if e >= MIN_EPSILON {
                break e;
            }
        };
        let target = top + spec.optimistic_scale * epsilon;
        if target > 1.0 {
            flags.push(format!("clamped hard model {h} (model {index})"));
        }
        m[raised] = target.min(1.0);
        m[shrunk] *= spec.shrink_factor;
        if nudge_ties(&mut m)? {
            flags.push(format!("nudged model {index}"));
        }
        means.push(m);
    }
    Ok(
        Structure::from_means(means, true_index, RewardKind::Bernoulli)?.with_provenance(
            Provenance {
                builder: "random".to_string(),
                seed: Some(spec.seed),
                flags,
            },
        ),
    )
}
