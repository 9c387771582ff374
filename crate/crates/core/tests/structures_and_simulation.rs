use std::fs;
use std::path::Path;

use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use structbandit::algorithms::{AgentConfig, Algorithm};
use structbandit::gaps::optimistic_models;
use structbandit::simulation::{
    read_regret_csv, run_batch, stable_seed, student_t_quantile, t_interval, write_outputs,
    ExperimentConfig, StructureSource,
};
use structbandit::structures::{generate_random, save, GeneratorSpec};

fn specs() -> impl Strategy<Value = GeneratorSpec> {
    (1usize..8, 3usize..9, 1usize..8, any::<u64>(), 0.01f64..=1.0, 0.01f64..0.99).prop_map(
        |(base, arms, hard, seed, scale, shrink)| GeneratorSpec {
            base_model_count: base,
            arm_count: arms,
            hard_model_count: hard,
            seed,
            optimistic_scale: scale,
            shrink_factor: shrink,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generator_contract(spec in specs()) {
        let s = generate_random(&spec).unwrap();
        prop_assert_eq!(s.model_count(), spec.base_model_count + spec.hard_model_count);
        prop_assert_eq!(s.arm_count(), spec.arm_count);
        prop_assert!(s.true_index() < spec.base_model_count);
        prop_assert_eq!(&generate_random(&spec).unwrap(), &s);

        let truth = s.true_model();
        let best = truth.optimal_arm();
        for h in spec.base_model_count..s.model_count() {
            let m = s.model(h);
            // Tie nudges move means by at most a few micro-units.
            let changed: Vec<usize> = (0..spec.arm_count)
                .filter(|&j| (m.mean(j) - truth.mean(j)).abs() > 1e-5)
                .collect();
            prop_assert!(changed.len() <= 2, "model {h} changed arms {changed:?}");
            let raised = m.optimal_arm();
            prop_assert_ne!(raised, best);
            prop_assert!(m.mean(raised) > truth.mean(best));
            prop_assert!(m.mean(raised) <= 1.0);
            prop_assert!(optimistic_models(&s, raised).contains(h));
        }
    }

    #[test]
    fn t_quantile_matches_statrs(p in 0.51f64..0.9995, dof in 1usize..200) {
        let ours = student_t_quantile(p, dof as f64);
        let oracle = StudentsT::new(0.0, 1.0, dof as f64).unwrap().inverse_cdf(p);
        prop_assert!((ours - oracle).abs() <= 1e-8 * oracle.abs().max(1.0), "{ours} vs {oracle}");
    }
}

#[test]
fn t_interval_half_width() {
    let samples = [1.0, 2.0, 4.0, 7.0, 11.0];
    let (mean, half) = t_interval(&samples, 0.95).unwrap();
    assert!((mean - 5.0).abs() < 1e-12);
    let sd = (samples.iter().map(|x| (x - 5.0f64).powi(2)).sum::<f64>() / 4.0).sqrt();
    let q = StudentsT::new(0.0, 1.0, 4.0).unwrap().inverse_cdf(0.975);
    assert!((half - q * sd / 5.0f64.sqrt()).abs() < 1e-9);
}

#[test]
fn generator_rejects_empty_counts() {
    let spec = GeneratorSpec {
        hard_model_count: 0,
        ..GeneratorSpec::default()
    };
    assert!(generate_random(&spec).is_err());
    let spec = GeneratorSpec {
        arm_count: 2,
        ..GeneratorSpec::default()
    };
    assert!(generate_random(&spec).is_err());
}

#[test]
fn seeds_depend_on_label_not_position() {
    assert_ne!(stable_seed(0, "sae", 0), stable_seed(0, "asae", 0));
    assert_ne!(stable_seed(0, "sae", 0), stable_seed(0, "sae", 1));
    assert_ne!(stable_seed(0, "sae", 0), stable_seed(1, "sae", 0));

    let source = StructureSource::FigureRight { arm2_region4: 0.92 };
    let forward = ExperimentConfig::new("order", source.clone(), 400, 3)
        .with_algorithm(AgentConfig::new(Algorithm::Sucb))
        .with_algorithm(AgentConfig::new(Algorithm::Sae))
        .with_algorithm(AgentConfig::new(Algorithm::Ucb));
    let backward = ExperimentConfig::new("order", source, 400, 3)
        .with_algorithm(AgentConfig::new(Algorithm::Ucb))
        .with_algorithm(AgentConfig::new(Algorithm::Sae))
        .with_algorithm(AgentConfig::new(Algorithm::Sucb));
    let a = run_batch(&forward, Some(1), Path::new(".")).unwrap();
    let b = run_batch(&backward, Some(3), Path::new(".")).unwrap();
    for label in ["sucb", "sae", "ucb"] {
        let (x, xr) = a.get(label).unwrap();
        let (y, yr) = b.get(label).unwrap();
        assert_eq!(x.mean_regret, y.mean_regret, "{label}");
        assert_eq!(x.mean_pulls, y.mean_pulls, "{label}");
        for (r, s) in xr.iter().zip(yr) {
            assert_eq!(r.seed, s.seed);
            assert_eq!(r.pulls, s.pulls);
        }
    }
}

#[test]
fn config_file_with_relative_structure_path() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GeneratorSpec {
        base_model_count: 6,
        arm_count: 4,
        hard_model_count: 3,
        seed: 11,
        ..GeneratorSpec::default()
    };
    let structure = generate_random(&spec).unwrap();
    fs::create_dir(dir.path().join("structures")).unwrap();
    save(&structure, dir.path().join("structures/small.json")).unwrap();
    let config_path = dir.path().join("experiment.json");
    fs::write(
        &config_path,
        r#"{
            "name": "small",
            "structure": {"builder": "file", "path": "structures/small.json"},
            "algorithms": [
                {"algorithm": "sae", "alpha": 2.0, "beta": 1.0},
                {"algorithm": "asae", "eta": 0.1},
                {"algorithm": "ucb", "label": "ucb_wide", "alpha": 4.0}
            ],
            "horizon": 500,
            "runs": 4,
            "base_seed": 9,
            "checkpoints": [10, 100]
        }"#,
    )
    .unwrap();
    let config = ExperimentConfig::from_file(&config_path).unwrap();
    config.validate().unwrap();
    assert_eq!(config.resolved_algorithms()[0].horizon, Some(500));

    let batch = run_batch(&config, Some(2), dir.path()).unwrap();
    assert_eq!(batch.structure.as_ref(), Some(&structure));
    let out = dir.path().join("out");
    write_outputs(&out, &batch).unwrap();
    for label in ["sae", "asae", "ucb_wide"] {
        let rows = read_regret_csv(&out.join(format!("{label}_regret.csv"))).unwrap();
        let steps: Vec<u64> = rows.iter().map(|r| r.0).collect();
        assert_eq!(steps, vec![10, 100, 500]);
        assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(out.join(format!("{label}_pulls.csv")).exists());
    }
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"ucb_wide\""));

    // Resolving from the wrong directory names the missing file.
    let err = run_batch(&config, Some(1), Path::new("/nonexistent")).unwrap_err();
    assert!(err.to_string().contains("small.json"), "{err}");
}

#[test]
fn fresh_random_structures_differ_per_run() {
    let source = StructureSource::Random {
        spec: GeneratorSpec {
            base_model_count: 5,
            arm_count: 4,
            hard_model_count: 2,
            ..GeneratorSpec::default()
        },
        fresh_per_run: true,
    };
    assert!(!source.is_fixed());
    let a = source.build(3, 0, Path::new(".")).unwrap();
    let b = source.build(3, 1, Path::new(".")).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, source.build(3, 0, Path::new(".")).unwrap());
}
