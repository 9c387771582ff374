use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use structbandit::gaps::{classify, delta_floor, gamma_star, Structure};
use structbandit::simulation::{run_batch, write_outputs, ExperimentConfig};
use structbandit::structures::{
    build_figure_left, build_figure_right_with, generate_random, load, save, GeneratorSpec,
    DEFAULT_GRID, FIGURE_RIGHT_ARM2_REGION4,
};
use structbandit::suite::{run_suite, Scale};
use structbandit::theory::{
    asae_bound, asae_constant_bound, deterministic_sequences, lower_bound_cr, sae_bound, sucb_bound,
    ucb_reference_bound,
};
use structbandit::Error;

#[derive(Parser)]
#[command(name = "structbandit", version, about = "Structured bandit experiments and bounds")]
struct Cli {
    /// Worker threads for batch runs (defaults to one per core).
    #[arg(long, global = true, env = "STRUCTBANDIT_WORKERS")]
    workers: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builder {
    FigureLeft,
    FigureRight,
    Random,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Bound {
    Sae,
    Asae,
    Const,
    Sucb,
    Ucb,
    Lower,
}

#[derive(clap::Args)]
struct StructureArgs {
    /// Structure file to load.
    #[arg(long, conflicts_with = "builder")]
    structure: Option<PathBuf>,
    /// Built-in structure to use instead of a file.
    #[arg(long, value_enum)]
    builder: Option<Builder>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate regret bounds and elimination sequences for a structure.
    Theory {
        #[command(flatten)]
        source: StructureArgs,
        #[arg(long, value_enum)]
        bound: Vec<Bound>,
        /// Print the deterministic elimination sequences.
        #[arg(long)]
        sequences: bool,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        /// Constant of the optimistic and lower bounds.
        #[arg(long, default_value_t = 8.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c_prime: f64,
        /// Write the document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report which structure classes a structure belongs to.
    Classify {
        #[command(flatten)]
        source: StructureArgs,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
    },
    /// Build a structure and save it to a file.
    Gen {
        #[arg(long, value_enum)]
        builder: Builder,
        #[arg(long)]
        out: PathBuf,
        /// Generator spec file for the random builder.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the random builder (overrides the spec file).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Make the second arm (index 1) of the left structure non-informative.
        #[arg(long)]
        non_informative: bool,
        #[arg(long, default_value_t = FIGURE_RIGHT_ARM2_REGION4)]
        arm2_region4: f64,
    },
    /// Regenerate the reference experiments and check their orderings.
    PaperSuite {
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        #[arg(long, default_value = "paper-suite")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exit with status 1 when a check fails.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

/// Either a bad invocation/config (exit 2) or a failure while running (exit 1).
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::RunFailed { .. } | Error::Csv(_) => Failure::Runtime(e.to_string()),
            Error::Io { ref path, .. } if !path.exists() => Failure::Usage(e.to_string()),
            Error::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<ExitCode> {
    if cli.workers == Some(0) {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let workers = cli.workers;
    match cli.command {
        Command::Run { config, out, seed } => cmd_run(&config, &out, seed, workers),
        Command::Theory {
            source,
            bound,
            sequences,
            alpha,
            beta,
            n,
            c,
            c_prime,
            out,
        } => {
            let structure = resolve_structure(&source)?;
            let doc = theory_document(&structure, &bound, sequences, alpha, beta, n, c, c_prime)?;
            emit(&doc, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify { source, alpha, beta, n } => {
            let structure = resolve_structure(&source)?;
            let seq = deterministic_sequences(&structure, alpha, beta, n)?;
            let class = classify(&structure, Some(&seq));
            let doc = json!({
                "worst_case": class.worst_case,
                "optimistic": class.optimistic,
                "constant_regret": class.constant_regret,
                "gamma_star": finite_or_null(gamma_star(&structure)),
                "delta_floor": finite_or_null(delta_floor(&structure)),
            });
            emit(&doc, None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            builder,
            out,
            config,
            seed,
            grid,
            non_informative,
            arm2_region4,
        } => {
            let structure = match builder {
                Builder::FigureLeft => build_figure_left(grid, !non_informative)?,
                Builder::FigureRight => build_figure_right_with(arm2_region4)?,
                Builder::Random => {
                    let mut spec = match config {
                        Some(path) => read_json::<GeneratorSpec>(&path)?,
                        None => GeneratorSpec::default(),
                    };
                    if let Some(seed) = seed {
                        spec.seed = seed;
                    }
                    generate_random(&spec)?
                }
            };
            for flag in &structure.provenance().flags {
                info!("{flag}");
            }
            save(&structure, &out)?;
            println!("wrote {} ({} models, {} arms)", out.display(), structure.model_count(), structure.arm_count());
            Ok(ExitCode::SUCCESS)
        }
        Command::PaperSuite { scale, out, seed, strict } => {
            let scale = match scale {
                ScaleArg::Desk => Scale::Desk,
                ScaleArg::Full => Scale::Full,
            };
            let report = run_suite(scale, seed, &out, workers)?;
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                println!("{status} {} ({})", check.name, check.detail);
            }
            let summary = serde_json::to_string_pretty(&report.checks).expect("checks serialize");
            let path = out.join("summary.json");
            fs::write(&path, summary + "\n").map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} checks passed", report.checks.len() - failed, report.checks.len());
            Ok(if strict && failed > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

fn cmd_run(config_path: &Path, out: &Path, seed: Option<u64>, workers: Option<usize>) -> CliResult<ExitCode> {
    let mut config = ExperimentConfig::from_file(config_path)?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    config.validate()?;
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    info!("running {} ({} runs, horizon {})", config.name, config.runs, config.horizon);
    let batch = run_batch(&config, workers, base_dir)?;
    write_outputs(out, &batch).map_err(|e| Failure::Runtime(e.to_string()))?;
    for agg in &batch.aggregates {
        let (mean, half) = agg.final_regret();
        println!("{:<8} regret at {}: {mean:.3} ± {half:.3}", agg.label, config.horizon);
    }
    Ok(ExitCode::SUCCESS)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn resolve_structure(args: &StructureArgs) -> CliResult<Structure> {
    match (&args.structure, args.builder) {
        (Some(path), _) => Ok(load(path)?),
        (None, Some(Builder::FigureLeft)) => Ok(build_figure_left(DEFAULT_GRID, true)?),
        (None, Some(Builder::FigureRight)) => Ok(build_figure_right_with(FIGURE_RIGHT_ARM2_REGION4)?),
        (None, Some(Builder::Random)) => Ok(generate_random(&GeneratorSpec::default())?),
        (None, None) => Err(Failure::Usage("pass --structure <file> or --builder <name>".into())),
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

#[allow(clippy::too_many_arguments)]
fn theory_document(
    structure: &Structure,
    bounds: &[Bound],
    sequences: bool,
    alpha: f64,
    beta: f64,
    n: u64,
    c: f64,
    c_prime: f64,
) -> CliResult<Value> {
    let mut reports = Vec::new();
    let needs_sequences = sequences || bounds.contains(&Bound::Sae);
    let seq = if needs_sequences {
        Some(deterministic_sequences(structure, alpha, beta, n)?)
    } else {
        None
    };
    for bound in bounds {
        let report = match bound {
            Bound::Sae => sae_bound(structure, seq.as_ref().expect("computed above"), n),
            Bound::Asae => asae_bound(structure, n),
            Bound::Const => asae_constant_bound(structure),
            Bound::Sucb => sucb_bound(structure, n, c, c_prime),
            Bound::Ucb => ucb_reference_bound(structure, n, c, c_prime),
            Bound::Lower => lower_bound_cr(structure, c, n),
        };
        // A failed assumption is reported in place; other bounds still run.
        reports.push(match report {
            Ok(r) => serde_json::to_value(r).expect("report serializes"),
            Err(e @ (Error::AssumptionViolated(_) | Error::InvalidStructure(_))) => {
                json!({ "name": bound_name(*bound), "error": e.to_string() })
            }
            Err(e) => return Err(e.into()),
        });
    }
    let mut doc = json!({ "bounds": reports });
    if sequences {
        let seq = seq.expect("computed above");
        doc["sequences"] = json!({
            "alpha": seq.alpha,
            "beta": seq.beta,
            "n": seq.n,
            "k_beta": seq.k_beta,
            "phases": (0..seq.phases())
                .map(|h| json!({
                    "phase": h,
                    "active": seq.active[h].as_slice(),
                    "eliminated": seq.eliminated[h].as_slice(),
                    "guaranteed": seq.guaranteed[h].as_slice(),
                }))
                .collect::<Vec<_>>(),
            "last_active": seq.last_active,
            "unresolved": seq.unresolved.as_slice(),
            "alpha_mismatch": seq.alpha_mismatch,
        });
    }
    Ok(doc)
}

fn bound_name(bound: Bound) -> &'static str {
    match bound {
        Bound::Sae => "sae",
        Bound::Asae => "asae",
        Bound::Const => "asae_constant",
        Bound::Sucb => "sucb",
        Bound::Ucb => "ucb_reference",
        Bound::Lower => "lower_bound_cr",
    }
}

fn emit(doc: &Value, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(doc).expect("document serializes") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
