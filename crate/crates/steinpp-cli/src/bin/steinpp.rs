//! Command line interface: simulation, distances, bound evaluation,
//! experiment sweeps and the dependence test, all driven by one TOML config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use steinpp::lrdtest::{calibrate_critical_value, default_lipschitz_ld, TestConfig};
use steinpp::metrics::{d1, empirical_d2, empirical_dbw, empirical_dtv, CountSample, RealSample};

use steinpp_cli::config::{load_config, ExperimentConfig};
use steinpp_cli::output::write_results;
use steinpp_cli::patterns::load_pattern;
use steinpp_cli::pipeline::{run_experiment, simulate_patterns, single_bound};
use steinpp_cli::HarnessError;

#[derive(Parser)]
#[command(
    name = "steinpp",
    about = "Poisson approximation bounds and experiments for stretched spatial point processes"
)]
struct Cli {
    /// Number of worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the experiment TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample patterns from the configured model and write pattern files.
    Simulate(ConfigArgs),
    /// Empirical distance between pattern files or directories.
    Distance {
        /// d1 | d2 | dtv | dbw
        #[arg(long)]
        metric: String,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Evaluate one bound at the first grid T and print the term breakdown.
    Bound {
        #[command(flatten)]
        config: ConfigArgs,
        /// Theorem label override (e.g. principal-sharp, count-tv).
        #[arg(long)]
        theorem: Option<String>,
    },
    /// Run the configured experiment pipeline and write rows.csv + summary.json.
    Sweep(ConfigArgs),
    /// Run the density experiment (config kind must be density_experiment).
    Density(ConfigArgs),
    /// Run the dependence-test study; optionally test one observed pattern.
    LrdTest {
        #[command(flatten)]
        config: ConfigArgs,
        /// Pattern file (pre-image coordinates) to test after calibration.
        #[arg(long)]
        observed: Option<PathBuf>,
    },
    /// Validate a model against its certificate by simulation.
    Validate(ConfigArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn load(args: &ConfigArgs) -> Result<(ExperimentConfig, String), HarnessError> {
    let (mut config, hash) = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    Ok((config, hash))
}

fn out_dir(config: &ExperimentConfig) -> Result<PathBuf, HarnessError> {
    config
        .out_dir
        .clone()
        .ok_or_else(|| HarnessError::Schema("no output directory (set out_dir or --out)".into()))
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Simulate(args) => {
            let (config, _) = load(&args)?;
            let dir = out_dir(&config)?;
            let written = simulate_patterns(&config, &dir)?;
            println!("wrote {written} pattern files to {}", dir.display());
            Ok(())
        }
        Command::Distance { metric, a, b } => {
            let value = distance(&metric, &a, &b)?;
            println!("{value:.12}");
            Ok(())
        }
        Command::Bound { config, theorem } => {
            let (config, _) = load(&config)?;
            let report = single_bound(&config, theorem.as_deref())?;
            let json = serde_json::json!({
                "theorem": report.theorem.label(),
                "t": report.t,
                "h": report.h,
                "m": report.m,
                "terms": report.terms.iter().map(|(k, v)| (k.to_string(), v)).collect::<std::collections::BTreeMap<_, _>>(),
                "total": report.total,
                "total_clamped": report.total_clamped,
                "epsilon": if report.aux.epsilon.is_finite() {
                    serde_json::json!(report.aux.epsilon)
                } else {
                    serde_json::json!("inf")
                },
                "lambda_lower": report.aux.lambda_lower,
                "w_of_t": report.aux.w_of_t,
            });
            println!("{}", serde_json::to_string_pretty(&json).expect("serializable"));
            Ok(())
        }
        Command::Sweep(args) | Command::Density(args) | Command::Validate(args) => {
            let (config, hash) = load(&args)?;
            let outcome = run_experiment(&config, &hash)?;
            let dir = out_dir(&config)?;
            let files = write_results(&outcome.rows, &outcome.summary, &dir)?;
            for note in &outcome.summary.notes {
                println!("{note}");
            }
            println!(
                "{} rows -> {} (pass: {:?})",
                outcome.rows.len(),
                files.csv.display(),
                outcome.summary.pass
            );
            Ok(())
        }
        Command::LrdTest { config, observed } => {
            let (config, hash) = load(&config)?;
            let outcome = run_experiment(&config, &hash)?;
            let dir = out_dir(&config)?;
            let files = write_results(&outcome.rows, &outcome.summary, &dir)?;
            for note in &outcome.summary.notes {
                println!("{note}");
            }
            println!(
                "{} rows -> {} (pass: {:?})",
                outcome.rows.len(),
                files.csv.display(),
                outcome.summary.pass
            );
            if let Some(path) = observed {
                let (header, pattern) = load_pattern(&path)?;
                let lrd = config
                    .lrd
                    .as_ref()
                    .ok_or_else(|| HarnessError::Schema("missing [lrd] section".into()))?;
                let space = config.space()?;
                let test_config = TestConfig {
                    alpha: lrd.alpha,
                    smooth_slope: lrd.slope,
                    lipschitz_ld: lrd
                        .lipschitz_ld
                        .unwrap_or_else(|| default_lipschitz_ld(space.total_dims())),
                    epsilon: lrd.epsilon,
                    null_ell: lrd.null_ell,
                    space,
                    t: header.t,
                    w_of_t: header.w,
                    replicates: config.replicates,
                    seed: config.seed,
                };
                let calibrated = calibrate_critical_value(&test_config)?;
                let result = calibrated.run(&pattern)?;
                println!(
                    "observed statistic {:.6}, critical value {:.6}, reject: {}",
                    result.statistic, result.t_alpha, result.reject
                );
            }
            Ok(())
        }
    }
}

fn read_real_sample(path: &Path) -> Result<RealSample, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let values: Result<Vec<f64>, _> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse::<f64>)
        .collect();
    let values = values.map_err(|e| HarnessError::PatternFile(format!("{}: {e}", path.display())))?;
    RealSample::new(values).map_err(HarnessError::from)
}

fn pattern_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

fn distance(metric: &str, a: &Path, b: &Path) -> Result<f64, HarnessError> {
    match metric {
        "d1" => {
            let (_, pa) = load_pattern(a)?;
            let (_, pb) = load_pattern(b)?;
            Ok(d1(&pa, &pb)?)
        }
        "d2" => {
            let pa: Result<Vec<_>, _> =
                pattern_files(a)?.iter().map(|p| load_pattern(p).map(|(_, x)| x)).collect();
            let pb: Result<Vec<_>, _> =
                pattern_files(b)?.iter().map(|p| load_pattern(p).map(|(_, x)| x)).collect();
            Ok(empirical_d2(&pa?, &pb?)?)
        }
        "dtv" => {
            let counts = |dir: &Path| -> Result<CountSample, HarnessError> {
                let counts: Result<Vec<u64>, _> = pattern_files(dir)?
                    .iter()
                    .map(|p| load_pattern(p).map(|(_, x)| x.len() as u64))
                    .collect();
                Ok(CountSample::new(counts?))
            };
            Ok(empirical_dtv(&counts(a)?, &counts(b)?))
        }
        "dbw" => Ok(empirical_dbw(&read_real_sample(a)?, &read_real_sample(b)?)),
        other => Err(HarnessError::Schema(format!(
            "unknown metric '{other}' (expected d1, d2, dtv or dbw)"
        ))),
    }
}
