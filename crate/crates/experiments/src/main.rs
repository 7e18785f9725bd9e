use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use avgpg_experiments::dataset::Table;
use avgpg_experiments::plot::emit_plotdata;
use avgpg_experiments::runs::{self, effective_workers};
use avgpg_experiments::{Dataset, ExperimentConfig, ExperimentError, ExperimentKind};
use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

#[derive(Parser, Debug)]
#[command(name = "avgpg", version, about = "Average-reward policy-gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Flat TOML config; defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces the seed list by `seed..seed + len(seeds)`.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 picks automatically. AVGPG_WORKERS overrides it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Exit with code 1 when any row failed.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Improvement curves over instance sizes.
    SizeSweep,
    /// Curves over reward-diameter levels on a fixed kernel.
    RewardDiameter,
    /// Curves over kernel-diameter levels.
    CpSweep,
    /// C_p and C_r estimates over size grids and generator families.
    ConstantScaling,
    /// Oracle, certified constants and per-step inequality checks.
    BoundVerify,
    /// Vanishing-discount limit and discounted envelopes.
    DiscountCompare,
    /// Complexity constants of the first configured instance as JSON.
    Constants,
    /// Evaluation of the starting policy on the first configured instance.
    Evaluate,
    /// Reshapes an experiment CSV into x,y,group series.
    Plotdata {
        #[arg(long)]
        input: PathBuf,
        /// Experiment kind that produced the input.
        #[arg(long)]
        kind: String,
    },
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::SizeSweep => ExperimentKind::SizeSweep,
            Command::RewardDiameter => ExperimentKind::RewardDiameter,
            Command::CpSweep => ExperimentKind::CpSweep,
            Command::ConstantScaling => ExperimentKind::ConstantScaling,
            Command::BoundVerify => ExperimentKind::BoundVerify,
            Command::DiscountCompare => ExperimentKind::DiscountCompare,
            Command::Constants => ExperimentKind::Constants,
            Command::Evaluate => ExperimentKind::Evaluate,
            Command::Plotdata { .. } => return None,
        })
    }
}

fn load_config(global: &GlobalArgs, kind: ExperimentKind) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed_override {
        config.override_seeds(seed);
    }
    if let Some(w) = global.workers {
        config.workers = w;
    }
    config.workers = effective_workers(config.workers);
    config.validate(kind)?;
    Ok(config)
}

fn write_all(out: &Path, datasets: &[Dataset]) -> Result<usize> {
    let mut failures = 0;
    for ds in datasets {
        let path = ds.write(out).with_context(|| format!("writing {}", ds.file_name()))?;
        info!("wrote {} rows to {}", ds.rows.len(), path.display());
        failures += ds.failures;
    }
    Ok(failures)
}

fn write_json(out: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
    info!("wrote {}", path.display());
    Ok(())
}

/// Runs the experiment and returns the number of failed rows.
fn run(kind: ExperimentKind, config: &ExperimentConfig, out: &Path) -> Result<usize> {
    info!("running {kind} with seeds {:?}", config.seeds);
    match kind {
        ExperimentKind::SizeSweep => {
            let (a, b) = runs::curve_datasets("size_sweep", &runs::size_sweep(config));
            write_all(out, &[a, b])
        }
        ExperimentKind::RewardDiameter => {
            let (a, b) = runs::curve_datasets("reward_diameter", &runs::reward_diameter_sweep(config));
            write_all(out, &[a, b])
        }
        ExperimentKind::CpSweep => {
            let (a, b) = runs::curve_datasets("cp_sweep", &runs::cp_sweep(config));
            write_all(out, &[a, b])
        }
        ExperimentKind::ConstantScaling => {
            write_all(out, &[runs::scaling_dataset(&runs::constant_scaling(config))])
        }
        ExperimentKind::BoundVerify => {
            let results = runs::bound_verification(config);
            let (traces, summary) = runs::bound_datasets(&results);
            let failed_checks = results
                .iter()
                .filter(|r| r.result.as_ref().is_ok_and(|o| !o.report.passed()))
                .count();
            println!(
                "bound-verify: {} instances, {} with violated inequalities, {} failed",
                results.len(),
                failed_checks,
                summary.failures
            );
            Ok(write_all(out, &[traces, summary])? + failed_checks)
        }
        ExperimentKind::DiscountCompare => {
            write_all(out, &[runs::discount_dataset(&runs::discount_compare(config))])
        }
        ExperimentKind::Constants => {
            write_json(out, "constants.json", &runs::constants_report(config)?)?;
            Ok(0)
        }
        ExperimentKind::Evaluate => {
            write_json(out, "evaluate.json", &runs::evaluate_report(config)?)?;
            Ok(0)
        }
    }
}

fn plotdata(input: &Path, kind: &str, out: &Path) -> Result<(), ExperimentError> {
    let table = Table::read(fs::File::open(input)?)?;
    let ds = emit_plotdata(&table, kind)?;
    fs::create_dir_all(out)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let path = out.join(format!("{stem}.plot.csv"));
    ds.write_to(fs::File::create(&path)?)?;
    info!("wrote {} series rows to {}", ds.rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let Some(kind) = cli.command.kind() else {
        let Command::Plotdata { input, kind } = &cli.command else {
            unreachable!()
        };
        return match plotdata(input, kind, &cli.global.out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                error!("{e}");
                ExitCode::from(if e.is_config() { 2 } else { 1 })
            }
        };
    };

    let config = match load_config(&cli.global, kind) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(2);
        }
    };
    match run(kind, &config, &cli.global.out) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) if cli.global.strict => {
            error!("{n} rows failed");
            ExitCode::from(1)
        }
        Ok(n) => {
            warn!("{n} rows failed");
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e:#}");
            let config_error = e.downcast_ref::<ExperimentError>().is_some_and(|e| e.is_config());
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
