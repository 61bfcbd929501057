use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noma_split::bench::{self, ExperimentConfig};
use noma_split::Error;

/// Joint DNN split and NOMA resource allocation experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Run only this seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results, summary and convergence CSVs.
    Run { config: PathBuf },
    /// Compare Li-GD against the brute-force grid oracle.
    OracleCheck {
        config: PathBuf,
        /// Largest accepted ratio of Li-GD utility to the oracle optimum.
        #[arg(long, default_value_t = 1.05)]
        tolerance: f64,
    },
    /// Compare the analytic gradient with central finite differences.
    GradientCheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> noma_split::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seeds = vec![seed];
    }
    Ok(config)
}

fn execute(cli: Cli) -> noma_split::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let config = load(&config, cli.seed)?;
            let dir = cli
                .out
                .or_else(|| config.output.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let output = bench::run(&config)?;
            bench::write_report(&dir, &output)?;
            let infeasible = output.rows.iter().filter(|r| !r.is_feasible()).count();
            log::info!("wrote {} rows to {}", output.rows.len(), dir.display());
            if infeasible > 0 {
                eprintln!("{infeasible} runs were infeasible (flagged with NaN metrics)");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { config, tolerance } => {
            let config = load(&config, cli.seed)?;
            let checks = bench::oracle_check(&config)?;
            println!("seed,ligd_split,oracle_split,ligd_utility,oracle_utility,ratio");
            for c in &checks {
                println!(
                    "{},{},{},{},{},{}",
                    c.seed, c.ligd_split, c.oracle_split, c.ligd_utility, c.oracle_utility, c.ratio
                );
            }
            if let Some(dir) = cli.out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(
                    dir.join("oracle.csv"),
                    bench::to_csv(
                        &checks,
                        &["seed", "ligd_split", "oracle_split", "ligd_utility", "oracle_utility", "ratio"],
                    )?,
                )?;
            }
            let worst = checks.iter().map(|c| c.ratio).fold(0.0, f64::max);
            if worst > tolerance {
                eprintln!("worst ratio {worst} exceeds {tolerance}");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GradientCheck { points, tolerance } => {
            let report = bench::gradient_check(cli.seed.unwrap_or(0), points)?;
            println!(
                "points {} components {} max relative error {:e}",
                report.points, report.components, report.max_rel_error
            );
            if !(report.max_rel_error < tolerance) {
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e @ Error::Infeasible { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
