use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use xilearn::harness::{self, Grid, RunConfig, StudyConfig};
use xilearn::oracle;

#[derive(Parser)]
#[command(name = "xilearn", version, about = "Sequential-task transfer experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one agent over a task sequence and write records.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Grid search over learning rates; the grid file is optional TOML
    /// lists (alpha, alpha_w, alpha_r, beta). Use "standard" for the
    /// built-in grid of the configured agent.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: String,
    },
    /// Numerical theory checks; prints one JSON report per line.
    OracleCheck {
        /// contraction, normalization, equivalence, indicator, gpi_bound or all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// SFQL/Xi and QL/Xi return ratios per reward-nonlinearity bucket.
    Nonlinearity {
        #[arg(long)]
        config: PathBuf,
    },
    /// Mean and standard-error curves from every record file below --in.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().cmd {
        Cmd::Run { config } => {
            let cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let record = harness::run(&cfg)?;
            if cfg.output_dir.is_none() {
                print!("{}", record.to_csv()?);
            }
            eprintln!("mean total return {}", harness::sig9(record.mean_total_return()));
        }
        Cmd::Sweep { config, grid } => {
            let cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let grid = if grid == "standard" { Grid::standard(&cfg) } else { Grid::load(grid.as_ref())? };
            let result = harness::sweep(&cfg, &grid)?;
            println!("cell,alpha,alpha_w,alpha_r,beta,mean_total_return,best");
            for (k, c) in result.cells.iter().enumerate() {
                let hp = &c.hyperparams;
                println!(
                    "{k},{},{},{},{},{},{}",
                    harness::sig9(hp.alpha),
                    harness::sig9(hp.alpha_w),
                    harness::sig9(hp.alpha_r),
                    harness::sig9(hp.beta),
                    harness::sig9(c.mean_total_return),
                    k == result.best
                );
            }
        }
        Cmd::OracleCheck { suite, seed } => {
            let reports = oracle::suites::run_suite(&suite, seed)?;
            let mut ok = true;
            for r in &reports {
                println!("{}", serde_json::to_string(r)?);
                ok &= r.pass;
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            eprintln!("{suite}: {} checks, {failed} failed", reports.len());
            return Ok(ok);
        }
        Cmd::Nonlinearity { config } => {
            let study = StudyConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let rows = harness::nonlinearity_study(&study)?;
            println!("mean_error,sfql_total,xi_total,ql_total,sfql_xi_ratio,ql_xi_ratio");
            for r in rows {
                println!(
                    "{},{},{},{},{},{}",
                    harness::sig9(r.mean_error),
                    harness::sig9(r.sfql_total),
                    harness::sig9(r.xi_total),
                    harness::sig9(r.ql_total),
                    harness::sig9(r.sfql_xi_ratio),
                    harness::sig9(r.ql_xi_ratio)
                );
            }
        }
        Cmd::PlotData { input, output, window } => harness::plot_data(&input, &output, window)?,
    }
    Ok(true)
}
