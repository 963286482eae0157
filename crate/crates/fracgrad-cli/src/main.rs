//! Command-line front end: `fracgrad run <configs…>` executes scenarios and
//! prints one PASS/FAIL line per assertion (exit 0 iff all pass);
//! `fracgrad sweep <config> --axis s|resolution` prints a CSV table.

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use fracgrad_cli::runner::{self, RunOptions, SweepAxis};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fracgrad",
    about = "Fractional least-gradient scenario runner",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output root directory (default: ./out). Kernel tables are cached in
    /// <out>/.kernel_cache unless FRACGRAD_KERNEL_CACHE overrides it.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the instance pool (default: one per CPU).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override every config's verification seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run scenario files: solve, write artifacts, evaluate assertions.
    Run {
        /// Scenario TOML files, executed in order.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print a one-row-per-axis-value CSV for a scenario (no artifacts
    /// besides the table itself).
    Sweep {
        config: PathBuf,
        /// Axis to vary; the other axis is fixed at its last config entry.
        #[arg(long, value_enum)]
        axis: AxisArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    S,
    Resolution,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let opts = RunOptions {
        out_root: cli.out,
        jobs: cli.jobs,
        seed_override: cli.seed,
        write_artifacts: true,
    };
    match cli.cmd {
        Cmd::Run { configs } => {
            let mut all_passed = true;
            for path in &configs {
                let outcome = runner::run_file(path, &opts)?;
                print!("{}", runner::format_results(&outcome.name, &outcome.assertions));
                if outcome.assertions.is_empty() {
                    println!("[DONE] {} — no assertions attached", outcome.name);
                }
                all_passed &= outcome.all_passed();
            }
            Ok(all_passed)
        }
        Cmd::Sweep { config, axis } => {
            let axis = match axis {
                AxisArg::S => SweepAxis::S,
                AxisArg::Resolution => SweepAxis::Resolution,
            };
            let csv = runner::sweep_file(&config, axis, &opts)?;
            print!("{csv}");
            Ok(true)
        }
    }
}
