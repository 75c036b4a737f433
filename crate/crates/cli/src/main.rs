//! `hdvar`: estimate residual variance and signal strength from data, run
//! simulation studies, and check the Wishart moment formulas.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input, 3 estimator used
//! outside its regime (for example OLS with d >= n). `moments-check` exits
//! with 1 when any check fails.

mod data;
mod estimate;
mod exit;
mod moments;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdvar::wishart::MomentId;

use crate::estimate::{render_table, run_estimate, OutputFormat, SigmaModel};
use crate::exit::{CliError, CliResult};
use crate::moments::{render_checks, run_moment_checks};
use crate::simulate::{run_simulate, SimulateArgs};

#[derive(Parser)]
#[command(
    name = "hdvar",
    version,
    about = "Method-of-moments variance and SNR estimation for high-dimensional linear models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate sigma^2, tau^2 and their ratio from a CSV file.
    ///
    /// The file needs a header row. The response column is selected by
    /// name (--response); every other column is a predictor. Numbers use a
    /// decimal point.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// Name of the response column.
        #[arg(long, default_value = "y")]
        response: String,
        /// identity | known:<path to d x d csv> | ar1 | spectral | ols
        #[arg(long, default_value = "identity")]
        sigma_model: SigmaModel,
        /// Confidence level of the intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, value_enum, default_value = "json")]
        output: OutputFormat,
    },
    /// Run a simulation study described by a TOML config.
    ///
    /// Writes raw.csv (one row per replicate and estimator) and
    /// summary.json to --out-dir. Output is identical for any --threads.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the dataset of replicate 0 as data_replicate0.csv.
        #[arg(long)]
        dump_data: bool,
    },
    /// Compare closed-form Wishart moments with the Letac expansion and a
    /// Monte Carlo oracle.
    MomentsCheck {
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Restrict to one moment (trW, trW_sq_of_sum, trW2, bWb, bW2b,
        /// trW_bWb, trW_bW2b, bWb_bW2b, bW3b, bW2b_sq).
        #[arg(long)]
        case: Option<MomentId>,
        /// Restrict to one reference point (identity, diagonal, random).
        #[arg(long)]
        point: Option<String>,
    },
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Estimate { data, response, sigma_model, level, output } => {
            let report = run_estimate(&data, &response, &sigma_model, level)?;
            match output {
                OutputFormat::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?
                    )
                }
                OutputFormat::Table => print!("{}", render_table(&report)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config, out_dir, threads, dump_data } => {
            if threads == Some(0) {
                return Err(CliError::Input("--threads must be >= 1".into()));
            }
            let out = run_simulate(&SimulateArgs { config: &config, out_dir: &out_dir, threads, dump_data })?;
            for e in &out.summary.errors {
                eprintln!("{}: failed on {} replicates: {}", e.estimator, e.replicates_failed, e.message);
            }
            println!("wrote {} rows to {}", out.raw.len(), out_dir.join("raw.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::MomentsCheck { draws, seed, case, point } => {
            if draws < 2 {
                return Err(CliError::Input("--draws must be >= 2".into()));
            }
            if let Some(p) = &point {
                if !["identity", "diagonal", "random"].contains(&p.as_str()) {
                    return Err(CliError::Input(format!("unknown point `{p}`")));
                }
            }
            let checks = run_moment_checks(draws, seed, case, point.as_deref())?;
            print!("{}", render_checks(&checks));
            Ok(if checks.iter().all(|c| c.pass) { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
