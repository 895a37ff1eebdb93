use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use twa_cli::{CliError, ScenarioConfig, SweepConfig};

#[derive(Parser)]
#[command(name = "twa", about = "Truncated-Wigner operator-flow toolkit", version)]
struct Cli {
    /// Size of the worker thread pool (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Assert that the run uses no randomness (always true; accepted for
    /// script compatibility).
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve one scenario and write results.csv + manifest.json.
    Run {
        /// Path to a scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the same scenario through both routes and report discrepancies.
    CompareRoutes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the measured-vs-quoted consistency report.
    ErratumReport {
        /// Truncation dimension for the matrix checks.
        #[arg(long, default_value_t = 12)]
        dim: usize,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a cartesian sweep of scenario variations.
    Sweep {
        /// Path to a sweep config (JSON with `base` and `vary`).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; one `cell_NNN/` subdirectory per combination.
        #[arg(long)]
        out: PathBuf,
    },
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        // Ignore the error if a pool already exists (e.g. under a test harness).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let record = twa_cli::run(cfg, Some(&out))?;
            println!(
                "run complete: {} rows -> {}",
                record.rows.len(),
                record.csv_path.display()
            );
            for w in &record.warnings {
                println!("warning: {w}");
            }
            Ok(())
        }
        Cmd::CompareRoutes { config, out } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let record = twa_cli::compare_routes(cfg, Some(&out))?;
            let max = record.extras.route_discrepancy_max.unwrap_or(f64::NAN);
            println!(
                "compare-routes complete: {} rows, max route discrepancy {max:.6e} -> {}",
                record.rows.len(),
                record.csv_path.display()
            );
            for w in &record.warnings {
                println!("warning: {w}");
            }
            Ok(())
        }
        Cmd::ErratumReport { dim, out } => {
            let report = twa_cli::erratum::report(dim);
            if let Some(path) = out {
                std::fs::write(&path, &report)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            println!("{report}");
            Ok(())
        }
        Cmd::Sweep { config, out } => {
            let cfg = SweepConfig::from_file(&config)?;
            let summaries = twa_cli::sweep(cfg, &out)?;
            println!("sweep complete: {} cells -> {}", summaries.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
