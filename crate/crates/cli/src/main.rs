use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smagflow::io::config::{load_config, ExperimentKind, KEYS};
use smagflow::io::runner::{default_run_dir, error_exit_code, run, verify_dir, RunSummary, OUTPUT_ROOT_VAR};
use smagflow::Error;

#[derive(Parser)]
#[command(name = "smagflow", version, about = "Smagorinsky LES on the periodic square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config: a single trajectory or the experiment it selects.
    Run {
        config: PathBuf,
        /// Run directory (overrides output.dir and the output root).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute the ledger checks on the CSV series in a run directory.
    Verify { run_dir: PathBuf },
    /// Run the viscosity sweep over experiment.nu_list for a config.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print version, build and configuration-key information.
    Info,
}

fn print_summary(s: &RunSummary) {
    for r in &s.reports {
        print!("{}", r.to_text());
    }
    println!("run directory: {}", s.dir.display());
}

fn execute(config: &Path, out: Option<PathBuf>, force: Option<ExperimentKind>) -> Result<RunSummary, Error> {
    let mut cfg = load_config(config)?;
    if let Some(kind) = force {
        cfg.experiment.kind = kind;
    }
    let dir = out.unwrap_or_else(|| default_run_dir(&cfg, config));
    run(&cfg, &dir)
}

fn info() {
    println!("smagflow {}", env!("CARGO_PKG_VERSION"));
    println!("build: {}", if cfg!(debug_assertions) { "debug" } else { "release" });
    println!("target: {}-{}", std::env::consts::ARCH, std::env::consts::OS);
    println!("output root variable: {OUTPUT_ROOT_VAR}");
    println!("exit codes: 0 pass, 1 I/O or checkpoint error, 2 verification failure, 3 blow-up, 4 config error");
    println!("config keys:");
    for (k, d) in KEYS {
        println!("  {k:<30} {d}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Info => {
            info();
            return ExitCode::SUCCESS;
        }
        Command::Run { config, out } => execute(&config, out, None),
        Command::Sweep { config, out } => execute(&config, out, Some(ExperimentKind::Sweep)),
        Command::Verify { run_dir } => verify_dir(&run_dir),
    };
    match result {
        Ok(summary) => {
            print_summary(&summary);
            ExitCode::from(summary.outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
