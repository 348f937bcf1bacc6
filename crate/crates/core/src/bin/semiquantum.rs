use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semiquantum::cli::{self, exit_code, RunManifest, EXIT_CONFIG, EXIT_OK};
use semiquantum::plot::PlotKind;

#[derive(Parser)]
#[command(name = "semiquantum", version, about = "Semiquantum oscillator simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario (config file or bundled name).
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a parameter sweep.
    Sweep {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Render a plot from a time-series CSV.
    Plot {
        csv: PathBuf,
        /// number-overlay, number-difference, energy or phase-A
        #[arg(long)]
        kind: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Integrate one scenario and compute the full diagnostics report.
    Diagnose {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn report(result: semiquantum::Result<RunManifest>) -> i32 {
    match result {
        Ok(m) => {
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(d) = &m.detail {
                eprintln!("{}: {d}", m.status);
            }
            m.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_CONFIG as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    let code = match args.command {
        Command::Simulate { config, out } => report(cli::run_scenario(&config, &out)),
        Command::Diagnose { config, out } => report(cli::run_diagnose(&config, &out)),
        Command::Sweep { file, out } => report(cli::run_sweep(&file, &out)),
        Command::Plot { csv, kind, out } => match kind.parse::<PlotKind>().and_then(|k| cli::plot_csv(&csv, k, &out)) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    };
    ExitCode::from(code as u8)
}
