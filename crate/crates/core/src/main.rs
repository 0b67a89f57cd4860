use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpm::{run_workload, validate, DataDir, Error, Format, PredictionReport, Tolerances, WorkloadSpec};

#[derive(Parser)]
#[command(name = "gpm", version, about = "GPU performance model: sweeps, validation and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the device catalog.
    Devices {
        #[command(subcommand)]
        action: DevicesAction,
    },
    /// Evaluate a workload sweep.
    Run {
        #[arg(long)]
        workload: PathBuf,
        /// Pin every point to this device.
        #[arg(long)]
        device: Option<String>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the models against the acceptance tolerances.
    Validate {
        #[arg(long)]
        tolerances: Option<PathBuf>,
    },
    /// Re-render a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        format: String,
    },
}

#[derive(Subcommand)]
enum DevicesAction {
    List,
}

/// Text for stdout and whether the command succeeded.
type Outcome = (String, bool);

fn run(cli: Cli) -> Result<Outcome, Error> {
    let data = DataDir::from_env();
    let mut text = String::new();
    match cli.command {
        Command::Devices { action: DevicesAction::List } => {
            let catalog = data.catalog()?;
            let _ = writeln!(text, "{:<8} {:<8} {:>4} {:>9} {:>8} {:>10}", "name", "arch", "SMs", "clock", "memory", "bandwidth");
            for d in catalog.devices() {
                let _ = writeln!(
                    text,
                    "{:<8} {:<8} {:>4} {:>5} MHz {:>4} GiB {:>5} GB/s",
                    d.name, d.architecture.to_string(), d.sm_count, d.max_clock_mhz, d.mem_size_gib, d.mem_bandwidth_gbs
                );
            }
            Ok((text, true))
        }
        Command::Run { workload, device, format, out } => {
            let format: Format = format.parse()?;
            let mut spec = WorkloadSpec::load(&workload)?;
            if let Some(d) = device {
                spec = spec.with_device(&d);
            }
            let (catalog, store) = data.load()?;
            let rendered = run_workload(&spec, &catalog, &store)?.render(format)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, rendered).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?
                }
                None => text = rendered,
            }
            Ok((text, true))
        }
        Command::Validate { tolerances } => {
            let tol = Tolerances::load(tolerances.unwrap_or_else(|| data.tolerances_path()))?;
            let (catalog, store) = data.load()?;
            let result = validate::validate(&catalog, &store, &tol)?;
            for c in &result.criteria {
                let _ = writeln!(text, "{c}");
            }
            let _ = writeln!(text, "overall: {}", if result.pass { "PASS" } else { "FAIL" });
            Ok((text, result.pass))
        }
        Command::Report { input, format } => {
            let format: Format = format.parse()?;
            Ok((PredictionReport::load(&input)?.render(format)?, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok((text, pass)) => {
            // A closed pipe (`gpm validate | head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
