use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use aoi_lab::{run, ExperimentSpec, Mode, Overrides, RunOptions};
use clap::Parser;

/// Age-of-Information experiments: closed forms, simulation, thresholds.
#[derive(Debug, Parser)]
#[command(name = "aoi-lab", version)]
struct Cli {
    mode: Mode,
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Write one event trace per simulated row into this directory.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        replications: cli.replications,
        horizon: cli.horizon,
    };
    let spec = match ExperimentSpec::load(&cli.config, cli.mode, overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &cli.trace {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("cannot create {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    let report = run(
        &spec,
        &RunOptions {
            trace_dir: cli.trace.clone(),
        },
    );
    let written = File::create(&cli.out)
        .map_err(csv::Error::from)
        .and_then(|f| report.write_csv(BufWriter::new(f)));
    if let Err(e) = written {
        eprintln!("cannot write {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    if report.has_failures() {
        for r in report.rows.iter().filter(|r| r.failed) {
            eprintln!("{} {:?} {}: {}", r.param, r.value, r.strategy, r.flags.join("; "));
        }
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
