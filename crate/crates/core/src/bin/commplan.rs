use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use commplan::cli::{cmd_plot, cmd_run, cmd_verify, Report, RunOverrides};

#[derive(Parser)]
#[command(
    name = "commplan",
    version,
    about = "Communication-aware multi-agent motion planning"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan a scenario (file path or bundled name) and verify the run.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Solve independent agents of a period concurrently.
        #[arg(long)]
        parallel: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-verify a stored run log against its scenario.
    Verify { log: PathBuf, scenario: PathBuf },
    /// Draw trajectories and per-step occupancy heatmaps.
    Plot {
        log: PathBuf,
        #[arg(long, value_delimiter = ',')]
        steps: Vec<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn verdict(r: Report) -> ExitCode {
    println!("{}", r.summary());
    if r.all_verdicts {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Run {
            scenario,
            seed,
            alpha,
            horizon,
            parallel,
            out,
        } => {
            let o = RunOverrides {
                seed,
                alpha,
                horizon,
                parallel,
            };
            cmd_run(&scenario, &o, &out).map(verdict)
        }
        Cmd::Verify { log, scenario } => cmd_verify(&log, &scenario).map(verdict),
        Cmd::Plot { log, steps, out } => cmd_plot(&log, &steps, &out).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
