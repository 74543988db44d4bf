//! Runs a bundled scenario end to end, verifies it and writes the SVG plots.
//!
//! `cargo run --example run_and_plot -- [scenario] [out_dir]`

use std::path::PathBuf;

use commplan::cli::{cmd_plot, cmd_run, load_log, RunOverrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scenario = PathBuf::from(args.next().unwrap_or_else(|| "solo".into()));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("commplan-example"));

    let report = cmd_run(&scenario, &RunOverrides::default(), &out)?;
    println!("{}", report.summary());
    let log = out.join("run.json");
    let last = load_log(&log)?.final_step;
    let files = cmd_plot(&log, &[0, last / 2, last], &out)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
