//! Runs the two-agent capacity conflict through the receding-horizon planner
//! and prints who planned when, and the trajectories.

use commplan::cli::Scenario;
use commplan::planner::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::bundled("toy_2agent").ok_or("missing bundled scenario")?;
    let out = run(&sc.mission()?)?;
    let log = &out.log;
    for p in &log.periods {
        let plans: Vec<String> = p
            .plans
            .iter()
            .map(|s| {
                format!(
                    "agent {} {:?} (neighbors {:?})",
                    s.agent, s.plan.status, s.neighbors_used
                )
            })
            .collect();
        println!("t={:2} order {:?}: {}", p.t, p.assembly_order, plans.join(", "));
    }
    for &id in &log.agents {
        let path: Vec<String> = log
            .rows_of(id)
            .iter()
            .map(|r| format!("({:.0},{:.0})", r.p1, r.p2))
            .collect();
        println!("agent {id}: {}", path.join(" "));
    }
    println!(
        "arrivals {:?}, median solve {:.4} s",
        log.arrivals,
        out.median_solve_seconds().unwrap_or(0.0)
    );
    Ok(())
}
