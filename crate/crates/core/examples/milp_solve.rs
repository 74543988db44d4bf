//! A small capital-budgeting MILP: pick projects under a budget, with one
//! continuous loan variable, and print the solution and solver effort.

use commplan::milp::{solve_lp, solve_milp, MilpModel, Sense};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let values = [8.0, 11.0, 6.0, 4.0];
    let costs = [5.0, 7.0, 4.0, 3.0];
    let mut m = MilpModel::new();
    let pick: Vec<_> = (0..4).map(|i| m.add_binary(format!("pick{i}"))).collect();
    let loan = m.add_continuous(0.0, 3.0, "loan")?;

    // cost <= 14 + loan, the loan costs 1.5 per unit
    let mut row: Vec<_> = pick.iter().zip(costs).map(|(&v, c)| (v, c)).collect();
    row.push((loan, -1.0));
    m.add_constraint(row, Sense::Le, 14.0)?;
    // projects 0 and 1 exclude each other
    m.add_constraint([(pick[0], 1.0), (pick[1], 1.0)], Sense::Le, 1.0)?;
    for (&v, w) in pick.iter().zip(values) {
        m.add_objective_term(v, -w)?;
    }
    m.add_objective_term(loan, 1.5)?;

    let relaxed = solve_lp(&m);
    let s = solve_milp(&m);
    println!(
        "status {:?}, objective {:.3} (LP relaxation {:.3})",
        s.status, s.objective, relaxed.objective
    );
    for (i, &v) in pick.iter().enumerate() {
        println!("  project {i}: {}", if s.values[v.0] > 0.5 { "yes" } else { "no" });
    }
    println!("  loan {:.3}", s.values[loan.0]);
    println!(
        "{} nodes, {} simplex iterations",
        s.stats.nodes, s.stats.simplex_iterations
    );
    println!("\n{}", m.to_lp_string("capital budgeting"));
    Ok(())
}
