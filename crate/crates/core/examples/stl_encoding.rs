//! Reach-avoid for one double integrator, encoded as a MILP: reach the box
//! around (40, 10) within 12 steps while never entering the wall at
//! 15 <= p1 <= 25, p2 <= 20.

use commplan::encoder::{decode, encode_dynamics, encode_velocity_polygon, require_stl, AgentModel};
use commplan::logic::parse_stl;
use commplan::milp::solve_milp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let am = AgentModel::double_integrator(2.0, 6.0)?;
    let horizon = 13;
    let mut model = commplan::milp::MilpModel::new();
    let mut ctx = encode_dynamics(&mut model, &am, &[0.0, 10.0, 0.0, 0.0], 0, horizon, None)?;
    encode_velocity_polygon(&mut model, &ctx, &am, 8)?;

    let spec = parse_stl(
        "F[0,12](x1 >= 38 && x1 <= 42 && x2 >= 8 && x2 <= 12) \
         && G[0,12](x1 < 15 || x1 > 25 || x2 > 20)",
    )?;
    // signal is (p1, p2, v1, v2)
    require_stl(&mut model, &mut ctx, &spec.with_dimension(4), 0)?;
    // minimal total input effort
    let mut effort = Vec::new();
    for u in &ctx.inputs {
        for &k in u {
            let s = model.add_continuous(0.0, am.u_max, "effort")?;
            model.add_constraint([(k, 1.0), (s, -1.0)], commplan::milp::Sense::Le, 0.0)?;
            model.add_constraint([(k, -1.0), (s, -1.0)], commplan::milp::Sense::Le, 0.0)?;
            effort.push(s);
        }
    }
    for s in effort {
        model.add_objective_term(s, 1.0)?;
    }

    println!(
        "{} variables, {} rows, {} binaries",
        model.num_vars(),
        model.num_constraints(),
        model.num_binaries()
    );
    let sol = solve_milp(&model);
    println!(
        "status {:?}, effort {:.3}, {} nodes",
        sol.status, sol.objective, sol.stats.nodes
    );
    if sol.is_optimal() {
        let plan = decode(&ctx, &sol.values);
        for (t, x) in plan.states.iter().enumerate() {
            println!(
                "t={t:2}  p=({:6.2}, {:6.2})  v=({:5.2}, {:5.2})",
                x[0], x[1], x[2], x[3]
            );
        }
    }
    Ok(())
}
