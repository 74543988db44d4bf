//! Builds the quadtree over a capacity map, generates the obstacle and
//! capacity patterns and checks them against two occupancy snapshots.

use commplan::qts::{build_qts, eval_tssl, failing_node, generate_patterns, reference_capacity_rows, GridMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cap = GridMatrix::from_rows(reference_capacity_rows())?;
    let q = build_qts(&cap.to_f64())?;
    println!("{} nodes, root valuation {:.4}", q.node_count(), q.valuation(q.root()));

    let patterns = generate_patterns(&cap)?;
    for (k, psi) in patterns.psi.iter().enumerate() {
        println!("psi{}: {psi}\n", k + 1);
    }

    let mut counts = GridMatrix::filled(8, 0u32);
    counts.set(0, 0, 3);
    counts.set(3, 4, 1);
    let snap = build_qts(&counts.to_f64())?;
    println!(
        "three agents in the NW corner: {}",
        eval_tssl(&patterns.conjunction(), &snap, snap.root())
    );

    counts.set(2, 4, 1); // an obstacle cell
    let snap = build_qts(&counts.to_f64())?;
    let f = patterns.obstacles();
    let v = failing_node(f, &snap, snap.root());
    println!(
        "one agent on an obstacle: {} (fails at {v:?})",
        eval_tssl(f, &snap, snap.root())
    );
    Ok(())
}
