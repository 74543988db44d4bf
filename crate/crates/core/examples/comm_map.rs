//! Base-station quality over a 160 m workspace with two stations and an
//! L-shaped obstacle, and the quality pattern one agent induces.

use commplan::qts::{agent_comm_matrix, base_station_matrix, Grid, PathLossParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Grid::new([0.0, 0.0], 160.0, 3)?;
    let params = PathLossParams::default();
    let stations = [[10.0, 150.0], [150.0, 10.0]];
    let obstacles = [(4, 2), (4, 3), (4, 4), (5, 2)];
    let cap = base_station_matrix(&stations, &obstacles, &g, &params);
    println!("base-station quality (north row first):");
    for row in cap.rows() {
        println!("  {}", row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    }

    let agent = agent_comm_matrix([90.0, 70.0], &g, &params);
    println!("\nquality around an agent at (90, 70):");
    for row in agent.rows() {
        println!(
            "  {}",
            row.iter().map(|c| format!("{c:4.1}")).collect::<Vec<_>>().join(" ")
        );
    }
    Ok(())
}
