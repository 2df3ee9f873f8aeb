//! The convex relaxation of the path-selection problem gives a lower bound
//! on every path's cost. Compare it with each enumerated path and show the
//! edge flows it settles on.
//!
//! ```text
//! cargo run --release --example relaxation_bound
//! ```

use std::path::PathBuf;

use gcs_planner::gcs::{relax_solve, round_flows};
use gcs_planner::lp::solve_lp;
use gcs_planner::program::assemble_path_program;
use gcs_planner::scenario::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["static_avoidance", "lane_change", "overtaking"] {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/{name}.json"));
        let problem = load_scenario(&path)?.problem;
        let g = &problem.graph;
        let flows = relax_solve(&problem)?;
        println!("{name}: lower bound {:.6}", flows.lower_bound);
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            println!(
                "  y[{} -> {}] = {:.4}",
                g.vertex(u).id,
                g.vertex(v).id,
                flows.flows[e]
            );
        }
        for p in g.enumerate_paths(problem.settings.max_len) {
            let cost = solve_lp(&assemble_path_program(&problem, &p)?.lp)
                .map(|s| format!("{:.6}", s.objective));
            println!(
                "  path {:<55} {}",
                g.path_ids(&p).join(" -> "),
                cost.unwrap_or_else(|e| e.to_string())
            );
        }
        println!(
            "  rounded to {}\n",
            g.path_ids(&round_flows(&flows, g)?).join(" -> ")
        );
    }
    Ok(())
}
