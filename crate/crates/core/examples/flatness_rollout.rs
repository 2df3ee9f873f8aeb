//! Recover steering and acceleration from the planned lane change through
//! the flat map, drive the full bicycle model with them, and measure how far
//! it drifts from the plan. Halving the lateral offsets halves the curvature
//! the model has to track.
//!
//! ```text
//! cargo run --release --example flatness_rollout
//! ```

use std::path::PathBuf;

use gcs_planner::flatness::{rollout_consistency, sample_flat};
use gcs_planner::program::plan;
use gcs_planner::scenario::{load_scenario, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/lane_change.json");
    let scenario = load_scenario(&fixture)?;
    let floor = scenario.problem.limits.v_floor;
    let traj = plan(&scenario.problem)?.trajectory();

    println!("   t      v      κ (1/m)   β (rad)   δ (rad)   a (m/s²)");
    for (t, _, f) in sample_flat(&traj, &scenario.vehicle, 0.5, floor)? {
        println!(
            "{t:5.2} {:6.2} {:10.5} {:9.5} {:9.5} {:9.3}",
            f.v, f.k, f.beta, f.delta, f.a
        );
    }

    for k in [1.0, 0.5, 0.25] {
        let s = Scenario::from_doc(scenario.doc.scale_lateral(k))?;
        let traj = plan(&s.problem)?.trajectory();
        let r = rollout_consistency(&traj, &s.vehicle, 0.001, floor)?;
        println!(
            "lateral scale {k:4}: max deviation {:.4} m, rms {:.4} m over {:.1} m ({:.3} %)",
            r.max_deviation,
            r.rms_deviation,
            r.path_length,
            100.0 * r.relative_max()
        );
    }
    Ok(())
}
