//! Two parked cars in the right lane; the ego swerves left around both.
//!
//! ```text
//! cargo run --release --example static_avoidance [OUT_DIR]
//! ```

use std::path::PathBuf;

use gcs_planner::geometry::polygon_distance;
use gcs_planner::program::plan;
use gcs_planner::scenario::{load_scenario, write_result};
use gcs_planner::verify::audit_plan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/static_avoidance.json");
    let scenario = load_scenario(&fixture)?;
    let result = plan(&scenario.problem)?;
    println!(
        "path {} (objective {:.4}, {:.1} ms)",
        result.path.join(" -> "),
        result.objective,
        result.timings.plan_ms
    );
    for c in &result.candidates {
        match c.objective {
            Some(o) => println!("  candidate {:<40} {o:.4}", c.path.join(" -> ")),
            None => println!(
                "  candidate {:<40} {}",
                c.path.join(" -> "),
                c.error.as_deref().unwrap_or("failed")
            ),
        }
    }

    let report = audit_plan(&result, &scenario, scenario.audit.dt)?;
    println!("\n   t      x      y      v    d(obstacle_1)  d(obstacle_2)");
    let traj = result.trajectory();
    for s in report.samples.iter().step_by(50) {
        let k = traj.kinematics_at(s.t)?;
        let ego = gcs_planner::geometry::oriented_rectangle(
            k.position,
            k.velocity.y.atan2(k.velocity.x),
            scenario.ego.length,
            scenario.ego.width,
        )?;
        let d: Vec<String> = scenario
            .static_obstacles
            .iter()
            .map(|o| format!("{:>13.3}", polygon_distance(&ego, &o.footprint())))
            .collect();
        println!(
            "{:5.2} {:6.2} {:6.2} {:6.2} {}",
            s.t,
            s.x,
            s.y,
            s.v,
            d.join("  ")
        );
    }
    let d = report.min_distance.as_ref().unwrap();
    println!(
        "\nminimum clearance {:.3} m to {} at t = {:.2} s",
        d.distance, d.obstacle, d.t
    );
    println!(
        "terminal speed {:.3} m/s (goal {:.1})",
        report.goal.terminal_speed, report.goal.goal_speed
    );

    let out = std::env::args().nth(1).map_or_else(
        || std::env::temp_dir().join("static_avoidance"),
        PathBuf::from,
    );
    let files = write_result(&result, &report, &scenario, &out)?;
    println!("artifacts in {}", files.svg.parent().unwrap().display());
    Ok(())
}
