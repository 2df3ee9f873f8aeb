//! Overtaking a leader that speeds up from 3 to 8 m/s and slows again, with
//! a faster car approaching in the passing lane.
//!
//! ```text
//! cargo run --release --example overtaking
//! ```

use std::path::PathBuf;

use gcs_planner::geometry::{oriented_rectangle, polygon_distance};
use gcs_planner::program::plan;
use gcs_planner::scenario::load_scenario;
use gcs_planner::verify::{audit_plan, ego_yaw};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/overtaking.json");
    let scenario = load_scenario(&fixture)?;
    let result = plan(&scenario.problem)?;
    println!("path {}", result.path.join(" -> "));

    let traj = result.trajectory();
    let limits = &scenario.problem.limits;
    println!("\n   t   ego x  ego y  ego v   leader x  leader v   gap(leader)  gap(passing_lane)");
    let mut t = traj.start_time();
    while t <= traj.end_time() {
        let k = traj.kinematics_at(t)?;
        let yaw = ego_yaw(&k, &scenario.vehicle, limits.v_floor, scenario.ego.yaw);
        let ego = oriented_rectangle(k.position, yaw, scenario.ego.length, scenario.ego.width)?;
        let leader = &scenario.dynamic_obstacles[0];
        let (s, v) = leader.progress(t);
        let gaps: Vec<f64> = scenario
            .dynamic_obstacles
            .iter()
            .map(|o| polygon_distance(&ego, &o.footprint(t, 0.0)))
            .collect();
        println!(
            "{t:4.1} {:7.2} {:6.2} {:6.2} {:10.2} {:9.2} {:13.3} {:18.3}",
            k.position.x,
            k.position.y,
            k.velocity.norm(),
            leader.start().x + s,
            v,
            gaps[0],
            gaps[1]
        );
        t += 0.5;
    }

    let report = audit_plan(&result, &scenario, scenario.audit.dt)?;
    for w in &report.windows {
        println!(
            "\n{} entered at {:.3} s (bound 2.7 s)",
            w.vertex,
            w.entry.unwrap_or(f64::NAN)
        );
    }
    println!(
        "audit: {}",
        if report.passed() {
            "passed".to_string()
        } else {
            report.failures().join("; ")
        }
    );
    Ok(())
}
