//! Lane change into a gap between a vehicle in the target lane and a slow
//! leader. The explicit window bounds entry into the transition region.
//!
//! ```text
//! cargo run --release --example lane_change
//! ```

use std::path::PathBuf;

use gcs_planner::program::plan;
use gcs_planner::scenario::load_scenario;
use gcs_planner::timing::TimeBound;
use gcs_planner::verify::audit_plan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/lane_change.json");
    let scenario = load_scenario(&fixture)?;
    for w in &scenario.problem.windows {
        let dwell = w.max_dwell.map_or("free".into(), |d| format!("{d:.3}"));
        println!(
            "window on {}: entry {}, exit {}, max dwell {dwell}",
            w.vertex,
            bound(w.entry),
            bound(w.exit)
        );
    }

    let result = plan(&scenario.problem)?;
    println!("\nregion        enter (s)  leave (s)  dwell (s)");
    for (id, seg) in result.path.iter().zip(&result.segments) {
        let (t0, t1) = (seg.start_time(), seg.end_time());
        println!("{id:<12} {t0:>9.3} {t1:>10.3} {:>10.3}", t1 - t0);
    }

    let report = audit_plan(&result, &scenario, scenario.audit.dt)?;
    let d = report.min_distance.as_ref().unwrap();
    println!(
        "\nminimum clearance {:.3} m to {} at t = {:.2} s",
        d.distance, d.obstacle, d.t
    );
    println!(
        "peak |a_T| {:.2} m/s², peak |a_N| {:.2} m/s², peak |δ| {:.3} rad",
        report.max_abs_a_t.value,
        report.max_abs_a_n.value,
        report.max_abs_delta.map_or(f64::NAN, |e| e.value)
    );
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

fn bound(b: Option<TimeBound>) -> String {
    match b {
        None => "free".into(),
        Some(TimeBound { min, max }) => format!(
            "[{}, {}]",
            min.map_or("-inf".into(), |t| format!("{t:.3}")),
            max.map_or("inf".into(), |t| format!("{t:.3}"))
        ),
    }
}
