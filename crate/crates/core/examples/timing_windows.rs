//! Occupancy intervals of predicted obstacles in a region, and the entry and
//! exit bounds derived from them for each separation mode.

use gcs_planner::geometry::{Polytope, Vec2};
use gcs_planner::timing::{
    occupancy_interval, timing_windows, Margin, ObstaclePrediction, ProfilePiece, SeparationMode,
    TimeBound, WindowContext,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let merge = Polytope::from_box(30.0, 45.0, -1.75, 1.75)?;
    let slow = ObstaclePrediction::constant_speed("slow", Vec2::new(10.0, 0.0), 0.0, 4.0);
    let braking = ObstaclePrediction {
        id: "braking".into(),
        position: [0.0, 0.0],
        yaw: 0.0,
        profile: vec![ProfilePiece {
            duration: 4.0,
            speed: 12.0,
            accel: -2.0,
        }],
        length: 4.8,
        width: 2.0,
    };
    let obstacles = [slow, braking];
    let margin = Margin::for_ego(4.8, 2.0);
    for o in &obstacles {
        match occupancy_interval(o, &merge, 20.0, margin) {
            Some((t_in, t_out)) => println!(
                "{} occupies the merge region during [{t_in:.3}, {t_out:.3}] s",
                o.id
            ),
            None => println!("{} never reaches the merge region", o.id),
        }
    }

    for mode in [SeparationMode::After, SeparationMode::Before] {
        let ctx = WindowContext {
            vertices: vec![("merge", &merge)],
            obstacles: &obstacles,
            rules: &[],
            default_mode: mode,
            explicit: &[],
            horizon: 20.0,
            margin,
        };
        println!("\n{mode:?}:");
        for w in timing_windows(&ctx)? {
            println!(
                "  {}: entry {}, exit {}",
                w.vertex,
                bound(w.entry),
                bound(w.exit)
            );
        }
    }
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
