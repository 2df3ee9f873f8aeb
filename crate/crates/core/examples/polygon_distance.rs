//! Distances between oriented rectangles, and the clearance between a
//! planned ego footprint and a moving obstacle over time.

use gcs_planner::geometry::{oriented_rectangle, polygon_distance, Vec2};
use gcs_planner::timing::ObstaclePrediction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ego = oriented_rectangle(Vec2::new(0.0, 0.0), 0.0, 4.8, 2.0)?;
    let cases = [
        ("side by side, 1 m apart", Vec2::new(0.0, 3.0), 0.0),
        ("nose to tail, 2 m apart", Vec2::new(6.8, 0.0), 0.0),
        (
            "rotated 45°, corner first",
            Vec2::new(5.5, 2.5),
            std::f64::consts::FRAC_PI_4,
        ),
        ("overlapping", Vec2::new(2.0, 1.0), 0.3),
    ];
    for (what, center, yaw) in cases {
        let other = oriented_rectangle(center, yaw, 4.8, 2.0)?;
        println!("{what:<28} {:.4} m", polygon_distance(&ego, &other));
    }

    // A car overtaking at 10 m/s in the next lane while the ego holds still.
    let passing = ObstaclePrediction::constant_speed("passing", Vec2::new(-20.0, 3.5), 0.0, 10.0);
    println!("\n   t   clearance");
    for i in 0..=8 {
        let t = 0.5 * i as f64;
        println!(
            "{t:4.1} {:10.3}",
            polygon_distance(&ego, &passing.footprint(t, 0.0))
        );
    }
    Ok(())
}
