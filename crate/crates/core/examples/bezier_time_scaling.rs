//! A spatial Bézier curve paired with a Bézier time-scaling. Stretching the
//! time control points slows the motion without changing the path: speed
//! scales by 1/c and acceleration by 1/c².

use gcs_planner::bezier::{curvature, forward_diff, BezierCurve, TimeScaling, TrajectorySegment};
use gcs_planner::geometry::Vec2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points = vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(4.0, 0.0),
        Vec2::new(8.0, 0.5),
        Vec2::new(12.0, 2.0),
        Vec2::new(16.0, 3.0),
        Vec2::new(20.0, 3.5),
        Vec2::new(24.0, 3.5),
    ];
    let r = BezierCurve::new(points.clone())?;
    println!("first differences (∝ control points of r'):");
    for d in forward_diff(&points, 1)? {
        println!("  ({:5.2}, {:5.2})", d.x, d.y);
    }

    let tau: Vec<f64> = (0..=6).map(|l| 0.5 * l as f64).collect();
    for c in [1.0, 2.0] {
        let h = TimeScaling::new(tau.iter().map(|t| c * t).collect())?;
        let seg = TrajectorySegment::new(r.clone(), h)?;
        println!(
            "\ntime stretched by {c}: duration {:.2} s",
            seg.end_time() - seg.start_time()
        );
        println!("   t      s      x      y      v     a_T     a_N     κ");
        for i in 0..=6 {
            let t = seg.start_time() + i as f64 / 6.0 * (seg.end_time() - seg.start_time());
            let s = seg.temporal().invert_time(t)?;
            let k = seg.kinematics_at(t)?;
            let (a_t, a_n) = seg.accel_components(s)?;
            println!(
                "{t:5.2} {s:6.3} {:6.2} {:6.2} {:6.2} {a_t:7.3} {a_n:7.3} {:7.4}",
                k.position.x,
                k.position.y,
                k.velocity.norm(),
                curvature(&r, s)?
            );
        }
    }
    Ok(())
}
