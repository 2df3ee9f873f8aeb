//! Audit of a planned trajectory against its scenario.
//!
//! Only the emitted segments, the path ids and the scenario are read; none
//! of the planner's constraint data is consulted.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bezier::{BezierError, Kinematics, Trajectory, TrajectorySegment};
use crate::flatness::{flat_reconstruct, rollout_consistency, ConsistencyReport, VehicleParams};
use crate::geometry::{oriented_rectangle, polygon_distance, ConvexPolygon};
use crate::program::PlanResult;
use crate::scenario::{ResultDoc, Scenario};

/// Step of the flatness rollout inside the audit.
pub const ROLLOUT_DT: f64 = 0.001;
/// Slack on containment, window, goal and start checks.
pub const AUDIT_TOL: f64 = 1e-6;
/// Largest junction jump accepted, in SI units of each order.
pub const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("audit step must lie in (0, 0.1], got {0}")]
    BadStep(f64),
    #[error("{segments} segments but {path} path ids")]
    PathMismatch { segments: usize, path: usize },
    #[error("path id {0} is not a region of the scenario")]
    UnknownRegion(String),
    #[error("no segments to audit")]
    Empty,
    #[error(transparent)]
    Bezier(#[from] BezierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a_t: f64,
    pub a_n: f64,
    /// Absent below the speed floor.
    pub delta: Option<f64>,
    pub psi: Option<f64>,
    /// Absent when the scenario has no obstacles.
    pub min_dist: Option<f64>,
}

/// A value and the sample time where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleDistance {
    pub distance: f64,
    pub t: f64,
    pub obstacle: String,
}

/// Jumps across the junction between segment `index` and `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionResidual {
    pub index: usize,
    pub t: f64,
    pub time_gap: f64,
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
}

impl JunctionResidual {
    pub fn max(&self) -> f64 {
        [
            self.time_gap,
            self.position,
            self.velocity,
            self.acceleration,
            self.jerk,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentCheck {
    pub segment: usize,
    pub vertex: String,
    /// Largest `max_i (a_iᵀP − b_i)` over the control points.
    pub control_excess: f64,
    /// Same over the audit samples that fall in this segment.
    pub sample_excess: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowCheck {
    pub vertex: String,
    pub visited: bool,
    pub entry: Option<f64>,
    pub exit: Option<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoalCheck {
    pub terminal_position: [f64; 2],
    pub excess: f64,
    pub inside: bool,
    pub terminal_speed: f64,
    pub goal_speed: f64,
    pub velocity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub dt: f64,
    pub start_time: f64,
    pub end_time: f64,
    #[serde(skip)]
    pub samples: Vec<Sample>,
    pub sample_count: usize,
    pub min_distance: Option<ObstacleDistance>,
    pub speed_min: Extremum,
    pub speed_max: Extremum,
    pub max_abs_a_t: Extremum,
    pub max_abs_a_n: Extremum,
    pub max_abs_delta: Option<Extremum>,
    /// Samples where `ψ, δ` could not be reconstructed.
    pub below_floor: usize,
    pub junctions: Vec<JunctionResidual>,
    pub containment: Vec<ContainmentCheck>,
    pub windows: Vec<WindowCheck>,
    pub goal: GoalCheck,
    pub start_error: f64,
    /// `v_max / cos(π/F)`.
    pub speed_bound: f64,
    /// `(t, speed)` of every sample above `speed_bound`.
    pub speed_violations: Vec<(f64, f64)>,
    pub rollout: Option<ConsistencyReport>,
    pub rollout_error: Option<String>,
    pub elapsed_ms: f64,
}

impl FeasibilityReport {
    pub fn collision_free(&self) -> bool {
        self.min_distance.as_ref().is_none_or(|d| d.distance > 0.0)
    }

    pub fn max_junction_jump(&self) -> f64 {
        self.junctions
            .iter()
            .map(JunctionResidual::max)
            .fold(0.0, f64::max)
    }

    /// Human-readable list of failed checks; empty when the plan passes.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(d) = self.min_distance.as_ref().filter(|d| d.distance <= 0.0) {
            out.push(format!("collision with {} at t = {:.3} s", d.obstacle, d.t));
        }
        for c in self.containment.iter().filter(|c| !c.inside) {
            out.push(format!(
                "segment {} leaves region {} by {:.3e} m",
                c.segment,
                c.vertex,
                c.control_excess.max(c.sample_excess)
            ));
        }
        for w in self.windows.iter().filter(|w| !w.satisfied) {
            out.push(format!(
                "timing window on {} violated (entry {:?}, exit {:?})",
                w.vertex, w.entry, w.exit
            ));
        }
        if !self.goal.inside {
            out.push(format!(
                "terminal position outside the goal by {:.3e} m",
                self.goal.excess
            ));
        }
        if self.start_error > AUDIT_TOL {
            out.push(format!(
                "trajectory starts {:.3e} m from the ego position",
                self.start_error
            ));
        }
        let jump = self.max_junction_jump();
        if jump > CONTINUITY_TOL {
            out.push(format!(
                "junction jump {jump:.3e} exceeds {CONTINUITY_TOL:e}"
            ));
        }
        if let Some((t, v)) = self.speed_violations.first() {
            out.push(format!(
                "{} samples exceed {:.4} m/s (first at t = {t:.3} s, {v:.4} m/s)",
                self.speed_violations.len(),
                self.speed_bound
            ));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Body heading: flat `ψ` when the speed allows it, else the velocity
/// direction, else `fallback`.
pub fn ego_yaw(k: &Kinematics, vehicle: &VehicleParams, v_floor: f64, fallback: f64) -> f64 {
    match flat_reconstruct(&k.velocity, &k.acceleration, &k.jerk, vehicle, v_floor) {
        Ok(f) => f.psi,
        Err(_) if k.velocity.norm() > 1e-9 => k.velocity.y.atan2(k.velocity.x),
        Err(_) => fallback,
    }
}

fn obstacle_distance(
    scenario: &Scenario,
    statics: &[ConvexPolygon],
    ego: &ConvexPolygon,
    t: f64,
) -> Option<(f64, usize)> {
    let s = statics.iter().map(|p| polygon_distance(ego, p));
    let d = scenario
        .dynamic_obstacles
        .iter()
        .map(|o| polygon_distance(ego, &o.footprint(t, 0.0)));
    s.chain(d)
        .enumerate()
        .map(|(i, d)| (d, i))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

fn argmax(samples: &[Sample], f: impl Fn(&Sample) -> f64) -> Extremum {
    samples
        .iter()
        .map(|s| Extremum {
            value: f(s),
            t: s.t,
        })
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .unwrap()
}

/// Audit a composed trajectory. `path[i]` names the region segment `i`
/// must stay in.
pub fn audit(
    path: &[String],
    segments: &[TrajectorySegment],
    scenario: &Scenario,
    dt: f64,
) -> Result<FeasibilityReport, AuditError> {
    let clock = Instant::now();
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(AuditError::BadStep(dt));
    }
    if segments.is_empty() {
        return Err(AuditError::Empty);
    }
    if segments.len() != path.len() {
        return Err(AuditError::PathMismatch {
            segments: segments.len(),
            path: path.len(),
        });
    }
    let regions = path
        .iter()
        .map(|id| {
            scenario
                .region(id)
                .map(|r| &r.polytope)
                .ok_or_else(|| AuditError::UnknownRegion(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let traj = Trajectory::new(segments.to_vec())?;
    let limits = &scenario.problem.limits;
    let ego = &scenario.ego;
    let statics: Vec<ConvexPolygon> = scenario
        .static_obstacles
        .iter()
        .map(|o| o.footprint())
        .collect();
    let obstacle_ids: Vec<&str> = scenario
        .static_obstacles
        .iter()
        .map(|o| o.id.as_str())
        .chain(scenario.dynamic_obstacles.iter().map(|o| o.id.as_str()))
        .collect();

    let t0 = traj.start_time();
    let n = (traj.duration() / dt + 1e-9).floor() as usize;
    let rows: Vec<(Sample, usize, f64, Option<usize>)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let t = (t0 + i as f64 * dt).min(traj.end_time());
            let (seg, s) = traj.locate(t)?;
            let k = segments[seg].kinematics_at_param(s)?;
            let (a_t, a_n) = segments[seg].accel_components(s)?;
            let flat = flat_reconstruct(
                &k.velocity,
                &k.acceleration,
                &k.jerk,
                &scenario.vehicle,
                limits.v_floor,
            )
            .ok();
            let yaw = ego_yaw(&k, &scenario.vehicle, limits.v_floor, ego.yaw);
            let rect = oriented_rectangle(k.position, yaw, ego.length, ego.width)
                .expect("validated dimensions");
            let closest = obstacle_distance(scenario, &statics, &rect, t);
            let sample = Sample {
                t,
                x: k.position.x,
                y: k.position.y,
                v: k.velocity.norm(),
                a_t,
                a_n,
                delta: flat.map(|f| f.delta),
                psi: flat.map(|f| f.psi),
                min_dist: closest.map(|c| c.0),
            };
            Ok((
                sample,
                seg,
                regions[seg].excess(&k.position),
                closest.map(|c| c.1),
            ))
        })
        .collect::<Result<_, BezierError>>()?;
    let samples: Vec<Sample> = rows.iter().map(|r| r.0).collect();

    let min_distance = rows
        .iter()
        .filter_map(|(s, _, _, idx)| Some((s.min_dist?, s.t, (*idx)?)))
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .map(|(distance, t, i)| ObstacleDistance {
            distance,
            t,
            obstacle: obstacle_ids[i].to_string(),
        });

    let speed_max = argmax(&samples, |s| s.v);
    let neg_min = argmax(&samples, |s| -s.v);
    let speed_min = Extremum {
        value: -neg_min.value,
        t: neg_min.t,
    };
    let with_delta: Vec<Sample> = samples
        .iter()
        .filter(|s| s.delta.is_some())
        .cloned()
        .collect();
    let max_abs_delta =
        (!with_delta.is_empty()).then(|| argmax(&with_delta, |s| s.delta.unwrap().abs()));

    let junctions = segments
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            let a = w[0].kinematics_at_param(1.0)?;
            let b = w[1].kinematics_at_param(0.0)?;
            Ok(JunctionResidual {
                index,
                t: w[1].start_time(),
                time_gap: (w[1].start_time() - w[0].end_time()).abs(),
                position: (b.position - a.position).norm(),
                velocity: (b.velocity - a.velocity).norm(),
                acceleration: (b.acceleration - a.acceleration).norm(),
                jerk: (b.jerk - a.jerk).norm(),
            })
        })
        .collect::<Result<Vec<_>, BezierError>>()?;

    let containment = segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let control_excess = seg
                .spatial()
                .control_points()
                .iter()
                .map(|p| regions[i].excess(p))
                .fold(f64::NEG_INFINITY, f64::max);
            let sample_excess = rows
                .iter()
                .filter(|r| r.1 == i)
                .map(|r| r.2)
                .fold(f64::NEG_INFINITY, f64::max);
            ContainmentCheck {
                segment: i,
                vertex: path[i].clone(),
                control_excess,
                sample_excess,
                inside: control_excess <= AUDIT_TOL && sample_excess <= AUDIT_TOL,
            }
        })
        .collect();

    let windows = scenario
        .problem
        .windows
        .iter()
        .map(|w| match path.iter().position(|id| *id == w.vertex) {
            Some(i) => {
                let (entry, exit) = (segments[i].start_time(), segments[i].end_time());
                WindowCheck {
                    vertex: w.vertex.clone(),
                    visited: true,
                    entry: Some(entry),
                    exit: Some(exit),
                    satisfied: w.satisfied(entry, exit, AUDIT_TOL),
                }
            }
            None => WindowCheck {
                vertex: w.vertex.clone(),
                visited: false,
                entry: None,
                exit: None,
                satisfied: true,
            },
        })
        .collect();

    let last = traj.segments().last().unwrap().kinematics_at_param(1.0)?;
    let goal_v = scenario.problem.goal_velocity;
    let excess = scenario.problem.goal.excess(&last.position);
    let goal = GoalCheck {
        terminal_position: [last.position.x, last.position.y],
        excess,
        inside: excess <= AUDIT_TOL,
        terminal_speed: last.velocity.norm(),
        goal_speed: goal_v.norm(),
        velocity_error: (last.velocity - goal_v).norm(),
    };
    let first = traj.segments()[0].kinematics_at_param(0.0)?;
    let start_error = (first.position - ego.position).norm();

    let facets = scenario.problem.settings.facets as f64;
    let speed_bound = limits.v_max / (std::f64::consts::PI / facets).cos();
    let speed_violations = samples
        .iter()
        .filter(|s| s.v > speed_bound + 1e-9)
        .map(|s| (s.t, s.v))
        .collect();

    let (rollout, rollout_error) =
        match rollout_consistency(&traj, &scenario.vehicle, ROLLOUT_DT, limits.v_floor) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };

    Ok(FeasibilityReport {
        dt,
        start_time: t0,
        end_time: traj.end_time(),
        sample_count: samples.len(),
        min_distance,
        speed_min,
        speed_max,
        max_abs_a_t: argmax(&samples, |s| s.a_t.abs()),
        max_abs_a_n: argmax(&samples, |s| s.a_n.abs()),
        max_abs_delta,
        below_floor: samples.len() - with_delta.len(),
        junctions,
        containment,
        windows,
        goal,
        start_error,
        speed_bound,
        speed_violations,
        rollout,
        rollout_error,
        samples,
        elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn audit_plan(
    plan: &PlanResult,
    scenario: &Scenario,
    dt: f64,
) -> Result<FeasibilityReport, AuditError> {
    audit(&plan.path, &plan.segments, scenario, dt)
}

pub fn audit_result(
    result: &ResultDoc,
    scenario: &Scenario,
    dt: f64,
) -> Result<FeasibilityReport, AuditError> {
    audit(&result.path, &result.segments, scenario, dt)
}

/// Format with 15 significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..15).contains(&exp) {
        trim(&format!("{:.*}", (14 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// Time series `t, x, y, v, a_T, a_N, delta, min_dist`, one row per sample.
/// Absent values are empty fields.
pub fn profile_csv(report: &FeasibilityReport) -> String {
    let mut out = String::from("t,x,y,v,a_T,a_N,delta,min_dist\n");
    for s in &report.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_sig(s.t),
            fmt_sig(s.x),
            fmt_sig(s.y),
            fmt_sig(s.v),
            fmt_sig(s.a_t),
            fmt_sig(s.a_n),
            opt(s.delta),
            opt(s.min_dist)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bezier::{BezierCurve, TimeScaling};
    use crate::geometry::Vec2;
    use crate::scenario::parse_scenario;

    const OPEN_ROAD: &str = r#"{
        "name": "open road",
        "regions": [{"id": "road", "box": [-5, 100, -2, 2]}, {"id": "end", "box": [20, 100, -2, 2]}],
        "edges": [["road", "end"]],
        "source": "road",
        "target": "end",
        "ego": {"position": [0, 0], "velocity": [10, 0]},
        "goal": {"region": {"box": [25, 35, -1, 1]}, "velocity": [10, 0]}
    }"#;

    fn straight(m: usize, length: f64, duration: f64) -> TrajectorySegment {
        let r = BezierCurve::new(
            (0..=m)
                .map(|l| Vec2::new(length * l as f64 / m as f64, 0.0))
                .collect(),
        )
        .unwrap();
        let h =
            TimeScaling::new((0..=m).map(|l| duration * l as f64 / m as f64).collect()).unwrap();
        TrajectorySegment::new(r, h).unwrap()
    }

    fn with_obstacle(text: &str, obstacle: &str) -> String {
        text.replace(
            r#""goal":"#,
            &format!(r#""static_obstacles": [{obstacle}], "goal":"#),
        )
    }

    #[test]
    fn fmt_sig_examples() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.5), "1.5");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt_sig(-2.0e-7), "-2e-7");
        assert_eq!(fmt_sig(123456.0), "123456");
        assert_eq!(fmt_sig(1.25e20), "1.25e20");
    }

    #[test]
    fn straight_uniform_plan_has_flat_profiles() {
        let s = parse_scenario(OPEN_ROAD).unwrap();
        let seg = straight(6, 30.0, 3.0);
        let r = audit(&["road".to_string()], &[seg], &s, 0.01).unwrap();
        assert_eq!(r.sample_count, 301);
        assert!((r.speed_max.value - r.speed_min.value).abs() < 1e-9);
        assert!((r.speed_max.value - 10.0).abs() < 1e-9);
        assert!(r.max_abs_a_t.value < 1e-9 && r.max_abs_a_n.value < 1e-9);
        assert!(r.max_abs_delta.unwrap().value < 1e-9);
        assert!(r.min_distance.is_none());
        assert!(r.passed(), "{:?}", r.failures());
        assert!(r.rollout.unwrap().max_deviation < 1e-9);
    }

    #[test]
    fn reported_extrema_are_sampled_values() {
        let text = with_obstacle(OPEN_ROAD, r#"{"id": "box", "center": [20, 5]}"#);
        let s = parse_scenario(&text).unwrap();
        let r = BezierCurve::new(
            [
                (0.0, 0.0),
                (5.0, 0.0),
                (10.0, 0.0),
                (15.0, 0.5),
                (20.0, 1.0),
                (25.0, 1.0),
                (30.0, 1.0),
            ]
            .iter()
            .map(|&(x, y)| Vec2::new(x, y))
            .collect(),
        )
        .unwrap();
        let h = TimeScaling::new(vec![0.0, 0.5, 1.0, 1.6, 2.2, 2.7, 3.2]).unwrap();
        let rep = audit(
            &["road".into()],
            &[TrajectorySegment::new(r, h).unwrap()],
            &s,
            0.05,
        )
        .unwrap();
        for e in [
            rep.speed_max,
            rep.speed_min,
            rep.max_abs_a_t,
            rep.max_abs_a_n,
        ] {
            assert!(rep.samples.iter().any(|x| x.t == e.t));
        }
        let d = rep.min_distance.as_ref().unwrap();
        let at = rep.samples.iter().find(|x| x.t == d.t).unwrap();
        assert_eq!(at.min_dist, Some(d.distance));
        assert!(rep
            .samples
            .iter()
            .all(|x| x.min_dist.unwrap() >= d.distance));
        assert_eq!(d.obstacle, "box");
    }

    #[test]
    fn collision_is_detected() {
        let text = with_obstacle(OPEN_ROAD, r#"{"id": "wall", "center": [15, 0.5]}"#);
        let s = parse_scenario(&text).unwrap();
        let rep = audit(&["road".into()], &[straight(6, 30.0, 3.0)], &s, 0.01).unwrap();
        let d = rep.min_distance.as_ref().unwrap();
        assert_eq!(d.distance, 0.0);
        assert!(!rep.collision_free());
        assert!(!rep.passed());
    }

    #[test]
    fn corrupted_control_point_trips_containment() {
        let s = parse_scenario(OPEN_ROAD).unwrap();
        let seg = straight(6, 30.0, 3.0);
        let mut pts = seg.spatial().control_points().to_vec();
        pts[3].y = 2.5;
        let bad =
            TrajectorySegment::new(BezierCurve::new(pts).unwrap(), seg.temporal().clone()).unwrap();
        let rep = audit(&["road".into()], &[bad], &s, 0.01).unwrap();
        assert!(!rep.containment[0].inside);
        assert!((rep.containment[0].control_excess - 0.5).abs() < 1e-12);
        assert!(rep
            .failures()
            .iter()
            .any(|f| f.contains("leaves region road")));
    }

    #[test]
    fn junction_jumps_are_two_sided() {
        let s = parse_scenario(OPEN_ROAD).unwrap();
        let a = straight(6, 15.0, 1.5);
        let b = a.shifted(1.5, Vec2::new(15.0, 0.0)).unwrap();
        let path = vec!["road".to_string(), "road".to_string()];
        let rep = audit(&path, &[a.clone(), b.clone()], &s, 0.01).unwrap();
        assert!(rep.max_junction_jump() < 1e-12);
        // Same geometry, second half twice as fast: velocity jumps by 10 m/s.
        let fast = TrajectorySegment::new(
            b.spatial().clone(),
            TimeScaling::new((0..=6).map(|l| 1.5 + 0.75 * l as f64 / 6.0).collect()).unwrap(),
        )
        .unwrap();
        let rep = audit(&path, &[a, fast], &s, 0.01).unwrap();
        assert!((rep.junctions[0].velocity - 10.0).abs() < 1e-9);
        assert!(rep.junctions[0].position < 1e-12);
    }

    #[test]
    fn tightened_speed_limit_reports_samples() {
        let text = OPEN_ROAD.replace(r#""goal":"#, r#""limits": {"v_max": 9.0}, "goal":"#);
        let s = parse_scenario(&text).unwrap();
        let rep = audit(&["road".into()], &[straight(6, 30.0, 3.0)], &s, 0.01).unwrap();
        assert_eq!(rep.speed_violations.len(), rep.sample_count);
        assert!(!rep.passed());
    }

    #[test]
    fn csv_rows_follow_the_grid() {
        let s = parse_scenario(OPEN_ROAD).unwrap();
        let rep = audit(&["road".into()], &[straight(6, 30.0, 3.05)], &s, 0.01).unwrap();
        let csv = profile_csv(&rep);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,y,v,a_T,a_N,delta,min_dist");
        assert_eq!(
            lines.len() - 1,
            (3.05f64 / 0.01 + 1e-9).floor() as usize + 1
        );
        assert!(lines[1].starts_with("0,0,0,"));
        assert!(
            lines[1].ends_with(','),
            "no obstacles gives an empty distance column"
        );
    }

    #[test]
    fn bad_inputs() {
        let s = parse_scenario(OPEN_ROAD).unwrap();
        let seg = straight(6, 30.0, 3.0);
        assert_eq!(
            audit(&["road".into()], std::slice::from_ref(&seg), &s, 0.0),
            Err(AuditError::BadStep(0.0))
        );
        assert_eq!(
            audit(&["road".into()], std::slice::from_ref(&seg), &s, 0.2),
            Err(AuditError::BadStep(0.2))
        );
        assert!(matches!(
            audit(&[], std::slice::from_ref(&seg), &s, 0.01),
            Err(AuditError::PathMismatch { .. })
        ));
        assert_eq!(
            audit(&["x".into()], &[seg], &s, 0.01),
            Err(AuditError::UnknownRegion("x".into()))
        );
    }
}
