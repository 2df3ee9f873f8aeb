//! Dynamic obstacle prediction and temporal separation.
//!
//! An obstacle that occupies region `C_v` during `[T_in, T_out]` is avoided
//! by leaving `C_v` before `T_in` or entering it after `T_out`. Both are
//! linear bounds on the first and last time-scaling control points of `v`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    polygon_distance, rectangle_unchecked, ConvexPolygon, GeometryError, Polytope, Vec2,
};

/// Coarse occupancy sampling step (s).
pub const OCCUPANCY_SAMPLE: f64 = 0.01;
/// Bisection target for occupancy boundaries (s).
pub const OCCUPANCY_RESOLUTION: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimingError {
    #[error("obstacle {id}: piece {piece} has non-positive or non-finite duration {duration}")]
    BadDuration {
        id: String,
        piece: usize,
        duration: f64,
    },
    #[error("obstacle {id}: speed is negative during piece {piece}")]
    NegativeSpeed { id: String, piece: usize },
    #[error("obstacle {id}: piece {piece} starts at {got} m/s but the previous piece ends at {expected} m/s")]
    Discontinuous {
        id: String,
        piece: usize,
        expected: f64,
        got: f64,
    },
    #[error("obstacle {id}: footprint must be non-negative and finite")]
    BadFootprint { id: String },
    #[error("window on vertex {vertex}: {reason}")]
    Contradictory { vertex: String, reason: String },
    #[error("separation rule names unknown {kind} {name}")]
    UnknownReference { kind: &'static str, name: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Constant-acceleration stretch of an obstacle's speed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilePiece {
    pub duration: f64,
    pub speed: f64,
    #[serde(default)]
    pub accel: f64,
}

impl ProfilePiece {
    fn end_speed(&self) -> f64 {
        self.speed + self.accel * self.duration
    }

    fn advance(&self, dt: f64) -> f64 {
        self.speed * dt + 0.5 * self.accel * dt * dt
    }
}

/// Obstacle moving along a fixed heading with a piecewise-constant
/// acceleration profile. Past the last piece the final speed is held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstaclePrediction {
    pub id: String,
    pub position: [f64; 2],
    #[serde(default)]
    pub yaw: f64,
    pub profile: Vec<ProfilePiece>,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_length() -> f64 {
    4.8
}

fn default_width() -> f64 {
    2.0
}

impl ObstaclePrediction {
    /// Constant-speed obstacle with the default 4.8 × 2.0 m footprint.
    pub fn constant_speed(id: &str, position: Vec2, yaw: f64, speed: f64) -> Self {
        ObstaclePrediction {
            id: id.to_string(),
            position: [position.x, position.y],
            yaw,
            profile: vec![ProfilePiece {
                duration: 1.0,
                speed,
                accel: 0.0,
            }],
            length: default_length(),
            width: default_width(),
        }
    }

    pub fn validate(&self) -> Result<(), TimingError> {
        let id = || self.id.clone();
        if !(self.length >= 0.0
            && self.width >= 0.0
            && self.length.is_finite()
            && self.width.is_finite())
            || !(self.position[0].is_finite()
                && self.position[1].is_finite()
                && self.yaw.is_finite())
        {
            return Err(TimingError::BadFootprint { id: id() });
        }
        let mut previous_end: Option<f64> = None;
        for (piece, p) in self.profile.iter().enumerate() {
            if !(p.duration.is_finite() && p.duration > 0.0) {
                return Err(TimingError::BadDuration {
                    id: id(),
                    piece,
                    duration: p.duration,
                });
            }
            if !(p.speed.is_finite() && p.accel.is_finite())
                || p.speed < 0.0
                || p.end_speed() < -1e-9
            {
                return Err(TimingError::NegativeSpeed { id: id(), piece });
            }
            if let Some(expected) = previous_end {
                if (expected - p.speed).abs() > 1e-9 {
                    return Err(TimingError::Discontinuous {
                        id: id(),
                        piece,
                        expected,
                        got: p.speed,
                    });
                }
            }
            previous_end = Some(p.end_speed());
        }
        Ok(())
    }

    pub fn start(&self) -> Vec2 {
        Vec2::new(self.position[0], self.position[1])
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::new(self.yaw.cos(), self.yaw.sin())
    }

    /// Distance travelled along the heading and speed at time `t`.
    pub fn progress(&self, t: f64) -> (f64, f64) {
        let mut remaining = t.max(0.0);
        let mut travelled = 0.0;
        let mut speed = 0.0;
        for p in &self.profile {
            if remaining <= p.duration {
                return (
                    travelled + p.advance(remaining),
                    p.speed + p.accel * remaining,
                );
            }
            travelled += p.advance(p.duration);
            remaining -= p.duration;
            speed = p.end_speed().max(0.0);
        }
        (travelled + speed * remaining, speed)
    }

    pub fn footprint(&self, t: f64, margin: impl Into<Margin>) -> ConvexPolygon {
        let m = margin.into();
        let (center, yaw) = predict_pose(self, t);
        rectangle_unchecked(
            center,
            yaw,
            self.length + 2.0 * m.along,
            self.width + 2.0 * m.across,
        )
    }

    /// Copy whose pose at `t + dt` equals this obstacle's pose at `t`; the
    /// first `dt` seconds back-extrapolate at the initial speed.
    pub fn time_shifted(&self, dt: f64) -> ObstaclePrediction {
        let mut shifted = self.clone();
        let v0 = self.profile.first().map(|p| p.speed).unwrap_or(0.0);
        let back = self.start() - self.heading() * (v0 * dt);
        shifted.position = [back.x, back.y];
        if let Some(first) = shifted.profile.first() {
            shifted.profile.insert(
                0,
                ProfilePiece {
                    duration: dt,
                    speed: first.speed,
                    accel: 0.0,
                },
            );
        }
        shifted
    }
}

/// Inflation of an obstacle footprint, along and across its heading.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Margin {
    pub along: f64,
    pub across: f64,
}

impl Margin {
    /// Half the ego dimensions: the footprint becomes the set of ego
    /// reference points in contact when both share a heading.
    pub fn for_ego(length: f64, width: f64) -> Margin {
        Margin {
            along: 0.5 * length,
            across: 0.5 * width,
        }
    }
}

impl From<f64> for Margin {
    fn from(m: f64) -> Margin {
        Margin {
            along: m,
            across: m,
        }
    }
}

/// Center and yaw of the obstacle at time `t ≥ 0`.
pub fn predict_pose(o: &ObstaclePrediction, t: f64) -> (Vec2, f64) {
    let (s, _) = o.progress(t);
    (o.start() + o.heading() * s, o.yaw)
}

/// First and last times in `[0, horizon]` at which the footprint, inflated
/// by `margin`, touches `region`.
pub fn occupancy_interval(
    o: &ObstaclePrediction,
    region: &Polytope,
    horizon: f64,
    margin: impl Into<Margin>,
) -> Option<(f64, f64)> {
    let margin = margin.into();
    let shape = region.to_polygon();
    let occupied = |t: f64| polygon_distance(&shape, &o.footprint(t, margin)) <= 1e-9;
    let n = (horizon / OCCUPANCY_SAMPLE).ceil() as usize;
    let times: Vec<f64> = (0..=n)
        .map(|i| (i as f64 * OCCUPANCY_SAMPLE).min(horizon))
        .collect();
    let flags: Vec<bool> = times.iter().map(|&t| occupied(t)).collect();
    let first = flags.iter().position(|&f| f)?;
    let last = flags.iter().rposition(|&f| f)?;

    let refine = |mut free: f64, mut busy: f64| {
        while (busy - free).abs() > OCCUPANCY_RESOLUTION {
            let mid = 0.5 * (free + busy);
            if occupied(mid) {
                busy = mid;
            } else {
                free = mid;
            }
        }
        busy
    };
    let t_in = if first == 0 {
        0.0
    } else {
        refine(times[first - 1], times[first])
    };
    let t_out = if last == n {
        horizon
    } else {
        refine(times[last + 1], times[last])
    };
    Some((t_in, t_out))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl TimeBound {
    pub fn at_most(t: f64) -> Self {
        TimeBound {
            min: None,
            max: Some(t),
        }
    }

    pub fn at_least(t: f64) -> Self {
        TimeBound {
            min: Some(t),
            max: None,
        }
    }

    pub fn admits(&self, t: f64, tol: f64) -> bool {
        self.min.is_none_or(|m| t >= m - tol) && self.max.is_none_or(|m| t <= m + tol)
    }

    fn shifted(&self, dt: f64) -> TimeBound {
        TimeBound {
            min: self.min.map(|m| m + dt),
            max: self.max.map(|m| m + dt),
        }
    }
}

/// Linear bounds on a vertex's entry time `τ_0`, exit time `τ_m` and dwell
/// `τ_m − τ_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingWindow {
    pub vertex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<TimeBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<TimeBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dwell: Option<f64>,
}

impl TimingWindow {
    pub fn validate(&self) -> Result<(), TimingError> {
        let fail = |reason: String| {
            Err(TimingError::Contradictory {
                vertex: self.vertex.clone(),
                reason,
            })
        };
        let values = [self.entry, self.exit]
            .iter()
            .flatten()
            .flat_map(|b| [b.min, b.max])
            .flatten()
            .chain(self.max_dwell)
            .collect::<Vec<_>>();
        if values.iter().any(|v| !v.is_finite()) {
            return fail("bounds must be finite".into());
        }
        for (name, bound) in [("entry", self.entry), ("exit", self.exit)] {
            if let Some(TimeBound {
                min: Some(lo),
                max: Some(hi),
            }) = bound
            {
                if lo > hi {
                    return fail(format!("{name} bound [{lo}, {hi}] is empty"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (
            self.entry.and_then(|b| b.min),
            self.exit.and_then(|b| b.max),
        ) {
            if hi < lo {
                return fail(format!(
                    "exit must precede {hi} s but entry is at least {lo} s"
                ));
            }
        }
        if let Some(d) = self.max_dwell {
            if d < 0.0 {
                return fail(format!("negative dwell bound {d}"));
            }
        }
        Ok(())
    }

    /// True when the segment's entry and exit times respect the window.
    pub fn satisfied(&self, entry: f64, exit: f64, tol: f64) -> bool {
        self.entry.is_none_or(|b| b.admits(entry, tol))
            && self.exit.is_none_or(|b| b.admits(exit, tol))
            && self.max_dwell.is_none_or(|d| exit - entry <= d + tol)
    }

    pub fn shifted(&self, dt: f64) -> TimingWindow {
        TimingWindow {
            vertex: self.vertex.clone(),
            entry: self.entry.map(|b| b.shifted(dt)),
            exit: self.exit.map(|b| b.shifted(dt)),
            max_dwell: self.max_dwell,
        }
    }
}

/// Which side of an occupancy interval the ego should take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMode {
    /// Enter the region after the obstacle has left it.
    #[default]
    After,
    /// Leave the region before the obstacle arrives.
    Before,
    /// Rely on the region geometry alone.
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationRule {
    pub obstacle: String,
    pub vertex: String,
    pub mode: SeparationMode,
}

/// Inputs to window synthesis, borrowed from a scenario.
pub struct WindowContext<'a> {
    pub vertices: Vec<(&'a str, &'a Polytope)>,
    pub obstacles: &'a [ObstaclePrediction],
    pub rules: &'a [SeparationRule],
    pub default_mode: SeparationMode,
    pub explicit: &'a [TimingWindow],
    pub horizon: f64,
    pub margin: Margin,
}

/// Explicit windows verbatim, followed by one window per occupied
/// (obstacle, vertex) pair whose separation mode is not `Ignore`.
pub fn timing_windows(ctx: &WindowContext<'_>) -> Result<Vec<TimingWindow>, TimingError> {
    for rule in ctx.rules {
        if !ctx.obstacles.iter().any(|o| o.id == rule.obstacle) {
            return Err(TimingError::UnknownReference {
                kind: "obstacle",
                name: rule.obstacle.clone(),
            });
        }
        if !ctx.vertices.iter().any(|(id, _)| *id == rule.vertex) {
            return Err(TimingError::UnknownReference {
                kind: "vertex",
                name: rule.vertex.clone(),
            });
        }
    }
    let mut windows = Vec::new();
    for w in ctx.explicit {
        if !ctx.vertices.iter().any(|(id, _)| *id == w.vertex) {
            return Err(TimingError::UnknownReference {
                kind: "vertex",
                name: w.vertex.clone(),
            });
        }
        w.validate()?;
        windows.push(w.clone());
    }
    for o in ctx.obstacles {
        o.validate()?;
        for (vertex, region) in &ctx.vertices {
            let mode = ctx
                .rules
                .iter()
                .find(|r| r.obstacle == o.id && r.vertex == *vertex)
                .map(|r| r.mode)
                .unwrap_or(ctx.default_mode);
            if mode == SeparationMode::Ignore {
                continue;
            }
            let Some((t_in, t_out)) = occupancy_interval(o, region, ctx.horizon, ctx.margin) else {
                continue;
            };
            let window = match mode {
                SeparationMode::After => {
                    if t_out >= ctx.horizon {
                        log::warn!("obstacle {} occupies {} until the horizon; entry pushed to {t_out:.3} s", o.id, vertex);
                    }
                    TimingWindow {
                        vertex: vertex.to_string(),
                        entry: Some(TimeBound::at_least(t_out)),
                        exit: None,
                        max_dwell: None,
                    }
                }
                SeparationMode::Before => TimingWindow {
                    vertex: vertex.to_string(),
                    entry: None,
                    exit: Some(TimeBound::at_most(t_in)),
                    max_dwell: None,
                },
                SeparationMode::Ignore => unreachable!(),
            };
            windows.push(window);
        }
    }
    check_consistency(&windows)?;
    Ok(windows)
}

/// Windows on the same vertex must admit a common (entry, exit) pair.
fn check_consistency(windows: &[TimingWindow]) -> Result<(), TimingError> {
    let mut vertices: Vec<&str> = windows.iter().map(|w| w.vertex.as_str()).collect();
    vertices.sort_unstable();
    vertices.dedup();
    for v in vertices {
        let mut entry = (f64::NEG_INFINITY, f64::INFINITY);
        let mut exit = (f64::NEG_INFINITY, f64::INFINITY);
        for w in windows.iter().filter(|w| w.vertex == v) {
            if let Some(b) = w.entry {
                entry.0 = entry.0.max(b.min.unwrap_or(f64::NEG_INFINITY));
                entry.1 = entry.1.min(b.max.unwrap_or(f64::INFINITY));
            }
            if let Some(b) = w.exit {
                exit.0 = exit.0.max(b.min.unwrap_or(f64::NEG_INFINITY));
                exit.1 = exit.1.min(b.max.unwrap_or(f64::INFINITY));
            }
        }
        if entry.0 > entry.1 || exit.0 > exit.1 || exit.1 < entry.0 {
            return Err(TimingError::Contradictory {
                vertex: v.to_string(),
                reason: format!(
                    "combined entry [{}, {}] and exit [{}, {}] leave no admissible times",
                    entry.0, entry.1, exit.0, exit.1
                ),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point(id: &str, x: f64, y: f64, speed: f64) -> ObstaclePrediction {
        ObstaclePrediction {
            length: 0.0,
            width: 0.0,
            ..ObstaclePrediction::constant_speed(id, Vec2::new(x, y), 0.0, speed)
        }
    }

    #[test]
    fn constant_speed_poses() {
        let o = ObstaclePrediction::constant_speed("o1", Vec2::new(20.0, 0.0), 0.0, 3.0);
        assert!((predict_pose(&o, 5.0).0 - Vec2::new(35.0, 0.0)).norm() < 1e-12);
        let o = ObstaclePrediction::constant_speed("o2", Vec2::new(5.0, 3.5), 0.0, 10.0);
        assert!((predict_pose(&o, 2.0).0 - Vec2::new(25.0, 3.5)).norm() < 1e-12);
    }

    #[test]
    fn piecewise_profile_advance() {
        let o = ObstaclePrediction {
            profile: vec![ProfilePiece {
                duration: 5.0,
                speed: 3.0,
                accel: 1.0,
            }],
            ..point("o", 0.0, 0.0, 0.0)
        };
        // Trapezoid rule over the linear speed ramp.
        let oracle = 0.5 * (3.0 + 8.0) * 5.0;
        assert_eq!(oracle, 27.5);
        assert!((predict_pose(&o, 5.0).0.x - oracle).abs() < 1e-12);
        // Held at 8 m/s afterwards.
        assert!((predict_pose(&o, 7.0).0.x - (oracle + 16.0)).abs() < 1e-12);
        assert_eq!(o.progress(9.0).1, 8.0);
    }

    #[test]
    fn profile_validation() {
        let mut o = point("o", 0.0, 0.0, 3.0);
        o.profile = vec![
            ProfilePiece {
                duration: 1.0,
                speed: 3.0,
                accel: 1.0,
            },
            ProfilePiece {
                duration: 1.0,
                speed: 3.0,
                accel: 0.0,
            },
        ];
        assert!(matches!(
            o.validate(),
            Err(TimingError::Discontinuous { piece: 1, .. })
        ));
        o.profile = vec![ProfilePiece {
            duration: 2.0,
            speed: 1.0,
            accel: -1.0,
        }];
        assert!(matches!(
            o.validate(),
            Err(TimingError::NegativeSpeed { .. })
        ));
        o.profile = vec![ProfilePiece {
            duration: 0.0,
            speed: 1.0,
            accel: 0.0,
        }];
        assert!(matches!(o.validate(), Err(TimingError::BadDuration { .. })));
    }

    #[test]
    fn occupancy_examples() {
        let region = Polytope::from_box(30.0, 50.0, -1.0, 1.0).unwrap();
        let (t_in, t_out) =
            occupancy_interval(&point("o", 20.0, 0.0, 3.0), &region, 10.0, 0.0).unwrap();
        assert!((t_in - 10.0 / 3.0).abs() <= OCCUPANCY_RESOLUTION, "{t_in}");
        assert!((t_out - 10.0).abs() <= OCCUPANCY_RESOLUTION);

        let away = ObstaclePrediction {
            yaw: std::f64::consts::PI,
            ..point("o", 20.0, 0.0, 3.0)
        };
        assert_eq!(occupancy_interval(&away, &region, 10.0, 0.0), None);

        let parked = point("o", 40.0, 0.0, 0.0);
        assert_eq!(
            occupancy_interval(&parked, &region, 10.0, 0.0),
            Some((0.0, 10.0))
        );

        // Passing completely through: leaves x = 50 at t = 30/3.
        let (t_in, t_out) =
            occupancy_interval(&point("o", 20.0, 0.0, 3.0), &region, 15.0, 0.0).unwrap();
        assert!((t_in - 10.0 / 3.0).abs() <= OCCUPANCY_RESOLUTION);
        assert!((t_out - 10.0).abs() <= OCCUPANCY_RESOLUTION);
    }

    #[test]
    fn windows_from_rules() {
        let a = Polytope::from_box(0.0, 10.0, -1.0, 1.0).unwrap();
        let b = Polytope::from_box(30.0, 50.0, -1.0, 1.0).unwrap();
        let obstacles = vec![point("o", 20.0, 0.0, 3.0)];
        let rules = vec![SeparationRule {
            obstacle: "o".into(),
            vertex: "b".into(),
            mode: SeparationMode::Before,
        }];
        let ctx = WindowContext {
            vertices: vec![("a", &a), ("b", &b)],
            obstacles: &obstacles,
            rules: &rules,
            default_mode: SeparationMode::After,
            explicit: &[],
            horizon: 10.0,
            margin: Margin::default(),
        };
        let windows = timing_windows(&ctx).unwrap();
        assert_eq!(windows.len(), 1);
        let max = windows[0].exit.unwrap().max.unwrap();
        assert!((max - 10.0 / 3.0).abs() <= OCCUPANCY_RESOLUTION);

        let none = WindowContext {
            obstacles: &[],
            rules: &[],
            ..ctx
        };
        assert!(timing_windows(&none).unwrap().is_empty());
    }

    #[test]
    fn contradictory_windows_rejected() {
        let w = TimingWindow {
            vertex: "t".into(),
            entry: Some(TimeBound {
                min: Some(3.0),
                max: Some(2.0),
            }),
            exit: None,
            max_dwell: None,
        };
        assert!(matches!(
            w.validate(),
            Err(TimingError::Contradictory { .. })
        ));
        let w = TimingWindow {
            vertex: "t".into(),
            entry: Some(TimeBound::at_least(3.0)),
            exit: Some(TimeBound::at_most(2.0)),
            max_dwell: None,
        };
        assert!(w.validate().is_err());
        let zero = TimingWindow {
            vertex: "t".into(),
            entry: Some(TimeBound {
                min: Some(2.0),
                max: Some(2.0),
            }),
            exit: None,
            max_dwell: None,
        };
        assert!(zero.validate().is_ok());

        let split = [
            TimingWindow {
                vertex: "t".into(),
                entry: Some(TimeBound::at_least(5.0)),
                exit: None,
                max_dwell: None,
            },
            TimingWindow {
                vertex: "t".into(),
                entry: None,
                exit: Some(TimeBound::at_most(4.0)),
                max_dwell: None,
            },
        ];
        assert!(check_consistency(&split).is_err());
    }

    #[test]
    fn window_satisfaction() {
        let w = TimingWindow {
            vertex: "t".into(),
            entry: Some(TimeBound::at_most(2.4)),
            exit: None,
            max_dwell: Some(4.0),
        };
        assert!(w.satisfied(2.0, 5.9, 0.0));
        assert!(!w.satisfied(2.5, 3.0, 0.0));
        assert!(!w.satisfied(2.0, 6.1, 0.0));
        assert!(w.shifted(1.0).satisfied(3.0, 6.9, 0.0));
    }

    #[test]
    fn time_shift_preserves_trajectory() {
        let o = ObstaclePrediction {
            profile: vec![
                ProfilePiece {
                    duration: 5.0,
                    speed: 3.0,
                    accel: 1.0,
                },
                ProfilePiece {
                    duration: 5.0,
                    speed: 8.0,
                    accel: -1.0,
                },
            ],
            ..point("o", 35.0, 0.0, 0.0)
        };
        let s = o.time_shifted(1.5);
        s.validate().unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.1;
            assert!((predict_pose(&o, t).0 - predict_pose(&s, t + 1.5).0).norm() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn pose_is_continuous_at_junctions(v0 in 0.0..10.0f64, a1 in -1.0..2.0f64, d1 in 0.5..4.0f64, a2 in -1.0..1.0f64) {
            prop_assume!(v0 + a1 * d1 >= 0.0);
            let v1 = v0 + a1 * d1;
            prop_assume!(v1 + a2 * 2.0 >= 0.0);
            let o = ObstaclePrediction {
                profile: vec![ProfilePiece { duration: d1, speed: v0, accel: a1 }, ProfilePiece { duration: 2.0, speed: v1, accel: a2 }],
                ..point("o", 0.0, 0.0, 0.0)
            };
            o.validate().unwrap();
            let eps = 1e-12;
            let (sl, vl) = o.progress(d1 - eps);
            let (sr, vr) = o.progress(d1 + eps);
            prop_assert!((sl - sr).abs() < 1e-9);
            prop_assert!((vl - vr).abs() < 1e-8);
        }

        #[test]
        fn inflation_never_shrinks_occupancy(x0 in 0.0..40.0f64, speed in 0.0..8.0f64, m1 in 0.0..2.0f64, extra in 0.0..2.0f64) {
            let region = Polytope::from_box(30.0, 50.0, -1.0, 1.0).unwrap();
            let o = point("o", x0, 0.5, speed);
            let small = occupancy_interval(&o, &region, 5.0, m1);
            let large = occupancy_interval(&o, &region, 5.0, m1 + extra);
            if let Some((a, b)) = small {
                let (c, d) = large.expect("larger footprint must still overlap");
                prop_assert!(c <= a + OCCUPANCY_RESOLUTION);
                prop_assert!(d >= b - OCCUPANCY_RESOLUTION);
            }
        }
    }
}
