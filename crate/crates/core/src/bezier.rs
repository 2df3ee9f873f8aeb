//! Bézier algebra for spatial curves `r(s)` and time-scalings `t = h(s)`.
//!
//! A trajectory segment pairs a planar curve with a scalar, strictly
//! increasing time-scaling of the same degree. Time-domain kinematics follow
//! from the chain rule:
//!
//! ```text
//! q̇ = r'/h'        q̈ = (r''h' − r'h'')/h'³
//! ```

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, perp, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BezierError {
    #[error("curve needs at least {needed} control points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("control points must be finite")]
    NonFinite,
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("time {t} outside the scaling span [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("time-scaling control points must start at t ≥ 0 and strictly increase (index {0})")]
    NotMonotone(usize),
    #[error("spatial degree {spatial} differs from temporal degree {temporal}")]
    DegreeMismatch { spatial: usize, temporal: usize },
    #[error("time-scaling derivative {0:e} is too small")]
    DegenerateScaling(f64),
    #[error("curve tangent vanishes (|r'| = {0:e})")]
    VanishingTangent(f64),
    #[error("bisection did not reach 1e-10 (residual {0:e})")]
    InversionFailed(f64),
}

/// Vector space element usable as a control point.
pub trait ControlPoint:
    Copy + Debug + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn is_finite_point(&self) -> bool;
}

impl ControlPoint for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_finite_point(&self) -> bool {
        self.is_finite()
    }
}

impl ControlPoint for Vec2 {
    fn zero() -> Self {
        Vec2::zeros()
    }
    fn is_finite_point(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Bézier curve in the Bernstein basis with control points `P_0..P_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve<P: ControlPoint> {
    points: Vec<P>,
}

impl<P: ControlPoint> BezierCurve<P> {
    /// A curve of degree `points.len() - 1`. A single point is a constant
    /// (degree-0) curve, which is what differentiating a line produces.
    pub fn new(points: Vec<P>) -> Result<Self, BezierError> {
        if points.is_empty() {
            return Err(BezierError::TooFewPoints { needed: 1, got: 0 });
        }
        if points.iter().any(|p| !p.is_finite_point()) {
            return Err(BezierError::NonFinite);
        }
        Ok(BezierCurve { points })
    }

    pub fn degree(&self) -> usize {
        self.points.len() - 1
    }

    pub fn control_points(&self) -> &[P] {
        &self.points
    }

    /// de Casteljau evaluation; rejects `s ∉ [0, 1]`.
    pub fn evaluate(&self, s: f64) -> Result<P, BezierError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(BezierError::ParameterOutOfRange(s));
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> P {
        if s == 0.0 {
            return self.points[0];
        }
        if s == 1.0 {
            return self.points[self.points.len() - 1];
        }
        let mut work = self.points.clone();
        let n = work.len();
        for level in 1..n {
            for i in 0..(n - level) {
                work[i] = work[i] * (1.0 - s) + work[i + 1] * s;
            }
        }
        work[0]
    }

    /// Derivative curve with control points `m·(P_{i+1} − P_i)`.
    pub fn derivative(&self) -> BezierCurve<P> {
        let m = self.degree();
        if m == 0 {
            return BezierCurve {
                points: vec![P::zero()],
            };
        }
        let points = self
            .points
            .windows(2)
            .map(|w| (w[1] - w[0]) * m as f64)
            .collect();
        BezierCurve { points }
    }

    pub fn reversed(&self) -> BezierCurve<P> {
        let mut points = self.points.clone();
        points.reverse();
        BezierCurve { points }
    }
}

/// Forward differences `Δ¹, Δ², Δ³` of a control-point sequence.
pub fn forward_diff<P: ControlPoint>(points: &[P], order: usize) -> Result<Vec<P>, BezierError> {
    if points.len() <= order {
        return Err(BezierError::TooFewPoints {
            needed: order + 1,
            got: points.len(),
        });
    }
    let mut current = points.to_vec();
    for _ in 0..order {
        current = current.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(current)
}

/// Strictly increasing scalar Bézier map `s ↦ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaling {
    curve: BezierCurve<f64>,
}

impl TimeScaling {
    /// Requires `τ_0 ≥ 0` and `τ_{l+1} > τ_l`.
    pub fn new(tau: Vec<f64>) -> Result<Self, BezierError> {
        if tau.len() < 2 {
            return Err(BezierError::TooFewPoints {
                needed: 2,
                got: tau.len(),
            });
        }
        let curve = BezierCurve::new(tau)?;
        let t = curve.control_points();
        if t[0] < 0.0 {
            return Err(BezierError::NotMonotone(0));
        }
        if let Some(l) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(BezierError::NotMonotone(l + 1));
        }
        Ok(TimeScaling { curve })
    }

    pub fn curve(&self) -> &BezierCurve<f64> {
        &self.curve
    }

    pub fn control_points(&self) -> &[f64] {
        self.curve.control_points()
    }

    pub fn degree(&self) -> usize {
        self.curve.degree()
    }

    pub fn start(&self) -> f64 {
        self.control_points()[0]
    }

    pub fn end(&self) -> f64 {
        *self.control_points().last().expect("nonempty")
    }

    pub fn evaluate(&self, s: f64) -> Result<f64, BezierError> {
        self.curve.evaluate(s)
    }

    /// `s = g(t)`, the inverse of the scaling, by bisection.
    pub fn invert_time(&self, t: f64) -> Result<f64, BezierError> {
        let (start, end) = (self.start(), self.end());
        if !(start..=end).contains(&t) {
            return Err(BezierError::TimeOutOfRange { t, start, end });
        }
        if t == start {
            return Ok(0.0);
        }
        if t == end {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.curve.eval_unchecked(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-18 {
                break;
            }
        }
        let s = 0.5 * (lo + hi);
        let residual = (self.curve.eval_unchecked(s) - t).abs();
        if residual > 1e-10 {
            return Err(BezierError::InversionFailed(residual));
        }
        Ok(s)
    }

    pub fn shifted(&self, dt: f64) -> Result<TimeScaling, BezierError> {
        TimeScaling::new(self.control_points().iter().map(|t| t + dt).collect())
    }
}

/// Free-function form of [`TimeScaling::invert_time`].
pub fn invert_time(h: &TimeScaling, t: f64) -> Result<f64, BezierError> {
    h.invert_time(t)
}

/// Signed curvature `(r'ₓ r''_y − r'_y r''ₓ)/‖r'‖³` at parameter `s`.
pub fn curvature(r: &BezierCurve<Vec2>, s: f64) -> Result<f64, BezierError> {
    let d1 = r.derivative();
    let d2 = d1.derivative();
    let v = d1.evaluate(s)?;
    let a = d2.evaluate(s)?;
    signed_curvature(&v, &a)
}

fn signed_curvature(d1: &Vec2, d2: &Vec2) -> Result<f64, BezierError> {
    let speed = d1.norm();
    if speed <= 1e-9 {
        return Err(BezierError::VanishingTangent(speed));
    }
    Ok(cross(d1, d2) / speed.powi(3))
}

/// Position and time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    pub jerk: Vec2,
}

/// A spatial curve and its time-scaling, both of degree `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment", into = "RawSegment")]
pub struct TrajectorySegment {
    spatial: BezierCurve<Vec2>,
    temporal: TimeScaling,
    r1: BezierCurve<Vec2>,
    r2: BezierCurve<Vec2>,
    r3: BezierCurve<Vec2>,
    h1: BezierCurve<f64>,
    h2: BezierCurve<f64>,
    h3: BezierCurve<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    control_points: Vec<[f64; 2]>,
    tau: Vec<f64>,
}

impl TryFrom<RawSegment> for TrajectorySegment {
    type Error = BezierError;
    fn try_from(raw: RawSegment) -> Result<Self, Self::Error> {
        let spatial = BezierCurve::new(
            raw.control_points
                .iter()
                .map(|p| Vec2::new(p[0], p[1]))
                .collect(),
        )?;
        TrajectorySegment::new(spatial, TimeScaling::new(raw.tau)?)
    }
}

impl From<TrajectorySegment> for RawSegment {
    fn from(seg: TrajectorySegment) -> Self {
        RawSegment {
            control_points: seg
                .spatial
                .control_points()
                .iter()
                .map(|p| [p.x, p.y])
                .collect(),
            tau: seg.temporal.control_points().to_vec(),
        }
    }
}

impl TrajectorySegment {
    pub fn new(spatial: BezierCurve<Vec2>, temporal: TimeScaling) -> Result<Self, BezierError> {
        if spatial.degree() != temporal.degree() {
            return Err(BezierError::DegreeMismatch {
                spatial: spatial.degree(),
                temporal: temporal.degree(),
            });
        }
        let r1 = spatial.derivative();
        let r2 = r1.derivative();
        let r3 = r2.derivative();
        let h1 = temporal.curve().derivative();
        let h2 = h1.derivative();
        let h3 = h2.derivative();
        Ok(TrajectorySegment {
            spatial,
            temporal,
            r1,
            r2,
            r3,
            h1,
            h2,
            h3,
        })
    }

    pub fn spatial(&self) -> &BezierCurve<Vec2> {
        &self.spatial
    }

    pub fn temporal(&self) -> &TimeScaling {
        &self.temporal
    }

    pub fn degree(&self) -> usize {
        self.spatial.degree()
    }

    pub fn start_time(&self) -> f64 {
        self.temporal.start()
    }

    pub fn end_time(&self) -> f64 {
        self.temporal.end()
    }

    /// Kinematics at curve parameter `s`.
    pub fn kinematics_at_param(&self, s: f64) -> Result<Kinematics, BezierError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(BezierError::ParameterOutOfRange(s));
        }
        let r = self.spatial.eval_unchecked(s);
        let (r1, r2, r3) = (
            self.r1.eval_unchecked(s),
            self.r2.eval_unchecked(s),
            self.r3.eval_unchecked(s),
        );
        let (h1, h2, h3) = (
            self.h1.eval_unchecked(s),
            self.h2.eval_unchecked(s),
            self.h3.eval_unchecked(s),
        );
        if h1 < 1e-9 {
            return Err(BezierError::DegenerateScaling(h1));
        }
        let numer = r2 * h1 - r1 * h2;
        let numer_ds = r3 * h1 - r1 * h3;
        Ok(Kinematics {
            position: r,
            velocity: r1 / h1,
            acceleration: numer / h1.powi(3),
            jerk: numer_ds / h1.powi(4) - numer * (3.0 * h2 / h1.powi(5)),
        })
    }

    /// Kinematics at absolute time `t` within the segment's span.
    pub fn kinematics_at(&self, t: f64) -> Result<Kinematics, BezierError> {
        let s = self.temporal.invert_time(t)?;
        self.kinematics_at_param(s)
    }

    /// Tangential and (signed) normal acceleration at parameter `s`.
    pub fn accel_components(&self, s: f64) -> Result<(f64, f64), BezierError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(BezierError::ParameterOutOfRange(s));
        }
        let r1 = self.r1.eval_unchecked(s);
        let r2 = self.r2.eval_unchecked(s);
        let h1 = self.h1.eval_unchecked(s);
        let h2 = self.h2.eval_unchecked(s);
        if h1 <= 1e-9 {
            return Err(BezierError::DegenerateScaling(h1));
        }
        let kappa = signed_curvature(&r1, &r2)?;
        let speed = r1.norm();
        let tangent = r1 / speed;
        let tangential = tangent.dot(&r2) / (h1 * h1) - h2 / h1.powi(3) * speed;
        let normal = kappa * speed * speed / (h1 * h1);
        Ok((tangential, normal))
    }

    /// Unit tangent and left normal at parameter `s`.
    pub fn frame(&self, s: f64) -> Result<(Vec2, Vec2), BezierError> {
        let r1 = self.r1.evaluate(s)?;
        let speed = r1.norm();
        if speed <= 1e-9 {
            return Err(BezierError::VanishingTangent(speed));
        }
        let t = r1 / speed;
        Ok((t, perp(&t)))
    }

    pub fn shifted(&self, dt: f64, offset: Vec2) -> Result<TrajectorySegment, BezierError> {
        let spatial = BezierCurve::new(
            self.spatial
                .control_points()
                .iter()
                .map(|p| p + offset)
                .collect(),
        )?;
        TrajectorySegment::new(spatial, self.temporal.shifted(dt)?)
    }
}

/// Free-function form of [`TrajectorySegment::kinematics_at`].
pub fn kinematics_at(seg: &TrajectorySegment, t: f64) -> Result<Kinematics, BezierError> {
    seg.kinematics_at(t)
}

/// Free-function form of [`TrajectorySegment::accel_components`].
pub fn accel_components(seg: &TrajectorySegment, s: f64) -> Result<(f64, f64), BezierError> {
    seg.accel_components(s)
}

/// Time-ordered chain of segments forming one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    segments: Vec<TrajectorySegment>,
}

impl Trajectory {
    pub fn new(segments: Vec<TrajectorySegment>) -> Result<Self, BezierError> {
        if segments.is_empty() {
            return Err(BezierError::TooFewPoints { needed: 1, got: 0 });
        }
        Ok(Trajectory { segments })
    }

    pub fn segments(&self) -> &[TrajectorySegment] {
        &self.segments
    }

    pub fn start_time(&self) -> f64 {
        self.segments[0].start_time()
    }

    pub fn end_time(&self) -> f64 {
        self.segments[self.segments.len() - 1].end_time()
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Index of the segment active at `t` (times past the end clamp to the
    /// last segment, times before the start to the first).
    pub fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|seg| t <= seg.end_time())
            .unwrap_or(self.segments.len() - 1)
    }

    /// Segment index and curve parameter at `t`, clamped into the span.
    pub fn locate(&self, t: f64) -> Result<(usize, f64), BezierError> {
        let t = t.clamp(self.start_time(), self.end_time());
        let i = self.segment_index(t);
        let seg = &self.segments[i];
        let t = t.clamp(seg.start_time(), seg.end_time());
        Ok((i, seg.temporal().invert_time(t)?))
    }

    pub fn kinematics_at(&self, t: f64) -> Result<Kinematics, BezierError> {
        let (i, s) = self.locate(t)?;
        self.segments[i].kinematics_at_param(s)
    }

    /// Planar arc length, by composite Simpson integration of `‖r'‖`.
    pub fn path_length(&self) -> f64 {
        const N: usize = 400;
        self.segments
            .iter()
            .map(|seg| {
                let h = 1.0 / N as f64;
                (0..=N)
                    .map(|i| {
                        let w = if i == 0 || i == N {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        w * seg.r1.eval_unchecked(i as f64 * h).norm()
                    })
                    .sum::<f64>()
                    * h
                    / 3.0
            })
            .sum()
    }
}
