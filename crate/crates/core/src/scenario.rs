//! Scenario documents, result files and rendering.
//!
//! A scenario is a strict JSON document (unknown fields are rejected).
//! Optional sections are filled with defaults on load and every default is
//! recorded in [`Scenario::provenance`], so `serialize(parse(x))` is the fully
//! explicit form of `x`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bezier::{Trajectory, TrajectorySegment};
use crate::flatness::{VehicleParams, DEFAULT_V_FLOOR};
use crate::gcs::{GcsError, RegionGraph, RegionVertex, DEFAULT_MAX_LEN};
use crate::geometry::{oriented_rectangle, ConvexPolygon, GeometryError, Polytope, Vec2};
use crate::program::{
    CostWeights, Limits, PathOutcome, PlanResult, PlannerSettings, PlanningProblem, RoundedOutcome,
    Strategy, DEFAULT_DEGREE, DEFAULT_ENUMERATE_LIMIT, DEFAULT_FACETS, MAX_DEGREE, MIN_DEGREE,
};
use crate::timing::{
    timing_windows, Margin, ObstaclePrediction, SeparationMode, SeparationRule, TimingWindow,
    WindowContext,
};
use crate::verify::{ego_yaw, profile_csv, FeasibilityReport};

pub const DEFAULT_AUDIT_DT: f64 = 0.01;
pub const DEFAULT_SNAPSHOT_INTERVAL: f64 = 1.0;
pub const DEFAULT_VEHICLE_LENGTH: f64 = 4.8;
pub const DEFAULT_VEHICLE_WIDTH: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("check `{check}` failed: {message}")]
    Invalid {
        check: &'static str,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GcsError),
}

fn invalid(check: &'static str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        check,
        message: message.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Document types

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneDoc {
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspacesDoc {
    pub normals: Vec<[f64; 2]>,
    pub offsets: Vec<f64>,
}

/// Exactly one of `box` (`[x0, x1, y0, y1]`), `halfspaces` or `vertices`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeDoc {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspaces: Option<HalfspacesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
}

impl ShapeDoc {
    pub fn boxed(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        ShapeDoc {
            bbox: Some([x0, x1, y0, y1]),
            ..Default::default()
        }
    }

    fn build(&self, at: &str) -> Result<Polytope, ScenarioError> {
        let given = [
            self.bbox.is_some(),
            self.halfspaces.is_some(),
            self.vertices.is_some(),
        ];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(invalid(
                "shape",
                format!("{at}: give exactly one of box, halfspaces, vertices"),
            ));
        }
        let geo = |e: GeometryError| invalid("shape", format!("{at}: {e}"));
        if let Some([x0, x1, y0, y1]) = self.bbox {
            return Polytope::from_box(x0, x1, y0, y1).map_err(geo);
        }
        if let Some(h) = &self.halfspaces {
            let normals = h.normals.iter().map(|n| Vec2::new(n[0], n[1])).collect();
            return Polytope::new(normals, h.offsets.clone()).map_err(geo);
        }
        let v: Vec<Vec2> = self
            .vertices
            .as_ref()
            .unwrap()
            .iter()
            .map(|p| Vec2::new(p[0], p[1]))
            .collect();
        Polytope::from_vertices(&v).map_err(geo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    pub id: String,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspaces: Option<HalfspacesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
    /// Nominal travel direction, used by the minimum-speed constraint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 2]>,
    /// Drawn as a transition region.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub transition: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoDoc {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Driving straight at the start: zero initial curvature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub straight: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDoc {
    pub region: ShapeDoc,
    pub velocity: [f64; 2],
    /// Arrive with zero curvature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub straight: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticObstacle {
    pub id: String,
    pub center: [f64; 2],
    #[serde(default)]
    pub yaw: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_length() -> f64 {
    DEFAULT_VEHICLE_LENGTH
}

fn default_width() -> f64 {
    DEFAULT_VEHICLE_WIDTH
}

impl StaticObstacle {
    pub fn footprint(&self) -> ConvexPolygon {
        oriented_rectangle(
            Vec2::new(self.center[0], self.center[1]),
            self.yaw,
            self.length,
            self.width,
        )
        .expect("validated dimensions")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_separation: Option<SeparationMode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub separation: Vec<SeparationRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<TimingWindow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha4: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_r: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_time: Option<f64>,
    #[serde(default)]
    pub lanes: Vec<LaneDoc>,
    pub regions: Vec<RegionDoc>,
    pub edges: Vec<(String, String)>,
    pub source: String,
    pub target: String,
    pub ego: EgoDoc,
    pub goal: GoalDoc,
    #[serde(default)]
    pub static_obstacles: Vec<StaticObstacle>,
    #[serde(default)]
    pub dynamic_obstacles: Vec<ObstaclePrediction>,
    #[serde(default)]
    pub timing: TimingDoc,
    #[serde(default)]
    pub limits: LimitsDoc,
    #[serde(default)]
    pub weights: WeightsDoc,
    #[serde(default)]
    pub vehicle: VehicleDoc,
    #[serde(default)]
    pub planner: PlannerDoc,
    #[serde(default)]
    pub audit: AuditDoc,
}

fn scale_y(p: &mut [f64; 2], k: f64) {
    p[1] *= k;
}

fn scale_yaw(yaw: f64, k: f64) -> f64 {
    (k * yaw.sin()).atan2(yaw.cos())
}

fn scale_shape(
    bbox: &mut Option<[f64; 4]>,
    halfspaces: &mut Option<HalfspacesDoc>,
    vertices: &mut Option<Vec<[f64; 2]>>,
    k: f64,
) {
    if let Some(b) = bbox {
        b[2] *= k;
        b[3] *= k;
    }
    if let Some(h) = halfspaces {
        h.normals.iter_mut().for_each(|n| n[1] /= k);
    }
    if let Some(v) = vertices {
        v.iter_mut().for_each(|p| scale_y(p, k));
    }
}

impl ScenarioDoc {
    /// Maps every point `(x, y)` to `(x, k y)`: lanes, regions, ego, goal and
    /// obstacle paths. Vehicle dimensions are unchanged. With `k < 1` a
    /// scenario that drives along `x` asks for proportionally less curvature.
    pub fn scale_lateral(&self, k: f64) -> ScenarioDoc {
        assert!(k > 0.0, "lateral scale must be positive");
        let mut doc = self.clone();
        for lane in &mut doc.lanes {
            lane.centerline.iter_mut().for_each(|p| scale_y(p, k));
        }
        for r in &mut doc.regions {
            scale_shape(&mut r.bbox, &mut r.halfspaces, &mut r.vertices, k);
            if let Some(d) = &mut r.direction {
                scale_y(d, k);
            }
        }
        scale_y(&mut doc.ego.position, k);
        scale_y(&mut doc.ego.velocity, k);
        doc.ego.yaw = doc.ego.yaw.map(|y| scale_yaw(y, k));
        let g = &mut doc.goal.region;
        scale_shape(&mut g.bbox, &mut g.halfspaces, &mut g.vertices, k);
        scale_y(&mut doc.goal.velocity, k);
        for o in &mut doc.static_obstacles {
            scale_y(&mut o.center, k);
            o.yaw = scale_yaw(o.yaw, k);
        }
        for o in &mut doc.dynamic_obstacles {
            scale_y(&mut o.position, k);
            o.yaw = scale_yaw(o.yaw, k);
        }
        doc
    }
}

// ---------------------------------------------------------------------------
// Validated scenario

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub centerline: Vec<Vec2>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    pub polytope: Polytope,
    pub direction: Vec2,
    pub transition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ego {
    pub position: Vec2,
    pub velocity: Vec2,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl Ego {
    pub fn footprint(&self) -> ConvexPolygon {
        oriented_rectangle(self.position, self.yaw, self.length, self.width)
            .expect("validated dimensions")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSettings {
    pub dt: f64,
    pub snapshot_interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// The document with every default written out.
    pub doc: ScenarioDoc,
    pub name: String,
    pub lanes: Vec<Lane>,
    /// All declared regions, including ones pruned from the graph.
    pub regions: Vec<Region>,
    pub ego: Ego,
    pub static_obstacles: Vec<StaticObstacle>,
    pub dynamic_obstacles: Vec<ObstaclePrediction>,
    pub vehicle: VehicleParams,
    pub audit: AuditSettings,
    pub problem: PlanningProblem,
    /// One line per default that was applied.
    pub provenance: Vec<String>,
}

fn fill<T: Copy + std::fmt::Debug>(
    slot: &mut Option<T>,
    default: T,
    name: &str,
    log: &mut Vec<String>,
) -> T {
    match *slot {
        Some(v) => v,
        None => {
            log.push(format!("{name} = {default:?} (default)"));
            *slot = Some(default);
            default
        }
    }
}

fn vec2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn finite(check: &'static str, what: &str, xs: &[f64]) -> Result<(), ScenarioError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(check, format!("{what} must be finite")))
    }
}

impl Scenario {
    /// Validate a document, fill defaults and build the planning problem.
    pub fn from_doc(mut doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
        let mut log = Vec::new();
        let start_time = fill(&mut doc.start_time, 0.0, "start_time", &mut log);
        if !(start_time.is_finite() && start_time >= 0.0) {
            return Err(invalid(
                "start_time",
                "start_time must be finite and non-negative",
            ));
        }

        let mut lanes = Vec::new();
        for (i, l) in doc.lanes.iter().enumerate() {
            if l.centerline.len() < 2 || !(l.width > 0.0) {
                return Err(invalid(
                    "lane",
                    format!("lanes[{i}] needs two points and a positive width"),
                ));
            }
            finite("lane", &format!("lanes[{i}]"), &l.centerline.concat())?;
            lanes.push(Lane {
                centerline: l.centerline.iter().map(|p| vec2(*p)).collect(),
                width: l.width,
            });
        }

        let mut regions = Vec::new();
        for (i, r) in doc.regions.iter_mut().enumerate() {
            let shape = ShapeDoc {
                bbox: r.bbox,
                halfspaces: r.halfspaces.clone(),
                vertices: r.vertices.clone(),
            };
            let polytope = shape.build(&format!("regions[{i}] ({})", r.id))?;
            let d = fill(
                &mut r.direction,
                [1.0, 0.0],
                &format!("regions[{i}].direction"),
                &mut log,
            );
            let direction = vec2(d);
            if !(direction.norm() > 1e-9 && direction.norm().is_finite()) {
                return Err(invalid(
                    "direction",
                    format!("regions[{i}].direction must be a nonzero vector"),
                ));
            }
            regions.push(Region {
                id: r.id.clone(),
                polytope,
                direction: direction.normalize(),
                transition: r.transition,
            });
        }

        let e = &mut doc.ego;
        finite(
            "ego",
            "ego position and velocity",
            &[e.position, e.velocity].concat(),
        )?;
        let length = fill(
            &mut e.length,
            DEFAULT_VEHICLE_LENGTH,
            "ego.length",
            &mut log,
        );
        let width = fill(&mut e.width, DEFAULT_VEHICLE_WIDTH, "ego.width", &mut log);
        let heading = if vec2(e.velocity).norm() > 1e-9 {
            e.velocity[1].atan2(e.velocity[0])
        } else {
            0.0
        };
        let yaw = fill(&mut e.yaw, heading, "ego.yaw", &mut log);
        if !(length > 0.0 && width > 0.0 && yaw.is_finite()) {
            return Err(invalid("ego", "ego length and width must be positive"));
        }
        let start_straight = fill(&mut e.straight, true, "ego.straight", &mut log);
        let ego = Ego {
            position: vec2(e.position),
            velocity: vec2(e.velocity),
            yaw,
            length,
            width,
        };

        let goal = doc.goal.region.build("goal.region")?;
        finite("goal", "goal velocity", &doc.goal.velocity)?;
        let goal_straight = fill(&mut doc.goal.straight, true, "goal.straight", &mut log);

        for (i, o) in doc.static_obstacles.iter().enumerate() {
            finite(
                "obstacle",
                &format!("static_obstacles[{i}]"),
                &[o.center[0], o.center[1], o.yaw],
            )?;
            if !(o.length > 0.0 && o.width > 0.0) {
                return Err(invalid(
                    "obstacle",
                    format!("static_obstacles[{i}] needs positive dimensions"),
                ));
            }
        }
        for o in &doc.dynamic_obstacles {
            o.validate()
                .map_err(|e| invalid("obstacle", format!("dynamic obstacle {}: {e}", o.id)))?;
        }
        let mut ids: Vec<&str> = doc.static_obstacles.iter().map(|o| o.id.as_str()).collect();
        ids.extend(doc.dynamic_obstacles.iter().map(|o| o.id.as_str()));
        let n_ids = ids.len();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != n_ids {
            return Err(invalid("obstacle ids", "obstacle ids must be unique"));
        }

        let l = &mut doc.limits;
        let d = Limits {
            v_floor: DEFAULT_V_FLOOR,
            ..Limits::default()
        };
        let limits = Limits {
            v_min: fill(&mut l.v_min, d.v_min, "limits.v_min", &mut log),
            v_max: fill(&mut l.v_max, d.v_max, "limits.v_max", &mut log),
            h_min: fill(&mut l.h_min, d.h_min, "limits.h_min", &mut log),
            t_max: fill(&mut l.t_max, d.t_max, "limits.t_max", &mut log),
            v_floor: fill(&mut l.v_floor, d.v_floor, "limits.v_floor", &mut log),
        };
        limits.validate().map_err(|m| invalid("limits", m))?;

        let w = &mut doc.weights;
        let weights = CostWeights {
            alpha1: fill(&mut w.alpha1, 1.0, "weights.alpha1", &mut log),
            alpha2: fill(&mut w.alpha2, 1.0, "weights.alpha2", &mut log),
            alpha3: fill(&mut w.alpha3, 1.0, "weights.alpha3", &mut log),
            alpha4: fill(&mut w.alpha4, 1.0, "weights.alpha4", &mut log),
        };
        weights.validate().map_err(|m| invalid("weights", m))?;

        let v = &mut doc.vehicle;
        let dv = VehicleParams::default();
        let vehicle = VehicleParams {
            m: fill(&mut v.m, dv.m, "vehicle.m", &mut log),
            i_z: fill(&mut v.i_z, dv.i_z, "vehicle.i_z", &mut log),
            l_f: fill(&mut v.l_f, dv.l_f, "vehicle.l_f", &mut log),
            l_r: fill(&mut v.l_r, dv.l_r, "vehicle.l_r", &mut log),
            c_f: fill(&mut v.c_f, dv.c_f, "vehicle.c_f", &mut log),
            c_r: fill(&mut v.c_r, dv.c_r, "vehicle.c_r", &mut log),
        };
        vehicle
            .validate()
            .map_err(|e| invalid("vehicle", e.to_string()))?;

        let p = &mut doc.planner;
        let settings = PlannerSettings {
            degree: fill(&mut p.degree, DEFAULT_DEGREE, "planner.degree", &mut log),
            facets: fill(&mut p.facets, DEFAULT_FACETS, "planner.facets", &mut log),
            max_len: fill(&mut p.max_len, DEFAULT_MAX_LEN, "planner.max_len", &mut log),
            enumerate_limit: fill(
                &mut p.enumerate_limit,
                DEFAULT_ENUMERATE_LIMIT,
                "planner.enumerate_limit",
                &mut log,
            ),
            strategy: fill(
                &mut p.strategy,
                Strategy::Auto,
                "planner.strategy",
                &mut log,
            ),
            parallel: true,
        };
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&settings.degree) {
            return Err(invalid(
                "planner",
                format!("degree must lie in {MIN_DEGREE}..={MAX_DEGREE}"),
            ));
        }
        if !(4..=256).contains(&settings.facets) {
            return Err(invalid("planner", "facets must lie in 4..=256"));
        }
        if settings.max_len < 1 {
            return Err(invalid("planner", "max_len must be at least 1"));
        }

        let a = &mut doc.audit;
        let audit = AuditSettings {
            dt: fill(&mut a.dt, DEFAULT_AUDIT_DT, "audit.dt", &mut log),
            snapshot_interval: fill(
                &mut a.snapshot_interval,
                DEFAULT_SNAPSHOT_INTERVAL,
                "audit.snapshot_interval",
                &mut log,
            ),
        };
        if !(audit.dt > 0.0 && audit.dt <= 0.1) {
            return Err(invalid("audit", "audit dt must lie in (0, 0.1]"));
        }
        if !(audit.snapshot_interval > 0.0 && audit.snapshot_interval.is_finite()) {
            return Err(invalid("audit", "snapshot interval must be positive"));
        }

        let default_mode = fill(
            &mut doc.timing.default_separation,
            SeparationMode::After,
            "timing.default_separation",
            &mut log,
        );

        let graph = RegionGraph::new(
            regions
                .iter()
                .map(|r| RegionVertex {
                    id: r.id.clone(),
                    region: r.polytope.clone(),
                    direction: r.direction,
                })
                .collect(),
            &doc.edges,
            &doc.source,
            &doc.target,
        )?;

        let source = &graph.vertex(graph.source()).region;
        if !source.contains(&ego.position, 1e-9) {
            return Err(invalid(
                "start in source",
                format!(
                    "ego start {:?} is outside source region {}",
                    doc.ego.position, doc.source
                ),
            ));
        }
        if !goal.intersects(&graph.vertex(graph.target()).region) {
            return Err(invalid(
                "goal meets target",
                format!("goal polytope misses target region {}", doc.target),
            ));
        }

        for rule in &doc.timing.separation {
            if regions.iter().all(|r| r.id != rule.vertex) {
                return Err(invalid(
                    "separation",
                    format!("unknown vertex {}", rule.vertex),
                ));
            }
            if doc.dynamic_obstacles.iter().all(|o| o.id != rule.obstacle) {
                return Err(invalid(
                    "separation",
                    format!("unknown dynamic obstacle {}", rule.obstacle),
                ));
            }
        }
        for w in &doc.timing.windows {
            if regions.iter().all(|r| r.id != w.vertex) {
                return Err(invalid("window", format!("unknown vertex {}", w.vertex)));
            }
        }
        let ctx = WindowContext {
            vertices: graph
                .vertices()
                .iter()
                .map(|v| (v.id.as_str(), &v.region))
                .collect(),
            obstacles: &doc.dynamic_obstacles,
            rules: &doc.timing.separation,
            default_mode,
            explicit: &doc.timing.windows,
            horizon: start_time + limits.t_max,
            margin: Margin::for_ego(ego.length, ego.width),
        };
        let windows = timing_windows(&ctx).map_err(|e| invalid("timing windows", e.to_string()))?;

        let problem = PlanningProblem {
            graph,
            start: ego.position,
            start_velocity: ego.velocity,
            start_time,
            goal,
            goal_velocity: vec2(doc.goal.velocity),
            start_straight,
            goal_straight,
            windows,
            limits,
            weights,
            settings,
        };

        Ok(Scenario {
            name: doc.name.clone(),
            lanes,
            regions,
            ego,
            static_obstacles: doc.static_obstacles.clone(),
            dynamic_obstacles: doc.dynamic_obstacles.clone(),
            vehicle,
            audit,
            problem,
            provenance: log,
            doc,
        })
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn start_time(&self) -> f64 {
        self.problem.start_time
    }

    /// Fully explicit JSON form of the scenario.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.doc).expect("scenario documents serialize");
        s.push('\n');
        s
    }

    /// The same scene with every timestamp moved by `dt`.
    pub fn time_shifted(&self, dt: f64) -> Result<Scenario, ScenarioError> {
        let mut doc = self.doc.clone();
        doc.start_time = Some(self.start_time() + dt);
        doc.dynamic_obstacles = doc
            .dynamic_obstacles
            .iter()
            .map(|o| o.time_shifted(dt))
            .collect();
        doc.timing.windows = doc.timing.windows.iter().map(|w| w.shifted(dt)).collect();
        Scenario::from_doc(doc)
    }
}

/// Schema-check a scenario document without validating its contents.
pub fn parse_scenario_doc(text: &str) -> Result<ScenarioDoc, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_doc(parse_scenario_doc(text)?)
}

pub fn load_scenario_doc(path: impl AsRef<Path>) -> Result<ScenarioDoc, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_scenario_doc(&text)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    Scenario::from_doc(load_scenario_doc(path)?)
}

// ---------------------------------------------------------------------------
// Results

/// Deterministic part of a planning run. Wall-clock timings live in a
/// separate file so identical runs give identical bytes here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDoc {
    pub scenario: String,
    pub path: Vec<String>,
    pub segments: Vec<TrajectorySegment>,
    pub objective: f64,
    pub lower_bound: Option<f64>,
    pub strategy: Strategy,
    pub rounded: Option<RoundedOutcome>,
    pub candidates: Vec<PathOutcome>,
}

impl ResultDoc {
    pub fn from_plan(plan: &PlanResult, scenario: &str) -> ResultDoc {
        ResultDoc {
            scenario: scenario.to_string(),
            path: plan.path.clone(),
            segments: plan.segments.clone(),
            objective: plan.objective,
            lower_bound: plan.lower_bound,
            strategy: plan.strategy,
            rounded: plan.rounded.clone(),
            candidates: plan.candidates.clone(),
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory, ScenarioError> {
        Trajectory::new(self.segments.clone())
            .map_err(|e| invalid("result segments", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }
}

pub fn parse_result(text: &str) -> Result<ResultDoc, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultDoc, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_result(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub result: PathBuf,
    pub timings: PathBuf,
    pub report: PathBuf,
    pub profile: PathBuf,
    pub svg: PathBuf,
}

/// Write `result.json`, `timings.json`, `report.json`, `profile.csv` and
/// `trajectory.svg` under `dir`.
pub fn write_result(
    plan: &PlanResult,
    report: &FeasibilityReport,
    scenario: &Scenario,
    dir: impl AsRef<Path>,
) -> Result<WrittenFiles, ScenarioError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = WrittenFiles {
        result: dir.join("result.json"),
        timings: dir.join("timings.json"),
        report: dir.join("report.json"),
        profile: dir.join("profile.csv"),
        svg: dir.join("trajectory.svg"),
    };
    let put = |path: &PathBuf, text: String| fs::write(path, text).map_err(io_err(path));

    put(
        &files.result,
        ResultDoc::from_plan(plan, &scenario.name).to_json(),
    )?;
    let mut timings = serde_json::to_value(plan.timings).expect("timings serialize");
    timings["audit_ms"] = serde_json::json!(report.elapsed_ms);
    put(
        &files.timings,
        serde_json::to_string_pretty(&timings).expect("json") + "\n",
    )?;
    put(
        &files.report,
        serde_json::to_string_pretty(report).expect("json") + "\n",
    )?;
    put(&files.profile, profile_csv(report))?;
    put(&files.svg, render_svg(scenario, &plan.trajectory()))?;
    Ok(files)
}

// ---------------------------------------------------------------------------
// SVG

const PX_PER_M: f64 = 10.0;

struct Bounds {
    min: Vec2,
    max: Vec2,
}

impl Bounds {
    fn add(&mut self, p: &Vec2) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }
}

fn points_attr(pts: &[Vec2]) -> String {
    pts.iter()
        .map(|p| format!("{:.3},{:.3}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(" ")
}

fn polygon(out: &mut String, class: &str, pts: &[Vec2], extra: &str) {
    let _ = writeln!(
        out,
        r#"  <polygon class="{class}" points="{}"{extra}/>"#,
        points_attr(pts)
    );
}

/// Top-down drawing: lanes, regions, goal, obstacle snapshots, ego
/// snapshots every `audit.snapshot_interval` seconds and the path.
pub fn render_svg(scenario: &Scenario, traj: &Trajectory) -> String {
    let interval = scenario.audit.snapshot_interval;
    let t0 = traj.start_time();
    let count = (traj.duration() / interval + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|k| t0 + k as f64 * interval).collect();

    let mut b = Bounds {
        min: scenario.ego.position,
        max: scenario.ego.position,
    };
    let region_pts: Vec<(&Region, Vec<Vec2>)> = scenario
        .regions
        .iter()
        .map(|r| (r, r.polytope.vertices()))
        .collect();
    for (_, pts) in &region_pts {
        pts.iter().for_each(|p| b.add(p));
    }
    for l in &scenario.lanes {
        let h = Vec2::new(0.0, 0.5 * l.width);
        for p in &l.centerline {
            b.add(&(p + h));
            b.add(&(p - h));
        }
    }
    let pad = 2.0;
    let (w, h) = (b.max.x - b.min.x + 2.0 * pad, b.max.y - b.min.y + 2.0 * pad);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
        w * PX_PER_M,
        h * PX_PER_M,
        b.min.x - pad,
        -(b.max.y + pad),
        w,
        h
    );
    let _ = writeln!(out, "<title>{}</title>", scenario.name);
    out.push_str(
        "<style>.lane{fill:none;stroke:#ddd}.centerline{fill:none;stroke:#999;stroke-width:0.1;stroke-dasharray:1 1}\
.region{fill:#69c;fill-opacity:0.12;stroke:#69c;stroke-width:0.05}.transition{fill:#3a3;fill-opacity:0.25;stroke:#3a3}\
.goal{fill:#fc3;fill-opacity:0.4}.static{fill:#c33}.dynamic{fill:#36c}.ego{fill:#f90;fill-opacity:0.6;stroke:#000;stroke-width:0.05}\
.trajectory{fill:none;stroke:#000;stroke-width:0.1}</style>\n",
    );
    out.push_str("<g transform=\"scale(1,-1)\">\n");

    for l in &scenario.lanes {
        let pts = points_attr(&l.centerline);
        let _ = writeln!(
            out,
            r#"  <polyline class="lane" stroke-width="{:.3}" points="{pts}"/>"#,
            l.width
        );
        let _ = writeln!(out, r#"  <polyline class="centerline" points="{pts}"/>"#);
    }
    for (r, pts) in &region_pts {
        let class = if r.transition {
            "region transition"
        } else {
            "region"
        };
        polygon(&mut out, class, pts, &format!(r#" data-id="{}""#, r.id));
    }
    polygon(&mut out, "goal", &scenario.problem.goal.vertices(), "");
    for o in &scenario.static_obstacles {
        polygon(
            &mut out,
            "obstacle static",
            o.footprint().vertices(),
            &format!(r#" data-id="{}""#, o.id),
        );
    }
    let fade = |k: usize| 0.25 + 0.75 * (k + 1) as f64 / count as f64;
    for o in &scenario.dynamic_obstacles {
        for (k, t) in times.iter().enumerate() {
            let extra = format!(
                r#" data-id="{}" data-t="{t:.3}" opacity="{:.3}""#,
                o.id,
                fade(k)
            );
            polygon(
                &mut out,
                "obstacle dynamic",
                o.footprint(*t, 0.0).vertices(),
                &extra,
            );
        }
    }
    let v_floor = scenario.problem.limits.v_floor;
    for (k, t) in times.iter().enumerate() {
        if let Ok(kin) = traj.kinematics_at(t.min(traj.end_time())) {
            let yaw = ego_yaw(&kin, &scenario.vehicle, v_floor, scenario.ego.yaw);
            let rect =
                oriented_rectangle(kin.position, yaw, scenario.ego.length, scenario.ego.width)
                    .expect("validated dimensions");
            let extra = format!(r#" data-t="{t:.3}" opacity="{:.3}""#, fade(k));
            polygon(&mut out, "ego", rect.vertices(), &extra);
        }
    }
    let n = 200;
    let path: Vec<Vec2> = (0..=n)
        .filter_map(|i| {
            traj.kinematics_at(t0 + traj.duration() * i as f64 / n as f64)
                .ok()
        })
        .map(|k| k.position)
        .collect();
    let _ = writeln!(
        out,
        r#"  <polyline class="trajectory" points="{}"/>"#,
        points_attr(&path)
    );
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "name": "minimal",
        "regions": [
            {"id": "a", "box": [-1, 12, -2, 2]},
            {"id": "b", "box": [10, 30, -2, 2]}
        ],
        "edges": [["a", "b"]],
        "source": "a",
        "target": "b",
        "ego": {"position": [0, 0], "velocity": [5, 0]},
        "goal": {"region": {"box": [24, 28, -1, 1]}, "velocity": [5, 0]}
    }"#;

    #[test]
    fn defaults_are_logged() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.problem.settings.degree, 6);
        assert_eq!(s.problem.settings.facets, 16);
        assert_eq!(s.problem.weights, CostWeights::default());
        assert_eq!(s.problem.limits.h_min, 0.05);
        assert_eq!(s.problem.limits.t_max, 10.0);
        assert_eq!(s.audit.dt, 0.01);
        for key in [
            "planner.facets",
            "planner.degree",
            "weights.alpha1",
            "limits.h_min",
            "limits.t_max",
            "audit.dt",
        ] {
            assert!(
                s.provenance.iter().any(|l| l.starts_with(key)),
                "{key} missing from {:?}",
                s.provenance
            );
        }
        assert_eq!(s.ego.yaw, 0.0);
        assert_eq!(s.problem.graph.vertices().len(), 2);
    }

    #[test]
    fn serialize_parse_is_a_fixed_point() {
        let s = parse_scenario(MINIMAL).unwrap();
        let again = parse_scenario(&s.to_json()).unwrap();
        assert!(again.provenance.is_empty());
        assert_eq!(again.doc, s.doc);
        assert_eq!(again.problem, s.problem);
        assert_eq!(again.to_json(), s.to_json());
    }

    #[test]
    fn missing_field_is_named() {
        let truncated = MINIMAL.replace(r#""target": "b","#, "");
        let err = parse_scenario(&truncated).unwrap_err();
        assert!(err.to_string().contains("target"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected_with_path() {
        let bad = MINIMAL.replace(
            r#""velocity": [5, 0]}"#,
            r#""velocity": [5, 0], "colour": 1}"#,
        );
        let err = parse_scenario(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour"), "{msg}");
        assert!(matches!(err, ScenarioError::Schema { .. }));
    }

    #[test]
    fn invariants_have_named_checks() {
        let outside = MINIMAL.replace(r#""position": [0, 0]"#, r#""position": [0, 5]"#);
        match parse_scenario(&outside) {
            Err(ScenarioError::Invalid { check, .. }) => assert_eq!(check, "start in source"),
            other => panic!("{other:?}"),
        }
        let miss = MINIMAL.replace("[24, 28, -1, 1]", "[40, 45, -1, 1]");
        match parse_scenario(&miss) {
            Err(ScenarioError::Invalid { check, .. }) => assert_eq!(check, "goal meets target"),
            other => panic!("{other:?}"),
        }
        let two_shapes = MINIMAL.replace(
            r#"{"id": "b", "box": [10, 30, -2, 2]}"#,
            r#"{"id": "b", "box": [10, 30, -2, 2], "vertices": [[10,-2],[30,-2],[30,2]]}"#,
        );
        match parse_scenario(&two_shapes) {
            Err(ScenarioError::Invalid { check, .. }) => assert_eq!(check, "shape"),
            other => panic!("{other:?}"),
        }
        let dangling = MINIMAL.replace(r#"[["a", "b"]]"#, r#"[["a", "b"], ["a", "zz"]]"#);
        assert!(matches!(
            parse_scenario(&dangling),
            Err(ScenarioError::Graph(_))
        ));
    }

    #[test]
    fn shapes_agree() {
        let as_vertices = MINIMAL.replace(
            r#""box": [10, 30, -2, 2]"#,
            r#""vertices": [[10, -2], [30, -2], [30, 2], [10, 2]]"#,
        );
        let as_halfspaces = MINIMAL.replace(
            r#""box": [10, 30, -2, 2]"#,
            r#""halfspaces": {"normals": [[1,0],[-1,0],[0,1],[0,-1]], "offsets": [30, -10, 2, 2]}"#,
        );
        let probe = [
            Vec2::new(20.0, 1.9),
            Vec2::new(10.1, -1.9),
            Vec2::new(30.1, 0.0),
            Vec2::new(20.0, 2.1),
        ];
        let reference = parse_scenario(MINIMAL).unwrap();
        for text in [as_vertices, as_halfspaces] {
            let s = parse_scenario(&text).unwrap();
            for p in &probe {
                assert_eq!(
                    s.region("b").unwrap().polytope.contains(p, 0.0),
                    reference.region("b").unwrap().polytope.contains(p, 0.0)
                );
            }
        }
    }

    #[test]
    fn time_shift_moves_windows_and_obstacles() {
        let text = MINIMAL.replace(
            r#""goal":"#,
            r#""timing": {"windows": [{"vertex": "b", "entry": {"max": 3.0}}]},
               "dynamic_obstacles": [{"id": "o", "position": [50, 5], "profile": [{"duration": 10, "speed": 1}]}],
               "goal":"#,
        );
        let s = parse_scenario(&text).unwrap();
        let shifted = s.time_shifted(2.5).unwrap();
        assert_eq!(shifted.start_time(), 2.5);
        assert_eq!(shifted.problem.windows[0].entry.unwrap().max, Some(5.5));
        let (p, _) = crate::timing::predict_pose(&s.dynamic_obstacles[0], 4.0);
        let (q, _) = crate::timing::predict_pose(&shifted.dynamic_obstacles[0], 6.5);
        assert!((p - q).norm() < 1e-12);
    }
}
