//! Planar convex geometry: half-space polytopes for the free-space regions,
//! convex polygons for vehicle footprints, and the facet directions used to
//! linearize Euclidean norms.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, Family, LinearProgram, LpError};

pub type Vec2 = Vector2<f64>;

/// z-component of the planar cross product.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counterclockwise rotation by 90 degrees.
#[inline]
pub fn perp(a: &Vec2) -> Vec2 {
    Vec2::new(-a.y, a.x)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polytope needs at least 3 half-spaces with matching offsets (got {normals} normals, {offsets} offsets)")]
    Shape { normals: usize, offsets: usize },
    #[error("polytope has non-finite data")]
    NonFinite,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty or has no interior (inradius {0:e})")]
    NoInterior(f64),
    #[error(
        "polygon vertices are not convex counterclockwise (cross product {0:e} at vertex {1})"
    )]
    NotConvex(f64, usize),
    #[error("polygon has no vertices")]
    EmptyPolygon,
    #[error("facet count must be at least 4, got {0}")]
    TooFewFacets(usize),
    #[error("rectangle dimensions must be positive")]
    BadDimensions,
    #[error("validity check failed: {0}")]
    Lp(#[from] LpError),
}

/// Convex region `{x : A x ≤ b}` with bounded nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolytope", into = "RawPolytope")]
pub struct Polytope {
    normals: Vec<Vec2>,
    offsets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolytope {
    normals: Vec<[f64; 2]>,
    offsets: Vec<f64>,
}

impl TryFrom<RawPolytope> for Polytope {
    type Error = GeometryError;
    fn try_from(raw: RawPolytope) -> Result<Self, Self::Error> {
        Polytope::new(
            raw.normals.iter().map(|n| Vec2::new(n[0], n[1])).collect(),
            raw.offsets,
        )
    }
}

impl From<Polytope> for RawPolytope {
    fn from(p: Polytope) -> Self {
        RawPolytope {
            normals: p.normals.iter().map(|n| [n.x, n.y]).collect(),
            offsets: p.offsets,
        }
    }
}

impl Polytope {
    /// Builds and validates a polytope: four support LPs establish
    /// boundedness and a Chebyshev-ball LP establishes a strict interior.
    pub fn new(normals: Vec<Vec2>, offsets: Vec<f64>) -> Result<Self, GeometryError> {
        if normals.len() != offsets.len() || normals.len() < 3 {
            return Err(GeometryError::Shape {
                normals: normals.len(),
                offsets: offsets.len(),
            });
        }
        if normals
            .iter()
            .any(|n| !n.x.is_finite() || !n.y.is_finite() || n.norm() == 0.0)
            || offsets.iter().any(|b| !b.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let p = Polytope { normals, offsets };
        p.check_bounded()?;
        let r = p.inradius()?;
        if r <= 1e-9 {
            return Err(GeometryError::NoInterior(r));
        }
        Ok(p)
    }

    /// Axis-aligned box `[x0, x1] × [y0, y1]`.
    pub fn from_box(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, GeometryError> {
        Polytope::new(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(-1.0, 0.0),
                Vec2::new(0.0, -1.0),
            ],
            vec![x1, y1, -x0, -y0],
        )
    }

    /// Half-space form of the convex hull of counterclockwise `vertices`.
    pub fn from_vertices(vertices: &[Vec2]) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::Shape {
                normals: n,
                offsets: n,
            });
        }
        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let edge = b - a;
            let len = edge.norm();
            if len == 0.0 {
                continue;
            }
            let normal = Vec2::new(edge.y, -edge.x) / len;
            normals.push(normal);
            offsets.push(normal.dot(&a));
        }
        Polytope::new(normals, offsets)
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// `A x ≤ b + tol` componentwise.
    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, b)| a.dot(x) <= b + tol)
    }

    /// Largest value of `max_i (a_i·x − b_i)`; positive outside the region.
    pub fn excess(&self, x: &Vec2) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| a.dot(x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn translated(&self, shift: &Vec2) -> Polytope {
        Polytope {
            normals: self.normals.clone(),
            offsets: self
                .normals
                .iter()
                .zip(&self.offsets)
                .map(|(a, b)| b + a.dot(shift))
                .collect(),
        }
    }

    fn check_bounded(&self) -> Result<(), GeometryError> {
        for dir in [
            Vec2::new(1.0, 0.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, -1.0),
        ] {
            let mut p = LinearProgram::new(2);
            p.set_cost(0, -dir.x);
            p.set_cost(1, -dir.y);
            for (a, b) in self.normals.iter().zip(&self.offsets) {
                p.add_le(&[(0, a.x), (1, a.y)], *b, Family::General);
            }
            match lp::solve_lp(&p) {
                Ok(_) => {}
                Err(LpError::Unbounded) => return Err(GeometryError::Unbounded),
                Err(LpError::Infeasible) => return Err(GeometryError::NoInterior(0.0)),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    /// Radius of the largest inscribed disc.
    pub fn inradius(&self) -> Result<f64, GeometryError> {
        Ok(self.chebyshev()?.1)
    }

    /// Center and radius of the largest inscribed disc.
    pub fn chebyshev(&self) -> Result<(Vec2, f64), GeometryError> {
        let mut p = LinearProgram::new(3);
        p.set_cost(2, -1.0);
        p.set_bounds(2, 0.0, 1e6);
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            p.add_le(&[(0, a.x), (1, a.y), (2, a.norm())], *b, Family::General);
        }
        match lp::solve_lp(&p) {
            Ok(sol) => Ok((Vec2::new(sol.x[0], sol.x[1]), sol.x[2])),
            Err(LpError::Infeasible) => Ok((Vec2::zeros(), 0.0)),
            Err(e) => Err(e.into()),
        }
    }

    /// Counterclockwise vertex list.
    pub fn vertices(&self) -> Vec<Vec2> {
        let n = self.normals.len();
        let scale = self.offsets.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        let mut pts: Vec<Vec2> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a1, a2) = (self.normals[i], self.normals[j]);
                let det = cross(&a1, &a2);
                if det.abs() < 1e-12 * a1.norm() * a2.norm() {
                    continue;
                }
                let (b1, b2) = (self.offsets[i], self.offsets[j]);
                let x = Vec2::new((b1 * a2.y - b2 * a1.y) / det, (a1.x * b2 - a2.x * b1) / det);
                if self.contains(&x, 1e-9 * scale)
                    && !pts.iter().any(|p| (p - x).norm() <= 1e-9 * scale)
                {
                    pts.push(x);
                }
            }
        }
        let c = pts.iter().fold(Vec2::zeros(), |acc, p| acc + p) / pts.len().max(1) as f64;
        pts.sort_by(|p, q| {
            let ap = (p.y - c.y).atan2(p.x - c.x);
            let aq = (q.y - c.y).atan2(q.x - c.x);
            ap.total_cmp(&aq)
        });
        pts
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices(),
        }
    }

    /// True when the two regions share at least one point.
    pub fn intersects(&self, other: &Polytope) -> bool {
        self.touches(&other.to_polygon())
    }

    /// True when the polygon overlaps or touches the region.
    pub fn touches(&self, polygon: &ConvexPolygon) -> bool {
        polygon_distance(&self.to_polygon(), polygon) <= 1e-9
    }
}

/// Convex polygon with counterclockwise vertices. Degenerate polygons (a
/// point or a segment) are permitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.is_empty() {
            return Err(GeometryError::EmptyPolygon);
        }
        let n = vertices.len();
        if n >= 3 {
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let c = vertices[(i + 2) % n];
                let z = cross(&(b - a), &(c - b));
                if z <= -1e-12 {
                    return Err(GeometryError::NotConvex(z, (i + 1) % n));
                }
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn centroid(&self) -> Vec2 {
        self.vertices.iter().fold(Vec2::zeros(), |acc, p| acc + p) / self.vertices.len() as f64
    }

    fn support(&self, dir: &Vec2) -> Vec2 {
        let mut best = self.vertices[0];
        let mut best_dot = best.dot(dir);
        for v in &self.vertices[1..] {
            let d = v.dot(dir);
            if d > best_dot {
                best = *v;
                best_dot = d;
            }
        }
        best
    }

    fn contains_point(&self, p: &Vec2) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            cross(&(b - a), &(p - a)) >= -1e-12
        })
    }
}

/// Rectangle footprint centered at `center`, long axis along `yaw`.
pub fn oriented_rectangle(
    center: Vec2,
    yaw: f64,
    length: f64,
    width: f64,
) -> Result<ConvexPolygon, GeometryError> {
    if !(length > 0.0 && width > 0.0) {
        return Err(GeometryError::BadDimensions);
    }
    Ok(rectangle_unchecked(center, yaw, length, width))
}

/// Same as [`oriented_rectangle`] but allows zero extents (point or segment
/// models of an obstacle).
pub(crate) fn rectangle_unchecked(
    center: Vec2,
    yaw: f64,
    length: f64,
    width: f64,
) -> ConvexPolygon {
    let (s, c) = yaw.sin_cos();
    let fwd = Vec2::new(c, s) * (0.5 * length);
    let left = Vec2::new(-s, c) * (0.5 * width);
    ConvexPolygon {
        vertices: vec![
            center + fwd - left,
            center + fwd + left,
            center - fwd + left,
            center - fwd - left,
        ],
    }
}

/// Euclidean distance between two convex polygons, 0 when they intersect.
///
/// Runs a support-function descent on the Minkowski difference; if that fails
/// to converge the exact vertex/edge enumeration is used instead.
pub fn polygon_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    gjk_distance(a, b).unwrap_or_else(|| brute_force_distance(a, b))
}

fn gjk_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> Option<f64> {
    let support = |d: &Vec2| a.support(d) - b.support(&-d);
    let mut simplex: Vec<Vec2> = vec![a.vertices[0] - b.vertices[0]];
    let mut v = simplex[0];
    for _ in 0..128 {
        let vv = v.norm_squared();
        if vv <= 1e-28 {
            return Some(0.0);
        }
        let w = support(&-v);
        if vv - v.dot(&w) <= 1e-13 * vv || simplex.contains(&w) {
            return Some(vv.sqrt());
        }
        simplex.push(w);
        let (nv, reduced) = closest_on_simplex(&simplex);
        match nv {
            None => return Some(0.0),
            Some(nv) => {
                if nv.norm_squared() >= vv {
                    return Some(vv.sqrt());
                }
                v = nv;
                simplex = reduced;
            }
        }
    }
    None
}

/// Closest point of the simplex to the origin and the minimal sub-simplex
/// supporting it. `None` when the origin lies inside a triangle.
fn closest_on_simplex(simplex: &[Vec2]) -> (Option<Vec2>, Vec<Vec2>) {
    match simplex.len() {
        1 => (Some(simplex[0]), simplex.to_vec()),
        2 => {
            let (p, sub) = closest_on_segment(simplex[0], simplex[1]);
            (Some(p), sub)
        }
        _ => {
            let (a, b, c) = (simplex[0], simplex[1], simplex[2]);
            let area = cross(&(b - a), &(c - a));
            if area.abs() > 0.0 {
                let s1 = cross(&(b - a), &(-a)) * area.signum();
                let s2 = cross(&(c - b), &(-b)) * area.signum();
                let s3 = cross(&(a - c), &(-c)) * area.signum();
                if s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0 {
                    return (None, simplex.to_vec());
                }
            }
            let candidates = [
                closest_on_segment(a, b),
                closest_on_segment(b, c),
                closest_on_segment(c, a),
            ];
            let best = candidates
                .into_iter()
                .min_by(|x, y| x.0.norm_squared().total_cmp(&y.0.norm_squared()))
                .expect("three candidates");
            (Some(best.0), best.1)
        }
    }
}

fn closest_on_segment(a: Vec2, b: Vec2) -> (Vec2, Vec<Vec2>) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom == 0.0 {
        return (a, vec![a]);
    }
    let t = -a.dot(&ab) / denom;
    if t <= 0.0 {
        (a, vec![a])
    } else if t >= 1.0 {
        (b, vec![b])
    } else {
        (a + ab * t, vec![a, b])
    }
}

fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    closest_on_segment(a - p, b - p).0.norm()
}

fn segments_intersect(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> bool {
    let d1 = cross(&(b - a), &(c - a));
    let d2 = cross(&(b - a), &(d - a));
    let d3 = cross(&(d - c), &(a - c));
    let d4 = cross(&(d - c), &(b - c));
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

fn edges(p: &ConvexPolygon) -> Vec<(Vec2, Vec2)> {
    let n = p.vertices.len();
    if n == 1 {
        return vec![(p.vertices[0], p.vertices[0])];
    }
    (0..n)
        .map(|i| (p.vertices[i], p.vertices[(i + 1) % n]))
        .collect()
}

/// Exact distance by enumerating vertex/edge pairs plus an overlap test.
pub(crate) fn brute_force_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    if a.vertices.iter().any(|v| b.contains_point(v))
        || b.vertices.iter().any(|v| a.contains_point(v))
    {
        return 0.0;
    }
    let (ea, eb) = (edges(a), edges(b));
    let mut best = f64::INFINITY;
    for (p, q) in &ea {
        for (r, s) in &eb {
            if segments_intersect(p, q, r, s) {
                return 0.0;
            }
            best = best
                .min(point_segment_distance(p, r, s))
                .min(point_segment_distance(q, r, s))
                .min(point_segment_distance(r, p, q))
                .min(point_segment_distance(s, p, q));
        }
    }
    best
}

/// Outward normals of a regular `F`-gon, used as a polyhedral stand-in for
/// the Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBallFacets {
    directions: Vec<Vec2>,
}

impl UnitBallFacets {
    pub fn new(count: usize) -> Result<Self, GeometryError> {
        if count < 4 {
            return Err(GeometryError::TooFewFacets(count));
        }
        let directions = (0..count)
            .map(|k| {
                let angle = 2.0 * PI * k as f64 / count as f64;
                Vec2::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(UnitBallFacets { directions })
    }

    pub fn directions(&self) -> &[Vec2] {
        &self.directions
    }

    pub fn count(&self) -> usize {
        self.directions.len()
    }

    /// `1 / cos(π/F)`: any `v` with `a_kᵀv ≤ c` for all `k` has `‖v‖ ≤ c`
    /// times this factor.
    pub fn conservativeness(&self) -> f64 {
        1.0 / (PI / self.count() as f64).cos()
    }

    /// Polyhedral gauge `max_k a_kᵀ v`.
    pub fn gauge(&self, v: &Vec2) -> f64 {
        self.directions
            .iter()
            .map(|a| a.dot(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Convenience constructor equivalent to [`UnitBallFacets::new`].
pub fn unit_ball_facets(count: usize) -> Result<UnitBallFacets, GeometryError> {
    UnitBallFacets::new(count)
}
