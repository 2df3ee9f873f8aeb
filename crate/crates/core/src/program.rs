//! Per-path linear programs over Bézier control points, and the planner
//! that selects a path through the region graph.
//!
//! Each vertex `v` on a path owns control points `P_{l,v} ∈ ℝ²` and
//! `τ_{l,v} ∈ ℝ` for `l = 0..m`. All constraints are linear and the
//! Euclidean smoothness costs are replaced by the facet gauge
//! `‖w‖⋄ = max_k a_kᵀw`, so every subproblem is an LP.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bezier::{BezierCurve, BezierError, TimeScaling, Trajectory, TrajectorySegment};
use crate::gcs::{relax_solve, round_flows, ControlCopy, GcsError, RegionGraph};
use crate::geometry::{GeometryError, Polytope, UnitBallFacets, Vec2};
use crate::lp::{phase_one_residuals, solve_lp, Family, LinearProgram, LpError};
use crate::timing::TimingWindow;

pub const DEFAULT_DEGREE: usize = 6;
pub const DEFAULT_FACETS: usize = 16;
pub const DEFAULT_ENUMERATE_LIMIT: usize = 64;
pub const MIN_DEGREE: usize = 4;
pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("curve degree {0} outside {MIN_DEGREE}..={MAX_DEGREE}")]
    DegreeOutOfRange(usize),
    #[error("path is empty")]
    EmptyPath,
    #[error(
        "path must run from the source to the target along graph edges (broken at position {0})"
    )]
    NotConnected(usize),
    #[error("time-scaling of vertex {vertex} is not increasing at index {index} (gap {gap:e})")]
    Monotonicity {
        vertex: String,
        index: usize,
        gap: f64,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Bezier(#[from] BezierError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no feasible path among {} candidates", outcomes.len())]
    NoFeasiblePath { outcomes: Vec<PathOutcome> },
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Gcs(#[from] GcsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 1.0,
            alpha4: 1.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), String> {
        let a = [self.alpha1, self.alpha2, self.alpha3, self.alpha4];
        if a.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("weights must be finite and non-negative".into());
        }
        if a.iter().all(|w| *w == 0.0) {
            return Err("at least one weight must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub v_min: f64,
    pub v_max: f64,
    /// Lower bound on `h'(s)` (seconds per unit curve parameter).
    pub h_min: f64,
    pub t_max: f64,
    pub v_floor: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            v_min: 1.0,
            v_max: 20.0,
            h_min: 0.05,
            t_max: 10.0,
            v_floor: 0.5,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.v_min, self.v_max, self.h_min, self.t_max, self.v_floor];
        if all.iter().any(|x| !x.is_finite()) {
            return Err("limits must be finite".into());
        }
        if !(0.0 <= self.v_min && self.v_min < self.v_max) {
            return Err(format!(
                "need 0 ≤ v_min < v_max, got {} and {}",
                self.v_min, self.v_max
            ));
        }
        if self.h_min <= 0.0 || self.t_max <= 0.0 || self.v_floor <= 0.0 {
            return Err("h_min, t_max and v_floor must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Enumerate when there are at most `enumerate_limit` paths, otherwise
    /// relax and round.
    #[default]
    Auto,
    Enumerate,
    RelaxRound,
    Both,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "enumerate" => Ok(Strategy::Enumerate),
            "relax-round" => Ok(Strategy::RelaxRound),
            "both" => Ok(Strategy::Both),
            other => Err(format!("unknown strategy {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSettings {
    pub degree: usize,
    pub facets: usize,
    pub max_len: usize,
    pub enumerate_limit: usize,
    pub strategy: Strategy,
    pub parallel: bool,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        PlannerSettings {
            degree: DEFAULT_DEGREE,
            facets: DEFAULT_FACETS,
            max_len: crate::gcs::DEFAULT_MAX_LEN,
            enumerate_limit: DEFAULT_ENUMERATE_LIMIT,
            strategy: Strategy::Auto,
            parallel: true,
        }
    }
}

/// Everything the planner needs, independent of file formats.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningProblem {
    pub graph: RegionGraph,
    pub start: Vec2,
    pub start_velocity: Vec2,
    /// Time at which the ego leaves `start`; `τ_0` of the first vertex.
    pub start_time: f64,
    pub goal: Polytope,
    pub goal_velocity: Vec2,
    /// Zero curvature at the start (the ego is driving straight).
    pub start_straight: bool,
    /// Zero curvature on arrival.
    pub goal_straight: bool,
    pub windows: Vec<TimingWindow>,
    pub limits: Limits,
    pub weights: CostWeights,
    pub settings: PlannerSettings,
}

/// Right-hand-side multiplier: 1 for path programs, the edge flow `y` in
/// the lifted relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    One,
    Var(usize),
}

fn le(lp: &mut LinearProgram, terms: &[(usize, f64)], rhs: f64, scale: Scale, family: Family) {
    match scale {
        Scale::One => lp.add_le(terms, rhs, family),
        Scale::Var(y) => {
            let mut t = terms.to_vec();
            t.push((y, -rhs));
            lp.add_le(&t, 0.0, family);
        }
    }
}

fn ge(lp: &mut LinearProgram, terms: &[(usize, f64)], rhs: f64, scale: Scale, family: Family) {
    let neg: Vec<(usize, f64)> = terms.iter().map(|&(j, a)| (j, -a)).collect();
    le(lp, &neg, -rhs, scale, family);
}

fn eq(lp: &mut LinearProgram, terms: &[(usize, f64)], rhs: f64, scale: Scale, family: Family) {
    match scale {
        Scale::One => lp.add_eq(terms, rhs, family),
        Scale::Var(y) => {
            let mut t = terms.to_vec();
            t.push((y, -rhs));
            lp.add_eq(&t, 0.0, family);
        }
    }
}

/// Coefficients of `Δ^k` on `P_j..P_{j+k}`.
fn diff_coeffs(order: usize) -> &'static [f64] {
    match order {
        1 => &[-1.0, 1.0],
        2 => &[1.0, -2.0, 1.0],
        3 => &[-1.0, 3.0, -3.0, 1.0],
        _ => unreachable!("differences up to third order"),
    }
}

/// Variable block of one vertex (or one lifted copy): `x, y, τ` per control
/// point, interleaved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    base: usize,
    m: usize,
}

impl Block {
    /// Adds `3(m+1)` free variables; `pin_start` fixes `τ_0` by bounds.
    pub fn allocate(lp: &mut LinearProgram, m: usize, pin_start: Option<f64>) -> Block {
        let base = lp.num_vars();
        for k in 0..Self::controls_len(m) {
            let bounds = match pin_start {
                Some(t0) if k == 2 => (t0, t0),
                _ => (f64::NEG_INFINITY, f64::INFINITY),
            };
            lp.add_var(0.0, bounds);
        }
        Block { base, m }
    }

    pub fn controls_len(m: usize) -> usize {
        3 * (m + 1)
    }

    pub fn control_var(&self, k: usize) -> usize {
        self.base + k
    }

    pub fn x(&self, l: usize) -> usize {
        self.base + 3 * l
    }

    pub fn y(&self, l: usize) -> usize {
        self.base + 3 * l + 1
    }

    pub fn tau(&self, l: usize) -> usize {
        self.base + 3 * l + 2
    }

    fn coord(&self, l: usize, c: usize) -> usize {
        self.base + 3 * l + c
    }

    pub fn read(&self, x: &[f64], l: usize) -> [f64; 3] {
        [x[self.x(l)], x[self.y(l)], x[self.tau(l)]]
    }

    fn write(&self, x: &mut [f64], l: usize, value: [f64; 3]) {
        x[self.x(l)] = value[0];
        x[self.y(l)] = value[1];
        x[self.tau(l)] = value[2];
    }

    /// `Δ^k` of coordinate `c` starting at index `j`, as sparse terms.
    fn diff(&self, order: usize, j: usize, c: usize) -> Vec<(usize, f64)> {
        diff_coeffs(order)
            .iter()
            .enumerate()
            .map(|(i, &a)| (self.coord(j + i, c), a))
            .collect()
    }

    /// Position, `Δ¹`, `Δ²`, `Δ³` gluing of `P` and `τ` from the end of `a`
    /// to the start of `b`.
    pub fn add_gluing(lp: &mut LinearProgram, a: &Block, b: &Block) {
        let m = a.m;
        for c in 0..3 {
            lp.add_eq(
                &[(a.coord(m, c), 1.0), (b.coord(0, c), -1.0)],
                0.0,
                Family::Continuity,
            );
            for order in 1..=3 {
                let mut terms = a.diff(order, m - order, c);
                terms.extend(b.diff(order, 0, c).into_iter().map(|(j, v)| (j, -v)));
                lp.add_eq(&terms, 0.0, Family::Continuity);
            }
        }
    }
}

/// What an epigraph variable bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Epigraph {
    Space {
        block: usize,
        order: usize,
        j: usize,
    },
    Time {
        block: usize,
        order: usize,
        j: usize,
    },
}

impl PlanningProblem {
    pub fn check_degree(&self) -> Result<(), ProgramError> {
        let m = self.settings.degree;
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&m) {
            return Err(ProgramError::DegreeOutOfRange(m));
        }
        Ok(())
    }

    pub fn facets(&self) -> Result<UnitBallFacets, ProgramError> {
        Ok(UnitBallFacets::new(self.settings.facets)?)
    }

    pub fn windows_for(&self, vertex: usize) -> impl Iterator<Item = &TimingWindow> + '_ {
        let id = self.graph.vertex(vertex).id.clone();
        self.windows.iter().filter(move |w| w.vertex == id)
    }

    /// Containment, time-scaling plausibility, speed facets, minimum speed
    /// along the nominal direction, horizon and timing windows.
    pub fn add_vertex_constraints(
        &self,
        lp: &mut LinearProgram,
        b: &Block,
        vertex: usize,
        scale: Scale,
        facets: &UnitBallFacets,
    ) {
        let m = b.m;
        let lim = &self.limits;
        let v = self.graph.vertex(vertex);
        for l in 0..=m {
            for (a, &off) in v.region.normals().iter().zip(v.region.offsets()) {
                le(
                    lp,
                    &[(b.x(l), a.x), (b.y(l), a.y)],
                    off,
                    scale,
                    Family::Containment,
                );
            }
        }
        ge(lp, &[(b.tau(0), 1.0)], 0.0, scale, Family::TimeScaling);
        for l in 0..m {
            ge(
                lp,
                &[(b.tau(l + 1), 1.0), (b.tau(l), -1.0)],
                lim.h_min / m as f64,
                scale,
                Family::TimeScaling,
            );
        }
        le(
            lp,
            &[(b.tau(m), 1.0)],
            self.start_time + lim.t_max,
            scale,
            Family::TimeScaling,
        );

        for l in 0..m {
            let dt = [(b.tau(l + 1), -lim.v_max), (b.tau(l), lim.v_max)];
            for a in facets.directions() {
                let mut terms = vec![
                    (b.x(l + 1), a.x),
                    (b.x(l), -a.x),
                    (b.y(l + 1), a.y),
                    (b.y(l), -a.y),
                ];
                terms.extend(dt);
                lp.add_le(&terms, 0.0, Family::Velocity);
            }
        }
        if lim.v_min > 0.0 {
            let d = v.direction.normalize();
            for l in 0..m {
                let terms = [
                    (b.x(l + 1), d.x),
                    (b.x(l), -d.x),
                    (b.y(l + 1), d.y),
                    (b.y(l), -d.y),
                    (b.tau(l + 1), -lim.v_min),
                    (b.tau(l), lim.v_min),
                ];
                lp.add_ge(&terms, 0.0, Family::MinSpeed);
            }
        }

        for w in self.windows_for(vertex) {
            for (bound, idx) in [(w.entry, 0), (w.exit, m)] {
                if let Some(bound) = bound {
                    if let Some(lo) = bound.min {
                        ge(lp, &[(b.tau(idx), 1.0)], lo, scale, Family::TimingWindow);
                    }
                    if let Some(hi) = bound.max {
                        le(lp, &[(b.tau(idx), 1.0)], hi, scale, Family::TimingWindow);
                    }
                }
            }
            if let Some(d) = w.max_dwell {
                le(
                    lp,
                    &[(b.tau(m), 1.0), (b.tau(0), -1.0)],
                    d,
                    scale,
                    Family::TimingWindow,
                );
            }
        }
    }

    /// Epigraph variables and rows for the smoothness cost of one block.
    pub fn add_cost(&self, lp: &mut LinearProgram, b: &Block, facets: &UnitBallFacets) {
        self.add_cost_tracked(lp, b, facets, 0);
    }

    fn add_cost_tracked(
        &self,
        lp: &mut LinearProgram,
        b: &Block,
        facets: &UnitBallFacets,
        block_index: usize,
    ) -> Vec<(usize, Epigraph)> {
        let m = b.m;
        let w = &self.weights;
        let mut out = Vec::with_capacity(4 * m - 6);
        for (order, alpha) in [(2, w.alpha1), (3, w.alpha2)] {
            for j in 0..=(m - order) {
                let s = lp.add_var(alpha, (0.0, f64::INFINITY));
                let dx = b.diff(order, j, 0);
                let dy = b.diff(order, j, 1);
                for a in facets.directions() {
                    let mut terms: Vec<(usize, f64)> =
                        dx.iter().map(|&(v, c)| (v, c * a.x)).collect();
                    terms.extend(dy.iter().map(|&(v, c)| (v, c * a.y)));
                    terms.push((s, -1.0));
                    lp.add_le(&terms, 0.0, Family::CostEpigraph);
                }
                out.push((
                    s,
                    Epigraph::Space {
                        block: block_index,
                        order,
                        j,
                    },
                ));
            }
        }
        for (order, alpha) in [(2, w.alpha3), (3, w.alpha4)] {
            for j in 0..=(m - order) {
                let s = lp.add_var(alpha, (0.0, f64::INFINITY));
                let dt = b.diff(order, j, 2);
                for sign in [1.0, -1.0] {
                    let mut terms: Vec<(usize, f64)> =
                        dt.iter().map(|&(v, c)| (v, sign * c)).collect();
                    terms.push((s, -1.0));
                    lp.add_le(&terms, 0.0, Family::CostEpigraph);
                }
                out.push((
                    s,
                    Epigraph::Time {
                        block: block_index,
                        order,
                        j,
                    },
                ));
            }
        }
        out
    }

    /// `P_0 = start` and `(P_1 − P_0) = v_start (τ_1 − τ_0)`. Under a
    /// flow scale, `τ_0 = t_0·y` is added too.
    pub fn add_start(&self, lp: &mut LinearProgram, b: &Block, scale: Scale) {
        if let Scale::Var(_) = scale {
            eq(
                lp,
                &[(b.tau(0), 1.0)],
                self.start_time,
                scale,
                Family::Boundary,
            );
        }
        eq(lp, &[(b.x(0), 1.0)], self.start.x, scale, Family::Boundary);
        eq(lp, &[(b.y(0), 1.0)], self.start.y, scale, Family::Boundary);
        add_velocity_ratio(lp, b, 0, self.start_velocity, Family::Boundary);
        if self.start_straight {
            add_straight(lp, b, 0, self.start_velocity, Family::Boundary);
        }
    }

    /// `P_m ∈ goal` and `(P_m − P_{m−1}) = v_goal (τ_m − τ_{m−1})`.
    pub fn add_goal(&self, lp: &mut LinearProgram, b: &Block, scale: Scale) {
        let m = b.m;
        for (a, &off) in self.goal.normals().iter().zip(self.goal.offsets()) {
            le(
                lp,
                &[(b.x(m), a.x), (b.y(m), a.y)],
                off,
                scale,
                Family::Goal,
            );
        }
        add_velocity_ratio(lp, b, m - 1, self.goal_velocity, Family::Goal);
        if self.goal_straight {
            add_straight(lp, b, m - 2, self.goal_velocity, Family::Goal);
        }
    }
}

/// `v × Δ²P_l = 0`: with `r'` already parallel to `v`, this zeroes the
/// curvature at that end.
fn add_straight(lp: &mut LinearProgram, b: &Block, l: usize, v: Vec2, family: Family) {
    if v.norm() < 1e-12 {
        return;
    }
    let mut terms = Vec::with_capacity(6);
    for (j, c) in diff_coeffs(2).iter().enumerate() {
        terms.push((b.y(l + j), v.x * c));
        terms.push((b.x(l + j), -v.y * c));
    }
    lp.add_eq(&terms, 0.0, family);
}

fn add_velocity_ratio(lp: &mut LinearProgram, b: &Block, l: usize, v: Vec2, family: Family) {
    for (c, vc) in [(0, v.x), (1, v.y)] {
        lp.add_eq(
            &[
                (b.coord(l + 1, c), 1.0),
                (b.coord(l, c), -1.0),
                (b.tau(l + 1), -vc),
                (b.tau(l), vc),
            ],
            0.0,
            family,
        );
    }
}

/// The LP of one fixed vertex path.
#[derive(Debug, Clone)]
pub struct PathProgram {
    pub lp: LinearProgram,
    pub path: Vec<usize>,
    blocks: Vec<Block>,
    epigraphs: Vec<(usize, Epigraph)>,
    degree: usize,
    facets: UnitBallFacets,
    h_min: f64,
    ids: Vec<String>,
}

/// Build the LP for `path`, which must run source → target along edges.
pub fn assemble_path_program(
    problem: &PlanningProblem,
    path: &[usize],
) -> Result<PathProgram, ProgramError> {
    problem.check_degree()?;
    let g = &problem.graph;
    let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
        return Err(ProgramError::EmptyPath);
    };
    if first != g.source() {
        return Err(ProgramError::NotConnected(0));
    }
    if let Some(i) = path.windows(2).position(|w| !g.has_edge(w[0], w[1])) {
        return Err(ProgramError::NotConnected(i + 1));
    }
    if last != g.target() {
        return Err(ProgramError::NotConnected(path.len() - 1));
    }
    let m = problem.settings.degree;
    let facets = problem.facets()?;
    let mut lp = LinearProgram::new(0);
    let blocks: Vec<Block> = (0..path.len())
        .map(|i| Block::allocate(&mut lp, m, (i == 0).then_some(problem.start_time)))
        .collect();
    let mut epigraphs = Vec::new();
    for (i, (&v, b)) in path.iter().zip(&blocks).enumerate() {
        problem.add_vertex_constraints(&mut lp, b, v, Scale::One, &facets);
        epigraphs.extend(problem.add_cost_tracked(&mut lp, b, &facets, i));
    }
    for w in blocks.windows(2) {
        Block::add_gluing(&mut lp, &w[0], &w[1]);
    }
    problem.add_start(&mut lp, &blocks[0], Scale::One);
    problem.add_goal(&mut lp, &blocks[blocks.len() - 1], Scale::One);
    Ok(PathProgram {
        lp,
        path: path.to_vec(),
        blocks,
        epigraphs,
        degree: m,
        facets,
        h_min: problem.limits.h_min,
        ids: g.path_ids(path),
    })
}

impl PathProgram {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Variables holding control points (excludes epigraph auxiliaries).
    pub fn control_var_count(&self) -> usize {
        self.blocks.len() * Block::controls_len(self.degree)
    }

    pub fn epigraph_count(&self) -> usize {
        self.epigraphs.len()
    }

    /// Full variable vector for given control points, with every epigraph
    /// variable at its tight value.
    pub fn point_from_controls(&self, controls: &[ControlCopy]) -> Vec<f64> {
        let mut x = vec![0.0; self.lp.num_vars()];
        for (b, copy) in self.blocks.iter().zip(controls) {
            for (l, p) in copy.iter().enumerate() {
                b.write(&mut x, l, *p);
            }
        }
        for &(var, def) in &self.epigraphs {
            x[var] = match def {
                Epigraph::Space { block, order, j } => {
                    let b = &self.blocks[block];
                    let eval = |c| {
                        b.diff(order, j, c)
                            .iter()
                            .map(|&(v, a)| a * x[v])
                            .sum::<f64>()
                    };
                    self.facets.gauge(&Vec2::new(eval(0), eval(1)))
                }
                Epigraph::Time { block, order, j } => {
                    let b = &self.blocks[block];
                    b.diff(order, j, 2)
                        .iter()
                        .map(|&(v, a)| a * x[v])
                        .sum::<f64>()
                        .abs()
                }
            };
        }
        x
    }

    pub fn controls(&self, x: &[f64]) -> Vec<ControlCopy> {
        self.blocks
            .iter()
            .map(|b| (0..=self.degree).map(|l| b.read(x, l)).collect())
            .collect()
    }

    /// Per-vertex segments from a solution vector. A time-scaling gap below
    /// `h_min/m` (less solver slack) is an error, never clamped.
    pub fn extract(&self, x: &[f64]) -> Result<Vec<TrajectorySegment>, ProgramError> {
        let m = self.degree;
        let margin = self.h_min / m as f64;
        self.blocks
            .iter()
            .zip(&self.ids)
            .map(|(b, id)| {
                let pts: Vec<[f64; 3]> = (0..=m).map(|l| b.read(x, l)).collect();
                for (index, w) in pts.windows(2).enumerate() {
                    let gap = w[1][2] - w[0][2];
                    if gap < margin - 1e-7 || gap <= 0.0 {
                        return Err(ProgramError::Monotonicity {
                            vertex: id.clone(),
                            index: index + 1,
                            gap,
                        });
                    }
                }
                if pts[0][2] < 0.0 {
                    return Err(ProgramError::Monotonicity {
                        vertex: id.clone(),
                        index: 0,
                        gap: pts[0][2],
                    });
                }
                let r = BezierCurve::new(pts.iter().map(|p| Vec2::new(p[0], p[1])).collect())?;
                let h = TimeScaling::new(pts.iter().map(|p| p[2]).collect())?;
                Ok(TrajectorySegment::new(r, h)?)
            })
            .collect()
    }
}

/// Result of solving one candidate path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub path: Vec<String>,
    pub objective: Option<f64>,
    /// Phase-one slack per constraint family when infeasible.
    pub diagnostics: Vec<(Family, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub enumeration_ms: f64,
    /// Summed over candidate paths (may exceed wall time when parallel).
    pub assembly_ms: f64,
    /// Summed over candidate paths (may exceed wall time when parallel).
    pub solve_ms: f64,
    pub relaxation_ms: f64,
    pub rounding_ms: f64,
    /// Wall time of the whole planning call.
    pub plan_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedOutcome {
    pub path: Vec<String>,
    pub objective: Option<f64>,
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub path: Vec<String>,
    pub path_indices: Vec<usize>,
    pub segments: Vec<TrajectorySegment>,
    pub objective: f64,
    pub lower_bound: Option<f64>,
    pub strategy: Strategy,
    pub rounded: Option<RoundedOutcome>,
    pub candidates: Vec<PathOutcome>,
    pub timings: PhaseTimings,
    /// Largest constraint violation of the chosen program at its solution.
    pub max_violation: f64,
}

impl PlanResult {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::new(self.segments.clone()).expect("plans have at least one segment")
    }
}

struct Solved {
    outcome: PathOutcome,
    segments: Option<(Vec<TrajectorySegment>, f64)>,
    assembly_ms: f64,
    solve_ms: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn solve_path(problem: &PlanningProblem, path: &[usize]) -> Solved {
    let ids = problem.graph.path_ids(path);
    let t = Instant::now();
    let program = match assemble_path_program(problem, path) {
        Ok(p) => p,
        Err(e) => {
            return Solved {
                outcome: PathOutcome {
                    path: ids,
                    objective: None,
                    diagnostics: vec![],
                    error: Some(e.to_string()),
                },
                segments: None,
                assembly_ms: ms(t),
                solve_ms: 0.0,
            }
        }
    };
    let assembly_ms = ms(t);
    let t = Instant::now();
    let result = solve_lp(&program.lp);
    let mut solve_ms = ms(t);
    let failed = |error: String, diagnostics| PathOutcome {
        path: ids.clone(),
        objective: None,
        diagnostics,
        error: Some(error),
    };
    match result {
        Ok(sol) => match program.extract(&sol.x) {
            Ok(segments) => {
                let violation = program.lp.max_violation(&sol.x);
                Solved {
                    outcome: PathOutcome {
                        path: ids.clone(),
                        objective: Some(sol.objective),
                        diagnostics: vec![],
                        error: None,
                    },
                    segments: Some((segments, violation)),
                    assembly_ms,
                    solve_ms,
                }
            }
            Err(e) => Solved {
                outcome: failed(e.to_string(), vec![]),
                segments: None,
                assembly_ms,
                solve_ms,
            },
        },
        Err(LpError::Infeasible) => {
            let t = Instant::now();
            let diagnostics = phase_one_residuals(&program.lp).unwrap_or_default();
            solve_ms += ms(t);
            Solved {
                outcome: failed("infeasible".into(), diagnostics),
                segments: None,
                assembly_ms,
                solve_ms,
            }
        }
        Err(e) => Solved {
            outcome: failed(e.to_string(), vec![]),
            segments: None,
            assembly_ms,
            solve_ms,
        },
    }
}

/// Best feasible path by `(objective, candidate index)`.
fn solve_candidates(problem: &PlanningProblem, paths: &[Vec<usize>]) -> Vec<Solved> {
    if problem.settings.parallel {
        paths.par_iter().map(|p| solve_path(problem, p)).collect()
    } else {
        paths.iter().map(|p| solve_path(problem, p)).collect()
    }
}

fn best(solved: &[Solved]) -> Option<usize> {
    solved
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.outcome.objective.map(|o| (o, i)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}

/// Select a path and solve it, following `problem.settings.strategy`.
pub fn plan(problem: &PlanningProblem) -> Result<PlanResult, PlanError> {
    let start = Instant::now();
    problem.check_degree()?;
    problem.facets()?;
    let g = &problem.graph;
    let mut timings = PhaseTimings::default();
    let settings = &problem.settings;

    let strategy = match settings.strategy {
        Strategy::Auto => {
            let t = Instant::now();
            let count = g.count_paths(settings.max_len, settings.enumerate_limit);
            timings.enumeration_ms += ms(t);
            if count <= settings.enumerate_limit {
                Strategy::Enumerate
            } else {
                Strategy::RelaxRound
            }
        }
        s => s,
    };

    let mut lower_bound = None;
    let mut rounded: Option<(Vec<usize>, Solved)> = None;
    let mut fell_back = false;
    if matches!(strategy, Strategy::RelaxRound | Strategy::Both) {
        let t = Instant::now();
        let relaxation = relax_solve(problem);
        timings.relaxation_ms = ms(t);
        match relaxation {
            Ok(flows) => {
                lower_bound = Some(flows.lower_bound);
                let t = Instant::now();
                let path = round_flows(&flows, g);
                timings.rounding_ms = ms(t);
                match path {
                    Ok(path) => {
                        let solved = solve_path(problem, &path);
                        timings.assembly_ms += solved.assembly_ms;
                        timings.solve_ms += solved.solve_ms;
                        fell_back = solved.segments.is_none();
                        rounded = Some((path, solved));
                    }
                    Err(e) => {
                        log::warn!("{e}; falling back to enumeration");
                        fell_back = true;
                    }
                }
            }
            Err(GcsError::Relaxation(LpError::Infeasible)) => {
                log::warn!("relaxation infeasible; enumerating for diagnostics");
                fell_back = true;
            }
            Err(e) => return Err(e.into()),
        }
        if fell_back && rounded.as_ref().is_some_and(|r| r.1.segments.is_none()) {
            log::warn!("rounded path could not be re-solved; falling back to enumeration");
        }
    }

    let enumerate = strategy == Strategy::Enumerate || strategy == Strategy::Both || fell_back;
    let mut candidates = Vec::new();
    let mut chosen: Option<(Vec<usize>, Solved)> = None;
    if enumerate {
        let t = Instant::now();
        let paths = g.enumerate_paths(settings.max_len);
        timings.enumeration_ms += ms(t);
        let solved = solve_candidates(problem, &paths);
        for s in &solved {
            timings.assembly_ms += s.assembly_ms;
            timings.solve_ms += s.solve_ms;
        }
        candidates = solved.iter().map(|s| s.outcome.clone()).collect();
        if let Some(i) = best(&solved) {
            let s = solved.into_iter().nth(i).expect("index from best");
            chosen = Some((paths[i].clone(), s));
        }
    }
    let rounded_report = rounded.as_ref().map(|(_, s)| RoundedOutcome {
        path: s.outcome.path.clone(),
        objective: s.outcome.objective,
        fell_back,
    });
    if chosen.is_none() && !enumerate {
        chosen = rounded.take();
    }
    if let Some((_, s)) = &rounded {
        if candidates.is_empty() {
            candidates.push(s.outcome.clone());
        }
    }

    let Some((path, solved)) = chosen else {
        if candidates.is_empty() {
            if let Some((_, s)) = rounded {
                candidates.push(s.outcome);
            }
        }
        return Err(PlanError::NoFeasiblePath {
            outcomes: candidates,
        });
    };
    let (segments, max_violation) = solved.segments.expect("chosen paths are feasible");
    timings.plan_ms = ms(start);
    Ok(PlanResult {
        path: g.path_ids(&path),
        path_indices: path,
        segments,
        objective: solved.outcome.objective.expect("feasible"),
        lower_bound,
        strategy,
        rounded: rounded_report,
        candidates,
        timings,
        max_violation,
    })
}
