//! Graph of convex sets: region vertices, directed edges, simple-path
//! enumeration, the lifted convex relaxation and greedy flow rounding.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Polytope, Vec2};
use crate::lp::{solve_lp, Family, LinearProgram, LpError};
use crate::program::{Block, PlanningProblem, ProgramError, Scale};

pub const DEFAULT_MAX_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcsError {
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex id {0}")]
    UnknownVertex(String),
    #[error("self-loop on vertex {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("source and target are both {0}")]
    SourceIsTarget(String),
    #[error("target {to} is unreachable from source {from}")]
    Unreachable { from: String, to: String },
    #[error("rounding found no source-to-target path among positive flows")]
    NoPath,
    #[error("relaxation failed: {0}")]
    Relaxation(LpError),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionVertex {
    pub id: String,
    pub region: Polytope,
    /// Nominal travel direction used by the minimum-speed constraint.
    pub direction: Vec2,
}

/// Directed graph of convex regions with one source and one target.
///
/// Construction prunes edges into the source, edges out of the target and
/// every vertex that lies on no source-to-target walk.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    vertices: Vec<RegionVertex>,
    edges: Vec<(usize, usize)>,
    source: usize,
    target: usize,
    pruned: Vec<String>,
}

impl RegionGraph {
    pub fn new(
        vertices: Vec<RegionVertex>,
        edges: &[(String, String)],
        source: &str,
        target: &str,
    ) -> Result<Self, GcsError> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return Err(GcsError::DuplicateVertex(v.id.clone()));
            }
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| GcsError::UnknownVertex(id.to_string()))
        };
        let s = lookup(source)?;
        let t = lookup(target)?;
        if s == t {
            return Err(GcsError::SourceIsTarget(source.to_string()));
        }
        let mut seen = BTreeSet::new();
        let mut raw = Vec::new();
        for (a, b) in edges {
            let (u, v) = (lookup(a)?, lookup(b)?);
            if u == v {
                return Err(GcsError::SelfLoop(a.clone()));
            }
            if !seen.insert((u, v)) {
                return Err(GcsError::DuplicateEdge(a.clone(), b.clone()));
            }
            if v == s || u == t {
                log::warn!("dropping edge {a} -> {b}: it enters the source or leaves the target");
                continue;
            }
            raw.push((u, v));
        }

        let forward = reachable(vertices.len(), &raw, s, false);
        let backward = reachable(vertices.len(), &raw, t, true);
        if !forward[t] {
            return Err(GcsError::Unreachable {
                from: source.to_string(),
                to: target.to_string(),
            });
        }
        let keep: Vec<bool> = (0..vertices.len())
            .map(|i| forward[i] && backward[i])
            .collect();
        let mut remap = vec![usize::MAX; vertices.len()];
        let mut kept = Vec::new();
        let mut pruned = Vec::new();
        for (i, v) in vertices.into_iter().enumerate() {
            if keep[i] {
                remap[i] = kept.len();
                kept.push(v);
            } else {
                log::warn!("pruning vertex {}: not on any source-to-target path", v.id);
                pruned.push(v.id);
            }
        }
        let edges = raw
            .into_iter()
            .filter(|&(u, v)| keep[u] && keep[v])
            .map(|(u, v)| (remap[u], remap[v]))
            .collect();
        Ok(RegionGraph {
            vertices: kept,
            edges,
            source: remap[s],
            target: remap[t],
            pruned,
        })
    }

    pub fn vertices(&self) -> &[RegionVertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &RegionVertex {
        &self.vertices[i]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Ids removed during construction.
    pub fn pruned(&self) -> &[String] {
        &self.pruned
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    /// Outgoing `(edge index, head)` pairs in edge-list order.
    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.0 == u)
            .map(|(i, e)| (i, e.1))
    }

    /// Incoming `(edge index, tail)` pairs in edge-list order.
    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.1 == v)
            .map(|(i, e)| (i, e.0))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn path_ids(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|&i| self.vertices[i].id.clone()).collect()
    }

    /// All simple source-to-target paths with at most `max_len` vertices, in
    /// depth-first discovery order.
    pub fn enumerate_paths(&self, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.walk_paths(max_len, usize::MAX, &mut out);
        out
    }

    /// Number of simple paths, counting stops once it exceeds `limit`.
    pub fn count_paths(&self, max_len: usize, limit: usize) -> usize {
        let mut out = Vec::new();
        self.walk_paths(max_len, limit.saturating_add(1), &mut out);
        out.len()
    }

    fn walk_paths(&self, max_len: usize, cap: usize, out: &mut Vec<Vec<usize>>) {
        fn dfs(
            g: &RegionGraph,
            path: &mut Vec<usize>,
            on_path: &mut [bool],
            max_len: usize,
            cap: usize,
            out: &mut Vec<Vec<usize>>,
        ) {
            if out.len() >= cap {
                return;
            }
            let u = *path.last().expect("path starts at source");
            if u == g.target {
                out.push(path.clone());
                return;
            }
            if path.len() >= max_len {
                return;
            }
            for (_, v) in g.out_edges(u) {
                if on_path[v] {
                    continue;
                }
                on_path[v] = true;
                path.push(v);
                dfs(g, path, on_path, max_len, cap, out);
                path.pop();
                on_path[v] = false;
            }
        }
        if max_len < 2 {
            return;
        }
        let mut on_path = vec![false; self.vertices.len()];
        on_path[self.source] = true;
        dfs(
            self,
            &mut vec![self.source],
            &mut on_path,
            max_len,
            cap,
            out,
        );
    }
}

fn reachable(n: usize, edges: &[(usize, usize)], from: usize, reverse: bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            let (x, y) = if reverse { (b, a) } else { (a, b) };
            if x == u && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Free-function form of [`RegionGraph::enumerate_paths`].
pub fn enumerate_paths(g: &RegionGraph, max_len: usize) -> Vec<Vec<usize>> {
    g.enumerate_paths(max_len)
}

/// Control points `(x, y, τ)` of one lifted vertex copy.
pub type ControlCopy = Vec<[f64; 3]>;

/// Optimal fractional flows of the lifted relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub flows: Vec<f64>,
    pub lower_bound: f64,
    /// Copy of the tail vertex's control points carried by each edge.
    pub tail_copies: Vec<ControlCopy>,
    /// Copy of the head vertex's control points carried by each edge.
    pub head_copies: Vec<ControlCopy>,
    pub conservation_residual: f64,
}

impl FlowSolution {
    /// Net outflow minus inflow per vertex.
    pub fn net_outflow(&self, g: &RegionGraph) -> Vec<f64> {
        let mut net = vec![0.0; g.vertices().len()];
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            net[u] += self.flows[e];
            net[v] -= self.flows[e];
        }
        net
    }

    /// True when every flow is within `tol` of 0 or 1.
    pub fn is_integral(&self, tol: f64) -> bool {
        self.flows
            .iter()
            .all(|y| y.abs() <= tol || (y - 1.0).abs() <= tol)
    }

    /// Lifted copies divided by their flow, giving per-vertex control points
    /// along an integral path.
    pub fn path_controls(&self, g: &RegionGraph, path: &[usize]) -> Option<Vec<ControlCopy>> {
        let scale = |copy: &ControlCopy, y: f64| {
            copy.iter()
                .map(|p| [p[0] / y, p[1] / y, p[2] / y])
                .collect()
        };
        let mut out = Vec::with_capacity(path.len());
        for w in path.windows(2) {
            let e = g.edges().iter().position(|&edge| edge == (w[0], w[1]))?;
            out.push(scale(&self.tail_copies[e], self.flows[e]));
        }
        let (a, b) = (path[path.len() - 2], path[path.len() - 1]);
        let e = g.edges().iter().position(|&edge| edge == (a, b))?;
        out.push(scale(&self.head_copies[e], self.flows[e]));
        Some(out)
    }
}

/// Solve the lifted relaxation with `y_e ∈ [0, 1]`.
///
/// Every edge carries a copy of its tail's and its head's control points,
/// both constrained to the homogenized vertex sets `{(z, y) : z ∈ y·X_v}`.
/// Vertex costs are charged on the tail copy, and on the head copy for the
/// target.
pub fn relax_solve(problem: &PlanningProblem) -> Result<FlowSolution, GcsError> {
    let g = &problem.graph;
    let m = problem.settings.degree;
    problem.check_degree()?;
    let facets = problem.facets()?;
    let mut lp = LinearProgram::new(0);
    let ne = g.edges().len();
    let flows: Vec<usize> = (0..ne).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let mut tails = Vec::with_capacity(ne);
    let mut heads = Vec::with_capacity(ne);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let scale = Scale::Var(flows[e]);
        let tail = Block::allocate(&mut lp, m, None);
        let head = Block::allocate(&mut lp, m, None);
        problem.add_vertex_constraints(&mut lp, &tail, u, scale, &facets);
        problem.add_vertex_constraints(&mut lp, &head, v, scale, &facets);
        problem.add_cost(&mut lp, &tail, &facets);
        if u == g.source() {
            problem.add_start(&mut lp, &tail, scale);
        }
        if v == g.target() {
            problem.add_goal(&mut lp, &head, scale);
            problem.add_cost(&mut lp, &head, &facets);
        }
        Block::add_gluing(&mut lp, &tail, &head);
        tails.push(tail);
        heads.push(head);
    }

    for w in 0..g.vertices().len() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (e, _) in g.out_edges(w) {
            terms.push((flows[e], 1.0));
        }
        for (e, _) in g.in_edges(w) {
            terms.push((flows[e], -1.0));
        }
        let rhs = if w == g.source() {
            1.0
        } else if w == g.target() {
            -1.0
        } else {
            0.0
        };
        lp.add_eq(&terms, rhs, Family::Flow);
        if w == g.source() || w == g.target() {
            continue;
        }
        for var in 0..Block::controls_len(m) {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for (e, _) in g.in_edges(w) {
                terms.push((heads[e].control_var(var), 1.0));
            }
            for (e, _) in g.out_edges(w) {
                terms.push((tails[e].control_var(var), -1.0));
            }
            lp.add_eq(&terms, 0.0, Family::Conservation);
        }
    }

    let sol = solve_lp(&lp).map_err(GcsError::Relaxation)?;
    let y: Vec<f64> = flows.iter().map(|&i| sol.x[i]).collect();
    let read = |b: &Block| -> ControlCopy { (0..=m).map(|l| b.read(&sol.x, l)).collect() };
    let out = FlowSolution {
        tail_copies: tails.iter().map(read).collect(),
        head_copies: heads.iter().map(read).collect(),
        lower_bound: sol.objective,
        conservation_residual: 0.0,
        flows: y,
    };
    let net = out.net_outflow(g);
    let residual = net
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let want = if i == g.source() {
                1.0
            } else if i == g.target() {
                -1.0
            } else {
                0.0
            };
            (n - want).abs()
        })
        .fold(0.0, f64::max);
    Ok(FlowSolution {
        conservation_residual: residual,
        ..out
    })
}

/// Greedy depth-first walk from the source along the highest-flow edges,
/// backtracking on dead ends. Ties go to the lower edge index.
pub fn round_flows(f: &FlowSolution, g: &RegionGraph) -> Result<Vec<usize>, GcsError> {
    let mut ranked: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if f.flows[e] > 1e-9 {
            ranked.entry(u).or_default().push((e, v));
        }
    }
    for list in ranked.values_mut() {
        list.sort_by(|a, b| f.flows[b.0].total_cmp(&f.flows[a.0]).then(a.0.cmp(&b.0)));
    }
    fn dfs(
        g: &RegionGraph,
        ranked: &BTreeMap<usize, Vec<(usize, usize)>>,
        path: &mut Vec<usize>,
        visited: &mut [bool],
    ) -> bool {
        let u = *path.last().expect("nonempty");
        if u == g.target() {
            return true;
        }
        for &(_, v) in ranked.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            path.push(v);
            if dfs(g, ranked, path, visited) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut visited = vec![false; g.vertices().len()];
    visited[g.source()] = true;
    let mut path = vec![g.source()];
    if dfs(g, &ranked, &mut path, &mut visited) {
        Ok(path)
    } else {
        Err(GcsError::NoPath)
    }
}
