//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use gcs_planner::gcs::{RegionGraph, RegionVertex};
use gcs_planner::geometry::{Polytope, Vec2};
use gcs_planner::lp::{Family, LinearProgram};
use gcs_planner::program::{
    plan, CostWeights, Limits, PlanResult, PlannerSettings, PlanningProblem,
};
use gcs_planner::scenario::{load_scenario, Scenario};
use gcs_planner::verify::{audit_plan, FeasibilityReport};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: [&str; 3] = ["static_avoidance", "lane_change", "overtaking"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> Scenario {
    load_scenario(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub struct FixtureRun {
    pub scenario: Scenario,
    pub plan: PlanResult,
    pub report: FeasibilityReport,
}

/// Every fixture planned and audited once per test binary.
pub fn fixture_runs() -> &'static [FixtureRun] {
    static RUNS: OnceLock<Vec<FixtureRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        FIXTURES
            .iter()
            .map(|name| {
                let scenario = fixture(name);
                let plan = plan(&scenario.problem).unwrap_or_else(|e| panic!("{name}: {e}"));
                let report = audit_plan(&plan, &scenario, scenario.audit.dt).unwrap();
                FixtureRun {
                    scenario,
                    plan,
                    report,
                }
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// Dense tableau simplex

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[c].abs() > 0.0 {
                let f = row[c];
                row.iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(v, p)| *v -= f * p);
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule on `min cost·z` over the columns in `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<(), OracleStatus> {
        let width = cost.len();
        for _ in 0..100_000 {
            let entering = (0..width).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let rc = cost[j]
                        - self
                            .rows
                            .iter()
                            .zip(&self.basis)
                            .map(|(row, &b)| cost[b] * row[j])
                            .sum::<f64>();
                    rc < -EPS
                }
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(f64, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[width] / row[c];
                    let better = match leave {
                        None => true,
                        Some((best, _, b)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < b)
                        }
                    };
                    if better {
                        leave = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = leave else {
                return Err(OracleStatus::Unbounded);
            };
            self.pivot(r, c);
        }
        panic!("simplex oracle did not terminate");
    }

    fn value(&self, j: usize, width: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == j)
            .map_or(0.0, |i| self.rows[i][width])
    }
}

/// Column substitution `x_j = offset + Σ sign·z_k`.
struct Substitution {
    offset: f64,
    columns: Vec<(usize, f64)>,
}

/// Two-phase dense simplex, returning the optimal objective and point.
pub fn dense_simplex(lp: &LinearProgram) -> Result<(f64, Vec<f64>), OracleStatus> {
    let n = lp.num_vars();
    let mut subs = Vec::with_capacity(n);
    let mut ncols = 0;
    // Upper bounds of shifted boxed variables become extra rows.
    let mut extra: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in lp.bounds() {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                subs.push(Substitution {
                    offset: lo,
                    columns: vec![(ncols, 1.0)],
                });
                extra.push((ncols, hi - lo));
                ncols += 1;
            }
            (true, false) => {
                subs.push(Substitution {
                    offset: lo,
                    columns: vec![(ncols, 1.0)],
                });
                ncols += 1;
            }
            (false, true) => {
                subs.push(Substitution {
                    offset: hi,
                    columns: vec![(ncols, -1.0)],
                });
                ncols += 1;
            }
            (false, false) => {
                subs.push(Substitution {
                    offset: 0.0,
                    columns: vec![(ncols, 1.0), (ncols + 1, -1.0)],
                });
                ncols += 2;
            }
        }
    }

    // Rows over z: (coefficients, rhs, has_slack).
    let mut raw: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    let expand = |terms: &[(usize, f64)], rhs: f64| {
        let mut a = vec![0.0; ncols];
        let mut b = rhs;
        for &(j, c) in terms {
            b -= c * subs[j].offset;
            for &(k, s) in &subs[j].columns {
                a[k] += c * s;
            }
        }
        (a, b)
    };
    for row in lp.inequalities() {
        let (a, b) = expand(&row.terms, row.rhs);
        raw.push((a, b, true));
    }
    for row in lp.equalities() {
        let (a, b) = expand(&row.terms, row.rhs);
        raw.push((a, b, false));
    }
    for &(k, ub) in &extra {
        let mut a = vec![0.0; ncols];
        a[k] = 1.0;
        raw.push((a, ub, true));
    }

    let m = raw.len();
    let slacks = raw.iter().filter(|r| r.2).count();
    let width = ncols + slacks + m;
    let mut rows = Vec::with_capacity(m);
    let mut slack = ncols;
    for (i, (a, b, has_slack)) in raw.into_iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        row[..ncols].copy_from_slice(&a);
        if has_slack {
            row[slack] = 1.0;
            slack += 1;
        }
        row[width] = b;
        if b < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        row[ncols + slacks + i] = 1.0;
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (0..m).map(|i| ncols + slacks + i).collect(),
    };

    let mut phase1 = vec![0.0; width];
    phase1[ncols + slacks..].iter_mut().for_each(|c| *c = 1.0);
    t.optimize(&phase1, &vec![true; width])
        .expect("phase one is bounded");
    let infeasibility: f64 = (ncols + slacks..width).map(|j| t.value(j, width)).sum();
    if infeasibility > 1e-7 {
        return Err(OracleStatus::Infeasible);
    }
    for r in 0..m {
        if t.basis[r] >= ncols + slacks {
            if let Some(c) = (0..ncols + slacks).find(|&c| t.rows[r][c].abs() > 1e-9) {
                t.pivot(r, c);
            }
        }
    }

    let mut cost = vec![0.0; width];
    let mut constant = 0.0;
    for (j, s) in subs.iter().enumerate() {
        let c = lp.objective()[j];
        constant += c * s.offset;
        for &(k, sign) in &s.columns {
            cost[k] += c * sign;
        }
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < ncols + slacks).collect();
    t.optimize(&cost, &allowed)?;
    let z: Vec<f64> = (0..ncols).map(|k| t.value(k, width)).collect();
    let x: Vec<f64> = subs
        .iter()
        .map(|s| s.offset + s.columns.iter().map(|&(k, sign)| sign * z[k]).sum::<f64>())
        .collect();
    Ok((
        constant
            + cost[..ncols]
                .iter()
                .zip(&z)
                .map(|(c, v)| c * v)
                .sum::<f64>(),
        x,
    ))
}

/// Small LP with mixed bound types. Feasible unless `infeasible`, in which
/// case a pair of contradictory rows is appended.
pub fn random_lp(rng: &mut ChaCha8Rng, infeasible: bool) -> LinearProgram {
    let n = rng.gen_range(2..=7);
    let mut lp = LinearProgram::new(n);
    let mut x0 = vec![0.0; n];
    for (j, x) in x0.iter_mut().enumerate() {
        let kind = rng.gen_range(0..10);
        let lo = rng.gen_range(-5.0..0.0);
        let hi = lo + rng.gen_range(0.5..8.0);
        let bounds = match kind {
            0..=6 => (lo, hi),
            7 | 8 => (lo, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        };
        lp.set_bounds(j, bounds.0, bounds.1);
        lp.set_cost(j, rng.gen_range(-3.0..3.0));
        *x = rng.gen_range(lo..hi);
    }
    let coeffs = |rng: &mut ChaCha8Rng| -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                terms.push((j, rng.gen_range(-5.0..5.0)));
            }
        }
        terms
    };
    for _ in 0..rng.gen_range(1..=8) {
        let terms = coeffs(rng);
        let lhs: f64 = terms.iter().map(|&(j, a)| a * x0[j]).sum();
        let slack = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.0..3.0)
        };
        lp.add_le(&terms, lhs + slack, Family::General);
    }
    for _ in 0..rng.gen_range(0..=2) {
        let terms = coeffs(rng);
        let lhs: f64 = terms.iter().map(|&(j, a)| a * x0[j]).sum();
        lp.add_eq(&terms, lhs, Family::General);
    }
    if infeasible {
        let mut terms = coeffs(rng);
        if terms.is_empty() {
            terms.push((0, 1.0));
        }
        let neg: Vec<(usize, f64)> = terms.iter().map(|&(j, a)| (j, -a)).collect();
        let b = rng.gen_range(-2.0..2.0);
        lp.add_le(&terms, b, Family::General);
        lp.add_le(&neg, -b - 1.0, Family::General);
    }
    lp
}

// ---------------------------------------------------------------------------
// Graphs

pub fn random_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// All simple `s → t` paths with at most `max_len` vertices, found by
/// extending every injective vertex sequence and checking each step.
pub fn brute_force_paths(
    n: usize,
    edges: &[(usize, usize)],
    s: usize,
    t: usize,
    max_len: usize,
) -> Vec<Vec<usize>> {
    fn rec(
        n: usize,
        edges: &[(usize, usize)],
        t: usize,
        max_len: usize,
        seq: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *seq.last().unwrap();
        if last == t {
            out.push(seq.clone());
            return;
        }
        if seq.len() == max_len {
            return;
        }
        for v in 0..n {
            if !seq.contains(&v) && edges.contains(&(last, v)) {
                seq.push(v);
                rec(n, edges, t, max_len, seq, out);
                seq.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, edges, t, max_len, &mut vec![s], &mut out);
    out.sort();
    out
}

fn boxed(id: String, x0: f64, x1: f64, y0: f64, y1: f64) -> RegionVertex {
    RegionVertex {
        id,
        region: Polytope::from_box(x0, x1, y0, y1).unwrap(),
        direction: Vec2::new(1.0, 0.0),
    }
}

/// Columns of boxes along `x`. Column `k` always has a spine box around
/// `y = 0`, so a feasible path exists; side boxes and extra edges (including
/// backward and cross-column ones) add alternatives and cycles.
pub fn random_corridor(rng: &mut ChaCha8Rng) -> PlanningProblem {
    let columns = rng.gen_range(3..=4);
    let mut vertices = Vec::new();
    let mut column_of = Vec::new();
    for k in 0..columns {
        let x0 = 8.0 * k as f64 - 2.0;
        let x1 = x0 + rng.gen_range(10.0..13.0);
        let half = rng.gen_range(1.2..3.0);
        vertices.push(boxed(format!("c{k}"), x0, x1, -half, half));
        column_of.push(k);
        if k > 0 && k + 1 < columns && rng.gen_bool(0.7) {
            let y0 = rng.gen_range(-1.0..2.0);
            vertices.push(boxed(
                format!("c{k}_side"),
                x0,
                x1,
                y0,
                y0 + rng.gen_range(1.5..4.0),
            ));
            column_of.push(k);
        }
    }
    let n = vertices.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let (cu, cv) = (column_of[u], column_of[v]);
            let keep = if cv == cu + 1 {
                rng.gen_bool(0.85)
            } else {
                rng.gen_bool(0.15)
            };
            let spine = cv == cu + 1
                && !vertices[u].id.ends_with("side")
                && !vertices[v].id.ends_with("side");
            if spine || keep {
                edges.push((vertices[u].id.clone(), vertices[v].id.clone()));
            }
        }
    }
    let source = vertices[0].id.clone();
    let target = vertices[n - 1].id.clone();
    let goal_x = 8.0 * (columns - 1) as f64 + 4.0;
    PlanningProblem {
        graph: RegionGraph::new(vertices, &edges, &source, &target).unwrap(),
        start: Vec2::new(0.0, 0.0),
        start_velocity: Vec2::new(3.0, 0.0),
        start_time: 0.0,
        goal: Polytope::from_box(goal_x - 1.0, goal_x + 1.0, -0.5, 0.5).unwrap(),
        goal_velocity: Vec2::new(3.0, 0.0),
        start_straight: rng.gen_bool(0.5),
        goal_straight: rng.gen_bool(0.5),
        windows: vec![],
        limits: Limits {
            v_min: 0.5,
            v_max: 8.0,
            ..Limits::default()
        },
        weights: CostWeights::default(),
        settings: PlannerSettings {
            degree: rng.gen_range(4..=6),
            parallel: false,
            max_len: 6,
            ..PlannerSettings::default()
        },
    }
}
