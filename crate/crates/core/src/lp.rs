//! Linear programs in canonical sparse form and the solver entry point.
//!
//! Every planning subproblem (path programs, the lifted relaxation, polytope
//! validity checks) is expressed as a [`LinearProgram`] and handed to
//! [`solve_lp`]. The simplex itself is provided by `microlp`; this module owns
//! the problem representation, feasibility re-checks and the elastic
//! phase-one diagnosis used to explain infeasible paths.

use std::collections::BTreeMap;
use std::fmt;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Named group a constraint row belongs to, used for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Containment,
    TimeScaling,
    Velocity,
    MinSpeed,
    Continuity,
    Boundary,
    Goal,
    TimingWindow,
    CostEpigraph,
    Flow,
    Conservation,
    General,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Family::Containment => "containment",
            Family::TimeScaling => "time-scaling",
            Family::Velocity => "velocity",
            Family::MinSpeed => "min-speed",
            Family::Continuity => "continuity",
            Family::Boundary => "boundary",
            Family::Goal => "goal",
            Family::TimingWindow => "timing-window",
            Family::CostEpigraph => "cost-epigraph",
            Family::Flow => "flow",
            Family::Conservation => "conservation",
            Family::General => "general",
        };
        f.write_str(name)
    }
}

/// One sparse row: `Σ coeff·x[var] (≤ | =) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub family: Family,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    Invalid(String),
    #[error("solver failure: {0}")]
    Numerical(String),
}

/// `min cᵀx  s.t.  A_in x ≤ b_in,  A_eq x = b_eq,  l ≤ x ≤ u`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    inequalities: Vec<Constraint>,
    equalities: Vec<Constraint>,
}

/// Optimal basic solution returned by [`solve_lp`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
}

fn normalize_terms(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for &(j, a) in terms {
        *merged.entry(j).or_insert(0.0) += a;
    }
    merged.into_iter().filter(|&(_, a)| a != 0.0).collect()
}

impl LinearProgram {
    /// Program with `num_vars` free variables and a zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars],
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: f64, bounds: (f64, f64)) -> usize {
        self.objective.push(cost);
        self.bounds.push(bounds);
        self.objective.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn add_le(&mut self, terms: &[(usize, f64)], rhs: f64, family: Family) {
        self.inequalities.push(Constraint {
            terms: normalize_terms(terms),
            rhs,
            family,
        });
    }

    pub fn add_ge(&mut self, terms: &[(usize, f64)], rhs: f64, family: Family) {
        let negated: Vec<_> = terms.iter().map(|&(j, a)| (j, -a)).collect();
        self.add_le(&negated, -rhs, family);
    }

    pub fn add_eq(&mut self, terms: &[(usize, f64)], rhs: f64, family: Family) {
        self.equalities.push(Constraint {
            terms: normalize_terms(terms),
            rhs,
            family,
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.violations_by_family(x)
            .values()
            .fold(0.0f64, |acc, &v| acc.max(v))
    }

    /// Largest violation per constraint family at `x`; bounds are reported
    /// under [`Family::General`].
    pub fn violations_by_family(&self, x: &[f64]) -> BTreeMap<Family, f64> {
        let mut out: BTreeMap<Family, f64> = BTreeMap::new();
        let mut record = |fam: Family, v: f64| {
            let e = out.entry(fam).or_insert(0.0);
            *e = e.max(v.max(0.0));
        };
        for row in &self.inequalities {
            record(row.family, row.lhs(x) - row.rhs);
        }
        for row in &self.equalities {
            record(row.family, (row.lhs(x) - row.rhs).abs());
        }
        for (v, &(lo, hi)) in x.iter().zip(&self.bounds) {
            record(Family::General, lo - v);
            record(Family::General, v - hi);
        }
        out
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Invalid(
                "bounds and objective lengths differ".into(),
            ));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::Invalid(format!(
                "objective coefficient {j} is not finite"
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return Err(LpError::Invalid(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        for (i, row) in self.inequalities.iter().chain(&self.equalities).enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Invalid(format!(
                    "row {i} has non-finite right-hand side"
                )));
            }
            for &(j, a) in &row.terms {
                if j >= n {
                    return Err(LpError::Invalid(format!(
                        "row {i} references variable {j} of {n}"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::Invalid(format!(
                        "row {i} has non-finite coefficient"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Solves `p` to optimality.
///
/// Infeasible and unbounded programs are distinguished. The returned point is
/// a basic solution; the objective is recomputed as `cᵀx`.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution, LpError> {
    p.validate()?;
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = p
        .objective
        .iter()
        .zip(&p.bounds)
        .map(|(&c, &b)| problem.add_var(c, b))
        .collect();
    let add = |problem: &mut Problem, row: &Constraint, op: ComparisonOp| {
        let expr: Vec<_> = row.terms.iter().map(|&(j, a)| (vars[j], a)).collect();
        problem.add_constraint(expr.as_slice(), op, row.rhs);
    };
    for row in &p.inequalities {
        if row.terms.is_empty() {
            if row.rhs < 0.0 {
                return Err(LpError::Infeasible);
            }
            continue;
        }
        add(&mut problem, row, ComparisonOp::Le);
    }
    for row in &p.equalities {
        if row.terms.is_empty() {
            if row.rhs != 0.0 {
                return Err(LpError::Infeasible);
            }
            continue;
        }
        add(&mut problem, row, ComparisonOp::Eq);
    }
    let outcome = problem.solve().map_err(|e| match e {
        microlp::Error::Infeasible => LpError::Infeasible,
        microlp::Error::Unbounded => LpError::Unbounded,
        other => LpError::Numerical(other.to_string()),
    })?;
    let solution = outcome
        .into_solution()
        .map_err(|_| LpError::Numerical("solve interrupted".into()))?;
    let x: Vec<f64> = vars.iter().map(|&v| solution.var_value_raw(v)).collect();
    let objective = p.objective_value(&x);
    Ok(LpSolution {
        x,
        objective,
        iterations: solution.stats().lp_iterations,
    })
}

/// Elastic phase-one: minimum total slack needed to satisfy every row,
/// broken down by constraint family. Families with zero residual are omitted.
///
/// Bounds are kept hard; only rows receive slack.
pub fn phase_one_residuals(p: &LinearProgram) -> Result<Vec<(Family, f64)>, LpError> {
    let mut elastic = LinearProgram {
        objective: vec![0.0; p.num_vars()],
        bounds: p.bounds.clone(),
        inequalities: Vec::new(),
        equalities: Vec::new(),
    };
    let mut slack_family = Vec::new();
    for row in &p.inequalities {
        let s = elastic.add_var(1.0, (0.0, f64::INFINITY));
        slack_family.push((s, row.family));
        let mut terms = row.terms.clone();
        terms.push((s, -1.0));
        elastic.add_le(&terms, row.rhs, row.family);
    }
    for row in &p.equalities {
        let up = elastic.add_var(1.0, (0.0, f64::INFINITY));
        let down = elastic.add_var(1.0, (0.0, f64::INFINITY));
        slack_family.push((up, row.family));
        slack_family.push((down, row.family));
        let mut terms = row.terms.clone();
        terms.push((up, -1.0));
        terms.push((down, 1.0));
        elastic.add_eq(&terms, row.rhs, row.family);
    }
    let sol = solve_lp(&elastic)?;
    let mut by_family: BTreeMap<Family, f64> = BTreeMap::new();
    for (s, fam) in slack_family {
        if sol.x[s] > 1e-9 {
            *by_family.entry(fam).or_insert(0.0) += sol.x[s];
        }
    }
    Ok(by_family.into_iter().collect())
}
