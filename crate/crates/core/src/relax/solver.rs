use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use super::model::{ConicModel, RowSense, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterOutcome {
    pub status: SolveStatus,
    /// Solver-specific status text.
    pub raw_status: String,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub wall_time: Duration,
}

/// Contract between relaxation models and conic solvers.
///
/// Implementations must be usable from several threads at once on distinct
/// models.
pub trait SolverAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn supports_soc(&self) -> bool;
    fn solve(&self, model: &ConicModel) -> Result<AdapterOutcome>;
}

/// Interior-point conic solves through Clarabel.
#[derive(Debug, Clone, PartialEq)]
pub struct ClarabelAdapter {
    pub max_iter: u32,
    pub time_limit: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
}

impl Default for ClarabelAdapter {
    fn default() -> Self {
        ClarabelAdapter { max_iter: 400, time_limit: f64::INFINITY, tol_gap_abs: 1e-8, tol_gap_rel: 1e-8, tol_feas: 1e-8 }
    }
}

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Triplets {
    fn push_row(&mut self, terms: impl IntoIterator<Item = (VarId, f64)>, rhs: f64) {
        let r = self.b.len();
        for (v, c) in terms {
            if c != 0.0 {
                self.rows.push(r);
                self.cols.push(v.0);
                self.vals.push(c);
            }
        }
        self.b.push(rhs);
    }

    fn into_csc(self, n: usize) -> (CscMatrix<f64>, Vec<f64>) {
        let m = self.b.len();
        let mut order: Vec<usize> = (0..self.vals.len()).collect();
        order.sort_by_key(|&k| (self.cols[k], self.rows[k]));
        let mut colptr = vec![0usize; n + 1];
        let mut rowval: Vec<usize> = Vec::with_capacity(order.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(order.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let key = (self.cols[k], self.rows[k]);
            if last == Some(key) {
                *nzval.last_mut().unwrap() += self.vals[k];
                continue;
            }
            last = Some(key);
            rowval.push(key.1);
            nzval.push(self.vals[k]);
            colptr[key.0 + 1] += 1;
        }
        for j in 0..n {
            colptr[j + 1] += colptr[j];
        }
        (CscMatrix::new(m, n, colptr, rowval, nzval), self.b)
    }
}

/// Conic data `A x + s = b`, `s ∈ K` for the model, with the cone list.
fn assemble(model: &ConicModel) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
    let mut t = Triplets { rows: Vec::new(), cols: Vec::new(), vals: Vec::new(), b: Vec::new() };
    let mut cones = Vec::new();

    let start = t.b.len();
    for row in model.linear.iter().filter(|r| r.sense == RowSense::Eq) {
        t.push_row(row.terms.iter().copied(), row.rhs);
    }
    for (j, var) in model.variables.iter().enumerate() {
        if var.lower == var.upper {
            t.push_row([(VarId(j), 1.0)], var.lower);
        }
    }
    if t.b.len() > start {
        cones.push(SupportedConeT::ZeroConeT(t.b.len() - start));
    }

    let start = t.b.len();
    for row in &model.linear {
        match row.sense {
            RowSense::Le => t.push_row(row.terms.iter().copied(), row.rhs),
            RowSense::Ge => t.push_row(row.terms.iter().map(|&(v, c)| (v, -c)), -row.rhs),
            RowSense::Eq => {}
        }
    }
    for (j, var) in model.variables.iter().enumerate() {
        if var.lower == var.upper {
            continue;
        }
        if var.lower.is_finite() {
            t.push_row([(VarId(j), -1.0)], -var.lower);
        }
        if var.upper.is_finite() {
            t.push_row([(VarId(j), 1.0)], var.upper);
        }
    }
    if t.b.len() > start {
        cones.push(SupportedConeT::NonnegativeConeT(t.b.len() - start));
    }

    for cone in &model.cones {
        for e in std::iter::once(&cone.rhs).chain(&cone.lhs) {
            t.push_row(e.terms.iter().map(|&(v, c)| (v, -c)), e.constant);
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.lhs.len() + 1));
    }

    let (a, b) = t.into_csc(model.num_vars());
    (a, b, cones)
}

impl SolverAdapter for ClarabelAdapter {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn supports_soc(&self) -> bool {
        true
    }

    fn solve(&self, model: &ConicModel) -> Result<AdapterOutcome> {
        model.validate()?;
        let started = Instant::now();
        let n = model.num_vars();
        let (a, b, cones) = assemble(model);
        let p = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(v, c) in &model.objective.terms {
            q[v.0] += c;
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .time_limit(self.time_limit)
            .tol_gap_abs(self.tol_gap_abs)
            .tol_gap_rel(self.tol_gap_rel)
            .tol_feas(self.tol_feas)
            .build()
            .map_err(|e| Error::Solver(format!("clarabel settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("clarabel setup: {e}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::Numerical,
        };
        let constant = model.objective.constant;
        Ok(AdapterOutcome {
            status,
            raw_status: format!("{:?}", sol.status),
            primal: sol.x.clone(),
            objective: sol.obj_val + constant,
            dual_objective: sol.obj_val_dual + constant,
            wall_time: started.elapsed(),
        })
    }
}

/// True when `point` is a convex combination of `extreme` (to 1e-7 in the
/// ∞-norm, relative to the point's scale), decided by an ℓ1-residual LP.
pub fn membership_feasibility(point: &[f64], extreme: &[Vec<f64>], adapter: &dyn SolverAdapter) -> Result<bool> {
    let dim = point.len();
    if extreme.is_empty() {
        return Ok(false);
    }
    if extreme.iter().any(|e| e.len() != dim) {
        return Err(Error::invalid("extreme points and query point differ in dimension"));
    }
    let mut m = ConicModel::new();
    let lambdas: Vec<VarId> = (0..extreme.len()).map(|k| m.add_var(format!("lambda[{k}]"), 0.0, f64::INFINITY)).collect();
    let mut sum = super::LinExpr::zero();
    for &l in &lambdas {
        sum.add_term(l, 1.0);
    }
    m.add_linear("convexity", sum, RowSense::Eq, 1.0);
    let mut objective = super::LinExpr::zero();
    for d in 0..dim {
        let up = m.add_var(format!("r+[{d}]"), 0.0, f64::INFINITY);
        let down = m.add_var(format!("r-[{d}]"), 0.0, f64::INFINITY);
        let mut row = super::LinExpr::zero();
        for (k, &l) in lambdas.iter().enumerate() {
            row.add_term(l, extreme[k][d]);
        }
        row.add_term(up, -1.0).add_term(down, 1.0);
        m.add_linear(format!("coord[{d}]"), row, RowSense::Eq, point[d]);
        objective.add_term(up, 1.0).add_term(down, 1.0);
    }
    m.set_objective(objective);
    let out = adapter.solve(&m)?;
    if out.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!("membership LP ended with {}", out.raw_status)));
    }
    let scale = 1.0 + point.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(out.objective <= 1e-7 * scale)
}
