//! Primal active-set solver for convex quadratic programs
//!
//! ```text
//!     min  y'Hy + c'y   s.t.  G y <= rhs
//! ```
//!
//! where `H` is the full coefficient matrix of the quadratic form (no 1/2
//! convention), positive semidefinite, and positive definite on the null
//! space of any working set encountered. The gradient is `2Hy + c` and the
//! stationarity condition reads `2Hy + c + G'duals = 0` with `duals >= 0`.
//!
//! A feasible start comes from a phase-1 run of the [`crate::simplex`]
//! engine; from there the method iterates equality-constrained
//! minimizations over a working set of active rows, adding the blocking
//! row on a curtailed step and dropping the most negative multiplier
//! (lowest index on ties) at a working-set minimizer.
//!
//! Infeasible subproblems abort with the index of a violated row: in this
//! solver every QP is derived from a master iterate that guarantees
//! feasibility, so an infeasible QP signals a structural bug upstream and
//! is never silently repaired.

use crate::linalg::{dot, DenseMatrix, LinalgError, LuFactor};
use crate::simplex::{solve_lp, LpProblem, LpStatus};
use crate::tol::Tolerances;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("QP infeasible: row {row} cannot be satisfied (violation {violation:e})")]
    Infeasible { row: usize, violation: f64 },
    #[error("QP unbounded below (Hessian singular along a feasible ray)")]
    Unbounded,
    #[error("QP iteration limit reached after {0} iterations")]
    MaxIterations(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `min y'Hy + c'y  s.t.  G y <= rhs`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DenseMatrix,
    pub c: Vec<f64>,
    pub g: DenseMatrix,
    pub rhs: Vec<f64>,
}

impl QpProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        dot(&self.h.matvec(y), y) + dot(&self.c, y)
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut grad = self.h.matvec(y);
        for (gi, ci) in grad.iter_mut().zip(&self.c) {
            *gi = 2.0 * *gi + ci;
        }
        grad
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub y: Vec<f64>,
    /// One nonnegative multiplier per constraint row.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Working set at termination, sorted ascending.
    pub active_set: Vec<usize>,
    pub iterations: usize,
}

/// Zero out the multipliers of the given rows.
///
/// Used for constraints whose restriction to the current support is an
/// all-zero row: their multipliers are unconstrained by stationarity and
/// the cut formulas require the zero choice.
pub fn set_free_duals_to_zero(mut sol: QpSolution, zero_rows: &[usize]) -> QpSolution {
    for &r in zero_rows {
        sol.duals[r] = 0.0;
    }
    sol
}

/// Worst KKT violation of a proposed solution: stationarity, primal and
/// dual feasibility, and complementarity, all in absolute terms.
pub fn kkt_residual(p: &QpProblem, sol: &QpSolution) -> f64 {
    let mut res = 0.0_f64;
    let grad = p.gradient(&sol.y);
    let gt_dual = p.g.matvec_transpose(&sol.duals);
    for i in 0..p.num_vars() {
        res = res.max((grad[i] + gt_dual[i]).abs());
    }
    let gy = p.g.matvec(&sol.y);
    for r in 0..p.num_rows() {
        res = res.max(gy[r] - p.rhs[r]);
        res = res.max(-sol.duals[r]);
        res = res.max((sol.duals[r] * (gy[r] - p.rhs[r])).abs());
    }
    res
}

/// Natural magnitude of a QP, used to scale residual thresholds.
pub fn problem_scale(p: &QpProblem) -> f64 {
    let data = p
        .h
        .max_abs()
        .max(p.g.max_abs())
        .max(p.c.iter().fold(0.0, |a: f64, &v| a.max(v.abs())))
        .max(p.rhs.iter().fold(0.0, |a: f64, &v| a.max(v.abs())));
    1.0 + data
}

/// Find any feasible point of `G y <= rhs` with a zero-objective LP.
/// Rows without a nonzero coefficient never enter the LP: they hold or
/// fail regardless of `y`, and keeping them out keeps the simplex basis
/// at the size of the genuinely coupled rows.
fn feasible_point(p: &QpProblem, tol: &Tolerances) -> Result<Vec<f64>, QpError> {
    let m = p.num_vars();
    let ftol = tol.feas * problem_scale(p);
    let mut lp = LpProblem::new(m, 0);
    for r in 0..p.num_rows() {
        let entries: Vec<(usize, f64)> =
            (0..m).map(|j| (j, p.g[(r, j)])).filter(|&(_, v)| v != 0.0).collect();
        if entries.is_empty() {
            if p.rhs[r] < -ftol {
                return Err(QpError::Infeasible { row: r, violation: -p.rhs[r] });
            }
            continue;
        }
        lp.push_row(&entries, p.rhs[r]);
    }
    let s = solve_lp(&lp, None, tol.feas);
    match s.status {
        LpStatus::Optimal => Ok(s.x),
        _ => {
            // Report the worst violated row as the certificate.
            let gy = p.g.matvec(&s.x);
            let mut row = 0;
            let mut worst = f64::NEG_INFINITY;
            for r in 0..p.num_rows() {
                let v = gy[r] - p.rhs[r];
                if v > worst {
                    worst = v;
                    row = r;
                }
            }
            Err(QpError::Infeasible { row, violation: worst.max(0.0) })
        }
    }
}

/// Greedily keep a maximal linearly independent subset of the given rows.
fn independent_rows(g: &DenseMatrix, rows: &[usize]) -> Vec<usize> {
    let m = g.cols();
    let mut kept: Vec<usize> = Vec::new();
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    for &r in rows {
        if kept.len() == m {
            break;
        }
        let mut v = g.row(r).to_vec();
        // Eliminate against the rows already kept.
        for basis in &reduced {
            let pivot_col = basis.iter().position(|&x| x != 0.0).unwrap();
            let f = v[pivot_col] / basis[pivot_col];
            if f != 0.0 {
                for (vi, bi) in v.iter_mut().zip(basis) {
                    *vi -= f * bi;
                }
            }
        }
        let norm = v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        let orig = g.row(r).iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        if norm > 1e-10 * (1.0 + orig) {
            // Normalize the pivot for stable later eliminations.
            let pc = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let piv = v[pc];
            let mut w = v.clone();
            for x in w.iter_mut() {
                *x /= piv;
            }
            // Keep pivot position discoverable: zero tiny entries before it.
            let mut clean = vec![0.0; m];
            clean[pc] = 1.0;
            for (i, &x) in w.iter().enumerate() {
                if i != pc && x.abs() > 1e-14 {
                    clean[i] = x;
                }
            }
            reduced.push(clean);
            kept.push(r);
        }
    }
    kept
}

/// Equality-constrained minimizer over the working set: solves the KKT
/// system for the point and multipliers. `None` when the system is
/// singular (flat direction).
pub(crate) fn kkt_point(p: &QpProblem, work: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = p.num_vars();
    let w = work.len();
    let dim = m + w;
    let mut k = DenseMatrix::zeros(dim, dim);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = 2.0 * p.h[(i, j)];
        }
    }
    for (a, &r) in work.iter().enumerate() {
        for j in 0..m {
            k[(m + a, j)] = p.g[(r, j)];
            k[(j, m + a)] = p.g[(r, j)];
        }
    }
    let mut rhs = vec![0.0; dim];
    for i in 0..m {
        rhs[i] = -p.c[i];
    }
    for (a, &r) in work.iter().enumerate() {
        rhs[m + a] = p.rhs[r];
    }
    let f = LuFactor::new(&k).ok()?;
    let sol = f.solve(&rhs);
    Some((sol[..m].to_vec(), sol[m..].to_vec()))
}

/// Solve the QP by the primal active-set method. `warm_start` proposes an
/// initial working set (from a neighbouring solve); it is used when its
/// equality minimizer is feasible, otherwise the solver falls back to a
/// phase-1 start.
pub fn solve_qp(
    p: &QpProblem,
    warm_start: Option<&[usize]>,
    tol: &Tolerances,
) -> Result<QpSolution, QpError> {
    let m = p.num_vars();
    let rows = p.num_rows();
    debug_assert_eq!(p.h.rows(), m);
    debug_assert_eq!(p.h.cols(), m);
    debug_assert_eq!(p.g.rows(), rows);
    let scale = problem_scale(p);
    let ftol = tol.feas * scale;

    if m == 0 {
        for (r, &b) in p.rhs.iter().enumerate() {
            if b < -ftol {
                return Err(QpError::Infeasible { row: r, violation: -b });
            }
        }
        return Ok(QpSolution {
            y: Vec::new(),
            duals: vec![0.0; rows],
            objective: 0.0,
            active_set: Vec::new(),
            iterations: 0,
        });
    }

    // Starting point and working set.
    let mut y: Vec<f64>;
    let mut work: Vec<usize>;
    let mut warm_ok = false;
    if let Some(ws) = warm_start {
        let cand: Vec<usize> = ws.iter().copied().filter(|&r| r < rows).collect();
        let cand = independent_rows(&p.g, &cand);
        if let Some((yy, _)) = kkt_point(p, &cand) {
            let gy = p.g.matvec(&yy);
            if (0..rows).all(|r| gy[r] <= p.rhs[r] + ftol) {
                y = yy;
                work = cand;
                warm_ok = true;
            } else {
                y = Vec::new();
                work = Vec::new();
            }
        } else {
            y = Vec::new();
            work = Vec::new();
        }
    } else {
        y = Vec::new();
        work = Vec::new();
    }
    if !warm_ok {
        y = feasible_point(p, tol)?;
        let gy = p.g.matvec(&y);
        let active: Vec<usize> =
            (0..rows).filter(|&r| (gy[r] - p.rhs[r]).abs() <= ftol).collect();
        work = independent_rows(&p.g, &active);
    }

    let max_iters = 50 * (m + rows);
    let step_tol = tol.factor * (1.0 + y.iter().fold(0.0_f64, |a, &v| a.max(v.abs())));
    let dual_tol = tol.factor * scale;

    for iter in 0..max_iters {
        let (target, lambda) = match kkt_point(p, &work) {
            Some(t) => t,
            None => return Err(QpError::Unbounded),
        };
        let step: Vec<f64> = target.iter().zip(&y).map(|(t, v)| t - v).collect();
        let step_norm = step.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));

        if step_norm <= step_tol {
            // At the working-set minimizer: check multipliers.
            let mut drop_idx = usize::MAX;
            let mut most_negative = -dual_tol;
            for (a, &l) in lambda.iter().enumerate() {
                if l < most_negative {
                    most_negative = l;
                    drop_idx = a;
                }
            }
            if drop_idx == usize::MAX {
                let mut duals = vec![0.0; rows];
                for (a, &r) in work.iter().enumerate() {
                    duals[r] = lambda[a].max(0.0);
                }
                let mut active = work.clone();
                active.sort_unstable();
                return Ok(QpSolution {
                    objective: p.objective(&y),
                    y,
                    duals,
                    active_set: active,
                    iterations: iter,
                });
            }
            work.remove(drop_idx);
            continue;
        }

        // Ratio test toward the working-set minimizer.
        let mut alpha = 1.0_f64;
        let mut blocking = usize::MAX;
        let gy = p.g.matvec(&y);
        for r in 0..rows {
            if work.contains(&r) {
                continue;
            }
            let gp = dot(p.g.row(r), &step);
            if gp <= 1e-12 * scale {
                continue;
            }
            let slack = (p.rhs[r] - gy[r]).max(0.0);
            let a = slack / gp;
            if a < alpha - 1e-15 {
                alpha = a;
                blocking = r;
            }
        }
        for (yi, si) in y.iter_mut().zip(&step) {
            *yi += alpha * si;
        }
        if blocking != usize::MAX {
            work.push(blocking);
        }
    }
    Err(QpError::MaxIterations(max_iters))
}
