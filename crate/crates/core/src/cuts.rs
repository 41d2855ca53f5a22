//! Cutting planes for the marginal objective of the selection variables.
//!
//! For a candidate selection `x` in `[0,1]^n` define the marginal value
//!
//! ```text
//!   fbar(x) = h'x + min_y  sum_i delta_i y_i^2 / x_i  +  y'Ry + g'y
//!             s.t.         A y <= b,   C y <= D x,
//!                          y_i = 0  where  x_i = 0
//! ```
//!
//! using the splitting `Q = diag(delta) + R` from [`crate::decompose`].
//! At binary `x` this equals the original objective restricted to the
//! chosen support, and `fbar` is convex on the unit box, so the original
//! problem is `min fbar(x)` over the binary feasible set. Every generator
//! here returns an affine underestimator
//!
//! ```text
//!   eta >= t'x + offset        with equality at the generating point,
//! ```
//!
//! built from one solve of the reduced QP at `x` (the inner minimum above,
//! restricted to the support of `x`).
//!
//! Three generators are provided:
//!
//! * [`cut_persp`]: coefficients from the reduced solution and its duals;
//!   valid at binary and fractional generating points.
//! * [`cut_persp_ro`]: strengthens the complement coefficients using a
//!   rank-one expansion `R = L L'` of the residual; needs a binary
//!   generating point and [`crate::decompose::rank_one_factors`]. Its
//!   coefficients dominate those of [`cut_persp`] entrywise.
//! * [`cut_bc`]: the same cut as [`cut_persp`] expressed through the
//!   low-rank regression data of [`crate::decompose::low_rank_factor`];
//!   needs a uniform `delta`. Useful as a cross-check and when only the
//!   factor `E` of `R = E'E` is available.
//!
//! The kernels only touch nonzero duals and the support columns, so a cut
//! costs `O(n (|support| + m1))` after the reduced QP solve.

use crate::decompose::{is_uniform_delta, Decomposition};
use crate::instances::MiqpInstance;
use crate::linalg::{dot, woodbury_solve, DenseMatrix, LinalgError};
use crate::qp::{set_free_duals_to_zero, solve_qp, QpError, QpProblem};
use crate::tol::Tolerances;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CutError {
    #[error("coordinate {index} = {value} is fractional; this generator needs a binary point")]
    FractionalInput { index: usize, value: f64 },
    #[error("this generator needs a uniform diagonal extraction")]
    NonUniformDelta,
    #[error("decomposition carries no rank-one factor columns; run rank_one_factors first")]
    MissingRankOneFactors,
    #[error("decomposition carries no low-rank regression data; run low_rank_factor first")]
    MissingLowRankData,
    #[error("no feasible y at this x: row {row} violated by {violation:e}")]
    InfeasiblePoint { row: usize, violation: f64 },
    #[error(transparent)]
    Qp(QpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<QpError> for CutError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::Infeasible { row, violation } => CutError::InfeasiblePoint { row, violation },
            other => CutError::Qp(other),
        }
    }
}

/// Which generator produced a cut; part of the deduplication key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutSource {
    Persp,
    PerspRo,
    Bc,
}

impl CutSource {
    pub fn label(self) -> &'static str {
        match self {
            CutSource::Persp => "persp",
            CutSource::PerspRo => "persp-ro",
            CutSource::Bc => "bc",
        }
    }
}

/// An affine underestimator `eta >= t'x + offset` of the marginal value,
/// tight at `generating_point`.
#[derive(Debug, Clone)]
pub struct Cut {
    pub t: Vec<f64>,
    pub offset: f64,
    pub source: CutSource,
    pub generating_point: Vec<f64>,
    /// `fbar` at the generating point; equals `value_at(generating_point)`.
    pub marginal_value: f64,
}

impl Cut {
    pub fn value_at(&self, x: &[f64]) -> f64 {
        dot(&self.t, x) + self.offset
    }

    /// Positive when the pair `(x, eta)` lies below the cut.
    pub fn violation(&self, x: &[f64], eta: f64) -> f64 {
        self.value_at(x) - eta
    }

    /// Bit-exact identity of the generator invocation, for deduplication.
    pub fn dedup_key(&self) -> (CutSource, Vec<u64>) {
        (self.source, self.generating_point.iter().map(|v| v.to_bits()).collect())
    }
}

/// Indices with `x_i` above the support threshold, and the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPartition {
    pub support: Vec<usize>,
    pub complement: Vec<usize>,
}

impl SupportPartition {
    pub fn new(x: &[f64], support_tol: f64) -> Self {
        let mut support = Vec::new();
        let mut complement = Vec::new();
        for (i, &v) in x.iter().enumerate() {
            if v > support_tol {
                support.push(i);
            } else {
                complement.push(i);
            }
        }
        SupportPartition { support, complement }
    }
}

/// The inner minimization at `x`, restricted to the support variables:
/// Hessian `R_SS + diag(delta_i / x_i)`, rows `[A_S; C_S]` against
/// `[b; Dx]`. All original rows are kept (rows with no support column
/// become trivial), so row indices and duals keep their original meaning.
/// Returns the problem, the partition, and the rows that lost every
/// coefficient.
pub fn reduced_qp(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    tol: &Tolerances,
) -> (QpProblem, SupportPartition, Vec<usize>) {
    let n = inst.n;
    debug_assert_eq!(x.len(), n);
    let part = SupportPartition::new(x, tol.support);
    let s = &part.support;
    let ns = s.len();

    let mut h = DenseMatrix::zeros(ns, ns);
    for (a, &i) in s.iter().enumerate() {
        for (bg, &j) in s.iter().enumerate() {
            h[(a, bg)] = decomp.r[(i, j)];
        }
        h[(a, a)] += decomp.delta[i] / x[i];
    }
    let c: Vec<f64> = s.iter().map(|&i| inst.g[i]).collect();

    let nz_x: Vec<(usize, f64)> =
        x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect();

    let m1 = inst.m1();
    let m2 = inst.m2();
    let mut gmat = DenseMatrix::zeros(m1 + m2, ns);
    let mut rhs = vec![0.0; m1 + m2];
    let mut zero_rows = Vec::new();
    for r in 0..m1 {
        let row = inst.a.row(r);
        let mut nz = false;
        for (a, &i) in s.iter().enumerate() {
            gmat[(r, a)] = row[i];
            nz |= row[i] != 0.0;
        }
        rhs[r] = inst.b[r];
        if !nz {
            zero_rows.push(r);
        }
    }
    for r in 0..m2 {
        let row = inst.c.row(r);
        let mut nz = false;
        for (a, &i) in s.iter().enumerate() {
            gmat[(m1 + r, a)] = row[i];
            nz |= row[i] != 0.0;
        }
        let drow = inst.d.row(r);
        rhs[m1 + r] = nz_x.iter().map(|&(j, v)| drow[j] * v).sum();
        if !nz {
            zero_rows.push(m1 + r);
        }
    }

    (QpProblem { h, c, g: gmat, rhs }, part, zero_rows)
}

/// Everything the cut generators need from one evaluation of `fbar(x)`.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub partition: SupportPartition,
    /// Full-length minimizer; zero off the support.
    pub y: Vec<f64>,
    /// Multipliers in original row order (`m1 + m2` entries, >= 0); rows
    /// with no support column carry an exact zero.
    pub duals: Vec<f64>,
    pub active_set: Vec<usize>,
    /// Objective of the reduced QP, without the `h'x` term.
    pub qp_objective: f64,
    /// `fbar(x)` = QP objective + `h'x`.
    pub marginal: f64,
    pub iterations: usize,
}

/// Evaluate `fbar(x)` and keep the solution data for cut generation.
/// `warm` proposes a starting active set from a neighbouring solve.
pub fn solve_reduced(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    warm: Option<&[usize]>,
    tol: &Tolerances,
) -> Result<ReducedSolution, CutError> {
    let (p, partition, zero_rows) = reduced_qp(inst, decomp, x, tol);
    let sol = solve_qp(&p, warm, tol)?;
    let sol = set_free_duals_to_zero(sol, &zero_rows);
    let mut y = vec![0.0; inst.n];
    for (a, &i) in partition.support.iter().enumerate() {
        y[i] = sol.y[a];
    }
    let marginal = sol.objective + dot(&inst.h, x);
    Ok(ReducedSolution {
        partition,
        y,
        duals: sol.duals,
        active_set: sol.active_set,
        qp_objective: sol.objective,
        marginal,
        iterations: sol.iterations,
    })
}

/// Just the marginal value `fbar(x)`.
pub fn marginal_value(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    tol: &Tolerances,
) -> Result<f64, CutError> {
    Ok(solve_reduced(inst, decomp, x, None, tol)?.marginal)
}

/// `A'lambda`, `C'mu`, `D'mu` accumulated over the nonzero duals only.
struct DualProducts {
    at: Vec<f64>,
    ct: Vec<f64>,
    dt: Vec<f64>,
}

fn dual_products(inst: &MiqpInstance, duals: &[f64]) -> DualProducts {
    let n = inst.n;
    let m1 = inst.m1();
    let mut at = vec![0.0; n];
    let mut ct = vec![0.0; n];
    let mut dt = vec![0.0; n];
    for (r, &lam) in duals[..m1].iter().enumerate() {
        if lam != 0.0 {
            for (j, &v) in inst.a.row(r).iter().enumerate() {
                at[j] += lam * v;
            }
        }
    }
    for (r, &mu) in duals[m1..].iter().enumerate() {
        if mu != 0.0 {
            for (j, &v) in inst.c.row(r).iter().enumerate() {
                ct[j] += mu * v;
            }
            for (j, &v) in inst.d.row(r).iter().enumerate() {
                dt[j] += mu * v;
            }
        }
    }
    DualProducts { at, ct, dt }
}

/// Support coefficients shared by all generators:
/// `t_i = -delta_i (y_i / x_i)^2 - (D'mu)_i + h_i`.
fn support_coefficients(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    sol: &ReducedSolution,
    dp: &DualProducts,
    t: &mut [f64],
) {
    for &i in &sol.partition.support {
        let ratio = sol.y[i] / x[i];
        t[i] = -decomp.delta[i] * ratio * ratio - dp.dt[i] + inst.h[i];
    }
}

/// Reduced gradient price of a complement variable: what the objective
/// gains per unit of `y_i` released at `y_i = 0`, seen by the Lagrangian
/// without the perspective term. Equals `delta_i` times the `Psi_i` of
/// the plain perspective cut.
fn complement_price(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    sol: &ReducedSolution,
    dp: &DualProducts,
    i: usize,
) -> f64 {
    let mut rsum = 0.0;
    for &j in &sol.partition.support {
        rsum += decomp.r[(i, j)] * sol.y[j];
    }
    -(2.0 * rsum + inst.g[i] + dp.at[i] + dp.ct[i])
}

fn finish(
    source: CutSource,
    t: Vec<f64>,
    x: &[f64],
    sol: &ReducedSolution,
) -> Cut {
    let offset = sol.marginal - dot(&t, x);
    Cut {
        t,
        offset,
        source,
        generating_point: x.to_vec(),
        marginal_value: sol.marginal,
    }
}

/// The perspective cut at `x`, from the reduced solution computed there.
/// Valid at binary and fractional generating points.
pub fn cut_persp(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    sol: &ReducedSolution,
) -> Cut {
    let dp = dual_products(inst, &sol.duals);
    let mut t = vec![0.0; inst.n];
    support_coefficients(inst, decomp, x, sol, &dp, &mut t);
    for &i in &sol.partition.complement {
        let psi = complement_price(inst, decomp, sol, &dp, i) / decomp.delta[i];
        t[i] = -0.25 * decomp.delta[i] * psi * psi - dp.dt[i] + inst.h[i];
    }
    finish(CutSource::Persp, t, x, sol)
}

fn require_binary(x: &[f64], tol: &Tolerances) -> Result<(), CutError> {
    for (i, &v) in x.iter().enumerate() {
        if v.min((v - 1.0).abs()) > tol.support {
            return Err(CutError::FractionalInput { index: i, value: v });
        }
    }
    Ok(())
}

/// The rank-one strengthened perspective cut. Complement coefficients are
/// recomputed through the factor columns of `R = L L'`: the columns
/// supported entirely off the support of `x` let the complement variables
/// share curvature, which can only raise the coefficients. Requires a
/// binary generating point and [`crate::decompose::rank_one_factors`].
pub fn cut_persp_ro(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    sol: &ReducedSolution,
    tol: &Tolerances,
) -> Result<Cut, CutError> {
    require_binary(x, tol)?;
    let l = decomp.l.as_ref().ok_or(CutError::MissingRankOneFactors)?;
    let n = inst.n;
    let sc = &sol.partition.complement;

    let mut on_support = vec![false; n];
    for &i in &sol.partition.support {
        on_support[i] = true;
    }
    // Factor columns living entirely on the complement, with their sizes.
    let mut idle: Vec<(usize, usize)> = Vec::new();
    for col in 0..l.cols() {
        let mut nnz = 0usize;
        let mut clean = true;
        for row in 0..n {
            if l[(row, col)] != 0.0 {
                if on_support[row] {
                    clean = false;
                    break;
                }
                nnz += 1;
            }
        }
        if clean && nnz > 0 {
            idle.push((col, nnz));
        }
    }

    let dp = dual_products(inst, &sol.duals);
    let price: Vec<f64> =
        sc.iter().map(|&i| complement_price(inst, decomp, sol, &dp, i)).collect();

    // Solve (diag(delta_SC) + sum_j (1/nnz_j) Lj_SC Lj_SC') beta = 2 price.
    let d: Vec<f64> = sc.iter().map(|&i| decomp.delta[i]).collect();
    let mut u = DenseMatrix::zeros(sc.len(), idle.len());
    for (p, &(col, nnz)) in idle.iter().enumerate() {
        let w = 1.0 / (nnz as f64).sqrt();
        for (a, &i) in sc.iter().enumerate() {
            u[(a, p)] = l[(i, col)] * w;
        }
    }
    let rhs: Vec<f64> = price.iter().map(|v| 2.0 * v).collect();
    let beta = woodbury_solve(&d, &u, &rhs)?;

    // Per-column shares of the strengthened bound.
    let mut shares = vec![0.0; idle.len()];
    for (p, &(col, nnz)) in idle.iter().enumerate() {
        let mut sum = 0.0;
        for (a, &i) in sc.iter().enumerate() {
            sum += l[(i, col)] * beta[a];
        }
        shares[p] = sum / (2.0 * nnz as f64);
    }

    let mut t = vec![0.0; n];
    support_coefficients(inst, decomp, x, sol, &dp, &mut t);
    for (a, &i) in sc.iter().enumerate() {
        let psi = 0.5 * beta[a];
        let mut extra = 0.0;
        for (p, &(col, _)) in idle.iter().enumerate() {
            if l[(i, col)] != 0.0 {
                extra += shares[p] * shares[p];
            }
        }
        t[i] = -0.25 * decomp.delta[i] * psi * psi - 0.25 * extra - dp.dt[i] + inst.h[i];
    }
    Ok(finish(CutSource::PerspRo, t, x, sol))
}

/// The perspective cut computed through the low-rank regression form.
/// Requires a uniform `delta` and [`crate::decompose::low_rank_factor`];
/// coefficients agree with [`cut_persp`] to rounding error.
pub fn cut_bc(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    sol: &ReducedSolution,
) -> Result<Cut, CutError> {
    if !is_uniform_delta(&decomp.delta) {
        return Err(CutError::NonUniformDelta);
    }
    let lr = decomp.low_rank.as_ref().ok_or(CutError::MissingLowRankData)?;
    let gamma = 1.0 / decomp.delta[0];
    let k1 = lr.e.rows();
    let dp = dual_products(inst, &sol.duals);

    // alpha = -2 (beta - E_S y_S): the regression residual at the support
    // solution, scaled to price the complement variables.
    let mut resid = lr.beta.clone();
    for &j in &sol.partition.support {
        let yj = sol.y[j];
        for a in 0..k1 {
            resid[a] -= lr.e[(a, j)] * yj;
        }
    }
    let alpha: Vec<f64> = resid.iter().map(|v| -2.0 * v).collect();

    let mut t = vec![0.0; inst.n];
    support_coefficients(inst, decomp, x, sol, &dp, &mut t);
    for &i in &sol.partition.complement {
        let mut e_dot = 0.0;
        for a in 0..k1 {
            e_dot += lr.e[(a, i)] * alpha[a];
        }
        let z = e_dot + dp.at[i] + dp.ct[i] + lr.g_tilde[i];
        t[i] = -0.25 * gamma * z * z - dp.dt[i] + inst.h[i];
    }
    Ok(finish(CutSource::Bc, t, x, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{low_rank_factor, rank_one_factors, DeltaStrategy};
    use crate::instances::{generate_portfolio, PortfolioSpec};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    /// Two independent variables, no constraints:
    /// `min 2 y1^2 + 2 y2^2 - 2 y1 - 2 y2` with `Q = diag(1,1) + I`.
    /// Closed forms: `fbar(x) = -sum_i x_i / (x_i + 1)`.
    fn unconstrained_pair() -> (MiqpInstance, Decomposition) {
        let inst = MiqpInstance {
            name: "pair".into(),
            n: 2,
            q: DenseMatrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 2.0]),
            g: vec![-2.0, -2.0],
            h: vec![0.0, 0.0],
            a: DenseMatrix::zeros(0, 2),
            b: vec![],
            c: DenseMatrix::zeros(0, 2),
            d: DenseMatrix::zeros(0, 2),
            k: None,
            seed: None,
            rng: None,
        };
        let decomp = Decomposition::from_parts(
            vec![1.0, 1.0],
            DenseMatrix::identity(2),
            DeltaStrategy::UniformMinEig,
        );
        (inst, decomp)
    }

    fn fbar_pair(x: &[f64]) -> f64 {
        -x.iter().map(|&v| v / (v + 1.0)).sum::<f64>()
    }

    #[test]
    fn marginal_matches_closed_form() {
        let (inst, decomp) = unconstrained_pair();
        for x in [[1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.25, 1.0]] {
            let got = marginal_value(&inst, &decomp, &x, &tols()).unwrap();
            assert!((got - fbar_pair(&x)).abs() < 1e-12, "x {x:?}: {got}");
        }
    }

    #[test]
    fn persp_cut_frozen_values() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();

        let x = [1.0, 0.0];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        assert!((sol.y[0] - 0.5).abs() < 1e-12);
        let cut = cut_persp(&inst, &decomp, &x, &sol);
        assert!((cut.t[0] + 0.25).abs() < 1e-12, "t0 {}", cut.t[0]);
        assert!((cut.t[1] + 1.0).abs() < 1e-12, "t1 {}", cut.t[1]);
        assert!((cut.offset + 0.25).abs() < 1e-12, "offset {}", cut.offset);
        assert!((cut.value_at(&x) - sol.marginal).abs() < 1e-12);

        let x = [0.5, 0.5];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let cut = cut_persp(&inst, &decomp, &x, &sol);
        assert!((cut.t[0] + 4.0 / 9.0).abs() < 1e-12);
        assert!((cut.t[1] + 4.0 / 9.0).abs() < 1e-12);
        assert!((cut.value_at(&x) - fbar_pair(&x)).abs() < 1e-12);
    }

    #[test]
    fn persp_cut_underestimates_everywhere() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        for gen in [[1.0, 0.0], [0.5, 0.5], [0.25, 0.75]] {
            let sol = solve_reduced(&inst, &decomp, &gen, None, &t).unwrap();
            let cut = cut_persp(&inst, &decomp, &gen, &sol);
            for a in [0.0, 0.3, 0.7, 1.0] {
                for b in [0.0, 0.3, 0.7, 1.0] {
                    let x = [a, b];
                    assert!(
                        cut.value_at(&x) <= fbar_pair(&x) + 1e-10,
                        "gen {gen:?} x {x:?}: {} > {}",
                        cut.value_at(&x),
                        fbar_pair(&x)
                    );
                }
            }
        }
    }

    #[test]
    fn rank_one_cut_frozen_values() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        let decomp = rank_one_factors(decomp, &t).unwrap();
        let x = [1.0, 0.0];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let cut = cut_persp_ro(&inst, &decomp, &x, &sol, &t).unwrap();
        assert!((cut.t[0] + 0.25).abs() < 1e-12);
        assert!((cut.t[1] + 0.5).abs() < 1e-12, "t1 {}", cut.t[1]);
        assert!((cut.offset + 0.25).abs() < 1e-12);
        // Strictly stronger than the plain cut at the strengthened entry.
        let plain = cut_persp(&inst, &decomp, &x, &sol);
        assert!(cut.t[1] > plain.t[1] + 0.4);
        // Still an underestimator on the binary points.
        for x in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            assert!(cut.value_at(&x) <= fbar_pair(&x) + 1e-12, "x {x:?}");
        }
    }

    #[test]
    fn rank_one_cut_rejects_fractional_points() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        let decomp = rank_one_factors(decomp, &t).unwrap();
        let x = [0.5, 0.5];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        match cut_persp_ro(&inst, &decomp, &x, &sol, &t) {
            Err(CutError::FractionalInput { index: 0, .. }) => {}
            other => panic!("expected FractionalInput, got {other:?}"),
        }
    }

    #[test]
    fn rank_one_cut_needs_factors() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        let x = [1.0, 0.0];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        assert!(matches!(
            cut_persp_ro(&inst, &decomp, &x, &sol, &t),
            Err(CutError::MissingRankOneFactors)
        ));
    }

    #[test]
    fn bc_cut_frozen_values_and_equivalence() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        let decomp = low_rank_factor(decomp, &inst.g, &t).unwrap();
        let lr = decomp.low_rank.as_ref().unwrap();
        assert!((lr.beta[0] - 1.0).abs() < 1e-12 && (lr.beta[1] - 1.0).abs() < 1e-12);
        assert!(lr.g_tilde.iter().all(|v| v.abs() < 1e-12));

        let x = [1.0, 0.0];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let bc = cut_bc(&inst, &decomp, &x, &sol).unwrap();
        assert!((bc.t[1] + 1.0).abs() < 1e-12, "t1 {}", bc.t[1]);
        let persp = cut_persp(&inst, &decomp, &x, &sol);
        for i in 0..2 {
            assert!((bc.t[i] - persp.t[i]).abs() < 1e-12);
        }
        assert!((bc.offset - persp.offset).abs() < 1e-12);

        // Fractional points agree as well.
        let x = [0.5, 0.25];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let bc = cut_bc(&inst, &decomp, &x, &sol).unwrap();
        let persp = cut_persp(&inst, &decomp, &x, &sol);
        for i in 0..2 {
            assert!((bc.t[i] - persp.t[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn bc_cut_rejects_nonuniform_delta() {
        let (inst, _) = unconstrained_pair();
        let t = tols();
        let decomp = Decomposition::from_parts(
            vec![1.0, 1.5],
            DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.5]),
            DeltaStrategy::DiagDominance,
        );
        let x = [1.0, 0.0];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        assert!(matches!(cut_bc(&inst, &decomp, &x, &sol), Err(CutError::NonUniformDelta)));
    }

    /// Constrained instance: the generators must price the active rows.
    #[test]
    fn portfolio_cut_is_tight_and_valid() {
        let inst = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 3 }).unwrap();
        let t = tols();
        let decomp = Decomposition::auto(&inst.q, &t).unwrap();

        // Find a feasible binary support of size 3 by trying triples.
        let mut gen_x = None;
        'outer: for i in 0..6 {
            for j in (i + 1)..6 {
                for l in (j + 1)..6 {
                    let mut x = vec![0.0; 6];
                    x[i] = 1.0;
                    x[j] = 1.0;
                    x[l] = 1.0;
                    if solve_reduced(&inst, &decomp, &x, None, &t).is_ok() {
                        gen_x = Some(x);
                        break 'outer;
                    }
                }
            }
        }
        let gen_x = gen_x.expect("some triple must be feasible");
        let sol = solve_reduced(&inst, &decomp, &gen_x, None, &t).unwrap();
        assert!(sol.duals.iter().any(|&v| v > 0.0), "budget rows must bind");
        // Rows of variables off the support carry zero duals.
        for (i, &xi) in gen_x.iter().enumerate() {
            if xi == 0.0 {
                assert_eq!(sol.duals[inst.m1() + 2 * i], 0.0);
                assert_eq!(sol.duals[inst.m1() + 2 * i + 1], 0.0);
            }
        }
        let cut = cut_persp(&inst, &decomp, &gen_x, &sol);
        assert!((cut.value_at(&gen_x) - sol.marginal).abs() < 1e-9 * sol.marginal.abs().max(1.0));

        // Underestimates the marginal on every feasible binary point.
        for mask in 0u32..64 {
            let x: Vec<f64> = (0..6).map(|i| ((mask >> i) & 1) as f64).collect();
            if x.iter().sum::<f64>() > 3.0 {
                continue;
            }
            match solve_reduced(&inst, &decomp, &x, None, &t) {
                Ok(other) => {
                    let slack = other.marginal - cut.value_at(&x);
                    assert!(slack > -1e-7, "mask {mask:#b}: cut above fbar by {}", -slack);
                }
                Err(CutError::InfeasiblePoint { .. }) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn rank_one_dominates_on_portfolio() {
        let inst = generate_portfolio(&PortfolioSpec { n: 8, k: Some(4), seed: 5 }).unwrap();
        let t = tols();
        let decomp = Decomposition::auto(&inst.q, &t).unwrap();
        let decomp = rank_one_factors(decomp, &t).unwrap();

        for mask in [0b1111u32, 0b11101, 0b101011] {
            let x: Vec<f64> = (0..8).map(|i| ((mask >> i) & 1) as f64).collect();
            if x.iter().sum::<f64>() > 4.0 {
                continue;
            }
            let sol = match solve_reduced(&inst, &decomp, &x, None, &t) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let plain = cut_persp(&inst, &decomp, &x, &sol);
            let strong = cut_persp_ro(&inst, &decomp, &x, &sol, &t).unwrap();
            // On the support both routes read the same dual data; the
            // strengthening only lifts the off-support side, and there the
            // guarantee is on the sum, not per coordinate.
            let mut sum_plain = 0.0;
            let mut sum_strong = 0.0;
            for i in 0..8 {
                if x[i] == 1.0 {
                    assert!(
                        (strong.t[i] - plain.t[i]).abs() <= 1e-9 * plain.t[i].abs().max(1.0),
                        "mask {mask:#b} i {i}: {} != {}",
                        strong.t[i],
                        plain.t[i]
                    );
                } else {
                    sum_plain += plain.t[i];
                    sum_strong += strong.t[i];
                }
            }
            assert!(
                sum_strong >= sum_plain - 1e-8,
                "mask {mask:#b}: off-support sum {} < {}",
                sum_strong,
                sum_plain
            );
            assert!((strong.marginal_value - plain.marginal_value).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_support_reports_infeasible_row() {
        let inst = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 3 }).unwrap();
        let t = tols();
        let decomp = Decomposition::auto(&inst.q, &t).unwrap();
        // x = 0 cannot satisfy the fully-invested budget.
        match solve_reduced(&inst, &decomp, &vec![0.0; 6], None, &t) {
            Err(CutError::InfeasiblePoint { .. }) => {}
            other => panic!("expected InfeasiblePoint, got {other:?}"),
        }
    }

    #[test]
    fn dedup_key_tracks_source_and_point() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        let x = [1.0, 0.0];
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let a = cut_persp(&inst, &decomp, &x, &sol);
        let b = cut_persp(&inst, &decomp, &x, &sol);
        assert_eq!(a.dedup_key(), b.dedup_key());
        let y = [0.0, 1.0];
        let soly = solve_reduced(&inst, &decomp, &y, None, &t).unwrap();
        let c = cut_persp(&inst, &decomp, &y, &soly);
        assert_ne!(a.dedup_key(), c.dedup_key());
    }
}
