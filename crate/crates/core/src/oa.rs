//! Outer approximation: solve the mixed-integer QP as `min fbar(x)` over
//! the binary feasible set by accumulating affine underestimators of the
//! marginal objective in the master LP.
//!
//! Two search modes share all the cut machinery:
//!
//! * single tree: one branch-and-bound run over the master; every integral
//!   node asks the cut generator for a violated cut and re-solves in place
//!   (lazy cuts), and every evaluated point is injected as an incumbent;
//! * multi tree: repeatedly solve the current master to MILP optimality,
//!   evaluate the marginal at its argmin, add one cut there, and stop as
//!   soon as the master value catches up with the best evaluation.
//!
//! Before the search the root bound is refined: by default a rounds-capped
//! fractional cutting loop at the LP optimum, optionally a convex QP
//! relaxation or a caller-supplied value. The master keeps the root cuts.
//!
//! Cut generation is deduplicated on (generator, bit pattern of the
//! generating point): a repeated point reuses the recorded marginal value
//! and never produces a second row.

use crate::cuts::{
    cut_bc, cut_persp, cut_persp_ro, solve_reduced, Cut, CutError, CutSource,
};
use crate::decompose::{
    low_rank_factor, rank_one_factors, DecomposeError, Decomposition, DeltaStrategy,
};
use crate::instances::{InstanceError, MiqpInstance};
use crate::linalg::{cholesky_psd, LinalgError};
use crate::master::{
    branch_and_bound, BnbConfig, BnbStatus, Incumbent, IntegralOutcome, MasterError,
    MasterProblem, NodeRecord,
};
use crate::cuts::ReducedSolution;
use crate::qp::{solve_qp, QpError, QpProblem};
use crate::simplex::LpStatus;
use crate::tol::Tolerances;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OaError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("relaxation failed: {0}")]
    Relaxation(#[from] QpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    SingleTree,
    MultiTree,
}

impl SearchMode {
    pub fn label(self) -> &'static str {
        match self {
            SearchMode::SingleTree => "single-tree",
            SearchMode::MultiTree => "multi-tree",
        }
    }
}

/// How the initial finite lower bound on `eta` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootBound {
    /// Fractional cutting loop at the LP optimum (default).
    Kelley,
    /// Convex QP relaxation with a small ridge on the selection block.
    /// Exact up to the ridge correction, but dense; meant for small `n`.
    QpRelax,
    /// Caller-supplied lower bound on the optimal value.
    Explicit(f64),
}

#[derive(Debug, Clone)]
pub struct OaConfig {
    pub method: CutSource,
    pub mode: SearchMode,
    pub root_bound: RootBound,
    /// Relative optimality gap at which the search may stop.
    pub gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub collect_node_log: bool,
    pub tol: Tolerances,
}

impl Default for OaConfig {
    fn default() -> Self {
        let tol = Tolerances::from_env();
        OaConfig {
            method: CutSource::Persp,
            mode: SearchMode::SingleTree,
            root_bound: RootBound::Kelley,
            gap: tol.gap,
            time_limit: None,
            node_limit: None,
            collect_node_log: false,
            tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug)]
pub struct OaResult {
    pub status: SolveStatus,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    /// Marginal value at `x`; the true objective of the returned point.
    pub objective: Option<f64>,
    pub lower_bound: f64,
    /// `(objective - lower_bound) / max(1, |objective|)` when both exist.
    pub gap: Option<f64>,
    pub nodes: usize,
    /// Rows in the master at the end, root refinement included.
    pub cuts: usize,
    /// Cut generator invocations after the root stage; in multi-tree mode
    /// this equals the number of master re-solves that added a cut.
    pub iterations: usize,
    /// Lower bound provided by the root stage.
    pub root_bound: f64,
    pub wall_time: Duration,
    pub node_log: Vec<NodeRecord>,
}

impl OaResult {
    fn relative_gap(ub: f64, lb: f64) -> f64 {
        ((ub - lb) / ub.abs().max(1.0)).max(0.0)
    }
}

/// `min_y y'Qy + g'y` over all of `R^n`, plus the worst case of `h'x`:
/// a finite lower bound on the optimum that needs no relaxation solve.
pub fn crude_lower_bound(inst: &MiqpInstance, tol: &Tolerances) -> Result<f64, OaError> {
    let f = cholesky_psd(&inst.q, tol.factor)?;
    let z = f.solve(&inst.g)?;
    let quad = -0.25 * crate::linalg::dot(&inst.g, &z);
    let hx: f64 = inst.h.iter().map(|&v| v.min(0.0)).sum();
    Ok(quad + hx)
}

/// Lower bound from the continuous relaxation `min y'Qy + g'y + h'x` over
/// the master polytope, made strictly convex by a ridge `eps * |x|^2` and
/// corrected by `-eps * n` so the value stays a valid bound.
pub fn qp_relax_bound(inst: &MiqpInstance, tol: &Tolerances) -> Result<f64, OaError> {
    let n = inst.n;
    let m1 = inst.m1();
    let m2 = inst.m2();
    let ridge = 1e-8 * inst.q.max_abs().max(1.0);

    let nv = 2 * n;
    let mut h = crate::linalg::DenseMatrix::zeros(nv, nv);
    for i in 0..n {
        h[(i, i)] = ridge;
        for j in 0..n {
            h[(n + i, n + j)] = inst.q[(i, j)];
        }
    }
    let mut c = vec![0.0; nv];
    c[..n].copy_from_slice(&inst.h);
    c[n..].copy_from_slice(&inst.g);

    let extra = if inst.k.is_some() { 1 } else { 0 };
    let rows = m1 + m2 + extra + 2 * n;
    let mut g = crate::linalg::DenseMatrix::zeros(rows, nv);
    let mut rhs = vec![0.0; rows];
    for r in 0..m1 {
        for (j, &v) in inst.a.row(r).iter().enumerate() {
            g[(r, n + j)] = v;
        }
        rhs[r] = inst.b[r];
    }
    for r in 0..m2 {
        for (j, &v) in inst.c.row(r).iter().enumerate() {
            g[(m1 + r, n + j)] = v;
        }
        for (j, &v) in inst.d.row(r).iter().enumerate() {
            g[(m1 + r, j)] = -v;
        }
    }
    let mut at = m1 + m2;
    if let Some(k) = inst.k {
        for j in 0..n {
            g[(at, j)] = 1.0;
        }
        rhs[at] = k as f64;
        at += 1;
    }
    for j in 0..n {
        g[(at + j, j)] = 1.0;
        rhs[at + j] = 1.0;
        g[(at + n + j, j)] = -1.0;
    }

    let p = QpProblem { h, c, g, rhs };
    let sol = solve_qp(&p, None, tol)?;
    Ok(sol.objective - ridge * n as f64)
}

/// Rounds cap for the root cutting loop. Purging keeps every round cheap
/// and rounds-to-converge grows with `n`, so the cap scales too; it only
/// guards against stalls, the violation test is the real stop.
fn kelley_round_cap(n: usize) -> usize {
    (40 * n).max(600)
}

/// Cut rows the tree search tolerates before purging back to half.
fn cut_row_cap(n: usize) -> usize {
    (3 * n).max(60)
}

/// Fractional cutting loop at the LP optimum; returns the refined bound
/// and the number of cut rounds. Slack rows are purged along the way, so
/// the loop can afford many rounds; every round's LP value is a valid
/// bound and the best one is returned.
fn kelley_root(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    master: &mut MasterProblem,
    deadline: Option<Instant>,
    tol: &Tolerances,
) -> Result<(f64, usize), OaError> {
    let n = inst.n;
    let mut bound = f64::NEG_INFINITY;
    let mut cuts = 0usize;
    let mut warm_basis: Option<Vec<usize>> = None;
    let mut warm_active: Option<Vec<usize>> = None;

    // Seed with the uniform point spread over the budget; skipped when no
    // feasible inner point exists there.
    let keff = inst.k.unwrap_or(n).min(n);
    let seed = vec![keff as f64 / n as f64; n];
    if let Ok(sol) = solve_reduced(inst, decomp, &seed, None, tol) {
        master.append_cut(&cut_persp(inst, decomp, &seed, &sol), &sol.y);
        warm_active = Some(sol.active_set);
        cuts += 1;
    }

    for _ in 0..kelley_round_cap(n) {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let lp = master.solve(&[], warm_basis.as_deref(), tol);
        match lp.status {
            LpStatus::Optimal => {}
            _ => break,
        }
        bound = bound.max(lp.objective);
        warm_basis = Some(lp.basis.clone());
        let (x, _, eta) = master.split(&lp);
        let (xs, sol) = match separation_solve(inst, decomp, &mut warm_active, &x, tol)? {
            Some(hit) => hit,
            None => break,
        };
        let cut = cut_persp(inst, decomp, &xs, &sol);
        let violation = cut.value_at(&x) - eta;
        if violation <= tol.kelley_violation * sol.marginal.abs().max(1.0) {
            break;
        }
        master.append_cut(&cut, &sol.y);
        cuts += 1;
        if master.num_cuts() > cut_row_cap(n) && master.purge_stale_cuts(cut_row_cap(n) / 2) > 0 {
            warm_basis = None;
        }
    }
    Ok((bound, cuts))
}

fn make_cut(
    method: CutSource,
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    sol: &ReducedSolution,
    tol: &Tolerances,
) -> Result<Cut, CutError> {
    match method {
        CutSource::Persp => Ok(cut_persp(inst, decomp, x, sol)),
        CutSource::PerspRo => cut_persp_ro(inst, decomp, x, sol, tol),
        CutSource::Bc => cut_bc(inst, decomp, x, sol),
    }
}

/// Coordinates below this are dropped from the support before a
/// separation solve: `1/x` terms at barely-positive coordinates wreck the
/// reduced problem's conditioning, and the cut from the snapped point is
/// just as valid.
const SEPARATION_SUPPORT: f64 = 1e-6;

fn snap_below(x: &[f64], threshold: f64) -> Vec<f64> {
    x.iter().map(|&v| if v < threshold { 0.0 } else { v }).collect()
}

/// Evaluate `fbar` for separation at `x`, zeroing tiny coordinates first.
/// A solve that still fails numerically retries from a coarser support
/// (the cut from any generating point is valid); `None` means even that
/// failed and the caller should separate elsewhere.
fn separation_solve(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    warm: &mut Option<Vec<usize>>,
    x: &[f64],
    tol: &Tolerances,
) -> Result<Option<(Vec<f64>, ReducedSolution)>, CutError> {
    for snap in [SEPARATION_SUPPORT, 1e-3] {
        let xs = snap_below(x, snap);
        match solve_reduced(inst, decomp, &xs, warm.as_deref(), tol) {
            Ok(s) => {
                *warm = Some(s.active_set.clone());
                return Ok(Some((xs, s)));
            }
            Err(CutError::InfeasiblePoint { .. }) | Err(CutError::Qp(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Separation at fractional node optima. Only the perspective generator
/// supports fractional points, and its cuts are valid for any splitting,
/// so every method shares it. Points where the separation solve fails
/// numerically are skipped rather than fatal; branching covers for them.
fn fractional_cut(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    warm: &mut Option<Vec<usize>>,
    x: &[f64],
    eta: f64,
    tol: &Tolerances,
) -> Result<Option<Cut>, CutError> {
    let (xs, sol) = match separation_solve(inst, decomp, warm, x, tol)? {
        Some(hit) => hit,
        None => return Ok(None),
    };
    let cut = cut_persp(inst, decomp, &xs, &sol);
    let violated = cut.value_at(x) - eta > tol.kelley_violation * sol.marginal.abs().max(1.0);
    Ok(violated.then_some(cut))
}

/// Fractional separation rounds per tree node. Appending a row forces a
/// refactorization, so in-tree fractional cuts are rationed; the root
/// round is where fractional separation earns its keep.
const FRAC_CUT_ROUNDS: usize = 2;

/// Round the root LP optimum onto nearby binary supports and evaluate
/// them: a cheap feasible point lets the tree prune from its first node.
/// Each evaluated point also leaves its cut in the master (pinned when
/// `pin`), anchoring the model at the incumbent.
fn rounding_incumbent(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    master: &mut MasterProblem,
    method: CutSource,
    pin: bool,
    tol: &Tolerances,
) -> Result<Option<Incumbent>, OaError> {
    let lp = master.solve(&[], None, tol);
    if lp.status != LpStatus::Optimal {
        return Ok(None);
    }
    let (x, _, _) = master.split(&lp);
    let mut order: Vec<usize> = (0..inst.n).collect();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap().then(a.cmp(&b)));
    let keff = inst.k.unwrap_or(inst.n).min(inst.n);

    let mut warm: Option<Vec<usize>> = None;
    let mut best: Option<Incumbent> = None;
    for shift in 0..4usize {
        if shift + keff > inst.n {
            break;
        }
        let mut xb = vec![0.0; inst.n];
        for &j in &order[shift..shift + keff] {
            xb[j] = 1.0;
        }
        let sol = match solve_reduced(inst, decomp, &xb, warm.as_deref(), tol) {
            Ok(s) => s,
            Err(CutError::InfeasiblePoint { .. }) | Err(CutError::Qp(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        warm = Some(sol.active_set.clone());
        if master.cached(method, &xb).is_none() {
            if let Ok(cut) = make_cut(method, inst, decomp, &xb, &sol, tol) {
                let row = master.append_cut(&cut, &sol.y);
                if pin {
                    master.pin_cut(row);
                }
            }
        }
        if best.as_ref().map_or(true, |b| sol.marginal < b.value) {
            best = Some(Incumbent { x: xb, y: sol.y, value: sol.marginal });
        }
    }
    Ok(best)
}

/// Build the decomposition a cut method needs.
pub fn decomposition_for(
    method: CutSource,
    inst: &MiqpInstance,
    tol: &Tolerances,
) -> Result<Decomposition, OaError> {
    match method {
        CutSource::Persp => Ok(Decomposition::auto(&inst.q, tol)?),
        CutSource::PerspRo => {
            let d = Decomposition::auto(&inst.q, tol)?;
            Ok(rank_one_factors(d, tol)?)
        }
        CutSource::Bc => {
            let d = crate::decompose::extract_diagonal(
                &inst.q,
                DeltaStrategy::UniformMinEig,
                None,
                tol,
            )?;
            Ok(low_rank_factor(d, &inst.g, tol)?)
        }
    }
}

pub fn solve(inst: &MiqpInstance, cfg: &OaConfig) -> Result<OaResult, OaError> {
    let start = Instant::now();
    inst.validate()?;
    let tol = &cfg.tol;
    let decomp = decomposition_for(cfg.method, inst, tol)?;
    let deadline = cfg.time_limit.map(|d| start + d);

    let eta_lb = match cfg.root_bound {
        RootBound::Explicit(v) => {
            assert!(v.is_finite(), "explicit root bound must be finite");
            v
        }
        _ => crude_lower_bound(inst, tol)?,
    };
    let mut master = MasterProblem::new(inst, eta_lb);

    let mut root_bound = eta_lb;
    match cfg.root_bound {
        RootBound::Kelley => {
            let (b, _) = kelley_root(inst, &decomp, &mut master, deadline, tol)?;
            root_bound = root_bound.max(b);
        }
        RootBound::QpRelax => {
            // The ridge relaxation can only tighten the crude bound; keep
            // the better of the two. The master keeps eta_lb: a valid
            // bound on the optimum bounds eta from below as well.
            root_bound = root_bound.max(qp_relax_bound(inst, tol)?);
        }
        RootBound::Explicit(_) => {}
    }

    // Root refinement rows that went slack are dead weight for the tree
    // search; drop them before the first node.
    master.purge_stale_cuts(cut_row_cap(inst.n) / 2);

    let remaining = || deadline.map(|d| d.saturating_duration_since(Instant::now()));

    match cfg.mode {
        SearchMode::SingleTree => {
            let mut warm_active: Option<Vec<usize>> = None;
            let mut warm_frac: Option<Vec<usize>> = None;
            let mut iterations = 0usize;
            let incumbent =
                rounding_incumbent(inst, &decomp, &mut master, cfg.method, false, tol)?;
            let bnb_cfg = BnbConfig {
                gap_tol: cfg.gap,
                time_limit: remaining(),
                node_limit: cfg.node_limit,
                max_cut_rows: Some(cut_row_cap(inst.n)),
                dedup_source: Some(cfg.method),
                frac_cut_rounds: FRAC_CUT_ROUNDS,
                initial_incumbent: incumbent,
                collect_node_log: cfg.collect_node_log,
            };
            let threshold = |marginal: f64| tol.cut_violation * marginal.abs().max(1.0);
            let r = branch_and_bound(
                &mut master,
                &bnb_cfg,
                tol,
                |x, _y, eta| {
                    let sol = match solve_reduced(inst, &decomp, x, warm_active.as_deref(), tol) {
                        Ok(s) => s,
                        Err(CutError::InfeasiblePoint { .. }) => {
                            // Tolerance disagreement between LP and QP; close
                            // the node on its LP bound rather than aborting.
                            return Ok(IntegralOutcome {
                                marginal: f64::INFINITY,
                                y: Vec::new(),
                                cut: None,
                            });
                        }
                        Err(e) => return Err(e),
                    };
                    warm_active = Some(sol.active_set.clone());
                    let cut = make_cut(cfg.method, inst, &decomp, x, &sol, tol)?;
                    iterations += 1;
                    let violated = cut.violation(x, eta) > threshold(sol.marginal);
                    Ok(IntegralOutcome {
                        marginal: sol.marginal,
                        y: sol.y,
                        cut: violated.then_some(cut),
                    })
                },
                |x, eta| fractional_cut(inst, &decomp, &mut warm_frac, x, eta, tol),
            )?;

            let status = match r.status {
                BnbStatus::Optimal => SolveStatus::Optimal,
                BnbStatus::TimeLimit => SolveStatus::TimeLimit,
                BnbStatus::Infeasible => SolveStatus::Infeasible,
            };
            let (x, y, objective) = match r.incumbent {
                Some(inc) => (Some(inc.x), Some(inc.y), Some(inc.value)),
                None => (None, None, None),
            };
            let lower_bound = r.lower_bound.max(root_bound).min(objective.unwrap_or(f64::INFINITY));
            let gap = objective.map(|ub| OaResult::relative_gap(ub, lower_bound));
            Ok(OaResult {
                status,
                x,
                y,
                objective,
                lower_bound,
                gap,
                nodes: r.nodes,
                cuts: master.num_cuts(),
                iterations,
                root_bound,
                wall_time: start.elapsed(),
                node_log: r.node_log,
            })
        }
        SearchMode::MultiTree => {
            let mut warm_active: Option<Vec<usize>> = None;
            let mut warm_frac: Option<Vec<usize>> = None;
            let mut nodes = 0usize;
            let mut iterations = 0usize;
            let mut node_log = Vec::new();
            let mut best: Option<(Vec<f64>, Vec<f64>, f64)> =
                rounding_incumbent(inst, &decomp, &mut master, cfg.method, true, tol)?
                    .map(|inc| (inc.x, inc.y, inc.value));
            let mut lb = root_bound;
            let mut status = SolveStatus::Optimal;

            loop {
                // The iteration bound against revisits needs the cuts made
                // at binary points to stay in the master; those are pinned
                // (the heuristic ones above included), so the row cap only
                // evicts fractional-point rows.
                let bnb_cfg = BnbConfig {
                    gap_tol: 0.0,
                    time_limit: remaining(),
                    node_limit: cfg.node_limit,
                    max_cut_rows: Some(cut_row_cap(inst.n)),
                    frac_cut_rounds: FRAC_CUT_ROUNDS,
                    dedup_source: None,
                    initial_incumbent: None,
                    collect_node_log: cfg.collect_node_log,
                };
                let r = branch_and_bound(
                    &mut master,
                    &bnb_cfg,
                    tol,
                    |_x, y, eta| Ok(IntegralOutcome { marginal: eta, y: y.to_vec(), cut: None }),
                    |x, eta| fractional_cut(inst, &decomp, &mut warm_frac, x, eta, tol),
                )?;
                nodes += r.nodes;
                node_log.extend(r.node_log);
                match r.status {
                    BnbStatus::Infeasible => {
                        return Ok(OaResult {
                            status: SolveStatus::Infeasible,
                            x: None,
                            y: None,
                            objective: None,
                            lower_bound: f64::INFINITY,
                            gap: None,
                            nodes,
                            cuts: master.num_cuts(),
                            iterations,
                            root_bound,
                            wall_time: start.elapsed(),
                            node_log,
                        });
                    }
                    BnbStatus::TimeLimit => {
                        status = SolveStatus::TimeLimit;
                        lb = lb.max(r.lower_bound);
                        break;
                    }
                    BnbStatus::Optimal => {}
                }
                let inc = r.incumbent.expect("optimal tree carries an incumbent");
                lb = lb.max(r.lower_bound);
                let xt = inc.x;

                // Marginal at the master argmin; cached points skip the QP.
                let (marginal, y) = match master.cached(cfg.method, &xt) {
                    Some(hit) => hit,
                    None => {
                        let sol = solve_reduced(inst, &decomp, &xt, warm_active.as_deref(), tol)?;
                        warm_active = Some(sol.active_set.clone());
                        (sol.marginal, sol.y)
                    }
                };
                if best.as_ref().map_or(true, |(_, _, v)| marginal < *v) {
                    best = Some((xt.clone(), y, marginal));
                }
                let ub = best.as_ref().map(|(_, _, v)| *v).unwrap();
                let slack =
                    (tol.cut_violation.max(cfg.gap)) * ub.abs().max(1.0);
                if ub - lb <= slack {
                    break;
                }
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    status = SolveStatus::TimeLimit;
                    break;
                }

                let sol = solve_reduced(inst, &decomp, &xt, warm_active.as_deref(), tol)?;
                let cut = make_cut(cfg.method, inst, &decomp, &xt, &sol, tol)?;
                let row = master.append_cut(&cut, &sol.y);
                master.pin_cut(row);
                iterations += 1;
            }

            let (x, y, objective) = match best {
                Some((x, y, v)) => (Some(x), Some(y), Some(v)),
                None => (None, None, None),
            };
            let gap = objective.map(|ub| OaResult::relative_gap(ub, lb));
            Ok(OaResult {
                status,
                x,
                y,
                objective,
                lower_bound: lb,
                gap,
                nodes,
                cuts: master.num_cuts(),
                iterations,
                root_bound,
                wall_time: start.elapsed(),
                node_log,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate_portfolio, PortfolioSpec};
    use crate::linalg::DenseMatrix;
    use crate::oracle::brute_force;

    fn pair() -> MiqpInstance {
        MiqpInstance {
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
        }
    }

    #[test]
    fn pair_solves_to_its_known_optimum() {
        let inst = pair();
        let cfg = OaConfig::default();
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.x.as_deref(), Some(&[1.0, 1.0][..]));
        let obj = r.objective.unwrap();
        assert!((obj + 1.0).abs() < 1e-9, "objective {obj}");
        assert!(r.gap.unwrap() <= cfg.gap + 1e-12);
        // The crude root bound is already exact for this instance.
        assert!((crude_lower_bound(&inst, &cfg.tol).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_is_the_marginal_at_the_argmin() {
        let inst = generate_portfolio(&PortfolioSpec { n: 8, k: Some(3), seed: 9 }).unwrap();
        let cfg = OaConfig::default();
        let r = solve(&inst, &cfg).unwrap();
        let x = r.x.unwrap();
        let decomp = decomposition_for(cfg.method, &inst, &cfg.tol).unwrap();
        let check = crate::cuts::marginal_value(&inst, &decomp, &x, &cfg.tol).unwrap();
        let obj = r.objective.unwrap();
        assert!((obj - check).abs() <= 1e-9 * obj.abs().max(1.0));
    }

    #[test]
    fn matches_enumeration_on_portfolio() {
        let inst = generate_portfolio(&PortfolioSpec { n: 8, k: Some(3), seed: 9 }).unwrap();
        let cfg = OaConfig { gap: 1e-9, ..OaConfig::default() };
        let truth = {
            let decomp = decomposition_for(CutSource::Persp, &inst, &cfg.tol).unwrap();
            brute_force(&inst, &decomp, &cfg.tol).unwrap().optimum.unwrap()
        };
        let r = solve(&inst, &cfg).unwrap();
        let obj = r.objective.unwrap();
        assert!(
            (obj - truth).abs() <= 1e-6 * truth.abs().max(1.0),
            "oa {obj} vs enumeration {truth}"
        );
        assert!(r.lower_bound <= obj + 1e-9);
    }

    #[test]
    fn all_methods_and_modes_agree() {
        let inst = generate_portfolio(&PortfolioSpec { n: 7, k: Some(3), seed: 4 }).unwrap();
        let mut values = Vec::new();
        for method in [CutSource::Persp, CutSource::PerspRo, CutSource::Bc] {
            for mode in [SearchMode::SingleTree, SearchMode::MultiTree] {
                let cfg = OaConfig { method, mode, gap: 1e-9, ..OaConfig::default() };
                let r = solve(&inst, &cfg).unwrap();
                assert_eq!(r.status, SolveStatus::Optimal, "{method:?} {mode:?}");
                values.push(r.objective.unwrap());
            }
        }
        for v in &values[1..] {
            assert!(
                (v - values[0]).abs() <= 1e-6 * values[0].abs().max(1.0),
                "values {values:?}"
            );
        }
    }

    #[test]
    fn multi_tree_counts_cut_rounds() {
        let inst = generate_portfolio(&PortfolioSpec { n: 8, k: Some(3), seed: 9 }).unwrap();
        let cfg = OaConfig {
            mode: SearchMode::MultiTree,
            gap: 0.0,
            ..OaConfig::default()
        };
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let decomp = decomposition_for(CutSource::Persp, &inst, &cfg.tol).unwrap();
        let feasible = brute_force(&inst, &decomp, &cfg.tol).unwrap().feasible_count;
        assert!(
            r.iterations <= feasible,
            "iterations {} vs feasible points {feasible}",
            r.iterations
        );
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let mut inst = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 3 }).unwrap();
        inst.k = Some(2);
        for mode in [SearchMode::SingleTree, SearchMode::MultiTree] {
            let cfg = OaConfig { mode, ..OaConfig::default() };
            let r = solve(&inst, &cfg).unwrap();
            assert_eq!(r.status, SolveStatus::Infeasible);
            assert!(r.x.is_none());
        }
    }

    #[test]
    fn zero_time_limit_reports_time_limit() {
        let inst = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 3 }).unwrap();
        let cfg = OaConfig { time_limit: Some(Duration::ZERO), ..OaConfig::default() };
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::TimeLimit);
    }

    #[test]
    fn root_bounds_are_ordered() {
        let inst = generate_portfolio(&PortfolioSpec { n: 7, k: Some(3), seed: 4 }).unwrap();
        let tol = Tolerances::default();
        let crude = crude_lower_bound(&inst, &tol).unwrap();
        let relax = qp_relax_bound(&inst, &tol).unwrap();
        let cfg = OaConfig { gap: 1e-9, ..OaConfig::default() };
        let r = solve(&inst, &cfg).unwrap();
        let opt = r.objective.unwrap();
        assert!(crude <= opt + 1e-9);
        assert!(relax <= opt + 1e-9);
        assert!(relax >= crude - 1e-9, "ridge relaxation can only tighten");
        assert!(r.root_bound <= opt + 1e-9);
        assert!(r.root_bound >= crude - 1e-9);
    }

    #[test]
    fn explicit_root_bound_is_honoured() {
        let inst = pair();
        let cfg = OaConfig {
            root_bound: RootBound::Explicit(-3.0),
            ..OaConfig::default()
        };
        let r = solve(&inst, &cfg).unwrap();
        assert!((r.objective.unwrap() + 1.0).abs() < 1e-9);
        assert!((r.root_bound + 3.0).abs() < 1e-12);
    }
}
