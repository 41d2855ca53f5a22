//! Self-verification: nine checks that pin the solver to independent
//! ground truth. The acceptance test target runs them at [`Level::Full`];
//! the command line `verify` subcommand can run either level.
//!
//! Each criterion returns a [`CriterionReport`] with its worst observed
//! measure, so a failure states how far off the solver is, not just that
//! it is off.

use crate::cuts::{
    cut_bc, cut_persp, cut_persp_ro, solve_reduced, CutSource,
};
use crate::decompose::{
    extract_diagonal, low_rank_factor, rank_one_factors, Decomposition, DeltaStrategy,
};
use crate::instances::{generate_portfolio, MiqpInstance, PortfolioSpec};
use crate::linalg::{dot, min_eigenvalue_bound, DenseMatrix};
use crate::oa::{decomposition_for, solve, OaConfig, SearchMode, SolveStatus};
use crate::oracle::{audit_cut, brute_force, fd_subgradient, mask_to_x, OracleError};
use crate::qp::{kkt_point, kkt_residual, problem_scale, solve_qp, QpProblem};
use crate::tol::Tolerances;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

/// `Quick` shrinks instance sizes and counts so the whole suite answers in
/// seconds; `Full` runs the sizes the tolerances are stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub name: &'static str,
    pub passed: bool,
    /// Criterion-specific worst measure (a violation, ratio, or error).
    pub worst: f64,
    pub details: String,
}

pub fn render_line(r: &CriterionReport) -> String {
    format!(
        "{} {:<32} worst {:>12.3e}  {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.worst,
        r.details
    )
}

pub fn all(level: Level) -> Vec<CriterionReport> {
    vec![
        optimum_matches_enumeration(level),
        cuts_never_overestimate(level),
        bc_equals_persp(level),
        rank_one_dominates(level),
        gradient_matches_cuts(level),
        multi_tree_iteration_bound(level),
        scaling_and_time_budget(level),
        qp_matches_enumeration(level),
        decomposition_invariants(level),
    ]
}

fn guard(
    name: &'static str,
    f: impl FnOnce() -> Result<CriterionReport, String>,
) -> CriterionReport {
    f().unwrap_or_else(|e| CriterionReport {
        name,
        passed: false,
        worst: f64::INFINITY,
        details: format!("error: {e}"),
    })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn portfolio(n: usize, k: usize, seed: u64) -> Result<MiqpInstance, String> {
    generate_portfolio(&PortfolioSpec { n, k: Some(k), seed }).map_err(err)
}

/// Feasible binary points of an enumeration, as dense vectors.
fn feasible_points(inst: &MiqpInstance, tol: &Tolerances) -> Result<Vec<(Vec<f64>, f64)>, String> {
    let decomp = Decomposition::auto(&inst.q, tol).map_err(err)?;
    let report = brute_force(inst, &decomp, tol).map_err(err)?;
    Ok(report
        .points
        .iter()
        .filter_map(|p| p.value.map(|v| (mask_to_x(p.mask, inst.n), v)))
        .collect())
}

/// Criterion 1: the outer-approximation optimum agrees with exhaustive
/// enumeration to 1e-6 relative, within a 300 second budget.
pub fn optimum_matches_enumeration(level: Level) -> CriterionReport {
    const NAME: &str = "optimum-matches-enumeration";
    guard(NAME, || {
        let cases: &[(usize, usize, u64)] = match level {
            Level::Quick => &[(8, 3, 11), (9, 3, 12)],
            Level::Full => &[(8, 3, 11), (10, 4, 12), (12, 4, 13), (10, 3, 14), (14, 4, 16)],
        };
        let start = Instant::now();
        let mut worst = 0.0_f64;
        let mut solved = 0usize;
        for &(n, k, seed) in cases {
            let inst = portfolio(n, k, seed)?;
            let tol = Tolerances::default();
            let decomp = Decomposition::auto(&inst.q, &tol).map_err(err)?;
            let truth = brute_force(&inst, &decomp, &tol)
                .map_err(err)?
                .optimum
                .ok_or_else(|| format!("{}: no feasible point", inst.name))?;
            for mode in [SearchMode::SingleTree, SearchMode::MultiTree] {
                let cfg = OaConfig { mode, gap: 1e-9, ..OaConfig::default() };
                let r = solve(&inst, &cfg).map_err(err)?;
                let obj = r
                    .objective
                    .ok_or_else(|| format!("{}: solver returned no point", inst.name))?;
                let rel = (obj - truth).abs() / truth.abs().max(1.0);
                worst = worst.max(rel);
                solved += 1;
            }
        }
        let elapsed = start.elapsed();
        let within_budget = elapsed.as_secs_f64() <= 300.0;
        Ok(CriterionReport {
            name: NAME,
            passed: worst <= 1e-6 && within_budget,
            worst,
            details: format!(
                "{} solves vs enumeration, tol 1e-6 rel, {:.1}s of 300s budget",
                solved,
                elapsed.as_secs_f64()
            ),
        })
    })
}

/// Criterion 2: every generator's cuts underestimate the marginal value on
/// all feasible binary points (audit slack at most 1e-7 relative) and are
/// tight at their generating point.
pub fn cuts_never_overestimate(level: Level) -> CriterionReport {
    const NAME: &str = "cuts-never-overestimate";
    guard(NAME, || {
        let cases: &[(usize, usize, u64)] = match level {
            Level::Quick => &[(7, 3, 21)],
            Level::Full => &[(7, 3, 21), (8, 4, 22), (9, 3, 23)],
        };
        let tol = Tolerances::default();
        let mut worst = f64::NEG_INFINITY;
        let mut audited = 0usize;
        for &(n, k, seed) in cases {
            let inst = portfolio(n, k, seed)?;
            // Marginal values at binary points do not depend on the
            // splitting, so one enumeration audits every generator.
            let enum_decomp = Decomposition::auto(&inst.q, &tol).map_err(err)?;
            let report = brute_force(&inst, &enum_decomp, &tol).map_err(err)?;
            let scale = report.optimum.map_or(1.0, |v| v.abs().max(1.0));
            for method in [CutSource::Persp, CutSource::PerspRo, CutSource::Bc] {
                let decomp = decomposition_for(method, &inst, &tol).map_err(err)?;
                for p in &report.points {
                    if p.value.is_none() {
                        continue;
                    }
                    let x = mask_to_x(p.mask, n);
                    let sol = solve_reduced(&inst, &decomp, &x, None, &tol).map_err(err)?;
                    let cut = match method {
                        CutSource::Persp => cut_persp(&inst, &decomp, &x, &sol),
                        CutSource::PerspRo => {
                            cut_persp_ro(&inst, &decomp, &x, &sol, &tol).map_err(err)?
                        }
                        CutSource::Bc => cut_bc(&inst, &decomp, &x, &sol).map_err(err)?,
                    };
                    let audit = audit_cut(&report, &cut);
                    worst = worst.max(audit.max_overestimate / scale);
                    worst = worst.max(audit.tightness_error / scale);
                    audited += 1;
                }
                // Fractional generating points for the generator that
                // supports them.
                if method == CutSource::Persp {
                    for frac in [0.4, 0.7] {
                        let x = vec![frac * k as f64 / n as f64 + 0.2; n];
                        if let Ok(sol) = solve_reduced(&inst, &decomp, &x, None, &tol) {
                            let cut = cut_persp(&inst, &decomp, &x, &sol);
                            let audit = audit_cut(&report, &cut);
                            worst = worst.max(audit.max_overestimate / scale);
                            audited += 1;
                        }
                    }
                }
            }
        }
        Ok(CriterionReport {
            name: NAME,
            passed: worst <= 1e-7,
            worst,
            details: format!("{audited} cuts audited against enumeration, tol 1e-7"),
        })
    })
}

/// Criterion 3: with a uniform diagonal split, the low-rank route and the
/// direct perspective route produce the same cut to 1e-6.
pub fn bc_equals_persp(level: Level) -> CriterionReport {
    const NAME: &str = "bc-equals-persp";
    guard(NAME, || {
        let cases: &[(usize, usize, u64)] = match level {
            Level::Quick => &[(7, 3, 31)],
            Level::Full => &[(7, 3, 31), (8, 3, 32), (9, 4, 33)],
        };
        let tol = Tolerances::default();
        let mut worst = 0.0_f64;
        let mut compared = 0usize;
        for &(n, k, seed) in cases {
            let inst = portfolio(n, k, seed)?;
            let decomp = extract_diagonal(&inst.q, DeltaStrategy::UniformMinEig, None, &tol)
                .map_err(err)?;
            let decomp = low_rank_factor(decomp, &inst.g, &tol).map_err(err)?;
            let mut points: Vec<Vec<f64>> = feasible_points(&inst, &tol)?
                .into_iter()
                .map(|(x, _)| x)
                .collect();
            // A couple of fractional points exercise the same identity.
            points.push(vec![0.5; n]);
            points.push((0..n).map(|i| 0.3 + 0.4 * ((i % 2) as f64)).collect());
            for x in points {
                let sol = match solve_reduced(&inst, &decomp, &x, None, &tol) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let a = cut_persp(&inst, &decomp, &x, &sol);
                let b = cut_bc(&inst, &decomp, &x, &sol).map_err(err)?;
                let t_scale = a.t.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                for i in 0..n {
                    worst = worst.max((a.t[i] - b.t[i]).abs() / t_scale);
                }
                worst = worst.max((a.offset - b.offset).abs() / a.offset.abs().max(1.0));
                compared += 1;
            }
        }
        Ok(CriterionReport {
            name: NAME,
            passed: worst <= 1e-6,
            worst,
            details: format!("{compared} cut pairs compared coefficientwise, tol 1e-6"),
        })
    })
}

/// Block-diagonal quadratic whose residual factors into short columns, so
/// the rank-one strengthening has room to act.
fn block_instance(n: usize, k: usize) -> MiqpInstance {
    assert!(n % 2 == 0);
    let mut q = DenseMatrix::zeros(n, n);
    for b in 0..n / 2 {
        let (i, j) = (2 * b, 2 * b + 1);
        let a = 6.0 + b as f64;
        let c = 2.0 + (b % 3) as f64;
        q[(i, i)] = a;
        q[(j, j)] = a;
        q[(i, j)] = c;
        q[(j, i)] = c;
    }
    MiqpInstance {
        name: format!("blocks-n{n}"),
        n,
        q,
        g: (0..n).map(|i| -(1.0 + 0.2 * i as f64)).collect(),
        h: vec![0.0; n],
        a: DenseMatrix::zeros(0, n),
        b: vec![],
        c: DenseMatrix::zeros(0, n),
        d: DenseMatrix::zeros(0, n),
        k: Some(k),
        seed: None,
        rng: None,
    }
}

/// Criterion 4: the rank-one strengthened cut dominates the plain cut
/// (coefficient sum within 1e-8) and both stay tight at their generating
/// point to 1e-9.
pub fn rank_one_dominates(level: Level) -> CriterionReport {
    const NAME: &str = "rank-one-dominates";
    guard(NAME, || {
        let tol = Tolerances::default();
        let mut instances: Vec<MiqpInstance> = vec![block_instance(8, 3)];
        if level == Level::Full {
            instances.push(block_instance(10, 4));
            instances.push(portfolio(8, 4, 41)?);
        }
        // Positive means the strengthened sum fell below the plain sum,
        // which the criterion forbids beyond 1e-8.
        let mut worst_gap = f64::NEG_INFINITY;
        let mut worst_tight = 0.0_f64;
        let mut strict = 0usize;
        let mut checked = 0usize;
        for inst in &instances {
            let decomp = Decomposition::auto(&inst.q, &tol).map_err(err)?;
            let decomp = rank_one_factors(decomp, &tol).map_err(err)?;
            for (x, _) in feasible_points(inst, &tol)? {
                let sol = solve_reduced(inst, &decomp, &x, None, &tol).map_err(err)?;
                let plain = cut_persp(inst, &decomp, &x, &sol);
                let strong = cut_persp_ro(inst, &decomp, &x, &sol, &tol).map_err(err)?;
                let sum_gap: f64 =
                    plain.t.iter().zip(&strong.t).map(|(p, s)| p - s).sum();
                worst_gap = worst_gap.max(sum_gap);
                if sum_gap < -1e-6 {
                    strict += 1;
                }
                let scale = sol.marginal.abs().max(1.0);
                worst_tight = worst_tight
                    .max((plain.value_at(&x) - sol.marginal).abs() / scale)
                    .max((strong.value_at(&x) - sol.marginal).abs() / scale);
                checked += 1;
            }
        }
        Ok(CriterionReport {
            name: NAME,
            passed: worst_gap <= 1e-8 && worst_tight <= 1e-9,
            worst: worst_gap.max(worst_tight),
            details: format!(
                "{checked} point pairs, {strict} strictly stronger, sum tol 1e-8, tightness {:.1e} of 1e-9",
                worst_tight
            ),
        })
    })
}

/// Criterion 5: centered finite differences of the marginal value match
/// the cut coefficients to 1e-4 at smooth fractional points.
pub fn gradient_matches_cuts(level: Level) -> CriterionReport {
    const NAME: &str = "gradient-matches-cuts";
    guard(NAME, || {
        let cases: &[(usize, usize, u64)] = match level {
            Level::Quick => &[(6, 3, 51)],
            Level::Full => &[(6, 3, 51), (8, 4, 52), (7, 3, 53)],
        };
        let tol = Tolerances::default();
        let mut worst = 0.0_f64;
        let mut probed = 0usize;
        for &(n, k, seed) in cases {
            let inst = portfolio(n, k, seed)?;
            let decomp = Decomposition::auto(&inst.q, &tol).map_err(err)?;
            let candidates: Vec<Vec<f64>> = vec![
                vec![0.5; n],
                (0..n).map(|i| 0.35 + 0.3 * ((i % 2) as f64)).collect(),
                vec![0.8; n],
            ];
            for x in candidates {
                let grad = match fd_subgradient(&inst, &decomp, &x, &tol) {
                    Ok(g) => g,
                    Err(OracleError::NonSmoothPoint { .. }) => continue,
                    Err(OracleError::Cut(_)) => continue,
                    Err(e) => return Err(err(e)),
                };
                let sol = solve_reduced(&inst, &decomp, &x, None, &tol).map_err(err)?;
                let cut = cut_persp(&inst, &decomp, &x, &sol);
                for i in 0..n {
                    worst = worst.max((grad[i] - cut.t[i]).abs());
                }
                probed += 1;
            }
        }
        if probed < 2 {
            return Err(format!("only {probed} smooth probe points; need at least 2"));
        }
        Ok(CriterionReport {
            name: NAME,
            passed: worst <= 1e-4,
            worst,
            details: format!("{probed} interior points probed, tol 1e-4"),
        })
    })
}

/// Criterion 6: multi-tree rounds that add a cut never exceed the number
/// of feasible binary points.
pub fn multi_tree_iteration_bound(level: Level) -> CriterionReport {
    const NAME: &str = "multi-tree-iteration-bound";
    guard(NAME, || {
        let cases: &[(usize, usize, u64)] = match level {
            Level::Quick => &[(8, 3, 61)],
            Level::Full => &[(8, 3, 61), (9, 3, 62), (10, 4, 63)],
        };
        let mut worst = f64::NEG_INFINITY;
        let mut detail = String::new();
        for &(n, k, seed) in cases {
            let inst = portfolio(n, k, seed)?;
            let cfg = OaConfig { mode: SearchMode::MultiTree, gap: 0.0, ..OaConfig::default() };
            let r = solve(&inst, &cfg).map_err(err)?;
            if r.status != SolveStatus::Optimal {
                return Err(format!("{}: unexpected status {:?}", inst.name, r.status));
            }
            let decomp = Decomposition::auto(&inst.q, &cfg.tol).map_err(err)?;
            let feasible = brute_force(&inst, &decomp, &cfg.tol)
                .map_err(err)?
                .feasible_count;
            worst = worst.max(r.iterations as f64 - feasible as f64);
            detail = format!("last: {} cut rounds vs {} feasible points", r.iterations, feasible);
        }
        Ok(CriterionReport {
            name: NAME,
            passed: worst <= 0.0,
            worst,
            details: detail,
        })
    })
}

fn sample_binary_points(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    tol: &Tolerances,
    count: usize,
) -> Vec<Vec<f64>> {
    let n = inst.n;
    let k = inst.k.unwrap_or(n).min(n);
    let stride = n / k + 1;
    // Spread supports over an ordering that favors feasibility: for the
    // budgeted test instances the third row of A is the negated return
    // vector, so ascending order puts high-return assets first.
    let mut order: Vec<usize> = (0..n).collect();
    if inst.m1() >= 3 {
        order.sort_by(|&i, &j| inst.a[(2, i)].total_cmp(&inst.a[(2, j)]));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut pts = Vec::new();
    'strides: for stride in 1..=stride.max(1) {
        for s in 0..n {
            if pts.len() >= count {
                break 'strides;
            }
            let mut support: Vec<usize> =
                (0..k).map(|t| order[(s + t * stride) % n]).collect();
            support.sort_unstable();
            support.dedup();
            if support.len() < k || !seen.insert(support.clone()) {
                continue;
            }
            let mut x = vec![0.0; n];
            for &i in &support {
                x[i] = 1.0;
            }
            if solve_reduced(inst, decomp, &x, None, tol).is_ok() {
                pts.push(x);
            }
        }
    }
    pts
}

/// Wall time per generated cut (reduced solve plus coefficients).
fn time_per_cut(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    pts: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<f64, String> {
    let reps = 3usize;
    let start = Instant::now();
    for _ in 0..reps {
        for x in pts {
            let sol = solve_reduced(inst, decomp, x, None, tol).map_err(err)?;
            let cut = cut_persp(inst, decomp, x, &sol);
            std::hint::black_box(&cut);
        }
    }
    Ok(start.elapsed().as_secs_f64() / (reps * pts.len()) as f64)
}

/// Criterion 7: the reference size solves inside its time budget at the
/// default gap, and doubling `n` at fixed `k` at most triples the per-cut
/// time (the kernels scale with `n`, not `n^2`).
pub fn scaling_and_time_budget(level: Level) -> CriterionReport {
    const NAME: &str = "scaling-and-time-budget";
    guard(NAME, || {
        let tol = Tolerances::default();
        let (n_solve, budget_s, n_small, n_large) = match level {
            Level::Quick => (30, 30.0, 30, 60),
            Level::Full => (60, 120.0, 60, 120),
        };

        let inst = portfolio(n_solve, 6, 71)?;
        let cfg = OaConfig {
            gap: 1e-4,
            time_limit: Some(std::time::Duration::from_secs_f64(budget_s)),
            ..OaConfig::default()
        };
        let start = Instant::now();
        let r = solve(&inst, &cfg).map_err(err)?;
        let solve_s = start.elapsed().as_secs_f64();
        let solve_ok = r.status == SolveStatus::Optimal
            && r.gap.is_some_and(|g| g <= 1e-4 + 1e-12)
            && solve_s <= budget_s;

        let small = portfolio(n_small, 6, 72)?;
        let large = portfolio(n_large, 6, 73)?;
        let dec_small = Decomposition::auto(&small.q, &tol).map_err(err)?;
        let dec_large = Decomposition::auto(&large.q, &tol).map_err(err)?;
        let pts_small = sample_binary_points(&small, &dec_small, &tol, 24);
        let pts_large = sample_binary_points(&large, &dec_large, &tol, 24);
        if pts_small.len() < 8 || pts_large.len() < 8 {
            return Err("not enough feasible sample points for timing".into());
        }
        // Warm the caches, then measure.
        time_per_cut(&small, &dec_small, &pts_small, &tol)?;
        let t_small = time_per_cut(&small, &dec_small, &pts_small, &tol)?;
        let t_large = time_per_cut(&large, &dec_large, &pts_large, &tol)?;
        let ratio = t_large / t_small;

        Ok(CriterionReport {
            name: NAME,
            passed: solve_ok && ratio <= 3.0,
            worst: ratio,
            details: format!(
                "n={n_solve} solved {} in {:.1}s of {budget_s}s (gap {:.1e}); per-cut {:.1}us -> {:.1}us, ratio tol 3.0",
                if solve_ok { "ok" } else { "NOT ok" },
                solve_s,
                r.gap.unwrap_or(f64::NAN),
                t_small * 1e6,
                t_large * 1e6,
            ),
        })
    })
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    let t = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * t
}

/// Global minimum of a strictly convex QP by enumerating working sets:
/// a KKT candidate whose point is feasible and whose multipliers are all
/// nonnegative is optimal; take the best over every subset.
fn qp_by_enumeration(p: &QpProblem, feas_tol: f64) -> Option<f64> {
    let rows = p.num_rows();
    assert!(rows <= 16);
    let mut best: Option<f64> = None;
    'subsets: for mask in 0u32..(1 << rows) {
        let work: Vec<usize> = (0..rows).filter(|r| (mask >> r) & 1 == 1).collect();
        if work.len() > p.num_vars() {
            continue;
        }
        let Some((y, lam)) = kkt_point(p, &work) else { continue };
        if lam.iter().any(|&l| l < -feas_tol) {
            continue;
        }
        for r in 0..rows {
            if dot(p.g.row(r), &y) > p.rhs[r] + feas_tol {
                continue 'subsets;
            }
        }
        let obj = p.objective(&y);
        if best.map_or(true, |b| obj < b) {
            best = Some(obj);
        }
    }
    best
}

/// Criterion 8: on 200 random small QPs the active-set solver agrees with
/// working-set enumeration to 1e-7 and satisfies its own optimality
/// conditions to 1e-8.
pub fn qp_matches_enumeration(level: Level) -> CriterionReport {
    const NAME: &str = "qp-matches-active-set-enumeration";
    guard(NAME, || {
        let total = match level {
            Level::Quick => 50,
            Level::Full => 200,
        };
        let tol = Tolerances::default();
        let mut worst = 0.0_f64;
        let mut solved = 0usize;
        let mut seed = 0u64;
        while solved < total {
            seed += 1;
            if seed > 20 * total as u64 {
                return Err(format!("could not draw {total} solvable QPs"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(0x9e3779b9 ^ seed);
            let nv = 2 + (rng.next_u64() % 3) as usize;
            let rows = (rng.next_u64() % 7) as usize;

            // H = B'B + I keeps the problem strictly convex.
            let mut b = DenseMatrix::zeros(nv, nv);
            for i in 0..nv {
                for j in 0..nv {
                    b[(i, j)] = uniform(&mut rng, -1.0, 1.0);
                }
            }
            let mut h = DenseMatrix::zeros(nv, nv);
            for i in 0..nv {
                for j in 0..nv {
                    let mut v = 0.0;
                    for l in 0..nv {
                        v += b[(l, i)] * b[(l, j)];
                    }
                    h[(i, j)] = v + if i == j { 1.0 } else { 0.0 };
                }
            }
            let c: Vec<f64> = (0..nv).map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
            let mut g = DenseMatrix::zeros(rows, nv);
            let mut rhs = vec![0.0; rows];
            for r in 0..rows {
                for j in 0..nv {
                    g[(r, j)] = uniform(&mut rng, -1.0, 1.0);
                }
                // The origin stays feasible, so the QP is never infeasible.
                rhs[r] = uniform(&mut rng, 0.0, 2.0);
            }
            let p = QpProblem { h, c, g, rhs };
            let scale = problem_scale(&p);
            let feas_tol = tol.feas * scale;

            let sol = solve_qp(&p, None, &tol).map_err(err)?;
            let Some(enum_obj) = qp_by_enumeration(&p, feas_tol) else {
                continue;
            };
            let obj_diff = (sol.objective - enum_obj).abs() / scale.max(1.0);
            let resid = kkt_residual(&p, &sol) / scale.max(1.0);
            worst = worst.max(obj_diff);
            if obj_diff > 1e-7 || resid > 1e-8 {
                return Ok(CriterionReport {
                    name: NAME,
                    passed: false,
                    worst: worst.max(resid),
                    details: format!(
                        "seed {seed}: objective diff {:.3e}, kkt residual {:.3e}",
                        (sol.objective - enum_obj).abs(),
                        resid
                    ),
                });
            }
            worst = worst.max(resid);
            solved += 1;
        }
        Ok(CriterionReport {
            name: NAME,
            passed: true,
            worst,
            details: format!("{solved} random QPs, objective tol 1e-7, kkt tol 1e-8"),
        })
    })
}

/// Criterion 9: on 100 random positive definite matrices every
/// decomposition invariant holds: the split reassembles exactly, the
/// diagonal stays positive, the residual is certified semidefinite, and
/// the factor products reproduce the residual.
pub fn decomposition_invariants(level: Level) -> CriterionReport {
    const NAME: &str = "decomposition-invariants";
    guard(NAME, || {
        let total = match level {
            Level::Quick => 30,
            Level::Full => 100,
        };
        let tol = Tolerances::default();
        let mut worst = 0.0_f64;
        for seed in 0..total {
            let mut rng = ChaCha12Rng::seed_from_u64(0xd1f4 ^ seed as u64);
            let n = 3 + (rng.next_u64() % 8) as usize;
            let mut b = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    b[(i, j)] = uniform(&mut rng, -2.0, 2.0);
                }
            }
            let shift = uniform(&mut rng, 0.2, 2.0);
            let mut q = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for l in 0..n {
                        v += b[(l, i)] * b[(l, j)];
                    }
                    q[(i, j)] = v + if i == j { shift } else { 0.0 };
                }
            }
            let scale = q.max_abs();

            for decomp in [
                Decomposition::auto(&q, &tol).map_err(err)?,
                extract_diagonal(&q, DeltaStrategy::UniformMinEig, None, &tol).map_err(err)?,
            ] {
                // Exact reassembly and positive diagonal.
                for i in 0..n {
                    if decomp.delta[i] <= 0.0 {
                        return Err(format!("seed {seed}: delta[{i}] = {}", decomp.delta[i]));
                    }
                    for j in 0..n {
                        let split = decomp.r[(i, j)]
                            + if i == j { decomp.delta[i] } else { 0.0 };
                        worst = worst.max((split - q[(i, j)]).abs() / scale);
                    }
                }
                // Residual certified semidefinite.
                let bound = min_eigenvalue_bound(&decomp.r);
                worst = worst.max(-bound / scale.max(1.0));

                // Factor products reproduce the residual.
                let with_l = rank_one_factors(decomp.clone(), &tol).map_err(err)?;
                let l = with_l.l.as_ref().unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let mut v = 0.0;
                        for cidx in 0..l.cols() {
                            v += l[(i, cidx)] * l[(j, cidx)];
                        }
                        worst = worst.max((v - decomp.r[(i, j)]).abs() / scale);
                    }
                }

                if crate::decompose::is_uniform_delta(&decomp.delta) {
                    let g: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
                    let with_e = low_rank_factor(decomp.clone(), &g, &tol).map_err(err)?;
                    let lr = with_e.low_rank.as_ref().unwrap();
                    let e = &lr.e;
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = 0.0;
                            for a in 0..e.rows() {
                                v += e[(a, i)] * e[(a, j)];
                            }
                            worst = worst.max((v - decomp.r[(i, j)]).abs() / scale);
                        }
                    }
                    // The adjusted linear term is orthogonal to the rows
                    // of E by construction.
                    let eg = e.matvec(&lr.g_tilde);
                    for v in eg {
                        worst = worst.max(v.abs() / scale.max(1.0));
                    }
                }
            }
        }
        Ok(CriterionReport {
            name: NAME,
            passed: worst <= 1e-6,
            worst,
            details: format!("{total} random matrices, both strategies, tol 1e-6"),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_level_passes() {
        let reports = all(Level::Quick);
        for r in &reports {
            println!("{}", render_line(r));
        }
        assert!(reports.iter().all(|r| r.passed));
    }
}
