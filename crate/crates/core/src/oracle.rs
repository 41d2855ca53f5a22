//! Ground truth for small instances: exhaustive enumeration of the binary
//! points, cut validity audits against the enumeration, and a
//! finite-difference probe of the marginal objective's gradient.
//!
//! Everything here is deliberately independent of the branch-and-cut
//! machinery so it can certify it.

use crate::cuts::{solve_reduced, Cut, CutError};
use crate::decompose::Decomposition;
use crate::instances::MiqpInstance;
use crate::tol::Tolerances;
use thiserror::Error;

/// Hard cap on the number of reduced QP solves one enumeration may take.
pub const MAX_ENUMERATION: u128 = 1 << 18;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration would take {combinations} solves (limit {limit})")]
    TooLarge { combinations: u128, limit: u128 },
    #[error("n = {0} exceeds the 64-bit mask limit")]
    TooManyVariables(usize),
    #[error("marginal value is not differentiable at this point (coordinate {index})")]
    NonSmoothPoint { index: usize },
    #[error(transparent)]
    Cut(#[from] CutError),
}

/// One visited binary point. `value` is the marginal objective, `None`
/// when no feasible `y` exists there.
#[derive(Debug, Clone)]
pub struct EnumeratedPoint {
    pub mask: u64,
    pub value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EnumerationReport {
    pub n: usize,
    pub points: Vec<EnumeratedPoint>,
    pub feasible_count: usize,
    pub optimum: Option<f64>,
    pub argmin_mask: Option<u64>,
    pub best_y: Option<Vec<f64>>,
}

pub fn mask_to_x(mask: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| ((mask >> i) & 1) as f64).collect()
}

impl EnumerationReport {
    pub fn argmin_x(&self) -> Option<Vec<f64>> {
        self.argmin_mask.map(|m| mask_to_x(m, self.n))
    }
}

fn enumeration_size(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for j in 0..=k {
        total = total.saturating_add(c);
        if j < k {
            c = c.saturating_mul((n - j) as u128) / (j + 1) as u128;
        }
    }
    total
}

/// Evaluate every binary point with at most `k` ones (all `2^n` points
/// when the instance has no cardinality bound). Subsets are visited by
/// size, each solve warm-started from its predecessor's active set.
pub fn brute_force(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    tol: &Tolerances,
) -> Result<EnumerationReport, OracleError> {
    let n = inst.n;
    if n > 64 {
        return Err(OracleError::TooManyVariables(n));
    }
    let keff = inst.k.unwrap_or(n).min(n);
    let combinations = enumeration_size(n, keff);
    if combinations > MAX_ENUMERATION {
        return Err(OracleError::TooLarge { combinations, limit: MAX_ENUMERATION });
    }

    let mut report = EnumerationReport {
        n,
        points: Vec::with_capacity(combinations as usize),
        feasible_count: 0,
        optimum: None,
        argmin_mask: None,
        best_y: None,
    };
    let mut warm: Option<Vec<usize>> = None;
    let mut x = vec![0.0; n];

    let visit = |mask: u64,
                     x: &[f64],
                     warm: &mut Option<Vec<usize>>,
                     report: &mut EnumerationReport|
     -> Result<(), OracleError> {
        match solve_reduced(inst, decomp, x, warm.as_deref(), tol) {
            Ok(sol) => {
                report.feasible_count += 1;
                if report.optimum.map_or(true, |best| sol.marginal < best) {
                    report.optimum = Some(sol.marginal);
                    report.argmin_mask = Some(mask);
                    report.best_y = Some(sol.y.clone());
                }
                *warm = Some(sol.active_set);
                report.points.push(EnumeratedPoint { mask, value: Some(sol.marginal) });
            }
            Err(CutError::InfeasiblePoint { .. }) => {
                report.points.push(EnumeratedPoint { mask, value: None });
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    };

    visit(0, &x, &mut warm, &mut report)?;
    for size in 1..=keff {
        // Lexicographic combinations of `size` indices; neighbours share
        // most of their support, which keeps the warm starts relevant.
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            x.iter_mut().for_each(|v| *v = 0.0);
            let mut mask = 0u64;
            for &i in &idx {
                x[i] = 1.0;
                mask |= 1 << i;
            }
            visit(mask, &x, &mut warm, &mut report)?;

            // Advance to the next combination.
            let mut pos = size;
            while pos > 0 && idx[pos - 1] == n - size + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for p in pos..size {
                idx[p] = idx[p - 1] + 1;
            }
        }
    }
    Ok(report)
}

/// How a cut relates to the enumerated truth.
#[derive(Debug, Clone)]
pub struct CutAudit {
    /// Largest amount by which the cut exceeds the marginal value on a
    /// feasible binary point; positive means the cut is invalid.
    pub max_overestimate: f64,
    pub worst_mask: Option<u64>,
    /// `|cut(generating point) - marginal at the generating point|`.
    pub tightness_error: f64,
}

/// Check a cut against every feasible point of an enumeration.
pub fn audit_cut(report: &EnumerationReport, cut: &Cut) -> CutAudit {
    let mut max_overestimate = f64::NEG_INFINITY;
    let mut worst_mask = None;
    for p in &report.points {
        if let Some(value) = p.value {
            let over = cut.value_at(&mask_to_x(p.mask, report.n)) - value;
            if over > max_overestimate {
                max_overestimate = over;
                worst_mask = Some(p.mask);
            }
        }
    }
    CutAudit {
        max_overestimate,
        worst_mask,
        tightness_error: (cut.value_at(&cut.generating_point) - cut.marginal_value).abs(),
    }
}

/// Step size of the finite-difference probe.
pub const FD_STEP: f64 = 1e-5;

/// Centered finite-difference gradient of the marginal value at an
/// interior point (every coordinate strictly inside `(step, 1]`). Fails
/// with [`OracleError::NonSmoothPoint`] when a probe would cross the
/// support boundary or lands on a different active set, since the
/// two-sided quotient is meaningless across a kink.
pub fn fd_subgradient(
    inst: &MiqpInstance,
    decomp: &Decomposition,
    x: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>, OracleError> {
    let n = inst.n;
    debug_assert_eq!(x.len(), n);
    let base = solve_reduced(inst, decomp, x, None, tol)?;
    let mut grad = vec![0.0; n];
    let mut probe = x.to_vec();
    for i in 0..n {
        if x[i] - FD_STEP <= tol.support {
            return Err(OracleError::NonSmoothPoint { index: i });
        }
        probe[i] = x[i] + FD_STEP;
        let plus = solve_reduced(inst, decomp, &probe, Some(&base.active_set), tol)?;
        probe[i] = x[i] - FD_STEP;
        let minus = solve_reduced(inst, decomp, &probe, Some(&base.active_set), tol)?;
        probe[i] = x[i];
        if plus.active_set != minus.active_set || plus.partition != minus.partition {
            return Err(OracleError::NonSmoothPoint { index: i });
        }
        grad[i] = (plus.marginal - minus.marginal) / (2.0 * FD_STEP);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::cut_persp;
    use crate::decompose::DeltaStrategy;
    use crate::instances::{generate_portfolio, PortfolioSpec};
    use crate::linalg::DenseMatrix;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

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

    #[test]
    fn enumerates_the_frozen_table() {
        let (inst, decomp) = unconstrained_pair();
        let report = brute_force(&inst, &decomp, &tols()).unwrap();
        assert_eq!(report.points.len(), 4);
        assert_eq!(report.feasible_count, 4);
        let value_of = |mask: u64| {
            report.points.iter().find(|p| p.mask == mask).unwrap().value.unwrap()
        };
        assert!(value_of(0b00).abs() < 1e-12);
        assert!((value_of(0b01) + 0.5).abs() < 1e-12);
        assert!((value_of(0b10) + 0.5).abs() < 1e-12);
        assert!((value_of(0b11) + 1.0).abs() < 1e-12);
        assert_eq!(report.argmin_mask, Some(0b11));
        assert!((report.optimum.unwrap() + 1.0).abs() < 1e-12);
        let y = report.best_y.unwrap();
        assert!((y[0] - 0.5).abs() < 1e-9 && (y[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn portfolio_enumeration_respects_cardinality() {
        let inst = generate_portfolio(&PortfolioSpec { n: 7, k: Some(3), seed: 2 }).unwrap();
        let decomp = Decomposition::auto(&inst.q, &tols()).unwrap();
        let report = brute_force(&inst, &decomp, &tols()).unwrap();
        assert_eq!(report.points.len() as u128, enumeration_size(7, 3));
        assert!(report.feasible_count >= 1);
        let best = report.optimum.unwrap();
        for p in &report.points {
            assert!(p.mask.count_ones() <= 3);
            if let Some(v) = p.value {
                assert!(v >= best - 1e-12);
            }
        }
        // The budget needs around three names, so tiny supports are
        // infeasible; in particular the empty one.
        assert!(report.points[0].value.is_none());
    }

    #[test]
    fn size_guard_rejects_large_spaces() {
        let n = 30;
        let inst = MiqpInstance {
            name: "big".into(),
            n,
            q: {
                let mut q = DenseMatrix::identity(n);
                for i in 0..n {
                    q[(i, i)] = 2.0;
                }
                q
            },
            g: vec![0.0; n],
            h: vec![0.0; n],
            a: DenseMatrix::zeros(0, n),
            b: vec![],
            c: DenseMatrix::zeros(0, n),
            d: DenseMatrix::zeros(0, n),
            k: None,
            seed: None,
            rng: None,
        };
        let decomp = Decomposition::from_parts(
            vec![1.0; n],
            DenseMatrix::identity(n),
            DeltaStrategy::UniformMinEig,
        );
        match brute_force(&inst, &decomp, &tols()) {
            Err(OracleError::TooLarge { combinations, .. }) => {
                assert_eq!(combinations, 1u128 << 30);
            }
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn audit_accepts_valid_cut_and_flags_tampered_one() {
        let inst = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 3 }).unwrap();
        let t = tols();
        let decomp = Decomposition::auto(&inst.q, &t).unwrap();
        let report = brute_force(&inst, &decomp, &t).unwrap();
        let gen_x = report.argmin_x().unwrap();
        let sol = solve_reduced(&inst, &decomp, &gen_x, None, &t).unwrap();
        let cut = cut_persp(&inst, &decomp, &gen_x, &sol);

        let audit = audit_cut(&report, &cut);
        assert!(audit.max_overestimate <= 1e-9, "overestimate {}", audit.max_overestimate);
        assert!(audit.tightness_error <= 1e-9);
        // Tight at its own point, so the worst slack is exactly zero there.
        assert!(audit.max_overestimate > -1e-9);

        let mut bad = cut.clone();
        bad.offset += 1e-3;
        let audit = audit_cut(&report, &bad);
        assert!(audit.max_overestimate >= 1e-3 - 1e-9);
    }

    #[test]
    fn fd_gradient_matches_closed_form_and_cut() {
        let (inst, decomp) = unconstrained_pair();
        let t = tols();
        let x = [0.5, 0.5];
        let grad = fd_subgradient(&inst, &decomp, &x, &t).unwrap();
        // d/dx of -x/(x+1) is -1/(x+1)^2 = -4/9 at 1/2.
        for g in &grad {
            assert!((g + 4.0 / 9.0).abs() < 1e-6, "grad {g}");
        }
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let cut = cut_persp(&inst, &decomp, &x, &sol);
        for i in 0..2 {
            assert!((grad[i] - cut.t[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn fd_gradient_matches_cut_on_portfolio() {
        let inst = generate_portfolio(&PortfolioSpec { n: 6, k: Some(3), seed: 3 }).unwrap();
        let t = tols();
        let decomp = Decomposition::auto(&inst.q, &t).unwrap();
        let x = vec![0.5; 6];
        let grad = match fd_subgradient(&inst, &decomp, &x, &t) {
            Ok(g) => g,
            Err(OracleError::NonSmoothPoint { .. }) => return,
            Err(e) => panic!("{e}"),
        };
        let sol = solve_reduced(&inst, &decomp, &x, None, &t).unwrap();
        let cut = cut_persp(&inst, &decomp, &x, &sol);
        for i in 0..6 {
            assert!(
                (grad[i] - cut.t[i]).abs() < 1e-4,
                "i {i}: fd {} vs cut {}",
                grad[i],
                cut.t[i]
            );
        }
    }

    #[test]
    fn fd_refuses_support_boundary() {
        let (inst, decomp) = unconstrained_pair();
        let x = [1e-6, 0.5];
        match fd_subgradient(&inst, &decomp, &x, &tols()) {
            Err(OracleError::NonSmoothPoint { index: 0 }) => {}
            other => panic!("expected NonSmoothPoint(0), got {other:?}"),
        }
    }
}
