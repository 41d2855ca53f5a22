//! Bounded-variable revised primal simplex.
//!
//! Solves `min c'z  s.t.  Gz <= rhs, lo <= z <= hi` where individual bounds
//! may be infinite. Every row is a `<=` row; a slack in `[0, inf)` is
//! appended internally per row, equalities are modelled by the caller as
//! opposing inequality pairs.
//!
//! The implementation is a textbook two-phase method:
//!
//! * phase 1 drives the total bound violation of the basic variables to
//!   zero using the composite (piecewise-linear) infeasibility objective,
//!   so no artificial columns are ever added;
//! * phase 2 optimizes the true objective with the usual ratio test plus
//!   bound flips.
//!
//! A warm basis that is dual feasible but primal infeasible (the shape a
//! parent-optimal basis takes after bound fixings or a new cut row) is
//! repaired by a bounded-variable dual simplex pass instead, which
//! typically needs a handful of pivots; any numerical trouble there falls
//! back to the two-phase path.
//!
//! The basis inverse is kept as a dense LU factorization with product-form
//! eta updates and periodic refactorization. Dantzig pricing is used until
//! a long run of degenerate pivots, then Bland's rule takes over until the
//! solver makes progress again.

use crate::linalg::{dot, DenseMatrix, LuFactor};

/// `min objective . z` subject to `cols' rows <= rhs` and variable bounds.
/// `cols[j]` lists the nonzero `(row, coefficient)` pairs of variable `j`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub num_rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_vars: usize, num_rows: usize) -> Self {
        LpProblem {
            num_vars,
            num_rows,
            cols: vec![Vec::new(); num_vars],
            objective: vec![0.0; num_vars],
            lower: vec![f64::NEG_INFINITY; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            rhs: Vec::new(),
        }
    }

    /// Append a row `sum_j coef_j z_j <= rhs`; returns its index.
    pub fn push_row(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.rhs.len();
        for &(j, v) in entries {
            if v != 0.0 {
                self.cols[j].push((row, v));
            }
        }
        self.rhs.push(rhs);
        self.num_rows = self.rhs.len();
        row
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (meaningful for Optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Nonnegative multiplier per row for the `<=` constraints.
    pub duals: Vec<f64>,
    /// Worst sign violation among nonbasic reduced costs at termination.
    pub dual_residual: f64,
    /// Basic variable per row; feed back in as a warm start.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Stat {
    Basic,
    AtLower,
    AtUpper,
    /// Free variable parked at zero while nonbasic.
    FreeZero,
}

/// A simplex instance that persists across solves. Bound changes keep the
/// factorization; appending rows or adopting a different basis schedules a
/// refactorization at the next [`LpEngine::solve`]. Branch-and-bound style
/// re-solves (fix a variable, add a cut row, return to a parent) therefore
/// cost a handful of pivots instead of a fresh factorization each.
pub struct LpEngine {
    p: LpProblem,
    m: usize,
    ntot: usize,
    basic: Vec<usize>,
    stat: Vec<Stat>,
    values: Vec<f64>,
    lu: LuFactor,
    etas: Vec<(usize, Vec<f64>)>,
    iterations: usize,
    max_iterations: usize,
    feas: f64,
    degenerate_run: usize,
    /// LU + eta file describe the current basis.
    factored: bool,
    /// Bumped by every refactorization; guards eta-file rollbacks.
    factor_gen: u64,
}

/// Snapshot of the engine's basis state; see [`LpEngine::mark`].
pub struct LpMark {
    basic: Vec<usize>,
    stat: Vec<Stat>,
    eta_len: usize,
    factor_gen: u64,
    num_rows: usize,
}

const ETA_REFACTOR: usize = 64;

impl LpEngine {
    fn lower(&self, j: usize) -> f64 {
        if j < self.p.num_vars {
            self.p.lower[j]
        } else {
            0.0
        }
    }

    fn upper(&self, j: usize) -> f64 {
        if j < self.p.num_vars {
            self.p.upper[j]
        } else {
            f64::INFINITY
        }
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.p.num_vars {
            self.p.cols[j].iter().map(|&(r, a)| a * v[r]).sum()
        } else {
            v[j - self.p.num_vars]
        }
    }

    fn scatter_col(&self, j: usize, scale: f64, out: &mut [f64]) {
        if j < self.p.num_vars {
            for &(r, a) in &self.p.cols[j] {
                out[r] += scale * a;
            }
        } else {
            out[j - self.p.num_vars] += scale;
        }
    }

    fn ftran(&self, v: &mut Vec<f64>) {
        *v = self.lu.solve(v);
        for (r, w) in &self.etas {
            let theta = v[*r] / w[*r];
            if theta != 0.0 {
                for (vi, wi) in v.iter_mut().zip(w) {
                    *vi -= theta * wi;
                }
            }
            v[*r] = theta;
        }
    }

    fn btran(&self, u: &mut Vec<f64>) {
        for (r, w) in self.etas.iter().rev() {
            let d = dot(w, u);
            u[*r] -= (d - u[*r]) / w[*r];
        }
        *u = self.lu.solve_transpose(u);
    }

    /// Rebuild the LU of the current basis; falls back to the all-slack
    /// basis if the stored one has gone numerically singular.
    fn factorize(&mut self) {
        self.etas.clear();
        self.factor_gen += 1;
        self.factored = true;
        let mut b = DenseMatrix::zeros(self.m, self.m);
        for (i, &j) in self.basic.iter().enumerate() {
            let mut col = vec![0.0; self.m];
            self.scatter_col(j, 1.0, &mut col);
            for r in 0..self.m {
                b[(r, i)] = col[r];
            }
        }
        match LuFactor::new(&b) {
            Ok(f) => self.lu = f,
            Err(_) => {
                for j in 0..self.ntot {
                    if self.stat[j] == Stat::Basic {
                        self.stat[j] = self.default_nonbasic_stat(j);
                    }
                }
                for i in 0..self.m {
                    let s = self.p.num_vars + i;
                    self.basic[i] = s;
                    self.stat[s] = Stat::Basic;
                }
                let ident = DenseMatrix::identity(self.m);
                self.lu = LuFactor::new(&ident).unwrap();
            }
        }
        self.recompute_values();
    }

    fn default_nonbasic_stat(&self, j: usize) -> Stat {
        let lo = self.lower(j);
        let up = self.upper(j);
        if lo.is_finite() {
            Stat::AtLower
        } else if up.is_finite() {
            Stat::AtUpper
        } else {
            Stat::FreeZero
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.stat[j] {
            Stat::AtLower => self.lower(j),
            Stat::AtUpper => self.upper(j),
            Stat::FreeZero => 0.0,
            Stat::Basic => unreachable!(),
        }
    }

    fn recompute_values(&mut self) {
        for j in 0..self.ntot {
            if self.stat[j] != Stat::Basic {
                self.values[j] = self.nonbasic_value(j);
            }
        }
        let mut r = self.p.rhs.clone();
        for j in 0..self.ntot {
            if self.stat[j] != Stat::Basic && self.values[j] != 0.0 {
                self.scatter_col(j, -self.values[j], &mut r);
            }
        }
        self.ftran(&mut r);
        for (i, &j) in self.basic.iter().enumerate() {
            self.values[j] = r[i];
        }
    }

    fn bound_tol(&self, b: f64) -> f64 {
        self.feas * (1.0 + b.abs())
    }

    fn infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for &j in &self.basic {
            let v = self.values[j];
            let lo = self.lower(j);
            let up = self.upper(j);
            if v < lo {
                total += lo - v;
            } else if v > up {
                total += v - up;
            }
        }
        total
    }

    /// One simplex pass minimizing `costs` (phase 1 recomputes the
    /// composite costs itself each iteration when `phase1` is set).
    /// Returns the terminal status of the pass.
    fn iterate(&mut self, costs: &[f64], phase1: bool) -> LpStatus {
        let mut bland = false;
        loop {
            if self.iterations >= self.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.etas.len() >= ETA_REFACTOR {
                self.factorize();
            }
            if phase1 && self.infeasibility() <= self.feas * (1.0 + self.m as f64) {
                return LpStatus::Optimal;
            }

            // Reduced costs from the (possibly composite) objective.
            let mut cb_pi = vec![0.0; self.m];
            let mut cost_scale = 1.0_f64;
            for (i, &j) in self.basic.iter().enumerate() {
                let c = if phase1 {
                    self.phase1_cost(j)
                } else {
                    costs.get(j).copied().unwrap_or(0.0)
                };
                cb_pi[i] = c;
                cost_scale = cost_scale.max(c.abs());
            }
            if !phase1 {
                for &c in costs {
                    cost_scale = cost_scale.max(c.abs());
                }
            }
            let dtol = self.feas * cost_scale;
            self.btran(&mut cb_pi);
            let pi = cb_pi;

            // Pricing: Dantzig unless the degenerate run demands Bland.
            let mut enter = usize::MAX;
            let mut enter_dir = 1.0;
            let mut best = dtol;
            for j in 0..self.ntot {
                let stat = self.stat[j];
                if stat == Stat::Basic {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { costs.get(j).copied().unwrap_or(0.0) };
                let d = cj - self.col_dot(j, &pi);
                let (elig, dir, mag) = match stat {
                    Stat::AtLower => (d < -dtol, 1.0, -d),
                    Stat::AtUpper => (d > dtol, -1.0, d),
                    Stat::FreeZero => (d.abs() > dtol, if d < 0.0 { 1.0 } else { -1.0 }, d.abs()),
                    Stat::Basic => unreachable!(),
                };
                if !elig {
                    continue;
                }
                if bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if mag > best {
                    best = mag;
                    enter = j;
                    enter_dir = dir;
                }
            }
            if enter == usize::MAX {
                return if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
            }

            // Direction of basic values: x_B(t) = x_B + t * delta.
            let mut w = vec![0.0; self.m];
            self.scatter_col(enter, 1.0, &mut w);
            self.ftran(&mut w);

            let dir = enter_dir;
            let span = self.upper(enter) - self.lower(enter);
            let mut t_limit = if span.is_finite() { span } else { f64::INFINITY };
            let mut leave: Option<(usize, bool)> = None; // (row, leaves_at_upper)
            let mut leave_w = 0.0_f64;
            let ztol = 1e-11 * (1.0 + w.iter().fold(0.0_f64, |a, &v| a.max(v.abs())));
            for i in 0..self.m {
                if w[i].abs() <= ztol {
                    continue;
                }
                let delta = -dir * w[i];
                let v = self.basic[i];
                let xv = self.values[v];
                let lo = self.lower(v);
                let up = self.upper(v);
                let mut cand: Option<(f64, bool)> = None;
                if phase1 && xv < lo - self.bound_tol(lo) {
                    if delta > 0.0 {
                        cand = Some(((lo - xv) / delta, false));
                    }
                } else if phase1 && xv > up + self.bound_tol(up) {
                    if delta < 0.0 {
                        cand = Some(((up - xv) / delta, true));
                    }
                } else if delta > 0.0 && up.is_finite() {
                    cand = Some(((up - xv).max(0.0) / delta, true));
                } else if delta < 0.0 && lo.is_finite() {
                    cand = Some(((xv - lo).max(0.0) / -delta, false));
                }
                if let Some((t, at_upper)) = cand {
                    let t = t.max(0.0);
                    if t < t_limit - 1e-12 || (t < t_limit + 1e-12 && w[i].abs() > leave_w.abs()) {
                        t_limit = t;
                        leave = Some((i, at_upper));
                        leave_w = w[i];
                    }
                }
            }

            if t_limit.is_infinite() {
                return if phase1 { LpStatus::Infeasible } else { LpStatus::Unbounded };
            }

            self.iterations += 1;
            if t_limit <= self.feas {
                self.degenerate_run += 1;
                if self.degenerate_run > 40 + self.m {
                    bland = true;
                }
            } else {
                self.degenerate_run = 0;
                bland = false;
            }

            // Move the entering variable and the basics.
            let step = dir * t_limit;
            for i in 0..self.m {
                if w[i] != 0.0 {
                    let v = self.basic[i];
                    self.values[v] -= step * w[i];
                }
            }
            match leave {
                None => {
                    // Bound flip: the entering variable crossed its span.
                    self.values[enter] = if dir > 0.0 { self.upper(enter) } else { self.lower(enter) };
                    self.stat[enter] = if dir > 0.0 { Stat::AtUpper } else { Stat::AtLower };
                }
                Some((row, at_upper)) => {
                    let out = self.basic[row];
                    self.values[out] = if at_upper { self.upper(out) } else { self.lower(out) };
                    self.stat[out] = if at_upper { Stat::AtUpper } else { Stat::AtLower };
                    self.values[enter] += step;
                    self.stat[enter] = Stat::Basic;
                    self.basic[row] = enter;
                    if w[row].abs() <= 1e-9 {
                        self.factorize();
                    } else {
                        self.etas.push((row, w));
                    }
                }
            }
        }
    }

    fn phase1_cost(&self, j: usize) -> f64 {
        let v = self.values[j];
        let lo = self.lower(j);
        let up = self.upper(j);
        if v < lo - self.bound_tol(lo) {
            -1.0
        } else if v > up + self.bound_tol(up) {
            1.0
        } else {
            0.0
        }
    }

    /// Multipliers `pi` of the current basis, so that the reduced cost of
    /// column `j` under `costs` is `c_j - pi . A_j`.
    fn price(&self, costs: &[f64]) -> Vec<f64> {
        let mut pi = vec![0.0; self.m];
        for (i, &j) in self.basic.iter().enumerate() {
            pi[i] = costs.get(j).copied().unwrap_or(0.0);
        }
        self.btran(&mut pi);
        pi
    }

    /// Whether the current basis is dual feasible for `costs`. Columns
    /// fixed by coincident bounds cannot move, so their reduced-cost sign
    /// never matters.
    fn dual_feasible(&self, costs: &[f64]) -> bool {
        let pi = self.price(costs);
        let mut cost_scale = 1.0_f64;
        for &c in costs {
            cost_scale = cost_scale.max(c.abs());
        }
        let dtol = self.feas * cost_scale;
        for j in 0..self.ntot {
            if self.stat[j] == Stat::Basic || self.lower(j) == self.upper(j) {
                continue;
            }
            let d = costs.get(j).copied().unwrap_or(0.0) - self.col_dot(j, &pi);
            let bad = match self.stat[j] {
                Stat::AtLower => d < -dtol,
                Stat::AtUpper => d > dtol,
                Stat::FreeZero => d.abs() > dtol,
                Stat::Basic => unreachable!(),
            };
            if bad {
                return false;
            }
        }
        true
    }

    /// Dual simplex pass: restore primal feasibility while keeping the
    /// reduced costs sign-feasible. Assumes `dual_feasible(costs)` held on
    /// entry. Ends `Done(Optimal)` once no basic variable violates its
    /// bounds, `Done(Infeasible)` when some violated row admits no entering
    /// column, and `GiveUp` on numerical trouble, leaving a consistent
    /// basis for the primal phases to finish from.
    fn iterate_dual(&mut self, costs: &[f64]) -> DualPass {
        let mut bland = false;
        let mut retries = 0;
        let mut degenerate = 0_usize;
        // Degenerate dual pivots can cycle; past this budget the primal
        // phases take over from wherever the pass got to.
        let mut budget = 200 + 4 * self.m;
        loop {
            if self.iterations >= self.max_iterations {
                return DualPass::Done(LpStatus::IterationLimit);
            }
            if budget == 0 {
                return DualPass::GiveUp;
            }
            budget -= 1;
            if self.etas.len() >= ETA_REFACTOR {
                self.factorize();
            }

            // Leaving row: the worst bound violation among the basics
            // (the first violated row once Bland's rule is on).
            let mut row = usize::MAX;
            let mut worst = 0.0_f64;
            let mut to_upper = false;
            for (i, &v) in self.basic.iter().enumerate() {
                let xv = self.values[v];
                let lo = self.lower(v);
                let up = self.upper(v);
                if xv < lo - self.bound_tol(lo) {
                    if lo - xv > worst {
                        worst = lo - xv;
                        row = i;
                        to_upper = false;
                    }
                } else if xv > up + self.bound_tol(up) && xv - up > worst {
                    worst = xv - up;
                    row = i;
                    to_upper = true;
                }
                if bland && row == i {
                    break;
                }
            }
            if row == usize::MAX {
                return DualPass::Done(LpStatus::Optimal);
            }

            let leave_var = self.basic[row];
            let target = if to_upper {
                self.upper(leave_var)
            } else {
                self.lower(leave_var)
            };

            // Row `row` of the basis inverse gives the pivot row entries
            // alpha_j = rho . A_j for the dual ratio test.
            let mut rho = vec![0.0; self.m];
            rho[row] = 1.0;
            self.btran(&mut rho);
            let pi = self.price(costs);

            // x_leave must move toward `target`: up when below its lower
            // bound, down when above its upper. Entering j changes x_leave
            // by -alpha_j per unit increase, so with `need` the required
            // sign of the change, j helps exactly when need * alpha_j and
            // its own admissible direction agree.
            let need = if to_upper { -1.0 } else { 1.0 };
            let ztol = 1e-11 * (1.0 + rho.iter().fold(0.0_f64, |a, &v| a.max(v.abs())));
            let mut enter = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            let mut enter_alpha = 0.0_f64;
            for j in 0..self.ntot {
                let stat = self.stat[j];
                if stat == Stat::Basic || self.lower(j) == self.upper(j) {
                    continue;
                }
                let alpha = self.col_dot(j, &rho);
                let a = need * alpha;
                if a.abs() <= ztol {
                    continue;
                }
                let d = costs.get(j).copied().unwrap_or(0.0) - self.col_dot(j, &pi);
                let ratio = match stat {
                    Stat::AtLower if a < 0.0 => d / -a,
                    Stat::AtUpper if a > 0.0 => -d / a,
                    Stat::FreeZero => d.abs() / a.abs(),
                    _ => continue,
                };
                let ratio = ratio.max(0.0);
                if bland {
                    enter = j;
                    enter_alpha = alpha;
                    best_ratio = ratio;
                    break;
                }
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12 && alpha.abs() > enter_alpha.abs())
                {
                    best_ratio = ratio;
                    enter = j;
                    enter_alpha = alpha;
                }
            }
            if enter == usize::MAX {
                // A violated row no entering column can repair certifies
                // the constraints inconsistent.
                return DualPass::Done(LpStatus::Infeasible);
            }

            let mut w = vec![0.0; self.m];
            self.scatter_col(enter, 1.0, &mut w);
            self.ftran(&mut w);
            let pivot = w[row];
            // The updated pivot must agree with the priced alpha and be
            // comfortably nonzero; otherwise refactorize and retry before
            // handing the problem back to the primal phases.
            if pivot.abs() <= 1e-9 || (pivot - enter_alpha).abs() > 1e-6 * (1.0 + pivot.abs()) {
                retries += 1;
                if retries > 2 {
                    return DualPass::GiveUp;
                }
                self.factorize();
                continue;
            }
            retries = 0;

            let theta = (self.values[leave_var] - target) / pivot;
            self.iterations += 1;
            // Progress is measured by the dual step, not the primal one:
            // a near-zero ratio moves the dual objective nowhere and is
            // what lets the pass cycle.
            if best_ratio <= 1e-9 {
                degenerate += 1;
                if degenerate > 40 + self.m {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }

            let base = self.values[enter];
            for i in 0..self.m {
                if w[i] != 0.0 {
                    let v = self.basic[i];
                    self.values[v] -= theta * w[i];
                }
            }
            self.values[enter] = base + theta;
            self.values[leave_var] = target;
            self.stat[leave_var] = if to_upper { Stat::AtUpper } else { Stat::AtLower };
            self.stat[enter] = Stat::Basic;
            self.basic[row] = enter;
            self.etas.push((row, w));
        }
    }
}

enum DualPass {
    Done(LpStatus),
    /// Numerical trouble; the basis is still consistent, resume with the
    /// primal phases.
    GiveUp,
}

impl LpEngine {
    pub fn new(p: LpProblem, feas: f64) -> LpEngine {
        let m = p.num_rows;
        let ntot = p.num_vars + m;
        debug_assert_eq!(p.rhs.len(), m);
        let mut e = LpEngine {
            p,
            m,
            ntot,
            basic: vec![0; m],
            stat: vec![Stat::AtLower; ntot],
            values: vec![0.0; ntot],
            lu: LuFactor::new(&DenseMatrix::identity(0)).unwrap(),
            etas: Vec::new(),
            iterations: 0,
            max_iterations: 0,
            feas,
            degenerate_run: 0,
            factored: false,
            factor_gen: 0,
        };
        for i in 0..m {
            e.basic[i] = e.p.num_vars + i;
        }
        for j in 0..ntot {
            e.stat[j] = e.default_nonbasic_stat(j);
        }
        for i in 0..m {
            e.stat[e.p.num_vars + i] = Stat::Basic;
        }
        e
    }

    pub fn problem(&self) -> &LpProblem {
        &self.p
    }

    pub fn set_feas(&mut self, feas: f64) {
        self.feas = feas;
    }

    /// Change a structural variable's bounds. Keeps the factorization; the
    /// next solve repairs primal feasibility through the dual pass.
    pub fn set_bound(&mut self, j: usize, lo: f64, up: f64) {
        debug_assert!(j < self.p.num_vars);
        self.p.lower[j] = lo;
        self.p.upper[j] = up;
    }

    /// Append a row; its slack enters the basis, so the factorization is
    /// rebuilt on the next solve. Returns the row index.
    pub fn push_row(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.p.push_row(entries, rhs);
        let slack = self.p.num_vars + row;
        self.m += 1;
        self.ntot += 1;
        self.basic.push(slack);
        self.stat.push(Stat::Basic);
        self.values.push(0.0);
        self.factored = false;
        row
    }

    /// Adopt a basis from an earlier solve (one basic variable per row).
    /// The engine keeps its factorization when the basis already matches;
    /// an inconsistent basis is silently ignored.
    pub fn set_warm(&mut self, basis: &[usize]) {
        if basis == self.basic.as_slice() {
            return;
        }
        let mut seen = vec![false; self.ntot];
        let ok = basis.len() == self.m
            && basis.iter().all(|&j| {
                if j >= self.ntot || seen[j] {
                    false
                } else {
                    seen[j] = true;
                    true
                }
            });
        if !ok {
            return;
        }
        for j in 0..self.ntot {
            if self.stat[j] == Stat::Basic {
                self.stat[j] = self.default_nonbasic_stat(j);
            }
        }
        self.basic = basis.to_vec();
        for &j in &self.basic {
            self.stat[j] = Stat::Basic;
        }
        self.factored = false;
    }

    /// Snapshot of the basis state, cheap to restore while the structure
    /// and factorization survive (probing both children of a node).
    pub fn mark(&self) -> LpMark {
        LpMark {
            basic: self.basic.clone(),
            stat: self.stat.clone(),
            eta_len: self.etas.len(),
            factor_gen: self.factor_gen,
            num_rows: self.m,
        }
    }

    /// Return to a marked basis state. Rows appended since the mark make
    /// it unusable (returns false). When the factorization was rebuilt in
    /// between, the restore still works but schedules a refactorization.
    pub fn rollback(&mut self, mark: &LpMark) -> bool {
        if mark.num_rows != self.m {
            return false;
        }
        self.basic.clone_from(&mark.basic);
        self.stat.clone_from(&mark.stat);
        if mark.factor_gen == self.factor_gen && mark.eta_len <= self.etas.len() {
            self.etas.truncate(mark.eta_len);
        } else {
            self.factored = false;
        }
        true
    }

    /// Solve from the current state. Bound-only changes are repaired by a
    /// dual simplex pass on the existing factorization; structural changes
    /// refactorize first, and anything the dual pass cannot finish falls
    /// through to the primal phases, which double as the final polish.
    pub fn solve(&mut self) -> LpSolution {
        let m = self.m;
        self.iterations = 0;
        self.max_iterations = 400 + 60 * (m + self.p.num_vars);
        self.degenerate_run = 0;
        let costs = self.p.objective.clone();

        if self.factored {
            self.recompute_values();
        } else {
            self.factorize();
        }

        let mut status = LpStatus::Optimal;
        let mut settled = false;
        let inf_tol = self.feas * (1.0 + m as f64);
        if self.infeasibility() > inf_tol {
            // Nonbasic statuses may come from a different solve (adopted
            // warm basis) or bounds may have moved; park each boxed
            // nonbasic at the bound its reduced-cost sign asks for. For a
            // basis that was optimal before a bound change or row append
            // this reconstructs the old statuses, hence a dual feasible
            // start.
            let pi = self.price(&costs);
            let mut flipped = false;
            for j in 0..self.ntot {
                if self.stat[j] == Stat::Basic {
                    continue;
                }
                let lo = self.lower(j);
                let up = self.upper(j);
                if !(lo.is_finite() && up.is_finite()) || lo == up {
                    continue;
                }
                let d = costs.get(j).copied().unwrap_or(0.0) - self.col_dot(j, &pi);
                let want = if d < 0.0 { Stat::AtUpper } else { Stat::AtLower };
                if self.stat[j] != want {
                    self.stat[j] = want;
                    flipped = true;
                }
            }
            if flipped {
                self.recompute_values();
            }
            if self.infeasibility() > inf_tol && self.dual_feasible(&costs) {
                if let DualPass::Done(s @ (LpStatus::Infeasible | LpStatus::IterationLimit)) =
                    self.iterate_dual(&costs)
                {
                    status = s;
                    settled = true;
                }
            }
        }

        if !settled {
            // Phase 2 can drift slightly out of bounds through relaxed
            // ratio tests; one clean-up round of phase 1 repairs that.
            let mut rounds = 0;
            loop {
                status = self.iterate(&[], true);
                if status != LpStatus::Optimal {
                    break;
                }
                status = self.iterate(&costs, false);
                rounds += 1;
                if status != LpStatus::Optimal
                    || self.infeasibility() <= inf_tol
                    || rounds >= 3
                {
                    break;
                }
            }
        }

        // Clean accumulated drift before reading the solution off.
        self.recompute_values();

        // Duals and the dual residual from the final basis.
        let mut duals = vec![0.0; m];
        let mut dual_residual = 0.0_f64;
        if status == LpStatus::Optimal {
            let pi = self.price(&costs);
            for i in 0..m {
                duals[i] = (-pi[i]).max(0.0);
            }
            for j in 0..self.ntot {
                if self.stat[j] == Stat::Basic {
                    continue;
                }
                let cj = costs.get(j).copied().unwrap_or(0.0);
                let d = cj - self.col_dot(j, &pi);
                let viol = match self.stat[j] {
                    Stat::AtLower => (-d).max(0.0),
                    Stat::AtUpper => d.max(0.0),
                    Stat::FreeZero => d.abs(),
                    Stat::Basic => unreachable!(),
                };
                dual_residual = dual_residual.max(viol);
            }
        }

        let x: Vec<f64> = self.values[..self.p.num_vars].to_vec();
        let objective = dot(&costs, &x);
        LpSolution {
            status,
            x,
            objective,
            duals,
            dual_residual,
            basis: self.basic.clone(),
            iterations: self.iterations,
        }
    }
}

/// One-shot solve. `warm_basis` may carry the basic variable of each row
/// from a related solve; an inconsistent warm basis is silently ignored.
/// Repeated related solves are cheaper through a persistent [`LpEngine`].
pub fn solve_lp(p: &LpProblem, warm_basis: Option<&[usize]>, feas_tol: f64) -> LpSolution {
    let mut e = LpEngine::new(p.clone(), feas_tol);
    if let Some(wb) = warm_basis {
        e.set_warm(wb);
    }
    e.solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FEAS: f64 = 1e-9;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn unconstrained_box_minimum() {
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![1.0, -1.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![2.0, 3.0];
        let s = solve_lp(&p, None, FEAS);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_close(s.x[0], 0.0, 1e-9);
        assert_close(s.x[1], 3.0, 1e-9);
        assert_close(s.objective, -3.0, 1e-9);
    }

    #[test]
    fn simple_row_binds() {
        // min -x1 - x2 s.t. x1 + x2 <= 1, x in [0,1]^2.
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![-1.0, -1.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.push_row(&[(0, 1.0), (1, 1.0)], 1.0);
        let s = solve_lp(&p, None, FEAS);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_close(s.objective, -1.0, 1e-9);
        assert_close(s.x[0] + s.x[1], 1.0, 1e-9);
        assert_close(s.duals[0], 1.0, 1e-9);
        assert!(s.dual_residual <= 1e-8);
    }

    #[test]
    fn equality_pair_infeasible_at_origin() {
        // sum x = 1 written as two rows; starting all-slack basis is
        // infeasible so phase 1 must run.
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![1.0, 2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.push_row(&[(0, 1.0), (1, 1.0)], 1.0);
        p.push_row(&[(0, -1.0), (1, -1.0)], -1.0);
        let s = solve_lp(&p, None, FEAS);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_close(s.objective, 1.0, 1e-9);
        assert_close(s.x[0], 1.0, 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut p = LpProblem::new(1, 0);
        p.lower = vec![0.0];
        p.upper = vec![1.0];
        p.push_row(&[(0, 1.0)], -2.0);
        assert_eq!(solve_lp(&p, None, FEAS).status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut p = LpProblem::new(1, 0);
        p.objective = vec![-1.0];
        p.lower = vec![0.0];
        assert_eq!(solve_lp(&p, None, FEAS).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_with_rows() {
        // min y s.t. -y <= 2  (y >= -2), y free.
        let mut p = LpProblem::new(1, 0);
        p.objective = vec![1.0];
        p.push_row(&[(0, -1.0)], 2.0);
        let s = solve_lp(&p, None, FEAS);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_close(s.x[0], -2.0, 1e-9);
    }

    #[test]
    fn warm_basis_accepted() {
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![-1.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![4.0, 4.0];
        p.push_row(&[(0, 1.0), (1, 1.0)], 5.0);
        p.push_row(&[(0, 1.0), (1, 3.0)], 9.0);
        let cold = solve_lp(&p, None, FEAS);
        assert_eq!(cold.status, LpStatus::Optimal);
        let warm = solve_lp(&p, Some(&cold.basis), FEAS);
        assert_eq!(warm.status, LpStatus::Optimal);
        assert_close(warm.objective, cold.objective, 1e-9);
        assert!(warm.iterations <= cold.iterations);
    }

    #[test]
    fn warm_resolve_after_fixing_is_cheap() {
        // min -x1 - 2x2 s.t. x1 + x2 <= 1.5, x in [0,1]^2: optimum (0.5, 1).
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![-1.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.push_row(&[(0, 1.0), (1, 1.0)], 1.5);
        let base = solve_lp(&p, None, FEAS);
        assert_eq!(base.status, LpStatus::Optimal);
        assert_close(base.objective, -2.5, 1e-9);

        // Fix x2 = 0: the old basis stays dual feasible, so the dual pass
        // should repair it in a pivot or two.
        let mut q = p.clone();
        q.upper[1] = 0.0;
        let warm = solve_lp(&q, Some(&base.basis), FEAS);
        assert_eq!(warm.status, LpStatus::Optimal);
        assert_close(warm.objective, -1.0, 1e-9);
        assert_close(warm.x[0], 1.0, 1e-9);
        assert!(warm.iterations <= 4, "took {} pivots", warm.iterations);
    }

    #[test]
    fn warm_resolve_after_new_row_is_cheap() {
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![-1.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.push_row(&[(0, 1.0), (1, 1.0)], 1.5);
        let base = solve_lp(&p, None, FEAS);
        assert_eq!(base.status, LpStatus::Optimal);

        // The appended row cuts off (0.5, 1); its slack pads the basis.
        let mut q = p.clone();
        q.push_row(&[(0, 1.0), (1, 2.0)], 2.0);
        let mut basis = base.basis.clone();
        basis.push(q.num_vars + 1);
        let warm = solve_lp(&q, Some(&basis), FEAS);
        assert_eq!(warm.status, LpStatus::Optimal);
        assert_close(warm.objective, -2.0, 1e-9);
        assert!(warm.iterations <= 4, "took {} pivots", warm.iterations);
    }

    #[test]
    fn warm_resolve_detects_infeasible_fixing() {
        // x1 + x2 >= 1.5 with both variables then fixed to zero.
        let mut p = LpProblem::new(2, 0);
        p.objective = vec![1.0, 1.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![2.0, 2.0];
        p.push_row(&[(0, -1.0), (1, -1.0)], -1.5);
        let base = solve_lp(&p, None, FEAS);
        assert_eq!(base.status, LpStatus::Optimal);

        let mut q = p.clone();
        q.upper[0] = 0.0;
        q.upper[1] = 0.0;
        let warm = solve_lp(&q, Some(&base.basis), FEAS);
        assert_eq!(warm.status, LpStatus::Infeasible);
    }

    #[test]
    fn degenerate_cube_terminates() {
        // Highly degenerate: many redundant rows through one vertex.
        let mut p = LpProblem::new(3, 0);
        p.objective = vec![-1.0, -1.0, -1.0];
        p.lower = vec![0.0; 3];
        p.upper = vec![1.0; 3];
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    p.push_row(&[(a, 1.0), (b, 1.0)], 2.0);
                }
            }
        }
        p.push_row(&[(0, 1.0), (1, 1.0), (2, 1.0)], 3.0);
        let s = solve_lp(&p, None, FEAS);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_close(s.objective, -3.0, 1e-8);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Random LPs over a box with random rows: verify feasibility
            /// of the reported point, dual signs and the dual residual.
            #[test]
            fn feasible_and_dual_consistent(
                (nv, seedrows) in (2usize..5, 1usize..4),
                coefs in proptest::collection::vec(-3.0..3.0f64, 40),
                rhs in proptest::collection::vec(0.2..4.0f64, 8),
                obj in proptest::collection::vec(-2.0..2.0f64, 8),
            ) {
                let mut p = LpProblem::new(nv, 0);
                p.lower = vec![0.0; nv];
                p.upper = vec![1.5; nv];
                for j in 0..nv {
                    p.objective[j] = obj[j % obj.len()];
                }
                let mut it = coefs.iter().cycle();
                for r in 0..seedrows {
                    let entries: Vec<(usize, f64)> =
                        (0..nv).map(|j| (j, *it.next().unwrap())).collect();
                    p.push_row(&entries, rhs[r % rhs.len()]);
                }
                let s = solve_lp(&p, None, FEAS);
                // x = 0 is feasible iff all rhs >= 0, which holds here.
                prop_assert_eq!(s.status, LpStatus::Optimal);
                for j in 0..nv {
                    prop_assert!(s.x[j] >= -1e-8 && s.x[j] <= 1.5 + 1e-8);
                }
                for (r, &rv) in p.rhs.iter().enumerate() {
                    let lhs: f64 = (0..nv).map(|j| {
                        p.cols[j].iter().filter(|&&(rr, _)| rr == r).map(|&(_, a)| a * s.x[j]).sum::<f64>()
                    }).sum();
                    prop_assert!(lhs <= rv + 1e-7, "row {r}: {lhs} > {rv}");
                }
                prop_assert!(s.dual_residual <= 1e-7);
                for &d in &s.duals { prop_assert!(d >= 0.0); }
            }

            /// Re-solving from the optimal basis after a bound change must
            /// agree with a cold solve (the dual pass handles the repair).
            #[test]
            fn warm_refix_matches_cold(
                nv in 2usize..5,
                coefs in proptest::collection::vec(-3.0..3.0f64, 40),
                rhs in proptest::collection::vec(0.2..4.0f64, 8),
                obj in proptest::collection::vec(-2.0..2.0f64, 8),
                pick in 0usize..8,
                v in 0.0..1.0f64,
            ) {
                let mut p = LpProblem::new(nv, 0);
                p.lower = vec![0.0; nv];
                p.upper = vec![1.5; nv];
                for j in 0..nv {
                    p.objective[j] = obj[j % obj.len()];
                }
                let mut it = coefs.iter().cycle();
                for r in 0..3 {
                    let entries: Vec<(usize, f64)> =
                        (0..nv).map(|j| (j, *it.next().unwrap())).collect();
                    p.push_row(&entries, rhs[r % rhs.len()]);
                }
                let base = solve_lp(&p, None, FEAS);
                prop_assert_eq!(base.status, LpStatus::Optimal);

                let mut q = p.clone();
                let j = pick % nv;
                q.lower[j] = v;
                q.upper[j] = v;
                let cold = solve_lp(&q, None, FEAS);
                let warm = solve_lp(&q, Some(&base.basis), FEAS);
                prop_assert_eq!(warm.status, cold.status);
                if cold.status == LpStatus::Optimal {
                    let scale = 1.0 + cold.objective.abs();
                    prop_assert!(
                        (warm.objective - cold.objective).abs() <= 1e-6 * scale,
                        "warm {} vs cold {}", warm.objective, cold.objective
                    );
                }
            }
        }
    }
}
