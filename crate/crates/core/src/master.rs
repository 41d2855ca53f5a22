//! Relaxation master problem and branch and bound on the selection
//! variables.
//!
//! The master is the linear program
//!
//! ```text
//!   min eta   s.t.  A y <= b,   C y - D x <= 0,   sum_j x_j <= k,
//!                   t'x - eta <= -offset        (one row per cut)
//!                   x in [0,1]^n,  eta >= eta_lb
//! ```
//!
//! over the variables `[x, y, eta]`. Keeping `y` in the master makes the
//! existence of a feasible inner point part of the relaxation, so any
//! integral `x` the tree visits admits a feasible `y` by construction.
//! `eta_lb` must be a finite lower bound on the optimal value or the
//! uncut master is unbounded.
//!
//! [`branch_and_bound`] runs a best-bound tree search: nodes carry bound
//! fixings for `x`, warm-start the simplex with the parent basis, and
//! hand every integral point to a caller-supplied callback that may
//! answer with a violated cut (the node is then re-solved) or accept the
//! point. The callback also reports the true objective of the point,
//! which is injected as an incumbent even while cuts are still being
//! added. Branching scores variables by recorded bound-gain rates; a
//! variable's first branching solves both children outright, which both
//! seeds its rates and gives the children exact bounds.

use crate::cuts::{Cut, CutError, CutSource};
use crate::instances::MiqpInstance;
use crate::simplex::{LpEngine, LpMark, LpProblem, LpSolution, LpStatus};
use crate::tol::Tolerances;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MasterError {
    #[error(transparent)]
    Callback(#[from] CutError),
    #[error("node {node} kept producing violated cuts without progress")]
    Stalled { node: usize },
    #[error("LP solver hit its iteration limit at node {node}")]
    LpLimit { node: usize },
    #[error("master LP reported an unbounded objective; eta_lb must be finite")]
    Unbounded,
}

/// One live cut row plus what is needed to reuse or regenerate it.
struct PoolCut {
    cut: Cut,
    /// Inner minimizer at the generating point, for incumbent reuse.
    y: Vec<f64>,
    /// Solve counter value the last time the row was binding.
    last_binding: usize,
    sequence: usize,
    /// Pinned rows survive every purge.
    pinned: bool,
}

/// The master LP with variables `[x(0..n), y(n..2n), eta(2n)]`.
///
/// Cut rows live in a pool behind the base rows. The pool deduplicates on
/// (generator, bit pattern of the generating point), remembers when each
/// row was last binding, and can purge long-slack rows to keep the LP
/// small; every purge bumps an epoch so callers can drop stale bases.
pub struct MasterProblem {
    pub n: usize,
    engine: LpEngine,
    base_lp: LpProblem,
    base_feas_scale: f64,
    pool: Vec<PoolCut>,
    index: HashMap<(CutSource, Vec<u64>), usize>,
    solves: usize,
    epoch: usize,
    appended: usize,
    feas_scale: f64,
}

impl MasterProblem {
    pub fn new(inst: &MiqpInstance, eta_lb: f64) -> MasterProblem {
        assert!(eta_lb.is_finite(), "the master needs a finite eta lower bound");
        let n = inst.n;
        let mut lp = LpProblem::new(2 * n + 1, 0);
        for j in 0..n {
            lp.lower[j] = 0.0;
            lp.upper[j] = 1.0;
        }
        lp.lower[2 * n] = eta_lb;
        lp.objective[2 * n] = 1.0;

        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
        for r in 0..inst.m1() {
            entries.clear();
            for (j, &v) in inst.a.row(r).iter().enumerate() {
                entries.push((n + j, v));
            }
            lp.push_row(&entries, inst.b[r]);
        }
        for r in 0..inst.m2() {
            entries.clear();
            for (j, &v) in inst.c.row(r).iter().enumerate() {
                entries.push((n + j, v));
            }
            for (j, &v) in inst.d.row(r).iter().enumerate() {
                entries.push((j, -v));
            }
            lp.push_row(&entries, 0.0);
        }
        if let Some(k) = inst.k {
            entries.clear();
            for j in 0..n {
                entries.push((j, 1.0));
            }
            lp.push_row(&entries, k as f64);
        }
        let feas_scale = lp.rhs.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        MasterProblem {
            n,
            base_lp: lp.clone(),
            engine: LpEngine::new(lp, 1e-9),
            base_feas_scale: feas_scale,
            pool: Vec::new(),
            index: HashMap::new(),
            solves: 0,
            epoch: 0,
            appended: 0,
            feas_scale,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.engine.problem().num_rows
    }

    pub fn num_cuts(&self) -> usize {
        self.pool.len()
    }

    /// Bumped on every purge; warm bases recorded under an older epoch
    /// refer to different rows and should be discarded.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn cut_row_entries(n: usize, cut: &Cut) -> Vec<(usize, f64)> {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
        for (j, &v) in cut.t.iter().enumerate() {
            entries.push((j, v));
        }
        entries.push((2 * n, -1.0));
        entries
    }

    /// Append `t'x - eta <= -offset`; returns the new row index. `y` is
    /// the inner minimizer at the generating point, kept so a repeat of
    /// the point can reuse the evaluation instead of solving again.
    pub fn append_cut(&mut self, cut: &Cut, y: &[f64]) -> usize {
        debug_assert_eq!(cut.t.len(), self.n);
        let row = self.engine.push_row(&Self::cut_row_entries(self.n, cut), -cut.offset);
        self.feas_scale = self.feas_scale.max(cut.offset.abs());
        self.index.insert(cut.dedup_key(), self.pool.len());
        self.pool.push(PoolCut {
            cut: cut.clone(),
            y: y.to_vec(),
            last_binding: self.solves,
            sequence: self.appended,
            pinned: false,
        });
        self.appended += 1;
        row
    }

    /// Exempt the cut behind this row index from purging.
    pub fn pin_cut(&mut self, row: usize) {
        let idx = row - self.base_lp.num_rows;
        self.pool[idx].pinned = true;
    }

    /// Marginal value and inner minimizer recorded for this generating
    /// point, if its cut row is still in the pool.
    pub fn cached(&self, source: CutSource, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let key = (source, x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        self.index
            .get(&key)
            .map(|&i| (self.pool[i].cut.marginal_value, self.pool[i].y.clone()))
    }

    /// Drop cut rows down to the `keep` most recently binding ones (rows
    /// binding at the latest solve always survive). Stale rows can always
    /// be regenerated if their point comes back, so this only trades a
    /// possible re-evaluation for a smaller basis.
    pub fn purge_stale_cuts(&mut self, keep: usize) -> usize {
        if self.pool.len() <= keep {
            return 0;
        }
        let mut order: Vec<usize> = (0..self.pool.len()).collect();
        order.sort_by_key(|&i| {
            std::cmp::Reverse((self.pool[i].last_binding, self.pool[i].sequence))
        });
        let mut keep_flag = vec![false; self.pool.len()];
        for (rank, &i) in order.iter().enumerate() {
            keep_flag[i] =
                rank < keep || self.pool[i].pinned || self.pool[i].last_binding == self.solves;
        }
        let removed = keep_flag.iter().filter(|&&k| !k).count();
        if removed == 0 {
            return 0;
        }

        let mut pool = Vec::with_capacity(self.pool.len() - removed);
        self.index.clear();
        let mut lp = self.base_lp.clone();
        self.feas_scale = self.base_feas_scale;
        for (i, pc) in std::mem::take(&mut self.pool).into_iter().enumerate() {
            if !keep_flag[i] {
                continue;
            }
            lp.push_row(&Self::cut_row_entries(self.n, &pc.cut), -pc.cut.offset);
            self.feas_scale = self.feas_scale.max(pc.cut.offset.abs());
            self.index.insert(pc.cut.dedup_key(), pool.len());
            pool.push(pc);
        }
        self.engine = LpEngine::new(lp, 1e-9);
        self.pool = pool;
        self.epoch += 1;
        removed
    }

    /// Solve with the given binary fixings applied to the `x` bounds.
    /// A warm basis from an earlier solve is padded with slack columns
    /// for rows appended since.
    pub fn solve(
        &mut self,
        fixings: &[(usize, bool)],
        warm: Option<&[usize]>,
        tol: &Tolerances,
    ) -> LpSolution {
        self.engine.set_feas(tol.feas * self.feas_scale);
        for &(j, v) in fixings {
            let b = if v { 1.0 } else { 0.0 };
            self.engine.set_bound(j, b, b);
        }
        if let Some(wb) = warm {
            let padded = self.pad_basis(wb);
            self.engine.set_warm(&padded);
        }
        let sol = self.engine.solve();
        for &(j, _) in fixings {
            self.engine.set_bound(j, 0.0, 1.0);
        }
        if sol.status == LpStatus::Optimal {
            self.solves += 1;
            let eta = sol.x[2 * self.n];
            let bind_tol = 10.0 * tol.feas * self.feas_scale.max(1.0);
            for pc in &mut self.pool {
                let act = crate::linalg::dot(&pc.cut.t, &sol.x[..self.n]) - eta;
                if -pc.cut.offset - act <= bind_tol {
                    pc.last_binding = self.solves;
                }
            }
        }
        sol
    }

    fn pad_basis(&self, basis: &[usize]) -> Vec<usize> {
        let mut wb = basis.to_vec();
        let p = self.engine.problem();
        // Old slack/structural indices are unchanged by new rows; new rows
        // enter with their own slack basic.
        for r in wb.len()..p.num_rows {
            wb.push(p.num_vars + r);
        }
        wb
    }

    /// Snapshot of the LP engine state; restoring it makes the next solve
    /// as cheap as a parent-to-child transition. See [`LpEngine::mark`].
    pub fn mark(&self) -> LpMark {
        self.engine.mark()
    }

    pub fn rollback(&mut self, mark: &LpMark) -> bool {
        self.engine.rollback(mark)
    }

    pub fn split(&self, sol: &LpSolution) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.n;
        (sol.x[..n].to_vec(), sol.x[n..2 * n].to_vec(), sol.x[2 * n])
    }
}

/// What the integral-point callback decided.
pub struct IntegralOutcome {
    /// True objective value of the (snapped) point.
    pub marginal: f64,
    /// Inner minimizer backing that value.
    pub y: Vec<f64>,
    /// A violated cut to append; `None` accepts the point and closes the
    /// node.
    pub cut: Option<Cut>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnbStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct Incumbent {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum NodeAction {
    Branch { var: usize },
    Integral { cuts: usize, accepted: bool },
    PruneBound,
    PruneInfeasible,
}

impl NodeAction {
    pub fn label(&self) -> &'static str {
        match self {
            NodeAction::Branch { .. } => "branch",
            NodeAction::Integral { .. } => "integral",
            NodeAction::PruneBound => "prune-bound",
            NodeAction::PruneInfeasible => "prune-infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NodeRecord {
    pub id: usize,
    pub depth: usize,
    pub bound: f64,
    pub action: NodeAction,
}

#[derive(Debug)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub incumbent: Option<Incumbent>,
    /// Proven lower bound on the master optimum at termination.
    pub lower_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub node_log: Vec<NodeRecord>,
}

pub struct BnbConfig {
    /// Relative optimality gap at which the search stops.
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Purge down to half this many cut rows whenever the pool exceeds it;
    /// `None` keeps every row.
    pub max_cut_rows: Option<usize>,
    /// When set, integral points whose cut from this generator is already
    /// pooled skip the callback and close on the recorded evaluation.
    pub dedup_source: Option<CutSource>,
    /// Times per node a fractional LP optimum is offered to the
    /// fractional-cut callback before branching.
    pub frac_cut_rounds: usize,
    /// Known feasible point to start from; prunes from the first node.
    /// Its value must be the true objective of the point.
    pub initial_incumbent: Option<Incumbent>,
    pub collect_node_log: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            gap_tol: 0.0,
            time_limit: None,
            node_limit: None,
            max_cut_rows: None,
            dedup_source: None,
            frac_cut_rounds: 0,
            initial_incumbent: None,
            collect_node_log: false,
        }
    }
}

/// Fractional-cut callback that never separates; pass it to solve the
/// current master as a plain MILP.
pub fn no_fractional_cuts(_x: &[f64], _eta: f64) -> Result<Option<Cut>, CutError> {
    Ok(None)
}

struct Node {
    bound: f64,
    id: usize,
    depth: usize,
    fixings: Vec<(usize, bool)>,
}

// Min-heap on bound; ties pop the newest node first so runs of equal
// bounds (for example before any cut separates the relaxation) are
// explored depth first and reach an incumbent quickly.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap()
            .then_with(|| self.id.cmp(&other.id))
    }
}

fn gap_met(ub: f64, lb: f64, gap_tol: f64) -> bool {
    ub - lb <= gap_tol * ub.abs().max(1.0)
}

/// Observed LP bound gain per unit of rounding, per side of a variable.
#[derive(Clone, Copy, Default)]
struct PseudoCost {
    down_sum: f64,
    down_cnt: usize,
    up_sum: f64,
    up_cnt: usize,
}

impl PseudoCost {
    fn record(&mut self, up: bool, gain: f64, moved: f64) {
        let rate = gain / moved.max(1e-9);
        if up {
            self.up_sum += rate;
            self.up_cnt += 1;
        } else {
            self.down_sum += rate;
            self.down_cnt += 1;
        }
    }
}

const MAX_NODE_RESOLVES: usize = 500;

/// Fractional candidates probed per node before the scores decide.
const PROBE_CANDIDATES: usize = 8;

/// Best-bound branch and bound over the master. `on_integral` is invoked
/// at every integral LP solution with the snapped `x`, the LP `y`, and
/// `eta`; see [`IntegralOutcome`] for the contract. `on_fractional` may
/// return a violated cut at a fractional LP optimum (the node re-solves,
/// up to [`BnbConfig::frac_cut_rounds`] times) or `None` to branch. Pass
/// [`no_fractional_cuts`] and an `on_integral` that never returns a cut
/// to solve the current master as a plain MILP.
pub fn branch_and_bound<F, G>(
    master: &mut MasterProblem,
    cfg: &BnbConfig,
    tol: &Tolerances,
    mut on_integral: F,
    mut on_fractional: G,
) -> Result<BnbResult, MasterError>
where
    F: FnMut(&[f64], &[f64], f64) -> Result<IntegralOutcome, CutError>,
    G: FnMut(&[f64], f64) -> Result<Option<Cut>, CutError>,
{
    let start = Instant::now();
    let mut result = BnbResult {
        status: BnbStatus::Optimal,
        incumbent: None,
        lower_bound: f64::NEG_INFINITY,
        nodes: 0,
        lp_iterations: 0,
        node_log: Vec::new(),
    };
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 0usize;
    heap.push(Node { bound: f64::NEG_INFINITY, id: 0, depth: 0, fixings: Vec::new() });
    next_id += 1;

    let mut best_value = f64::INFINITY;
    if let Some(inc) = &cfg.initial_incumbent {
        best_value = inc.value;
        result.incumbent = Some(inc.clone());
    }
    // Least LP bound among subtrees closed without full exploration;
    // the honest final lower bound is min(best, closed, open).
    let mut closed_min = f64::INFINITY;

    // Branching state: per-variable bound-gain rates, learned from one
    // probing pair per variable (both children solved once) and from the
    // bound movements the tree observes afterwards.
    let mut pseudo: Vec<PseudoCost> = vec![PseudoCost::default(); master.n];
    let mut probe_budget = master.n;
    let mut all_rates = PseudoCost::default();

    while let Some(node) = heap.pop() {
        if best_value.is_finite() && gap_met(best_value, node.bound, cfg.gap_tol) {
            closed_min = closed_min.min(node.bound);
            if cfg.collect_node_log {
                result.node_log.push(NodeRecord {
                    id: node.id,
                    depth: node.depth,
                    bound: node.bound,
                    action: NodeAction::PruneBound,
                });
            }
            continue;
        }
        if let Some(limit) = cfg.time_limit {
            if start.elapsed() >= limit {
                result.status = BnbStatus::TimeLimit;
                heap.push(node);
                break;
            }
        }
        if let Some(limit) = cfg.node_limit {
            if result.nodes >= limit {
                result.status = BnbStatus::TimeLimit;
                heap.push(node);
                break;
            }
        }
        result.nodes += 1;

        if let Some(cap) = cfg.max_cut_rows {
            if master.num_cuts() > cap {
                master.purge_stale_cuts(cap / 2);
            }
        }
        let mut resolves = 0usize;
        let mut cuts_this_node = 0usize;
        let mut frac_rounds_left = cfg.frac_cut_rounds;
        let (record_bound, action) = loop {
            // No stored warm basis: the engine continues from wherever the
            // last solve left it. Bounds are the only thing that changed, so
            // that state is dual feasible here and the repair is short.
            let sol = master.solve(&node.fixings, None, tol);
            result.lp_iterations += sol.iterations;
            match sol.status {
                LpStatus::Infeasible => break (node.bound, NodeAction::PruneInfeasible),
                LpStatus::Unbounded => return Err(MasterError::Unbounded),
                LpStatus::IterationLimit => {
                    return Err(MasterError::LpLimit { node: node.id })
                }
                LpStatus::Optimal => {}
            }
            let (x, y, eta) = master.split(&sol);

            if best_value.is_finite() && gap_met(best_value, sol.objective, cfg.gap_tol) {
                closed_min = closed_min.min(sol.objective);
                let action = if cuts_this_node > 0 {
                    NodeAction::Integral { cuts: cuts_this_node, accepted: false }
                } else {
                    NodeAction::PruneBound
                };
                break (sol.objective, action);
            }

            let frac = |v: f64| v.min(1.0 - v).max(0.0);
            let mut cands: Vec<(usize, f64)> = x
                .iter()
                .enumerate()
                .filter(|&(_, &v)| frac(v) > tol.integrality)
                .map(|(j, &v)| (j, v))
                .collect();

            if !cands.is_empty() {
                // Tighten the node bound with cuts at the fractional
                // optimum before committing to a branching.
                if frac_rounds_left > 0 {
                    if let Some(cut) = on_fractional(&x, eta)? {
                        master.append_cut(&cut, &[]);
                        frac_rounds_left -= 1;
                        cuts_this_node += 1;
                        resolves += 1;
                        if resolves > MAX_NODE_RESOLVES {
                            return Err(MasterError::Stalled { node: node.id });
                        }
                        continue;
                    }
                }

                // First encounter of a variable: solve both children once.
                // That pins down their true bounds for this node and seeds
                // the rates; later encounters are scored from the record.
                cands.sort_by(|a, b| {
                    frac(b.1).partial_cmp(&frac(a.1)).unwrap().then(a.0.cmp(&b.0))
                });
                let mut probed: Vec<(usize, [Option<f64>; 2])> = Vec::new();
                // The engine sits at the parent optimum, so each probe is a
                // handful of dual pivots; the mark brings it back between
                // children without refactorizing.
                let parent_mark = master.mark();
                for &(j, v) in cands.iter().take(PROBE_CANDIDATES) {
                    if probe_budget == 0 {
                        break;
                    }
                    if pseudo[j].down_cnt > 0 && pseudo[j].up_cnt > 0 {
                        continue;
                    }
                    probe_budget -= 1;
                    let mut bounds = [None, None];
                    for (side, bnd) in bounds.iter_mut().enumerate() {
                        let mut fixings = node.fixings.clone();
                        fixings.push((j, side == 1));
                        let s = master.solve(&fixings, None, tol);
                        master.rollback(&parent_mark);
                        result.lp_iterations += s.iterations;
                        match s.status {
                            LpStatus::Optimal => {
                                let gain = (s.objective - sol.objective).max(0.0);
                                let moved = if side == 1 { 1.0 - v } else { v };
                                pseudo[j].record(side == 1, gain, moved);
                                all_rates.record(side == 1, gain, moved);
                                *bnd = Some(s.objective.max(sol.objective));
                            }
                            LpStatus::Infeasible => *bnd = Some(f64::INFINITY),
                            LpStatus::Unbounded => return Err(MasterError::Unbounded),
                            LpStatus::IterationLimit => {
                                return Err(MasterError::LpLimit { node: node.id })
                            }
                        }
                    }
                    probed.push((j, bounds));
                }

                // Product rule on the estimated child gains; variables
                // without a record fall back to the tree-wide average.
                let avg = |sum: f64, cnt: usize, fallback: f64| {
                    if cnt > 0 {
                        sum / cnt as f64
                    } else {
                        fallback
                    }
                };
                let fall_down = avg(all_rates.down_sum, all_rates.down_cnt, 1.0);
                let fall_up = avg(all_rates.up_sum, all_rates.up_cnt, 1.0);
                let eps = 1e-9 * (1.0 + sol.objective.abs());
                let mut var = cands[0].0;
                let mut best_score = f64::NEG_INFINITY;
                for &(j, v) in &cands {
                    let gd = avg(pseudo[j].down_sum, pseudo[j].down_cnt, fall_down) * v;
                    let gu = avg(pseudo[j].up_sum, pseudo[j].up_cnt, fall_up) * (1.0 - v);
                    let score = (gd + eps) * (gu + eps);
                    if score > best_score {
                        best_score = score;
                        var = j;
                    }
                }

                let known = probed
                    .iter()
                    .find(|&&(j, _)| j == var)
                    .map(|&(_, b)| b)
                    .unwrap_or([None, None]);
                for (side, kb) in known.iter().enumerate() {
                    let child_bound = kb.unwrap_or(sol.objective);
                    if child_bound.is_infinite() {
                        // Probing found no feasible completion on this side.
                        continue;
                    }
                    if best_value.is_finite() && gap_met(best_value, child_bound, cfg.gap_tol) {
                        closed_min = closed_min.min(child_bound);
                        continue;
                    }
                    let mut fixings = node.fixings.clone();
                    fixings.push((var, side == 1));
                    heap.push(Node {
                        bound: child_bound,
                        id: next_id,
                        depth: node.depth + 1,
                        fixings,
                    });
                    next_id += 1;
                }
                break (sol.objective, NodeAction::Branch { var });
            }

            // Integral point: snap and consult the pool, then the callback.
            // A pooled cut's row is already in the LP, so eta clears it and
            // the recorded evaluation closes the node.
            let snapped: Vec<f64> = x.iter().map(|v| v.round()).collect();
            let IntegralOutcome { marginal, y: inner_y, cut } = match cfg
                .dedup_source
                .and_then(|src| master.cached(src, &snapped))
            {
                Some((marginal, y)) => IntegralOutcome { marginal, y, cut: None },
                None => on_integral(&snapped, &y, eta)?,
            };
            if marginal < best_value {
                best_value = marginal;
                result.incumbent =
                    Some(Incumbent { x: snapped.clone(), y: inner_y.clone(), value: marginal });
            }
            match cut {
                Some(cut) => {
                    master.append_cut(&cut, &inner_y);
                    cuts_this_node += 1;
                    resolves += 1;
                    if resolves > MAX_NODE_RESOLVES {
                        return Err(MasterError::Stalled { node: node.id });
                    }
                }
                None => {
                    closed_min = closed_min.min(sol.objective);
                    break (
                        sol.objective,
                        NodeAction::Integral { cuts: cuts_this_node, accepted: true },
                    );
                }
            }
        };
        if cfg.collect_node_log {
            result.node_log.push(NodeRecord {
                id: node.id,
                depth: node.depth,
                bound: record_bound,
                action,
            });
        }
        if result.nodes == 1 && matches!(action, NodeAction::PruneInfeasible) {
            result.status = BnbStatus::Infeasible;
            result.lower_bound = f64::INFINITY;
            return Ok(result);
        }
    }

    let open_min = heap.iter().map(|nd| nd.bound).fold(f64::INFINITY, f64::min);
    result.lower_bound = best_value.min(closed_min).min(open_min);
    if result.status == BnbStatus::Optimal && result.incumbent.is_none() {
        result.status = BnbStatus::Infeasible;
        result.lower_bound = f64::INFINITY;
    }
    Ok(result)
}
