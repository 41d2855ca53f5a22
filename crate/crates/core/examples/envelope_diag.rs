//! Perfect outer-approximation loop by full enumeration: counts how many
//! exact support cuts the envelope needs before its minimum over binary
//! points reaches the optimum, starting from a converged fractional root.
//! Scratch diagnostic.

use std::time::Instant;

use miqp_core::cuts::{cut_persp, solve_reduced, Cut};
use miqp_core::decompose::Decomposition;
use miqp_core::instances::{generate_portfolio, PortfolioSpec};
use miqp_core::master::MasterProblem;
use miqp_core::simplex::LpStatus;
use miqp_core::Tolerances;

fn supports(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

fn snap(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v < 1e-6 { 0.0 } else { v.min(1.0) }).collect()
}

fn main() {
    let tol = Tolerances::default();
    for (n, k, seed) in [(20usize, 6usize, 72u64), (25, 6, 72)] {
        let inst = generate_portfolio(&PortfolioSpec { n, k: Some(k), seed }).unwrap();
        let decomp = Decomposition::auto(&inst.q, &tol).unwrap();

        // Converge the fractional root, keeping a copy of every cut.
        let t0 = Instant::now();
        let mut master = MasterProblem::new(&inst, 0.0);
        let mut all_cuts: Vec<Cut> = Vec::new();
        let mut warm_b: Option<Vec<usize>> = None;
        let mut warm_a: Option<Vec<usize>> = None;
        let mut root = f64::NEG_INFINITY;
        let mut rounds_root = 0usize;
        for _ in 0..40000 {
            let lp = master.solve(&[], warm_b.as_deref(), &tol);
            if lp.status != LpStatus::Optimal {
                break;
            }
            root = root.max(lp.objective);
            warm_b = Some(lp.basis.clone());
            let (x, _, eta) = master.split(&lp);
            let xs = snap(&x);
            let sol = match solve_reduced(&inst, &decomp, &xs, warm_a.as_deref(), &tol) {
                Ok(s) => s,
                Err(_) => break,
            };
            warm_a = Some(sol.active_set.clone());
            let cut = cut_persp(&inst, &decomp, &xs, &sol);
            if cut.value_at(&x) - eta <= 1e-6 * sol.marginal.abs().max(1.0) {
                break;
            }
            all_cuts.push(cut.clone());
            master.append_cut(&cut, &sol.y);
            rounds_root += 1;
            if master.num_cuts() > 240 {
                if master.purge_stale_cuts(120) > 0 {
                    warm_b = None;
                }
            }
        }
        let root_time = t0.elapsed().as_secs_f64();

        // True value of every support.
        let sups = supports(n, k);
        let mut truth = vec![f64::INFINITY; sups.len()];
        let mut warm: Option<Vec<usize>> = None;
        let mut best = f64::INFINITY;
        for (s, sup) in sups.iter().enumerate() {
            let mut x = vec![0.0; n];
            for &i in sup {
                x[i] = 1.0;
            }
            if let Ok(sol) = solve_reduced(&inst, &decomp, &x, warm.as_deref(), &tol) {
                truth[s] = sol.marginal;
                warm = Some(sol.active_set.clone());
                best = best.min(sol.marginal);
            }
        }

        // Envelope from the root cuts, then the perfect OA loop.
        let t1 = Instant::now();
        let mut env = vec![f64::NEG_INFINITY; sups.len()];
        for cut in &all_cuts {
            for s in 0..sups.len() {
                let mut v = cut.offset;
                for &i in &sups[s] {
                    v += cut.t[i];
                }
                if v > env[s] {
                    env[s] = v;
                }
            }
        }
        let root_env_min =
            env.iter().zip(&truth).filter(|(_, t)| t.is_finite()).map(|(e, _)| *e).fold(
                f64::INFINITY,
                f64::min,
            );
        let mut rounds = 0usize;
        loop {
            let (mut amin, mut vmin) = (usize::MAX, f64::INFINITY);
            for s in 0..sups.len() {
                if truth[s].is_finite() && env[s] < vmin {
                    vmin = env[s];
                    amin = s;
                }
            }
            let scale = 1.0 + best.abs();
            if vmin >= best - 1e-4 * scale {
                break;
            }
            let mut x = vec![0.0; n];
            for &i in &sups[amin] {
                x[i] = 1.0;
            }
            let sol = solve_reduced(&inst, &decomp, &x, None, &tol).unwrap();
            let cut = cut_persp(&inst, &decomp, &x, &sol);
            for s in 0..sups.len() {
                let mut v = cut.offset;
                for &i in &sups[s] {
                    v += cut.t[i];
                }
                if v > env[s] {
                    env[s] = v;
                }
            }
            rounds += 1;
            if rounds > 20000 {
                break;
            }
        }
        println!(
            "n={n} k={k}: opt={best:.4} root={root:.4} root_env_min={root_env_min:.4} root_rounds={rounds_root} ({root_time:.1}s) oa_rounds={rounds} ({:.1}s)",
            t1.elapsed().as_secs_f64()
        );
    }
}
