use miqp_core::cuts::{cut_persp, solve_reduced};
use miqp_core::decompose::{default_delta_min, Decomposition, DeltaStrategy};
use miqp_core::instances::{generate_portfolio, PortfolioSpec};
use miqp_core::linalg::{min_eigenvalue_bound, DenseMatrix};
use miqp_core::master::MasterProblem;
use miqp_core::simplex::LpStatus;
use miqp_core::Tolerances;

fn kelley(inst: &miqp_core::MiqpInstance, decomp: &Decomposition, rounds: usize) -> (f64, usize) {
    let tol = Tolerances::default();
    let mut master = MasterProblem::new(inst, 0.0);
    let n = inst.n;
    let keff = inst.k.unwrap_or(n).min(n);
    let seed = vec![keff as f64 / n as f64; n];
    if let Ok(sol) = solve_reduced(inst, decomp, &seed, None, &tol) {
        master.append_cut(&cut_persp(inst, decomp, &seed, &sol), &sol.y);
    }
    let mut bound = f64::NEG_INFINITY;
    let mut warm_active: Option<Vec<usize>> = None;
    let mut used = 0;
    for it in 0..rounds {
        let lp = master.solve(&[], None, &tol);
        if lp.status != LpStatus::Optimal {
            break;
        }
        bound = bound.max(lp.objective);
        used = it;
        let (x, _, eta) = master.split(&lp);
        let xs: Vec<f64> = x.iter().map(|&v| if v < 1e-9 { 1e-9 } else { v }).collect();
        let sol = match solve_reduced(inst, decomp, &xs, warm_active.as_deref(), &tol) {
            Ok(s) => s,
            Err(_) => break,
        };
        warn_take(&mut warm_active, sol.active_set.clone());
        let cut = cut_persp(inst, decomp, &xs, &sol);
        if cut.value_at(&x) - eta <= 1e-7 * sol.marginal.abs().max(1.0) {
            break;
        }
        master.append_cut(&cut, &sol.y);
        if master.num_cuts() > 360 {
            master.purge_stale_cuts(180);
        }
    }
    (bound, used)
}

fn warn_take(slot: &mut Option<Vec<usize>>, v: Vec<usize>) {
    *slot = Some(v);
}

fn main() {
    for (n, k, seed) in [(30usize, 6usize, 72u64), (60, 6, 71)] {
        let inst = generate_portfolio(&PortfolioSpec { n, k: Some(k), seed }).unwrap();
        let tol = Tolerances::default();
        let q = &inst.q;
        let dmin = default_delta_min(q);

        // (a) diag dominance
        let auto = Decomposition::auto(q, &tol).unwrap();

        // (b) uniform 0.5 lambda_min(Q)
        let lmin_q = min_eigenvalue_bound(q);
        let delta_b = vec![(0.5 * lmin_q).max(dmin); n];
        let mut rb = q.clone();
        for i in 0..n {
            rb[(i, i)] -= delta_b[i];
        }
        let db = Decomposition::from_parts(delta_b, rb, DeltaStrategy::UniformMinEig);

        // (c) uniform shift of the off-diagonal block
        let mut off = q.clone();
        for i in 0..n {
            off[(i, i)] = 0.0;
        }
        let s = (-min_eigenvalue_bound(&off)).max(0.0);
        let delta_c: Vec<f64> = (0..n).map(|i| (q[(i, i)] - s).max(dmin)).collect();
        let mut rc = q.clone();
        for i in 0..n {
            rc[(i, i)] -= delta_c[i];
        }
        let dc = Decomposition::from_parts(delta_c, rc, DeltaStrategy::UniformMinEig);
        println!(
            "n={n} seed={seed}: lmin(Q)={lmin_q:.1} shift={s:.1} delta_a~{:.0} delta_c~{:.0} Rc_psd={:.3e}",
            auto.delta.iter().sum::<f64>() / n as f64,
            dc.delta.iter().sum::<f64>() / n as f64,
            min_eigenvalue_bound(&dc.r),
        );
        for (name, d) in [("diagdom", &auto), ("halfmineig", &db), ("unishift", &dc)] {
            let t0 = std::time::Instant::now();
            let (bound, rounds) = kelley(&inst, d, 4000);
            println!(
                "  {name:>10}: root={bound:.4} rounds={rounds} in {:.2}s",
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
