use miqp_core::cuts::{cut_persp, solve_reduced};
use miqp_core::decompose::Decomposition;
use miqp_core::instances::{generate_portfolio, PortfolioSpec};
use miqp_core::master::MasterProblem;
use miqp_core::oa::crude_lower_bound;
use miqp_core::simplex::LpStatus;
use miqp_core::tol::Tolerances;
use std::time::Instant;

fn main() {
    let tol = Tolerances::default();
    for (n, seed) in [(40usize, 71u64), (20, 72)] {
        let inst = generate_portfolio(&PortfolioSpec { n, k: Some(6), seed }).unwrap();
        let decomp = Decomposition::auto(&inst.q, &tol).unwrap();
        let eta_lb = crude_lower_bound(&inst, &tol).unwrap();
        let mut master = MasterProblem::new(&inst, eta_lb);
        let seedpt = vec![6.0 / n as f64; n];
        let mut warm_active = None;
        if let Ok(sol) = solve_reduced(&inst, &decomp, &seedpt, None, &tol) {
            master.append_cut(&cut_persp(&inst, &decomp, &seedpt, &sol), &sol.y);
            warm_active = Some(sol.active_set);
        } else {
            println!("n={n}: seed point failed");
        }
        let mut bound = f64::NEG_INFINITY;
        let mut warm_basis: Option<Vec<usize>> = None;
        let t0 = Instant::now();
        let cap = 3 * n;
        for round in 0..2000 {
            let lp = master.solve(&[], warm_basis.as_deref(), &tol);
            if lp.status != LpStatus::Optimal {
                println!("n={n} round {round}: lp status {:?}", lp.status);
                break;
            }
            bound = bound.max(lp.objective);
            warm_basis = Some(lp.basis.clone());
            let (x, _, eta) = master.split(&lp);
            let xs: Vec<f64> = x.iter().map(|&v| if v < 1e-6 { 0.0 } else { v }).collect();
            let tiny = xs.iter().filter(|&&v| v > 0.0 && v < 1e-3).count();
            let sol = match solve_reduced(&inst, &decomp, &xs, warm_active.as_deref(), &tol) {
                Ok(s) => s,
                Err(e) => {
                    println!("n={n} round {round}: sep err {e} (bound {bound:.4}, {tiny} tiny coords, support {})",
                        xs.iter().filter(|&&v| v > 0.0).count());
                    break;
                }
            };
            warm_active = Some(sol.active_set.clone());
            let cut = cut_persp(&inst, &decomp, &xs, &sol);
            if cut.value_at(&x) - eta <= 1e-6 * sol.marginal.abs().max(1.0) {
                println!("n={n}: converged at round {round} bound={bound:.4}");
                break;
            }
            master.append_cut(&cut, &sol.y);
            if master.num_cuts() > cap {
                if master.purge_stale_cuts(cap / 2) > 0 { warm_basis = None; }
            }
        }
        println!("n={n}: final bound={bound:.6} time={:.2}s", t0.elapsed().as_secs_f64());
    }
}
