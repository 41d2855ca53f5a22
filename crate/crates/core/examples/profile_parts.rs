use miqp_core::cuts::{cut_persp, solve_reduced};
use miqp_core::decompose::Decomposition;
use miqp_core::instances::{generate_portfolio, PortfolioSpec};
use miqp_core::master::MasterProblem;
use miqp_core::oa::crude_lower_bound;
use miqp_core::tol::Tolerances;
use std::time::Instant;

fn main() {
    let tol = Tolerances::default();
    for n in [30usize, 60, 120] {
        let inst = generate_portfolio(&PortfolioSpec { n, k: Some(6), seed: 72 }).unwrap();
        let decomp = Decomposition::auto(&inst.q, &tol).unwrap();
        let k = 6.0;
        let xfrac = vec![k / n as f64; n];

        // fractional reduced solve (full support)
        let t0 = Instant::now();
        let mut warm = None;
        let mut iters = 0;
        for _ in 0..20 {
            let s = solve_reduced(&inst, &decomp, &xfrac, warm.as_deref(), &tol).unwrap();
            iters = s.iterations;
            warm = Some(s.active_set.clone());
        }
        let frac_qp = t0.elapsed().as_secs_f64() / 20.0;

        // binary reduced solve
        let mut xbin = vec![0.0; n];
        for i in 0..6 { xbin[i * (n / 6)] = 1.0; }
        let ok = solve_reduced(&inst, &decomp, &xbin, None, &tol).is_ok();
        let t0 = Instant::now();
        for _ in 0..20 { let _ = solve_reduced(&inst, &decomp, &xbin, None, &tol); }
        let bin_qp = t0.elapsed().as_secs_f64() / 20.0;

        // master LP cold and warm, with 3n cut rows
        let eta_lb = crude_lower_bound(&inst, &tol).unwrap();
        let mut master = MasterProblem::new(&inst, eta_lb);
        let sfrac = solve_reduced(&inst, &decomp, &xfrac, None, &tol).unwrap();
        for _ in 0..3 * n {
            // duplicate-ish rows are fine for timing
            let c = cut_persp(&inst, &decomp, &xfrac, &sfrac);
            master.append_cut(&c, &sfrac.y);
        }
        let t0 = Instant::now();
        let s1 = master.solve(&[], None, &tol);
        let cold = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let s2 = master.solve(&[(0, false)], Some(&s1.basis), &tol);
        let warm_t = t0.elapsed().as_secs_f64();
        println!(
            "n={n}: frac_qp={:.2}ms (as_iters {iters}) bin_qp={:.3}ms bin_ok={ok} lp_cold={:.2}ms ({} iters) lp_warm={:.2}ms ({} iters) rows={}",
            frac_qp * 1e3, bin_qp * 1e3, cold * 1e3, s1.iterations, warm_t * 1e3, s2.iterations, master.num_rows(),
        );
    }
}
