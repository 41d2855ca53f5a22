use miqp_core::decompose::Decomposition;
use miqp_core::instances::{generate_portfolio, PortfolioSpec};
use miqp_core::oracle::brute_force;
use miqp_core::tol::Tolerances;
use std::time::Instant;

fn main() {
    let tol = Tolerances::default();
    let inst = generate_portfolio(&PortfolioSpec { n: 30, k: Some(6), seed: 72 }).unwrap();
    let decomp = Decomposition::auto(&inst.q, &tol).unwrap();
    let t0 = Instant::now();
    let r = brute_force(&inst, &decomp, &tol).unwrap();
    println!(
        "n=30 seed=72: optimum={:?} argmin={:?} feasible={} time={:.1}s",
        r.optimum, r.argmin_mask, r.feasible_count, t0.elapsed().as_secs_f64()
    );
}
