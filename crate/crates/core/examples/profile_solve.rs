use miqp_core::instances::{generate_portfolio, PortfolioSpec};
use miqp_core::oa::{solve, OaConfig, SearchMode};
use std::time::{Duration, Instant};

fn main() {
    let mut worst = 0.0f64;
    for k in [6usize, 8, 10] {
        for seed in 1u64..=5 {
            let inst = generate_portfolio(&PortfolioSpec { n: 60, k: Some(k), seed }).unwrap();
            let cfg = OaConfig {
                mode: SearchMode::SingleTree,
                time_limit: Some(Duration::from_secs(120)),
                ..OaConfig::default()
            };
            let t0 = Instant::now();
            let r = solve(&inst, &cfg).unwrap();
            let dt = t0.elapsed().as_secs_f64();
            worst = worst.max(dt);
            println!(
                "n=60 k={k} seed={seed}: status={:?} obj={:?} gap={:?} nodes={} cuts={} root={:.4} in {dt:.2}s",
                r.status, r.objective, r.gap, r.nodes, r.cuts, r.root_bound
            );
        }
    }
    println!("worst time: {worst:.2}s");

    for (n, k, seed) in [(120usize, 6usize, 1u64), (120, 8, 1)] {
        let inst = generate_portfolio(&PortfolioSpec { n, k: Some(k), seed }).unwrap();
        let cfg = OaConfig {
            mode: SearchMode::SingleTree,
            time_limit: Some(Duration::from_secs(240)),
            ..OaConfig::default()
        };
        let t0 = Instant::now();
        let r = solve(&inst, &cfg).unwrap();
        println!(
            "n={n} k={k} seed={seed}: status={:?} obj={:?} gap={:?} nodes={} cuts={} root={:.4} in {:.2}s",
            r.status, r.objective, r.gap, r.nodes, r.cuts, r.root_bound,
            t0.elapsed().as_secs_f64()
        );
    }
}
