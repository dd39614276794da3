//! Pilot runs used to size the acceptance experiments.
//!
//!     cargo run --release -p graphstein --example pilot -- [coverage|power|clt|rate|bterms|all]

use std::time::Instant;

use graphstein::coupling::{bound_terms, GraphCoupling};
use graphstein::graph::GraphonKernel;
use graphstein::montecarlo::{
    convex_class_distance, coverage_experiment, graph_trial, permutation_trial, power_experiment, rate_fit, replicate,
};

fn coverage() {
    for p in [0.3, 0.5, 0.7] {
        let t = Instant::now();
        let f = coverage_experiment(200, p, 0.05, 2000, 2024).unwrap();
        println!("coverage n=200 p={p}: {:.4} ± {:.4} ({:.1?})", f.frequency, f.ci_half_width, t.elapsed());
    }
    for seed in [1, 2, 3] {
        let a = coverage_experiment(50, 0.5, 0.05, 2000, seed).unwrap().frequency;
        let b = coverage_experiment(400, 0.5, 0.05, 2000, seed).unwrap().frequency;
        println!("coverage trend seed={seed}: n=50 {a:.4}  n=400 {b:.4}");
    }
}

fn power() {
    let k = GraphonKernel::block_step(&[0.5], &[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
    for n in [50, 100, 200, 400] {
        let t = Instant::now();
        let f = power_experiment(n, &k, 0.05, 200, 2024).unwrap();
        println!("power block n={n}: {:.4} ({:.1?})", f.frequency, t.elapsed());
    }
}

fn clt() {
    let t = Instant::now();
    let pts = replicate(100_000, 2024, None, |_, rng| graph_trial(300, 0.5, rng)).unwrap();
    let r = convex_class_distance(&pts).unwrap();
    println!(
        "graph n=300: ks={:?} chi2_ks={:.4} proxy={:.4} ({:.1?})",
        r.ks_marginals,
        r.chi2_ks,
        r.convex_proxy,
        t.elapsed()
    );
    let t = Instant::now();
    let pts = replicate(100_000, 2024, None, |_, rng| permutation_trial(200, rng)).unwrap();
    let r = convex_class_distance(&pts).unwrap();
    let corr = pts.iter().map(|p| p[0] * p[1]).sum::<f64>() / pts.len() as f64;
    println!("perm n=200: ks={:?} corr≈{corr:.4} ({:.1?})", r.ks_marginals, t.elapsed());
}

fn rate() {
    let ns = [50usize, 100, 200, 400];
    let mut g = Vec::new();
    let mut q = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let t = Instant::now();
        let pts = replicate(100_000, 2024 + k as u64, None, |_, rng| graph_trial(n, 0.5, rng)).unwrap();
        let r = convex_class_distance(&pts).unwrap();
        g.push(r.ks_marginals[0]);
        let pts = replicate(100_000, 2024 + k as u64, None, |_, rng| permutation_trial(n, rng)).unwrap();
        q.push(convex_class_distance(&pts).unwrap().ks_marginals[0]);
        println!("rate n={n}: graph {:.4} perm {:.4} ({:.1?})", g[k], q[k], t.elapsed());
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    println!("slopes: graph {:.3} perm {:.3}", rate_fit(&x, &g).unwrap().slope, rate_fit(&x, &q).unwrap().slope);
}

fn bterms(plan: &[(usize, usize, u64)]) {
    for &(n, reps, seed) in plan {
        let t = Instant::now();
        let c = GraphCoupling::new(n, 0.5).unwrap();
        let b = bound_terms(&c, reps, seed).unwrap();
        let nf = n as f64;
        println!(
            "reps={reps} n={n}: B1={:.3e}±{:.1e} B2={:.3e}±{:.1e} B2√n={:.4} B1 n^2.5={:.4} ({:.1?})",
            b.b1,
            b.std_errors.b1,
            b.b2,
            b.std_errors.b2,
            b.b2 * nf.sqrt(),
            b.b1 * nf.powf(2.5),
            t.elapsed()
        );
    }
}

fn main() {
    let what = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let all = what == "all";
    if all || what == "bterms" {
        bterms(&[(20, 200, 2024), (40, 200, 2024), (80, 200, 2024)]);
    }
    if what == "bterms-precise" {
        bterms(&[(20, 5000, 2024), (40, 2000, 2024), (80, 400, 2024), (30, 2000, 2024), (60, 800, 2024)]);
    }
    if what == "bterms-seeds" {
        let plan: Vec<(usize, usize, u64)> =
            (1..=5).map(|s| (20, 40_000, s)).chain((1..=3).map(|s| (40, 8_000, s))).collect();
        bterms(&plan);
    }
    if all || what == "coverage" {
        coverage();
    }
    if all || what == "power" {
        power();
    }
    if all || what == "clt" {
        clt();
    }
    if all || what == "rate" {
        rate();
    }
}
