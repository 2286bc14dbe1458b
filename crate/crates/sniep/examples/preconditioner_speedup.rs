//! Compare plain and preconditioned CG inside the solver on random dense
//! spectra. The structured preconditioner keeps the inner iteration count
//! flat in the problem size.
//!
//! Run with: cargo run --release --example preconditioner_speedup

use sniep::harness::{run_benchmark, split_seed, ProblemSpec, Variant};
use sniep::SolverConfig;

fn main() {
    let cfg = SolverConfig::default();
    let mut cells = Vec::new();
    for (i, n) in [50usize, 100, 200].into_iter().enumerate() {
        let seed = split_seed(11, i as u64);
        cells.push((ProblemSpec::dense(n, seed), Variant::Cg));
        cells.push((ProblemSpec::dense(n, seed), Variant::Pcg));
    }
    let records = run_benchmark(&cells, &cfg, 2);

    println!(
        "{:>5} {:<8} {:>4} {:>6} {:>12} {:>10}",
        "n", "variant", "IT", "NCG", "NCG/outer", "CT"
    );
    for r in &records {
        println!(
            "{:>5} {:<8} {:>4} {:>6} {:>12.1} {:>9.3}s",
            r.problem.n,
            r.variant.as_str(),
            r.it,
            r.ncg,
            r.ncg as f64 / r.it.max(1) as f64,
            r.ct_seconds
        );
    }

    for pair in records.chunks(2) {
        let ratio = pair[1].ncg as f64 / pair[0].ncg as f64;
        println!(
            "n = {:>4}: preconditioning cuts total inner iterations by {:.0}x",
            pair[0].problem.n,
            1.0 / ratio
        );
    }
}
