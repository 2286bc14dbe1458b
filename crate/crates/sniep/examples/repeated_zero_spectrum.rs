//! Solve an instance whose spectrum carries many repeated zeros: the
//! eigenvalues of a random rank-25 Gramian of order 100.
//!
//! Run with: cargo run --release --example repeated_zero_spectrum

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sniep::dogleg::{solve, SolverConfig};
use sniep::harness::{generate, verify_solution, ProblemSpec};

fn main() {
    let spec = ProblemSpec::low_rank(100, 25, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (problem, start) = generate(&spec, &mut rng);

    let zeros = problem.eigenvalues().iter().filter(|v| v.abs() <= 1e-10).count();
    let largest = problem.eigenvalues().iter().cloned().fold(f64::MIN, f64::max);
    println!("n = 100, rank 25: {zeros} (near-)zero eigenvalues, largest = {largest:.4}");

    let report = solve(&problem, &start, &SolverConfig::default());
    println!(
        "status: {}, IT = {}, NCG = {}, residual = {:.3e}, {:.3} s",
        report.status.as_str(),
        report.it,
        report.ncg,
        report.final_residual,
        report.wall_time.as_secs_f64()
    );

    let verdict = verify_solution(&problem, &report.final_point, 1e-7);
    println!("{verdict}");
}
