//! Log the residual trajectory of a mid-size run. Once the Newton
//! direction fits inside the trust region the residual collapses
//! quadratically: each exponent roughly doubles.
//!
//! Run with: cargo run --release --example convergence_trajectory

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sniep::dogleg::{solve, SolverConfig};
use sniep::harness::{generate, write_trajectory, ProblemSpec};

fn main() {
    let spec = ProblemSpec::dense(200, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (problem, start) = generate(&spec, &mut rng);
    let report = solve(&problem, &start, &SolverConfig::default());

    println!("{:>3} {:>13} {:>12} {:>6} {:>9}", "k", "||F(x_k)||", "step", "CG", "delta");
    for rec in &report.records {
        println!(
            "{:>3} {:>13.6e} {:>12?} {:>6} {:>9.2e}",
            rec.k, rec.res_norm, rec.step_kind, rec.cg_iters, rec.delta
        );
    }
    println!("{:>3} {:>13.6e}   <- terminal ({})", report.it, report.final_residual, report.status.as_str());

    let path = std::path::Path::new("trajectory.csv");
    write_trajectory(path, &report.trajectory()).unwrap();
    println!("\nwrote {} for external plotting", path.display());
}
