//! Recover a symmetric nonnegative matrix with the spectrum {5, 0, -2, -2}
//! from random starts at three start-point scales.
//!
//! Run with: cargo run --example solve_fixed_spectrum

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sniep::dogleg::{solve, SolverConfig};
use sniep::harness::{generate, verify_solution, ProblemSpec};

fn main() {
    let spectrum = vec![5.0, 0.0, -2.0, -2.0];
    println!("prescribed spectrum: {spectrum:?}\n");
    println!("{:<6} {:>8} {:>4} {:>4} {:>5} {:>11} {:>11}", "case", "scale", "IT", "NF", "NCG", "Res0", "Res");

    let mut last = None;
    for (case, scale) in [("a", 1.0), ("b", 5.0), ("c", 10.0)] {
        let spec = ProblemSpec::fixed(spectrum.clone(), scale, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (problem, start) = generate(&spec, &mut rng);
        let res0 = sniep::problem::residual(&problem, &start).norm();

        let report = solve(&problem, &start, &SolverConfig::default());
        println!(
            "{case:<6} {scale:>8} {:>4} {:>4} {:>5} {:>11.4e} {:>11.4e}",
            report.it, report.nf, report.ncg, res0, report.final_residual
        );
        last = Some((problem, report));
    }

    let (problem, report) = last.unwrap();
    let c = report.final_point.s().hadamard(report.final_point.s());
    println!("\nconstructed matrix for case (c):");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:8.4}", c.matrix()[(i, j)])).collect();
        println!("  {}", row.join(" "));
    }

    let verdict = verify_solution(&problem, &report.final_point, 1e-7);
    println!("\nverification at tolerance 1e-7:\n{verdict}");
}
