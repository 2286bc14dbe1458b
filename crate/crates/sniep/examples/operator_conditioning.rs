//! Assemble the dense normal operator at a converged iterate and show what
//! the preconditioner does to its condition number and spectrum. The two
//! spectra are dumped as CSV for plotting.
//!
//! Run with: cargo run --release --example operator_conditioning

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sniep::diagnostics::{matricize, write_spectrum_csv};
use sniep::dogleg::{solve, SolverConfig};
use sniep::harness::{generate, ProblemSpec};

fn main() {
    let spec = ProblemSpec::dense(20, 13);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (problem, start) = generate(&spec, &mut rng);
    let report = solve(&problem, &start, &SolverConfig::default());
    println!(
        "solved n = 20 instance: {} after {} iterations, residual {:.3e}",
        report.status.as_str(),
        report.it,
        report.final_residual
    );

    let sigma = 1e-6f64.min(report.final_residual.max(f64::MIN_POSITIVE));
    let ops = matricize(&problem, &report.final_point, sigma).unwrap();
    println!("cond(H)      = {:.4e}", ops.cond_h);
    println!("cond(M^-1 H) = {:.4e}", ops.cond_pre);

    let clustered = ops.spectrum_pre.iter().filter(|v| (0.1..=10.0).contains(*v)).count();
    println!(
        "{} of {} preconditioned eigenvalues lie in [0.1, 10]; extremes {:.3e} .. {:.3e}",
        clustered,
        ops.spectrum_pre.len(),
        ops.spectrum_pre.first().unwrap(),
        ops.spectrum_pre.last().unwrap()
    );

    for (path, spectrum) in [
        ("operator_spectrum.csv", &ops.spectrum_h),
        ("preconditioned_spectrum.csv", &ops.spectrum_pre),
    ] {
        write_spectrum_csv(std::path::Path::new(path), spectrum).unwrap();
        println!("wrote {path}");
    }
}
