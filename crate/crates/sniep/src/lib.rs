//! Construct symmetric nonnegative matrices with a prescribed spectrum.
//!
//! Given a realizable list of real eigenvalues, this crate builds an `n x n`
//! symmetric entrywise-nonnegative matrix carrying exactly that spectrum by
//! writing the candidate as `C = S .* S` with `S` symmetric and solving the
//! underdetermined matrix equation
//!
//! ```text
//! S .* S - Q diag(lambda) Q^T = 0
//! ```
//!
//! over the product of the symmetric matrices and the orthogonal group. The
//! solver is an inexact Newton dogleg iteration: each step solves a
//! perturbed normal equation matrix-free by (preconditioned) conjugate
//! gradients, blends the resulting Newton direction with the Cauchy point
//! inside a trust region, and retracts back onto the manifold through a QR
//! factorization. A structured preconditioner that inverts the dominant
//! commutator part of the normal operator in the eigenbasis keeps the inner
//! iteration count flat in the problem size.
//!
//! # Quick start
//!
//! ```
//! use sniep::dogleg::{solve, SolveStatus, SolverConfig};
//! use sniep::harness::{generate, verify_solution, ProblemSpec};
//! use rand::SeedableRng;
//!
//! let spec = ProblemSpec::fixed(vec![5.0, 0.0, -2.0, -2.0], 1.0, 7);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
//! let (problem, start) = generate(&spec, &mut rng);
//! let report = solve(&problem, &start, &SolverConfig::default());
//! assert_eq!(report.status, SolveStatus::Converged);
//! assert!(verify_solution(&problem, &report.final_point, 1e-7).passed());
//! ```
//!
//! The runnable programs under `examples/` walk through each capability:
//! solving a small fixed spectrum, benchmarking the preconditioner, spectra
//! with repeated zeros, operator conditioning, the surjectivity rank test,
//! and convergence trajectories. The `sniep` binary wraps the same
//! functionality behind `solve`, `bench`, `diag`, and `verify` subcommands.

pub mod diagnostics;
pub mod dogleg;
pub mod harness;
pub mod kernels;
pub mod manifold;
pub mod normal;
pub mod problem;

pub use dogleg::{solve, SolveReport, SolveStatus, SolverConfig};
pub use harness::{generate, run_benchmark, verify_solution, ProblemSpec, RunRecord, Variant};
pub use kernels::{OrthMatrix, SymMatrix};
pub use manifold::{ProductPoint, TangentVector};
pub use problem::{residual, Residual, SpectrumProblem};

#[cfg(test)]
pub(crate) mod test_fixtures {
    use nalgebra::DMatrix;

    /// A published 4x4 nonnegative solution for the spectrum
    /// {5, 0, -2, -2}, printed to four decimals.
    pub(crate) fn published_solution() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.6347, 1.8878, 2.2597, 1.6700, //
                1.8878, 0.2945, 1.3510, 0.2270, //
                2.2597, 1.3510, 0.0144, 1.7082, //
                1.6700, 0.2270, 1.7082, 0.0565,
            ],
        )
    }
}
