//! Small-scale dense analysis tools: explicit matricizations of the normal
//! operator and preconditioner, condition numbers and spectra, and the
//! surjectivity rank test for the differential.
//!
//! Everything here assembles `n^2 x n^2` matrices through Kronecker
//! products, deliberately independent of the matrix-free operator code so
//! the two routes can check each other. Read-only: nothing in this module
//! feeds back into the solver.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kernels::{vectorize, DuplicationMatrix};
use crate::manifold::ProductPoint;
use crate::problem::SpectrumProblem;

/// Largest order accepted for dense assembly; `n^2 x n^2` doubles at the cap
/// already cost ~12.8 GB.
pub const DENSE_CAP: usize = 200;

/// Errors raised by the diagnostics.
#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("dense assembly requested for n = {n}, above the cap {cap}")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error("failed writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Dense views of the operators at one iterate.
#[derive(Clone, Debug)]
pub struct MatricizedOperators {
    pub n: usize,
    /// The normal operator as an `n^2 x n^2` matrix.
    pub h_hat: DMatrix<f64>,
    /// The preconditioned operator `M^-1 H`.
    pub m_inv_h_hat: DMatrix<f64>,
    /// Eigenvalue ratio (2-norm condition number) of `h_hat`.
    pub cond_h: f64,
    /// Eigenvalue ratio of the preconditioned operator.
    pub cond_pre: f64,
    /// Spectrum of `h_hat`, ascending.
    pub spectrum_h: Vec<f64>,
    /// Spectrum of `M^-1 H`, ascending; real and positive since the product
    /// is similar to a symmetric positive definite matrix.
    pub spectrum_pre: Vec<f64>,
}

/// Assembles the dense normal operator and its preconditioned counterpart
/// at `(x, sigma)` and reports their spectra and condition numbers.
///
/// The assembly uses the Kronecker closed forms
///
/// ```text
/// H-hat = 4 diag(vec(S .* S)) + (Q x Q)(D^2 + sigma I)(Q x Q)^T
/// M-hat = (Q x Q)(D^2 + (s + sigma) I)(Q x Q)^T
/// ```
///
/// with `D = I x L - L x I` diagonal and `s = max 4 (S .* S)_ij`. The
/// spectrum of `M^-1 H` is computed from the orthogonally similar symmetric
/// matrix `Dm^-1/2 (QxQ)^T H-hat (QxQ) Dm^-1/2`.
pub fn matricize(
    p: &SpectrumProblem,
    x: &ProductPoint,
    sigma: f64,
) -> Result<MatricizedOperators, DiagnosticsError> {
    let n = p.dim();
    if n > DENSE_CAP {
        return Err(DiagnosticsError::DenseCapExceeded { n, cap: DENSE_CAP });
    }
    let nn = n * n;
    let lambda = p.eigenvalues();
    let qm = x.q().matrix();
    let big_q = qm.kronecker(qm);

    // D entries follow vec ordering: row index varies fastest.
    let mut bracket_diag = DVector::zeros(nn);
    for j in 0..n {
        for i in 0..n {
            let d = lambda[i] - lambda[j];
            bracket_diag[i + j * n] = d * d;
        }
    }

    let s2 = x.s().hadamard(x.s());
    let s4 = vectorize(s2.matrix()) * 4.0;
    let shift = s4.iter().copied().fold(0.0, f64::max) + sigma;

    // h_hat = 4 diag + big_q (D^2 + sigma) big_q^T
    let mut scaled = big_q.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= bracket_diag[k] + sigma;
    }
    let mut h_hat = scaled * big_q.transpose();
    for k in 0..nn {
        h_hat[(k, k)] += s4[k];
    }

    // core = big_q^T h_hat big_q, shared by both spectra
    let core = big_q.transpose() * &h_hat * &big_q;

    // preconditioned spectrum via the symmetric similarity
    let mut pre_sym = core.clone();
    for i in 0..nn {
        let di = (bracket_diag[i] + shift).sqrt();
        for j in 0..nn {
            let dj = (bracket_diag[j] + shift).sqrt();
            pre_sym[(i, j)] /= di * dj;
        }
    }

    // m_inv_h_hat = big_q Dm^-1 big_q^T h_hat = big_q (Dm^-1 core) big_q^T
    let mut m_core = core;
    for i in 0..nn {
        let d = bracket_diag[i] + shift;
        for j in 0..nn {
            m_core[(i, j)] /= d;
        }
    }
    let m_inv_h_hat = &big_q * m_core * big_q.transpose();

    let mut spectrum_h: Vec<f64> = h_hat.symmetric_eigenvalues().iter().copied().collect();
    spectrum_h.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut spectrum_pre: Vec<f64> = pre_sym.symmetric_eigenvalues().iter().copied().collect();
    spectrum_pre.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let cond = |s: &[f64]| s[s.len() - 1] / s[0];
    Ok(MatricizedOperators {
        n,
        cond_h: cond(&spectrum_h),
        cond_pre: cond(&spectrum_pre),
        h_hat,
        m_inv_h_hat,
        spectrum_h,
        spectrum_pre,
    })
}

/// Numerical ranks of the stacked differential factors at an iterate.
#[derive(Clone, Debug)]
pub struct SurjectivityReport {
    /// Rank of `diag(vec(S))`: the number of nonzero entries of `S`.
    pub j_s_rank: usize,
    /// Rank of the bracket factor, `n^2 - sum of multiplicities`.
    pub j_q_rank: usize,
    /// Rank of the stacked system restricted to symmetric inputs.
    pub joint_rank: usize,
    /// Whether the stacked system has full column rank `n(n+1)/2`, which
    /// certifies that the differential is surjective at this point.
    pub full_column_rank: bool,
    /// Per-index eigenvalue multiplicities `c_i`.
    pub multiplicities: Vec<usize>,
}

/// Rank test for surjectivity of the differential: stacks
/// `diag(vec(S))` and `(Q x Q)(I x L - L x I)(Q x Q)^T`, restricts to
/// symmetric inputs through the duplication matrix, and measures column
/// rank by singular values at the relative threshold `rank_tol`.
///
/// Stated for accumulation points of the iteration; applying it at an
/// arbitrary iterate is a diagnostic extrapolation.
pub fn surjectivity_test(
    p: &SpectrumProblem,
    x: &ProductPoint,
    rank_tol: f64,
) -> Result<SurjectivityReport, DiagnosticsError> {
    let n = p.dim();
    if n > DENSE_CAP {
        return Err(DiagnosticsError::DenseCapExceeded { n, cap: DENSE_CAP });
    }
    let nn = n * n;
    let lambda = p.eigenvalues();

    // eigenvalue multiplicities from gap clustering
    let lambda_scale = 1.0 + lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let value_tol = rank_tol * lambda_scale;
    let multiplicities: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| (lambda[i] - lambda[j]).abs() <= value_tol).count())
        .collect();
    let j_q_rank = nn - multiplicities.iter().sum::<usize>();

    let s = x.s().matrix();
    let s_max = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let j_s_rank = s.iter().filter(|v| v.abs() > rank_tol * s_max.max(1e-300)).count();

    // stacked [J_S; J_Q] G
    let qm = x.q().matrix();
    let big_q = qm.kronecker(qm);
    let mut bracket = big_q.clone();
    for (k, mut col) in bracket.column_iter_mut().enumerate() {
        let (i, j) = (k % n, k / n);
        col *= lambda[i] - lambda[j];
    }
    let j_q = bracket * big_q.transpose();
    let g = DuplicationMatrix::new(n);
    let cols = g.vech_len();
    let mut stacked = DMatrix::zeros(2 * nn, cols);
    let vec_s = vectorize(s);
    let j_s_g = {
        let mut m = g.matrix().clone();
        for (r, mut row) in m.row_iter_mut().enumerate() {
            row *= vec_s[r];
        }
        m
    };
    stacked.view_mut((0, 0), (nn, cols)).copy_from(&j_s_g);
    stacked.view_mut((nn, 0), (nn, cols)).copy_from(&(j_q * g.matrix()));

    let svals = stacked.svd(false, false).singular_values;
    let smax = svals.iter().fold(0.0f64, |m, v| m.max(*v));
    let joint_rank = svals.iter().filter(|v| **v >= rank_tol * smax).count();

    Ok(SurjectivityReport {
        j_s_rank,
        j_q_rank,
        joint_rank,
        full_column_rank: joint_rank == cols,
        multiplicities,
    })
}

/// Writes a spectrum as CSV with columns `index,eigenvalue`.
pub fn write_spectrum_csv(path: &Path, spectrum: &[f64]) -> Result<(), DiagnosticsError> {
    let io_err = |source| DiagnosticsError::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    let mut buf = String::from("index,eigenvalue\n");
    for (i, v) in spectrum.iter().enumerate() {
        buf.push_str(&format!("{i},{v}\n"));
    }
    f.write_all(buf.as_bytes())
        .map_err(|source| DiagnosticsError::Io { path: path.to_path_buf(), source })
}
