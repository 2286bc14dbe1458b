//! The inverse problem and its first-order calculus.
//!
//! An instance prescribes real eigenvalues `lambda`. Writing `L = diag(lambda)`,
//! the residual map on the product manifold is
//!
//! ```text
//! F(S, Q) = S .* S - Q L Q^T
//! ```
//!
//! (`.*` entrywise). A zero of `F` certifies that `C = S .* S` is a symmetric
//! nonnegative matrix with the prescribed spectrum. This module evaluates `F`,
//! its differential, the adjoint of the differential, the least-squares merit
//! function, and the Riemannian gradient — all matrix-free.

use nalgebra::DVector;
use thiserror::Error;

use crate::kernels::{commutator, OrthMatrix, SymMatrix};
use crate::manifold::{ProductPoint, TangentVector};

/// Errors raised when building a problem instance.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("prescribed eigenvalue {index} is not finite: {value}")]
    NonFiniteEigenvalue { index: usize, value: f64 },
    #[error("a spectrum needs at least one eigenvalue")]
    Empty,
}

/// A prescribed spectrum: the list of eigenvalues the constructed matrix
/// must have, stored in the order given.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumProblem {
    lambda: DVector<f64>,
}

impl SpectrumProblem {
    /// Validates that every prescribed eigenvalue is finite.
    pub fn new(lambda: Vec<f64>) -> Result<Self, ProblemError> {
        if lambda.is_empty() {
            return Err(ProblemError::Empty);
        }
        for (index, &value) in lambda.iter().enumerate() {
            if !value.is_finite() {
                return Err(ProblemError::NonFiniteEigenvalue { index, value });
            }
        }
        Ok(Self { lambda: DVector::from_vec(lambda) })
    }

    /// Problem dimension `n`.
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// The prescribed eigenvalues, in the order given at construction.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// The isospectral matrix `Q L Q^T` determined by `q`.
    ///
    /// Every first-order quantity below consumes this matrix; the solver
    /// computes it once per iterate and shares it.
    pub fn isospectral(&self, q: &OrthMatrix) -> SymMatrix {
        assert_eq!(self.dim(), q.dim(), "isospectral: dimension mismatch");
        let qm = q.matrix();
        let mut scaled = qm.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.lambda[j];
        }
        SymMatrix::new(scaled * qm.transpose())
    }
}

/// A residual value together with its cached Frobenius norm.
#[derive(Clone, Debug)]
pub struct Residual {
    value: SymMatrix,
    norm: f64,
}

impl Residual {
    fn new(value: SymMatrix) -> Self {
        let norm = value.norm();
        Self { value, norm }
    }

    /// The residual matrix `S .* S - Q L Q^T`.
    pub fn value(&self) -> &SymMatrix {
        &self.value
    }

    /// Cached Frobenius norm of [`Residual::value`].
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Evaluates the residual `F(S, Q) = S .* S - Q L Q^T`.
pub fn residual(p: &SpectrumProblem, x: &ProductPoint) -> Residual {
    residual_at(x, &p.isospectral(x.q()))
}

/// Residual evaluation reusing a precomputed isospectral matrix.
pub fn residual_at(x: &ProductPoint, iso: &SymMatrix) -> Residual {
    Residual::new(&x.s().hadamard(x.s()) - iso)
}

/// Applies the differential of the residual map at `x` to a tangent vector:
/// `2 S .* dS + [Q L Q^T, dQ Q^T]`.
pub fn apply_differential(p: &SpectrumProblem, x: &ProductPoint, v: &TangentVector) -> SymMatrix {
    differential_at(x, &p.isospectral(x.q()), v)
}

/// Differential evaluation reusing a precomputed isospectral matrix.
pub fn differential_at(x: &ProductPoint, iso: &SymMatrix, v: &TangentVector) -> SymMatrix {
    let hadamard_part = x.s().hadamard(v.d_s()).scale(2.0);
    let rotation = v.d_q() * x.q().matrix().transpose();
    let bracket = commutator(iso.matrix(), &rotation);
    SymMatrix::new(hadamard_part.into_matrix() + bracket)
}

/// Applies the adjoint of the differential to a symmetric matrix:
/// `(2 S .* Z, [Q L Q^T, Z] Q)`.
///
/// The bracket of two symmetric matrices is skew, so the second slot is
/// automatically tangent at `x`.
pub fn apply_adjoint(p: &SpectrumProblem, x: &ProductPoint, z: &SymMatrix) -> TangentVector {
    adjoint_at(x, &p.isospectral(x.q()), z)
}

/// Adjoint evaluation reusing a precomputed isospectral matrix.
pub fn adjoint_at(x: &ProductPoint, iso: &SymMatrix, z: &SymMatrix) -> TangentVector {
    let d_s = x.s().hadamard(z).scale(2.0);
    let d_q = commutator(iso.matrix(), z.matrix()) * x.q().matrix();
    TangentVector::new_unchecked(d_s, d_q)
}

/// Least-squares merit function `f(x) = ||F(x)||_F^2 / 2`.
pub fn merit(p: &SpectrumProblem, x: &ProductPoint) -> f64 {
    let r = residual(p, x);
    0.5 * r.norm() * r.norm()
}

/// Riemannian gradient of the merit function, `grad f(x) = DF(x)*[F(x)]`.
pub fn gradient(p: &SpectrumProblem, x: &ProductPoint) -> TangentVector {
    let iso = p.isospectral(x.q());
    let f = residual_at(x, &iso);
    gradient_at(x, &iso, &f)
}

/// Gradient evaluation reusing a precomputed isospectral matrix and residual.
pub fn gradient_at(x: &ProductPoint, iso: &SymMatrix, f: &Residual) -> TangentVector {
    adjoint_at(x, iso, f.value())
}

/// Threshold below which a gradient norm flags a stationary point.
///
/// The outer iteration stops only on the residual norm; this guard
/// distinguishes convergence to a nonzero stationary point from slow
/// progress.
pub fn stationarity_tol(residual_norm: f64) -> f64 {
    1e-12 * (1.0 + residual_norm)
}
