//! Geometry of the product manifold of symmetric matrices and the orthogonal
//! group: points, tangent vectors, the induced metric, tangent projection,
//! and the QR retraction.
//!
//! A point is a pair `(S, Q)` with `S` symmetric and `Q` orthogonal. The
//! tangent space at `(S, Q)` is `{(H, Q W) | H symmetric, W skew}`; tangent
//! vectors are stored with the `Q`-component in ambient coordinates so that
//! linear combinations taken at a fixed base point stay tangent.

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::kernels::{self, qf, KernelError, OrthMatrix, SymMatrix};

/// Tolerance for tangency and orthogonality membership checks in debug
/// builds. The checks cost a full matrix product each, so release builds
/// skip them.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Errors raised by manifold operations.
#[derive(Debug, Error)]
pub enum ManifoldError {
    /// The retraction hit a numerically singular QR factorization.
    #[error("singular retraction: {0}")]
    SingularRetraction(#[from] KernelError),
}

/// A point `(S, Q)` on the product manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    s: SymMatrix,
    q: OrthMatrix,
}

impl ProductPoint {
    /// Pairs a symmetric matrix with an orthogonal one of the same order.
    pub fn new(s: SymMatrix, q: OrthMatrix) -> Self {
        assert_eq!(s.dim(), q.dim(), "ProductPoint: component orders differ");
        Self { s, q }
    }

    /// Matrix order of both components.
    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// The symmetric component.
    pub fn s(&self) -> &SymMatrix {
        &self.s
    }

    /// The orthogonal component.
    pub fn q(&self) -> &OrthMatrix {
        &self.q
    }

    /// Orthogonal projection of an ambient pair onto the tangent space at
    /// `self`: the first slot is symmetrized, the second becomes
    /// `Q skew(Q^T eta)`.
    pub fn project(&self, xi: &DMatrix<f64>, eta: &DMatrix<f64>) -> TangentVector {
        let n = self.dim();
        assert_eq!(xi.nrows(), n, "project: xi order mismatch");
        assert_eq!(eta.nrows(), n, "project: eta order mismatch");
        let q = self.q.matrix();
        let d_q = q * kernels::skew(&(q.transpose() * eta));
        TangentVector { d_s: SymMatrix::new(xi.clone()), d_q }
    }

    /// Moves along a tangent vector: `(S, Q) + (dS, dQ)` maps to
    /// `(S + dS, qf(Q + dQ))`.
    pub fn retract(&self, step: &TangentVector) -> Result<ProductPoint, ManifoldError> {
        debug_assert!(step.tangency_defect(self) <= MEMBERSHIP_TOL * (1.0 + step.norm()));
        let s = &self.s + &step.d_s;
        let q = qf(&(self.q.matrix() + &step.d_q))?;
        Ok(ProductPoint { s, q })
    }

    /// Draws a point with both components built from independent uniform
    /// (0, 1) entries: the symmetric part by symmetrization, the orthogonal
    /// part through `qf`. Resamples (up to 10 times) in the measure-zero
    /// event that the random matrix is numerically singular.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProductPoint {
        assert!(n >= 1, "manifold requires n >= 1");
        let s = SymMatrix::new(random_uniform(n, rng));
        for _ in 0..10 {
            if let Ok(q) = qf(&random_uniform(n, rng)) {
                return ProductPoint { s, q };
            }
        }
        panic!("random orthogonal factor failed 10 consecutive qf attempts");
    }

    /// Draws a tangent vector at `self` by projecting an ambient pair with
    /// independent uniform (0, 1) entries.
    pub fn random_tangent<R: Rng + ?Sized>(&self, rng: &mut R) -> TangentVector {
        let n = self.dim();
        self.project(&kernels::symmetrize(&random_uniform(n, rng)), &random_uniform(n, rng))
    }
}

fn random_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random::<f64>())
}

/// A tangent vector `(dS, dQ)` with `dS` symmetric and `Q^T dQ` skew with
/// respect to its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    d_s: SymMatrix,
    d_q: DMatrix<f64>,
}

impl TangentVector {
    /// The zero vector, tangent at every point of order `n`.
    pub fn zero(n: usize) -> Self {
        Self { d_s: SymMatrix::zeros(n), d_q: DMatrix::zeros(n, n) }
    }

    pub(crate) fn new_unchecked(d_s: SymMatrix, d_q: DMatrix<f64>) -> Self {
        assert_eq!(d_s.dim(), d_q.nrows(), "TangentVector: component orders differ");
        Self { d_s, d_q }
    }

    /// Matrix order of both components.
    pub fn dim(&self) -> usize {
        self.d_s.dim()
    }

    /// The symmetric-slot component.
    pub fn d_s(&self) -> &SymMatrix {
        &self.d_s
    }

    /// The orthogonal-slot component, in ambient coordinates.
    pub fn d_q(&self) -> &DMatrix<f64> {
        &self.d_q
    }

    /// Norm induced by the product metric.
    pub fn norm(&self) -> f64 {
        self.d_s.norm().hypot(self.d_q.norm())
    }

    /// Scalar multiple; tangency at the shared base point is preserved.
    pub fn scale(&self, c: f64) -> TangentVector {
        Self { d_s: self.d_s.scale(c), d_q: &self.d_q * c }
    }

    /// Linear combination `a u + b v` of two vectors tangent at the same
    /// base point. Combinations across base points are meaningless; callers
    /// own that precondition.
    pub fn lin_comb(a: f64, u: &TangentVector, b: f64, v: &TangentVector) -> TangentVector {
        Self {
            d_s: &u.d_s.scale(a) + &v.d_s.scale(b),
            d_q: &u.d_q * a + &v.d_q * b,
        }
    }

    /// `||sym(Q^T dQ)||_F`, the departure of this vector from the tangent
    /// space at `base`; zero for members.
    pub fn tangency_defect(&self, base: &ProductPoint) -> f64 {
        kernels::symmetrize(&(base.q().matrix().transpose() * &self.d_q)).norm()
    }
}

/// Riemannian metric of the product manifold: the sum of the Frobenius
/// inner products of the two slots. `base` fixes the tangent space both
/// vectors are expected to live in.
pub fn inner(base: &ProductPoint, u: &TangentVector, v: &TangentVector) -> f64 {
    assert_eq!(base.dim(), u.dim(), "inner: u lives on a different order");
    assert_eq!(base.dim(), v.dim(), "inner: v lives on a different order");
    u.d_s.dot(&v.d_s) + u.d_q.dot(&v.d_q)
}
