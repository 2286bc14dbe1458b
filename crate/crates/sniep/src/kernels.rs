//! Dense matrix primitives shared by every other module: Hadamard products,
//! commutators, symmetrization, `vec`/`vech` packing with the duplication
//! matrix, and the positive-diagonal QR factor map `qf`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative threshold under which a QR diagonal entry is treated as singular.
///
/// The absolute threshold is `QF_SINGULAR_REL_TOL * ||A||_F`; retraction
/// inputs are near-orthogonal in practice, so a pivot this small signals a
/// corrupted step rather than a legitimate factorization.
pub const QF_SINGULAR_REL_TOL: f64 = 1e-14;

/// Default bound on `||Q^T Q - I||_F` accepted by [`OrthMatrix::new`].
pub const DEFAULT_ORTH_TOL: f64 = 1e-12;

/// Errors raised by the kernel primitives.
#[derive(Debug, Error)]
pub enum KernelError {
    /// The input to [`qf`] is numerically singular.
    #[error("qf input is numerically singular: |R({index},{index})| = {pivot:.3e} <= {tol:.3e}")]
    SingularInput {
        /// Index of the offending diagonal entry.
        index: usize,
        /// Magnitude of the offending diagonal entry.
        pivot: f64,
        /// Threshold it fell below.
        tol: f64,
    },
    /// A matrix handed to [`OrthMatrix::new`] is not orthogonal to tolerance.
    #[error("matrix is not orthogonal: ||Q^T Q - I||_F = {defect:.3e} > {tol:.3e}")]
    NotOrthogonal { defect: f64, tol: f64 },
}

/// An exactly symmetric real matrix, the element type of the Euclidean space
/// the residual map lands in.
///
/// Construction through [`SymMatrix::new`] symmetrizes, so `m[(i,j)] ==
/// m[(j,i)]` holds bitwise afterwards; the arithmetic provided here preserves
/// that property exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes `m` as `(m + m^T)/2` and wraps it.
    pub fn new(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "SymMatrix requires a square matrix");
        Self { m: symmetrize(&m) }
    }

    /// Wraps a matrix that is already exactly symmetric.
    ///
    /// Only called on outputs of entrywise operations between symmetric
    /// matrices, which cannot break symmetry.
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(is_exactly_symmetric(&m), "matrix is not exactly symmetric");
        Self { m }
    }

    /// The zero matrix of order `n`.
    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    /// The identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    /// Matrix order.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Borrows the underlying dense matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Unwraps into the underlying dense matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// Frobenius inner product `tr(self^T other)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    /// Entrywise scaling; exact on the symmetry invariant.
    pub fn scale(&self, c: f64) -> SymMatrix {
        Self::from_symmetric_unchecked(&self.m * c)
    }

    /// Entrywise (Hadamard) product with another symmetric matrix.
    pub fn hadamard(&self, other: &SymMatrix) -> SymMatrix {
        Self::from_symmetric_unchecked(self.m.component_mul(&other.m))
    }

    /// Largest entry; `-inf` for `n = 0`.
    pub fn max_entry(&self) -> f64 {
        self.m.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Add<&SymMatrix> for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix::from_symmetric_unchecked(&self.m + &rhs.m)
    }
}

impl std::ops::Sub<&SymMatrix> for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix::from_symmetric_unchecked(&self.m - &rhs.m)
    }
}

fn is_exactly_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    m.ncols() == n && (0..n).all(|j| (0..j).all(|i| m[(i, j)] == m[(j, i)]))
}

/// An orthogonal matrix, `Q^T Q = I` up to the construction tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthMatrix {
    q: DMatrix<f64>,
}

impl OrthMatrix {
    /// Validates `||Q^T Q - I||_F <= tol` and wraps `q`.
    pub fn new(q: DMatrix<f64>, tol: f64) -> Result<Self, KernelError> {
        assert_eq!(q.nrows(), q.ncols(), "OrthMatrix requires a square matrix");
        let defect = orthogonality_defect(&q);
        if defect > tol {
            return Err(KernelError::NotOrthogonal { defect, tol });
        }
        Ok(Self { q })
    }

    /// The identity, trivially orthogonal.
    pub fn identity(n: usize) -> Self {
        Self { q: DMatrix::identity(n, n) }
    }

    pub(crate) fn from_orthogonal_unchecked(q: DMatrix<f64>) -> Self {
        debug_assert!(orthogonality_defect(&q) <= 1e-10 * (q.nrows() as f64));
        Self { q }
    }

    /// Matrix order.
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Borrows the underlying dense matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Unwraps into the underlying dense matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.q
    }
}

/// `||Q^T Q - I||_F`, the departure of `q` from orthogonality.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm()
}

/// Entrywise product of two equally sized matrices.
///
/// Panics on dimension mismatch, like the arithmetic operators of the
/// underlying linear algebra.
pub fn hadamard(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.shape(), b.shape(), "hadamard: dimension mismatch");
    a.component_mul(b)
}

/// Commutator `[A, B] = AB - BA`; skew-symmetric whenever `A` and `B` are
/// both symmetric.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.shape(), b.shape(), "commutator: dimension mismatch");
    a * b - b * a
}

/// Symmetric part `(A + A^T)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        out[(j, j)] = a[(j, j)];
        for i in 0..j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Skew part `(A - A^T)/2`.
pub fn skew(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// Q factor of the QR factorization of an invertible matrix, with the sign
/// convention that the triangular factor has a strictly positive diagonal.
///
/// Any QR factorization is computed first and the columns of `Q` (and rows of
/// `R`) are then flipped wherever `R` has a negative diagonal entry, mapping a
/// zero sign to `+1`. This pins one factorization deterministically across
/// backends. Fails with [`KernelError::SingularInput`] when a diagonal entry
/// of `R` falls below `QF_SINGULAR_REL_TOL * ||A||_F` in magnitude.
pub fn qf(a: &DMatrix<f64>) -> Result<OrthMatrix, KernelError> {
    assert_eq!(a.nrows(), a.ncols(), "qf requires a square matrix");
    let tol = QF_SINGULAR_REL_TOL * a.norm();
    let (mut q, r) = a.clone().qr().unpack();
    for i in 0..r.nrows() {
        let pivot = r[(i, i)];
        if pivot.abs() <= tol {
            return Err(KernelError::SingularInput { index: i, pivot: pivot.abs(), tol });
        }
        if pivot < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    Ok(OrthMatrix::from_orthogonal_unchecked(q))
}

/// Column-major vectorization `vec(A)`: stacks the columns of `A`.
pub fn vectorize(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`] for an `n x n` matrix.
pub fn unvectorize(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), n * n, "unvectorize: length mismatch");
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// Half-vectorization of a symmetric matrix: packs the upper triangle column
/// by column, entry `(i, j)` with `i <= j` landing at position
/// `j(j+1)/2 + i` (zero-based).
pub fn vech(z: &SymMatrix) -> DVector<f64> {
    let n = z.dim();
    let m = z.matrix();
    let mut out = DVector::zeros(n * (n + 1) / 2);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            out[k] = m[(i, j)];
            k += 1;
        }
    }
    out
}

/// The duplication matrix `G` with `vec(Z) = G vech(Z)` for every symmetric
/// `Z`; size `n^2 x n(n+1)/2`, entries in {0, 1}, full column rank.
#[derive(Clone, Debug, PartialEq)]
pub struct DuplicationMatrix {
    n: usize,
    m: DMatrix<f64>,
}

impl DuplicationMatrix {
    pub fn new(n: usize) -> Self {
        let cols = n * (n + 1) / 2;
        let mut m = DMatrix::zeros(n * n, cols);
        let mut k = 0;
        for j in 0..n {
            for i in 0..=j {
                m[(i + j * n, k)] = 1.0;
                m[(j + i * n, k)] = 1.0;
                k += 1;
            }
        }
        Self { n, m }
    }

    /// Matrix order of the symmetric matrices being packed.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Length of the packed representation, `n(n+1)/2`.
    pub fn vech_len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// Borrows `G` itself.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}
