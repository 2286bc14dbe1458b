//! The perturbed normal equation and its conjugate-gradient solver.
//!
//! Each outer iteration solves
//!
//! ```text
//! (DF DF* + sigma id)[dZ] = -F
//! ```
//!
//! on the space of symmetric matrices. For this problem the composite
//! operator has the closed form
//!
//! ```text
//! H[Z] = 4 (S .* S) .* Z + [A, [A, Z]] + sigma Z,      A = Q L Q^T,
//! ```
//!
//! which is self-adjoint and positive definite for `sigma > 0`. The
//! preconditioner keeps the double bracket, replaces the entrywise term by
//! its largest coefficient `s = max_ij 4 (S .* S)_ij`, and inverts in the
//! eigenbasis of `A`:
//!
//! ```text
//! M[Z]     = (s + sigma) Z + [A, [A, Z]]
//! M^-1[Z]  = Q ((Q^T Z Q) ./ D) Q^T,   D_ij = (l_i - l_j)^2 + s + sigma.
//! ```
//!
//! CG terminates only when both of the stopping tests hold, measured in the
//! unpreconditioned Frobenius norm:
//!
//! * the perturbed residual satisfies `||H[dZ] + F|| <= eta ||F||`, and
//! * the unperturbed residual satisfies `||(H - sigma id)[dZ] + F|| < ||F||`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kernels::{commutator, OrthMatrix, SymMatrix};
use crate::manifold::ProductPoint;

/// Every 20 iterations the recurred CG residual is replaced by an explicitly
/// recomputed one; recurrences can drift in ill-conditioned solves.
const EXPLICIT_RESIDUAL_CADENCE: usize = 20;

/// Errors raised by the normal-equation machinery.
#[derive(Debug, Error)]
pub enum NormalError {
    /// The preconditioner shift `s + sigma` must be positive.
    #[error("preconditioner shift must be positive, got {0:.3e}")]
    NonpositiveShift(f64),
    /// CG ran out of budget (or lost positive definiteness to rounding)
    /// before both stopping tests held.
    #[error(
        "CG exhausted {iters} iterations without meeting both stopping tests \
         (perturbed residual {perturbed_residual:.3e}, target {target:.3e}, \
         unperturbed residual {unperturbed_residual:.3e}, curvature breakdown: {curvature_breakdown})"
    )]
    CgBudgetExhausted {
        iters: usize,
        perturbed_residual: f64,
        unperturbed_residual: f64,
        target: f64,
        curvature_breakdown: bool,
    },
}

/// The operator `H[Z] = 4 (S .* S) .* Z + [A, [A, Z]] + sigma Z`.
#[derive(Clone, Debug)]
pub struct NormalOperator {
    /// `A = Q L Q^T`, shared with the residual evaluation at the iterate.
    conjugated: SymMatrix,
    /// `S .* S`.
    squared: SymMatrix,
    sigma: f64,
}

impl NormalOperator {
    /// Builds the operator at an iterate from its cached isospectral matrix.
    pub fn new(iso: &SymMatrix, x: &ProductPoint, sigma: f64) -> Self {
        assert!(sigma >= 0.0, "sigma must be nonnegative");
        Self { conjugated: iso.clone(), squared: x.s().hadamard(x.s()), sigma }
    }

    /// The perturbation `sigma`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `S .* S` as held by the operator.
    pub fn squared(&self) -> &SymMatrix {
        &self.squared
    }

    /// Applies `H` to a symmetric matrix.
    pub fn apply(&self, z: &SymMatrix) -> SymMatrix {
        let a = self.conjugated.matrix();
        let hadamard = self.squared.hadamard(z).scale(4.0);
        let double_bracket = commutator(a, &commutator(a, z.matrix()));
        SymMatrix::new(hadamard.into_matrix() + double_bracket + z.matrix() * self.sigma)
    }
}

/// The structured preconditioner, held in applicable (matrix-free) form.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    q: OrthMatrix,
    shift: f64,
    /// `D_ij = (l_i - l_j)^2 + shift`, all entries positive.
    denom: DMatrix<f64>,
}

impl Preconditioner {
    /// Builds the preconditioner from the eigenbasis `q`, the prescribed
    /// eigenvalues, and the shift `s + sigma`.
    pub fn new(q: &OrthMatrix, lambda: &DVector<f64>, shift: f64) -> Result<Self, NormalError> {
        if shift <= 0.0 {
            return Err(NormalError::NonpositiveShift(shift));
        }
        let n = lambda.len();
        assert_eq!(q.dim(), n, "Preconditioner: dimension mismatch");
        let denom = DMatrix::from_fn(n, n, |i, j| {
            let d = lambda[i] - lambda[j];
            d * d + shift
        });
        Ok(Self { q: q.clone(), shift, denom })
    }

    /// Builds the preconditioner for the normal operator at an iterate,
    /// with `shift = max_ij 4 (S .* S)_ij + sigma`.
    pub fn for_operator(
        op: &NormalOperator,
        q: &OrthMatrix,
        lambda: &DVector<f64>,
    ) -> Result<Self, NormalError> {
        let s = 4.0 * op.squared().max_entry().max(0.0);
        Self::new(q, lambda, s + op.sigma())
    }

    /// The shift `s + sigma`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Applies `M^-1` to a symmetric matrix: rotate into the eigenbasis,
    /// divide entrywise by `D`, rotate back.
    pub fn apply_inverse(&self, z: &SymMatrix) -> SymMatrix {
        let qm = self.q.matrix();
        let w = qm.transpose() * z.matrix() * qm;
        let scaled = w.component_div(&self.denom);
        SymMatrix::new(qm * scaled * qm.transpose())
    }
}

/// Result of one inner CG solve.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    /// The computed approximate solution of the perturbed normal equation.
    pub d_z: SymMatrix,
    /// Iterations consumed.
    pub iters: usize,
    /// `||(H - sigma id)[dZ] + F||` at exit.
    pub final_unperturbed_residual: f64,
    /// `||H[dZ] + F||` at exit.
    pub final_perturbed_residual: f64,
    /// Whether the strict unperturbed test held at exit (always true on
    /// success; recorded for the trivial zero right-hand side).
    pub satisfied_tol2: bool,
}

/// Conjugate gradient (optionally preconditioned) on `H[dZ] = rhs` from a
/// zero initial guess, with the dual stopping tests described in the module
/// docs. `fnorm` is `||F||` and `rhs` is `-F`.
///
/// The recurred residual cheaply gates the first test each iteration; every
/// candidate exit is then verified against explicitly recomputed residuals,
/// and the recurrence is refreshed every [`EXPLICIT_RESIDUAL_CADENCE`]
/// iterations regardless.
pub fn solve_normal_equation(
    op: &NormalOperator,
    pc: Option<&Preconditioner>,
    rhs: &SymMatrix,
    eta: f64,
    fnorm: f64,
    cg_max: usize,
) -> Result<CgOutcome, NormalError> {
    let n = rhs.dim();
    if rhs.norm() == 0.0 {
        return Ok(CgOutcome {
            d_z: SymMatrix::zeros(n),
            iters: 0,
            final_unperturbed_residual: 0.0,
            final_perturbed_residual: 0.0,
            satisfied_tol2: true,
        });
    }
    assert!(fnorm > 0.0, "fnorm must be positive for a nonzero right-hand side");
    assert!((0.0..1.0).contains(&eta) && eta > 0.0, "eta must lie in (0, 1)");

    let target = eta * fnorm;
    let precondition = |r: &SymMatrix| match pc {
        Some(m) => m.apply_inverse(r),
        None => r.clone(),
    };

    let mut z = SymMatrix::zeros(n);
    let mut r = rhs.clone();
    let mut p = precondition(&r);
    let mut rho = r.dot(&p);

    let mut last_perturbed = r.norm();
    let mut last_unperturbed = f64::INFINITY;

    for iter in 1..=cg_max {
        let hp = op.apply(&p);
        let curvature = p.dot(&hp);
        if curvature <= 0.0 {
            return Err(NormalError::CgBudgetExhausted {
                iters: iter - 1,
                perturbed_residual: last_perturbed,
                unperturbed_residual: last_unperturbed,
                target,
                curvature_breakdown: true,
            });
        }
        let alpha = rho / curvature;
        z = &z + &p.scale(alpha);
        r = &r - &hp.scale(alpha);

        let recurred_norm = r.norm();
        let candidate = recurred_norm <= target;
        let refresh = iter % EXPLICIT_RESIDUAL_CADENCE == 0;
        if candidate || refresh {
            // Verify against the true residuals before declaring success.
            let hz = op.apply(&z);
            let perturbed = (&hz - rhs).norm();
            let unperturbed = (&(&hz - &z.scale(op.sigma())) - rhs).norm();
            last_perturbed = perturbed;
            last_unperturbed = unperturbed;
            if perturbed <= target && unperturbed < fnorm {
                return Ok(CgOutcome {
                    d_z: z,
                    iters: iter,
                    final_unperturbed_residual: unperturbed,
                    final_perturbed_residual: perturbed,
                    satisfied_tol2: true,
                });
            }
            // Re-anchor the recurrence on the explicit residual.
            r = rhs - &hz;
        } else {
            last_perturbed = recurred_norm;
        }

        let y_next = precondition(&r);
        let rho_next = r.dot(&y_next);
        let beta = rho_next / rho;
        p = &y_next + &p.scale(beta);
        rho = rho_next;
    }

    Err(NormalError::CgBudgetExhausted {
        iters: cg_max,
        perturbed_residual: last_perturbed,
        unperturbed_residual: last_unperturbed,
        target,
        curvature_breakdown: false,
    })
}
