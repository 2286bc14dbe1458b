//! The outer iteration: an inexact Newton dogleg method on the product
//! manifold.
//!
//! Each iteration solves the perturbed normal equation by (preconditioned)
//! CG, lifts the result to the inexact Newton direction through the adjoint
//! of the differential, forms the Cauchy point along the negative gradient,
//! intersects the piecewise-linear dogleg curve with the trust region,
//! accepts or rejects on the ratio of actual to predicted residual
//! reduction, and adapts the radius. Accepted iterates make the residual
//! norm strictly decrease; once the Newton direction fits in the trust
//! region the method turns into an inexact Newton iteration and converges
//! quadratically.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::SymMatrix;
use crate::manifold::{inner, ManifoldError, ProductPoint, TangentVector};
use crate::normal::{solve_normal_equation, CgOutcome, NormalOperator, Preconditioner};
use crate::problem::{
    adjoint_at, differential_at, gradient_at, residual, residual_at, stationarity_tol, Residual,
    SpectrumProblem,
};

/// Scalar controls of the solver. The defaults reproduce the reference
/// parameter set: `t = 1e-4`, `sigma_max = 1e-6`, `theta = 0.25`,
/// `delta_min = 1e-8`, `delta_max = 1e10`, `rho_s = 0.1`, `rho_e = 0.75`,
/// `beta_s = 0.25`, `beta_e = 4`, forcing terms `1/(k+10)`, residual
/// tolerance `5e-10`, 100 outer iterations, and `n^2` inner CG iterations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Acceptance threshold `t` for the Ared/Pred ratio.
    pub accept_thresh: f64,
    /// Cap on the normal-equation perturbation; `sigma_k = min(sigma_max, ||F||)`.
    pub sigma_max: f64,
    /// Upper bound for admissible radius shrink factors.
    pub theta_max: f64,
    /// Radius shrink factor used on rejection, in `(0, theta_max]`.
    pub theta: f64,
    /// Floor of the trust-region radius; reaching it on rejection stops the run.
    pub delta_min: f64,
    /// Ceiling of the trust-region radius.
    pub delta_max: f64,
    /// Ratio below which the radius shrinks after acceptance (`rho_s`).
    pub shrink_thresh: f64,
    /// Ratio above which a boundary step expands the radius (`rho_e`).
    pub expand_thresh: f64,
    /// Radius multiplier on post-acceptance shrink (`beta_s`).
    pub shrink_factor: f64,
    /// Radius multiplier on expansion (`beta_e`).
    pub expand_factor: f64,
    /// Residual norm below which the iteration stops as converged.
    pub residual_tol: f64,
    /// Cap on outer iterations.
    pub max_outer: usize,
    /// Cap on inner CG iterations per outer iteration; `None` means `n^2`.
    pub cg_max: Option<usize>,
    /// Forcing-term schedule offset: `eta_bar(k) = 1/(k + forcing_offset)`.
    pub forcing_offset: f64,
    /// Base seed recorded alongside runs; the harness derives per-cell
    /// streams from it. The solver itself is deterministic.
    pub seed: u64,
    /// Solve the inner equation with the structured preconditioner.
    pub use_preconditioner: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            accept_thresh: 1e-4,
            sigma_max: 1e-6,
            theta_max: 0.9,
            theta: 0.25,
            delta_min: 1e-8,
            delta_max: 1e10,
            shrink_thresh: 0.1,
            expand_thresh: 0.75,
            shrink_factor: 0.25,
            expand_factor: 4.0,
            residual_tol: 5e-10,
            max_outer: 100,
            cg_max: None,
            forcing_offset: 10.0,
            seed: 0,
            use_preconditioner: true,
        }
    }
}

impl SolverConfig {
    /// Checks every parameter constraint; [`solve`] refuses invalid
    /// configurations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks: [(&str, bool); 9] = [
            ("accept_thresh must lie in (0, 1)", self.accept_thresh > 0.0 && self.accept_thresh < 1.0),
            ("sigma_max must lie in (0, 1)", self.sigma_max > 0.0 && self.sigma_max < 1.0),
            (
                "theta must lie in (0, theta_max] with theta_max < 1",
                self.theta > 0.0 && self.theta <= self.theta_max && self.theta_max < 1.0,
            ),
            (
                "delta bounds must satisfy 0 < delta_min < delta_max",
                self.delta_min > 0.0 && self.delta_min < self.delta_max,
            ),
            (
                "ratio thresholds must satisfy 0 < shrink_thresh < expand_thresh < 1",
                self.shrink_thresh > 0.0 && self.shrink_thresh < self.expand_thresh && self.expand_thresh < 1.0,
            ),
            (
                "radius factors must satisfy 0 < shrink_factor < 1 < expand_factor",
                self.shrink_factor > 0.0 && self.shrink_factor < 1.0 && self.expand_factor > 1.0,
            ),
            ("residual_tol must be positive", self.residual_tol > 0.0),
            ("forcing_offset must exceed 1 so that eta_bar(0) < 1", self.forcing_offset > 1.0),
            ("max_outer must be positive", self.max_outer > 0),
        ];
        for (msg, ok) in checks {
            if !ok {
                return Err(ConfigError::Invalid(msg));
            }
        }
        Ok(())
    }

    /// The forcing term `eta_bar(k)`, decreasing to zero.
    pub fn eta_bar(&self, k: usize) -> f64 {
        1.0 / (k as f64 + self.forcing_offset)
    }

    /// Inner CG budget for problems of order `n`.
    pub fn cg_budget(&self, n: usize) -> usize {
        self.cg_max.unwrap_or(n * n)
    }
}

/// A configuration parameter violated its constraint.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid solver configuration: {0}")]
    Invalid(&'static str),
}

/// Errors of individual solver building blocks; [`solve`] itself never
/// fails, it reports through [`SolveStatus`].
#[derive(Debug, Error)]
pub enum SolverError {
    /// The gradient norm fell below the stationarity guard, so the Cauchy
    /// coefficient is an ill-defined 0/0.
    #[error("stationary point: gradient norm {gradient_norm:.3e} below tolerance")]
    StationaryPoint { gradient_norm: f64 },
}

/// Which dogleg segment produced the step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// The inexact Newton direction fit inside the trust region.
    Newton,
    /// The Cauchy point hit the boundary and was scaled back to it.
    ScaledCauchy,
    /// The boundary intersection of the Cauchy-to-Newton segment.
    Interpolated,
}

/// Terminal state of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Residual norm fell below the tolerance.
    Converged,
    /// A rejected step could not shrink the radius below its floor.
    StalledAtDeltaMin,
    /// The outer iteration cap was reached first.
    MaxOuterReached,
    /// The inner CG solve ran out of budget.
    CgExhausted,
    /// The iterate is (numerically) a stationary point of the merit
    /// function with nonzero residual.
    StationaryPoint,
}

impl SolveStatus {
    /// Stable lower-case token used in reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::StalledAtDeltaMin => "stalled_at_delta_min",
            SolveStatus::MaxOuterReached => "max_outer_reached",
            SolveStatus::CgExhausted => "cg_exhausted",
            SolveStatus::StationaryPoint => "stationary_point",
        }
    }
}

/// Bookkeeping for one accepted outer iteration.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Outer iteration index.
    pub k: usize,
    /// `||F(x_k)||` at the start of the iteration.
    pub res_norm: f64,
    /// Perturbation used in the normal equation.
    pub sigma: f64,
    /// Forcing term used by the inner solve.
    pub eta: f64,
    /// Trust-region radius at acceptance time.
    pub delta: f64,
    /// Inner CG iterations consumed.
    pub cg_iters: usize,
    /// Dogleg segment of the accepted step.
    pub step_kind: StepKind,
    /// Norm of the accepted step.
    pub step_norm: f64,
    /// Actual residual-norm reduction.
    pub ared: f64,
    /// Predicted (linear-model) reduction.
    pub pred: f64,
    /// Radius shrinks needed before acceptance.
    pub retries: usize,
    /// Relative linear-model residual of the Newton direction.
    pub eta_in: f64,
    /// Relative linear-model residual of the Cauchy point.
    pub eta_cp: f64,
    /// Relative linear-model residual of the accepted step,
    /// `1 - pred / res_norm`.
    pub tau: f64,
}

/// Outcome of a run: terminal point and status plus per-iteration records.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub final_point: ProductPoint,
    pub final_residual: f64,
    pub records: Vec<IterationRecord>,
    /// Accepted outer iterations.
    pub it: usize,
    /// Residual evaluations, including the initial one and rejected trials.
    pub nf: usize,
    /// Total inner CG iterations across the run.
    pub ncg: usize,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Residual trajectory `(k, ||F(x_k)||)` including the terminal point.
    pub fn trajectory(&self) -> Vec<(usize, f64)> {
        let mut t: Vec<(usize, f64)> = self.records.iter().map(|r| (r.k, r.res_norm)).collect();
        t.push((self.it, self.final_residual));
        t
    }
}

/// The Cauchy point: the minimizer of the linear model along the negative
/// gradient, `-(||g||^2 / ||DF[g]||^2) g`. Orthogonal to the null space of
/// the differential by construction.
pub fn cauchy_point(
    p: &SpectrumProblem,
    x: &ProductPoint,
    f: &Residual,
    g: &TangentVector,
) -> Result<TangentVector, SolverError> {
    let iso = p.isospectral(x.q());
    cauchy_point_at(x, &iso, f, g).map(|(cp, _)| cp)
}

/// Cauchy point from cached data, also returning the relative linear-model
/// residual it attains.
fn cauchy_point_at(
    x: &ProductPoint,
    iso: &SymMatrix,
    f: &Residual,
    g: &TangentVector,
) -> Result<(TangentVector, f64), SolverError> {
    let g_sq = inner(x, g, g);
    if g_sq.sqrt() <= stationarity_tol(f.norm()) {
        return Err(SolverError::StationaryPoint { gradient_norm: g_sq.sqrt() });
    }
    let dg = differential_at(x, iso, g);
    let dg_sq = dg.dot(&dg);
    let coefficient = g_sq / dg_sq;
    // relative model residual: eta_cp^2 = 1 - ||g||^4 / (||F||^2 ||DF[g]||^2)
    let eta_cp = (1.0 - g_sq * g_sq / (f.norm() * f.norm() * dg_sq)).max(0.0).sqrt();
    Ok((g.scale(-coefficient), eta_cp))
}

/// Lifts an inner CG solution to the inexact Newton direction,
/// `DF*[dZ]`; lies in the range of the adjoint, hence orthogonal to the
/// null space of the differential.
pub fn newton_point(p: &SpectrumProblem, x: &ProductPoint, cg: &CgOutcome) -> TangentVector {
    adjoint_at(x, &p.isospectral(x.q()), &cg.d_z)
}

/// Intersects the dogleg curve through `cp` and `newton` with the trust
/// region of radius `delta`.
///
/// The Newton direction is tested first; a degenerate interpolation
/// (possible only through rounding when the three norms nearly coincide)
/// falls back to the scaled Cauchy step.
pub fn select_dogleg_step(
    base: &ProductPoint,
    cp: &TangentVector,
    newton: &TangentVector,
    delta: f64,
    delta_min: f64,
) -> (TangentVector, StepKind) {
    debug_assert!(delta >= delta_min);
    let newton_norm = newton.norm();
    if newton_norm <= delta {
        return (newton.clone(), StepKind::Newton);
    }
    let cp_norm = cp.norm();
    let scaled_cauchy = || (cp.scale(delta / cp_norm), StepKind::ScaledCauchy);
    if cp_norm >= delta {
        return scaled_cauchy();
    }
    // ||(1-gamma) cp + gamma newton|| = delta for gamma in (0, 1):
    // with e = newton - cp, solve a g^2 + 2 b g + c = 0.
    let e = TangentVector::lin_comb(1.0, newton, -1.0, cp);
    let a = inner(base, &e, &e);
    let b = inner(base, cp, &e);
    let c = cp_norm * cp_norm - delta * delta;
    let disc = b * b - a * c;
    if a <= 0.0 || disc < 0.0 {
        return scaled_cauchy();
    }
    let root = disc.sqrt();
    let gamma = if b <= 0.0 { (-b + root) / a } else { -c / (b + root) };
    if !(gamma > 0.0 && gamma < 1.0) {
        return scaled_cauchy();
    }
    (TangentVector::lin_comb(1.0 - gamma, cp, gamma, newton), StepKind::Interpolated)
}

/// Actual and predicted residual reduction of a trial step, together with
/// the retracted trial point. Each call amounts to one residual evaluation.
pub fn ared_pred(
    p: &SpectrumProblem,
    x: &ProductPoint,
    step: &TangentVector,
    f: &Residual,
) -> Result<(f64, f64, ProductPoint), ManifoldError> {
    let iso = p.isospectral(x.q());
    let t = trial_step(p, x, &iso, step, f)?;
    Ok((t.ared, t.pred, t.point))
}

struct Trial {
    ared: f64,
    pred: f64,
    point: ProductPoint,
    residual: Residual,
}

fn trial_step(
    p: &SpectrumProblem,
    x: &ProductPoint,
    iso: &SymMatrix,
    step: &TangentVector,
    f: &Residual,
) -> Result<Trial, ManifoldError> {
    let point = x.retract(step)?;
    let residual = residual(p, &point);
    let model = f.value() + &differential_at(x, iso, step);
    Ok(Trial {
        ared: f.norm() - residual.norm(),
        pred: f.norm() - model.norm(),
        point,
        residual,
    })
}

/// Trust-region radius for the next iteration, given the acceptance ratio
/// of the step just taken.
///
/// A poor ratio shrinks toward the Newton length (or by `shrink_factor`
/// when the Newton direction did not fit); a good ratio on a boundary step
/// expands by `expand_factor`; anything else leaves the radius alone.
pub fn update_radius(
    ratio: f64,
    step_norm: f64,
    newton_norm: f64,
    delta: f64,
    cfg: &SolverConfig,
) -> f64 {
    if ratio < cfg.shrink_thresh {
        if newton_norm < delta {
            newton_norm.max(cfg.delta_min)
        } else {
            (cfg.shrink_factor * delta).max(cfg.delta_min)
        }
    } else if ratio > cfg.expand_thresh && (step_norm - delta).abs() <= 1e-14 * delta {
        (cfg.expand_factor * delta).min(cfg.delta_max)
    } else {
        delta
    }
}

/// Runs the full outer iteration from `x0`.
///
/// Never panics on well-formed input; all failure modes are reported
/// through [`SolveStatus`]. Panics only if `cfg` violates its own
/// invariants.
pub fn solve(p: &SpectrumProblem, x0: &ProductPoint, cfg: &SolverConfig) -> SolveReport {
    cfg.validate().expect("solver configuration violates its invariants");
    let n = p.dim();
    assert_eq!(x0.dim(), n, "start point and spectrum orders differ");
    let cg_budget = cfg.cg_budget(n);
    let start = Instant::now();

    let mut x = x0.clone();
    let mut iso = p.isospectral(x.q());
    let mut f = residual_at(&x, &iso);
    let mut nf = 1usize;
    let mut ncg = 0usize;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut delta = 2.0 * cfg.delta_min;

    let status = 'outer: loop {
        let k = records.len();
        let fnorm = f.norm();
        if fnorm < cfg.residual_tol {
            break SolveStatus::Converged;
        }
        if k >= cfg.max_outer {
            break SolveStatus::MaxOuterReached;
        }

        let sigma = cfg.sigma_max.min(fnorm);
        let eta = cfg.eta_bar(k).min(fnorm);

        let g = gradient_at(&x, &iso, &f);
        let (cp, eta_cp) = match cauchy_point_at(&x, &iso, &f, &g) {
            Ok(v) => v,
            Err(SolverError::StationaryPoint { .. }) => break SolveStatus::StationaryPoint,
        };

        let op = NormalOperator::new(&iso, &x, sigma);
        let pc = if cfg.use_preconditioner {
            // shift = s + sigma with sigma > 0 here, so construction cannot fail
            Some(
                Preconditioner::for_operator(&op, x.q(), p.eigenvalues())
                    .expect("positive shift"),
            )
        } else {
            None
        };
        let rhs = f.value().scale(-1.0);
        let cg = match solve_normal_equation(&op, pc.as_ref(), &rhs, eta, fnorm, cg_budget) {
            Ok(out) => out,
            Err(_) => break SolveStatus::CgExhausted,
        };
        ncg += cg.iters;
        let eta_in = cg.final_unperturbed_residual / fnorm;

        let newton = adjoint_at(&x, &iso, &cg.d_z);
        let newton_norm = newton.norm();
        if k == 0 {
            delta = if newton_norm < cfg.delta_min {
                2.0 * cfg.delta_min
            } else {
                newton_norm.min(cfg.delta_max)
            };
        }

        let (mut step, mut kind) =
            select_dogleg_step(&x, &cp, &newton, delta, cfg.delta_min);
        let mut trial = match trial_step(p, &x, &iso, &step, &f) {
            Ok(t) => t,
            Err(_) => break SolveStatus::StalledAtDeltaMin,
        };
        nf += 1;
        let mut retries = 0usize;

        while !(trial.pred > 0.0 && trial.ared >= cfg.accept_thresh * trial.pred) {
            if delta == cfg.delta_min {
                break 'outer SolveStatus::StalledAtDeltaMin;
            }
            delta = (cfg.theta * delta).max(cfg.delta_min);
            (step, kind) = select_dogleg_step(&x, &cp, &newton, delta, cfg.delta_min);
            trial = match trial_step(p, &x, &iso, &step, &f) {
                Ok(t) => t,
                Err(_) => break 'outer SolveStatus::StalledAtDeltaMin,
            };
            nf += 1;
            retries += 1;
        }

        let ratio = trial.ared / trial.pred;
        let step_norm = step.norm();
        records.push(IterationRecord {
            k,
            res_norm: fnorm,
            sigma,
            eta,
            delta,
            cg_iters: cg.iters,
            step_kind: kind,
            step_norm,
            ared: trial.ared,
            pred: trial.pred,
            retries,
            eta_in,
            eta_cp,
            tau: 1.0 - trial.pred / fnorm,
        });

        delta = update_radius(ratio, step_norm, newton_norm, delta, cfg);
        x = trial.point;
        f = trial.residual;
        iso = p.isospectral(x.q());
    };

    let final_residual = f.norm();
    SolveReport {
        status,
        final_point: x,
        final_residual,
        it: records.len(),
        records,
        nf,
        ncg,
        wall_time: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{OrthMatrix, SymMatrix};
    use crate::problem::{apply_differential, gradient, merit};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn example_spectrum() -> SpectrumProblem {
        SpectrumProblem::new(vec![5.0, 0.0, -2.0, -2.0]).unwrap()
    }

    /// A tangent vector with only a symmetric slot, convenient because its
    /// norm is directly controllable.
    fn sym_slot(base: &ProductPoint, m: DMatrix<f64>) -> TangentVector {
        base.project(&m, &DMatrix::zeros(m.nrows(), m.ncols()))
    }

    #[test]
    fn cauchy_point_rejects_stationary_points() {
        // S = 0 makes the gradient vanish identically while the residual
        // stays nonzero.
        let p = example_spectrum();
        let x = ProductPoint::new(SymMatrix::zeros(4), OrthMatrix::identity(4));
        let f = residual(&p, &x);
        let g = gradient(&p, &x);
        assert!(matches!(
            cauchy_point(&p, &x, &f, &g),
            Err(SolverError::StationaryPoint { .. })
        ));
    }

    #[test]
    fn cauchy_point_scalar_case_solves_the_model_exactly() {
        // n = 1: DF DF*[F] = 4 s^2 F, so the Cauchy step zeroes the model
        // and the attained relative model residual is 0.
        let p = SpectrumProblem::new(vec![2.0]).unwrap();
        let s = SymMatrix::new(DMatrix::from_element(1, 1, 1.5));
        let x = ProductPoint::new(s, OrthMatrix::identity(1));
        let f = residual(&p, &x);
        let g = gradient(&p, &x);
        let cp = cauchy_point(&p, &x, &f, &g).unwrap();
        let model = f.value() + &apply_differential(&p, &x, &cp);
        assert_abs_diff_eq!(model.norm(), 0.0, epsilon = 1e-14);
        // the scalar relation DF DF*[F] = mu F with mu = 4 s^2
        let mu = apply_differential(&p, &x, &g).matrix()[(0, 0)] / f.value().matrix()[(0, 0)];
        assert_abs_diff_eq!(mu, 4.0 * 1.5 * 1.5, epsilon = 1e-12);
    }

    #[test]
    fn cauchy_point_minimizes_along_the_gradient() {
        let p = example_spectrum();
        let mut r = rng(50);
        for _ in 0..5 {
            let x = ProductPoint::random(4, &mut r);
            let f = residual(&p, &x);
            let g = gradient(&p, &x);
            let cp = cauchy_point(&p, &x, &f, &g).unwrap();
            let coefficient = -cp.norm() / g.norm();
            let dg = apply_differential(&p, &x, &g);
            let model = |alpha: f64| (f.value() + &dg.scale(alpha)).norm();
            let best = model(coefficient);
            for step in -20..=20 {
                let alpha = coefficient * (1.0 + 0.05 * step as f64);
                assert!(model(alpha) >= best - 1e-12, "grid point beats the Cauchy point");
            }
        }
    }

    #[test]
    fn newton_point_improves_the_linear_model() {
        let p = example_spectrum();
        let mut r = rng(51);
        let x = ProductPoint::random(4, &mut r);
        let iso = p.isospectral(x.q());
        let f = residual(&p, &x);
        let op = NormalOperator::new(&iso, &x, 1e-6);
        let rhs = f.value().scale(-1.0);
        let cg = solve_normal_equation(&op, None, &rhs, 0.1, f.norm(), 64).unwrap();
        let newton = newton_point(&p, &x, &cg);
        let model = f.value() + &apply_differential(&p, &x, &newton);
        assert!(model.norm() < f.norm(), "guaranteed by the strict unperturbed test");
        // zero inner solution gives the zero direction
        let zero_cg = CgOutcome {
            d_z: SymMatrix::zeros(4),
            iters: 0,
            final_unperturbed_residual: f.norm(),
            final_perturbed_residual: f.norm(),
            satisfied_tol2: false,
        };
        assert_eq!(newton_point(&p, &x, &zero_cg).norm(), 0.0);
    }

    #[test]
    fn newton_point_norm_obeys_pseudoinverse_bound() {
        // near a solution with surjective differential:
        // ||dx_IN|| <= (1 + eta) |||DF^dagger||| ||F||, checked densely
        let mut r = rng(52);
        let lambda: Vec<f64> = vec![2.0, 0.7, -0.4, 1.1];
        let p = SpectrumProblem::new(lambda).unwrap();
        // start near a genuine solution: C = S .* S with S from a converged run
        let x0 = ProductPoint::random(4, &mut r);
        let report = solve(&p, &x0, &SolverConfig::default());
        if report.status != SolveStatus::Converged {
            // rare for this spectrum; the bound is exercised on other seeds
            return;
        }
        let x = report.final_point;
        // perturb slightly off the solution
        let v = x.random_tangent(&mut r).scale(1e-4);
        let x = x.retract(&v).unwrap();
        let iso = p.isospectral(x.q());
        let f = residual_at(&x, &iso);
        let eta = 0.1;
        let op = NormalOperator::new(&iso, &x, 1e-6_f64.min(f.norm()));
        let cg = solve_normal_equation(&op, None, &f.value().scale(-1.0), eta, f.norm(), 256)
            .unwrap();
        let newton = newton_point(&p, &x, &cg);

        // dense operator norm of the pseudoinverse via the duplication matrix
        let g = crate::kernels::DuplicationMatrix::new(4);
        // matrix of DF* in vec coordinates restricted to symmetric inputs:
        // build columns DF*[E_k] for the vech basis and measure the smallest
        // positive singular value of the stacked differential instead
        let mut cols = Vec::new();
        for c in 0..g.vech_len() {
            let col_vec: Vec<f64> = g.matrix().column(c).iter().copied().collect();
            let e = crate::kernels::unvectorize(&nalgebra::DVector::from_vec(col_vec), 4);
            // orthonormal Frobenius basis of the symmetric matrices
            let e = SymMatrix::new(e.clone());
            let e = e.scale(1.0 / e.norm());
            let w = adjoint_at(&x, &iso, &e);
            let mut col = crate::kernels::vectorize(w.d_s().matrix()).as_slice().to_vec();
            col.extend_from_slice(crate::kernels::vectorize(w.d_q()).as_slice());
            cols.push(col);
        }
        let adj = DMatrix::from_fn(32, g.vech_len(), |i, j| cols[j][i]);
        // singular values of DF equal those of DF*; smallest nonzero gives
        // the pseudoinverse norm. DF* here acts from the 10-dim vech space.
        let svals = adj.svd(false, false).singular_values;
        let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smin > 1e-8, "differential should be surjective near this solution");
        let bound = (1.0 + eta) / smin * f.norm();
        assert!(
            newton.norm() <= bound * (1.0 + 1e-6),
            "Newton point norm {} exceeds pseudoinverse bound {}",
            newton.norm(),
            bound
        );
    }

    #[test]
    fn dogleg_returns_newton_inside_radius() {
        let mut r = rng(53);
        let x = ProductPoint::random(3, &mut r);
        let newton = sym_slot(&x, DMatrix::identity(3, 3) * (0.5 / 3f64.sqrt()));
        let cp = sym_slot(&x, DMatrix::identity(3, 3) * 0.1);
        let (step, kind) = select_dogleg_step(&x, &cp, &newton, 1.0, 1e-8);
        assert_eq!(kind, StepKind::Newton);
        assert_eq!(step, newton);
    }

    #[test]
    fn dogleg_scales_cauchy_to_the_boundary() {
        let mut r = rng(54);
        let x = ProductPoint::random(3, &mut r);
        let cp = sym_slot(&x, DMatrix::identity(3, 3) * (3.0 / 3f64.sqrt()));
        let newton = sym_slot(&x, DMatrix::identity(3, 3) * 10.0);
        let (step, kind) = select_dogleg_step(&x, &cp, &newton, 1.0, 1e-8);
        assert_eq!(kind, StepKind::ScaledCauchy);
        assert_abs_diff_eq!(step.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dogleg_interpolates_orthogonal_directions() {
        // cp and newton orthogonal with ||cp|| = 0.6, ||newton|| = 2:
        // (1-g)^2 0.36 + g^2 4 = 1
        let x = ProductPoint::new(SymMatrix::zeros(2), OrthMatrix::identity(2));
        let mut m_cp = DMatrix::zeros(2, 2);
        m_cp[(0, 0)] = 0.6;
        let mut m_newton = DMatrix::zeros(2, 2);
        m_newton[(1, 1)] = 2.0;
        let cp = sym_slot(&x, m_cp);
        let newton = sym_slot(&x, m_newton);
        let (step, kind) = select_dogleg_step(&x, &cp, &newton, 1.0, 1e-8);
        assert_eq!(kind, StepKind::Interpolated);
        assert_abs_diff_eq!(step.norm(), 1.0, epsilon = 1e-14);
        let gamma = step.d_s().matrix()[(1, 1)] / 2.0;
        assert_abs_diff_eq!(
            0.36 * (1.0 - gamma) * (1.0 - gamma) + 4.0 * gamma * gamma,
            1.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn ared_pred_vanishes_on_zero_step() {
        let p = example_spectrum();
        let mut r = rng(55);
        let x = ProductPoint::random(4, &mut r);
        let f = residual(&p, &x);
        let (ared, pred, trial) = ared_pred(&p, &x, &TangentVector::zero(4), &f).unwrap();
        // retraction re-runs qf on Q, so ared is zero only to rounding
        assert_abs_diff_eq!(ared, 0.0, epsilon = 1e-12);
        assert_eq!(pred, 0.0);
        assert_abs_diff_eq!((trial.s().matrix() - x.s().matrix()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn prediction_is_positive_along_the_dogleg() {
        let p = example_spectrum();
        let mut r = rng(56);
        let x = ProductPoint::random(4, &mut r);
        let f = residual(&p, &x);
        let g = gradient(&p, &x);
        let cp = cauchy_point(&p, &x, &f, &g).unwrap();
        let iso = p.isospectral(x.q());
        let op = NormalOperator::new(&iso, &x, 1e-6);
        let cg =
            solve_normal_equation(&op, None, &f.value().scale(-1.0), 0.1, f.norm(), 64).unwrap();
        let newton = newton_point(&p, &x, &cg);
        for delta in [0.25 * cp.norm(), cp.norm(), 0.5 * (cp.norm() + newton.norm())] {
            let (step, _) = select_dogleg_step(&x, &cp, &newton, delta.max(1e-8), 1e-8);
            let (_, pred, _) = ared_pred(&p, &x, &step, &f).unwrap();
            assert!(pred > 0.0, "model must predict decrease on the dogleg");
        }
    }

    #[test]
    fn ared_over_pred_approaches_one_for_tiny_steps() {
        let p = example_spectrum();
        let mut r = rng(57);
        let x = ProductPoint::random(4, &mut r);
        let f = residual(&p, &x);
        let g = gradient(&p, &x);
        let step = g.scale(-1e-6 / g.norm());
        let (ared, pred, _) = ared_pred(&p, &x, &step, &f).unwrap();
        assert!((ared / pred - 1.0).abs() <= 1e-4, "ared/pred = {}", ared / pred);
    }

    #[test]
    fn radius_update_follows_the_three_branches() {
        let cfg = SolverConfig::default();
        // poor ratio, Newton direction inside: take its length
        assert_eq!(update_radius(0.05, 0.3, 0.3, 1.0, &cfg), 0.3);
        // good ratio on a boundary step: expand
        assert_eq!(update_radius(0.9, 1.0, 3.0, 1.0, &cfg), 4.0);
        // middle ground: unchanged
        assert_eq!(update_radius(0.5, 0.7, 3.0, 1.0, &cfg), 1.0);
        // poor ratio with Newton outside: multiplicative shrink
        assert_eq!(update_radius(0.05, 1.0, 3.0, 1.0, &cfg), 0.25);
        // expansion respects the ceiling
        let big = update_radius(0.9, cfg.delta_max, cfg.delta_max * 2.0, cfg.delta_max, &cfg);
        assert!(big <= cfg.delta_max);
    }

    #[test]
    fn solve_returns_immediately_on_a_solution() {
        let p = example_spectrum();
        let mut r = rng(58);
        let x0 = ProductPoint::random(4, &mut r);
        let first = solve(&p, &x0, &SolverConfig::default());
        assert_eq!(first.status, SolveStatus::Converged);
        let again = solve(&p, &first.final_point, &SolverConfig::default());
        assert_eq!(again.status, SolveStatus::Converged);
        assert_eq!(again.it, 0);
        assert_eq!(again.nf, 1);
    }

    #[test]
    fn solve_small_spectrum_converges_quickly() {
        let p = example_spectrum();
        let cfg = SolverConfig::default();
        let mut r = rng(59);
        for _ in 0..5 {
            let x0 = ProductPoint::random(4, &mut r);
            let report = solve(&p, &x0, &cfg);
            assert_eq!(report.status, SolveStatus::Converged);
            assert!(report.final_residual <= cfg.residual_tol);
            assert!(report.it <= 30, "took {} iterations", report.it);
            assert!(report.nf > report.it);
        }
    }

    #[test]
    fn solve_reports_stationary_start() {
        let p = example_spectrum();
        let x0 = ProductPoint::new(SymMatrix::zeros(4), OrthMatrix::identity(4));
        let report = solve(&p, &x0, &SolverConfig::default());
        assert_eq!(report.status, SolveStatus::StationaryPoint);
        assert_eq!(report.it, 0);
    }

    #[test]
    fn solve_respects_outer_iteration_cap() {
        let p = example_spectrum();
        let mut r = rng(60);
        let x0 = ProductPoint::random(4, &mut r);
        let cfg = SolverConfig { max_outer: 1, residual_tol: 1e-300, ..SolverConfig::default() };
        let report = solve(&p, &x0, &cfg);
        assert_eq!(report.status, SolveStatus::MaxOuterReached);
        assert_eq!(report.it, 1);
    }

    #[test]
    fn accepted_iterations_decrease_strictly_and_respect_brackets() {
        let p = example_spectrum();
        let cfg = SolverConfig::default();
        let mut r = rng(61);
        let x0 = ProductPoint::random(4, &mut r);
        let report = solve(&p, &x0, &cfg);
        assert_eq!(report.status, SolveStatus::Converged);
        let mut prev = f64::INFINITY;
        for rec in &report.records {
            assert!(rec.res_norm < prev);
            prev = rec.res_norm;
            assert!(rec.pred > 0.0);
            assert!(rec.ared >= cfg.accept_thresh * rec.pred);
            assert!(rec.tau < 1.0);
            // monotone bound from the acceptance test
            let next = rec.res_norm - rec.ared;
            assert!(
                next <= (1.0 - cfg.accept_thresh * (1.0 - rec.tau)) * rec.res_norm + 1e-12
            );
            assert!(rec.step_norm <= rec.delta * (1.0 + 1e-12));
        }
        assert!(report.final_residual < prev);
    }

    #[test]
    fn fixed_seed_solves_are_bit_reproducible() {
        let p = example_spectrum();
        let cfg = SolverConfig::default();
        let x0 = ProductPoint::random(4, &mut rng(62));
        let a = solve(&p, &x0, &cfg);
        let b = solve(&p, &x0, &cfg);
        assert_eq!(a.final_residual.to_bits(), b.final_residual.to_bits());
        assert_eq!(a.it, b.it);
        assert_eq!(a.nf, b.nf);
        assert_eq!(a.ncg, b.ncg);
        assert_eq!(a.final_point, b.final_point);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SolverConfig { accept_thresh: 1.5, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn merit_decreases_along_a_run() {
        let p = example_spectrum();
        let mut r = rng(63);
        let x0 = ProductPoint::random(4, &mut r);
        let report = solve(&p, &x0, &SolverConfig::default());
        assert!(merit(&p, &report.final_point) < merit(&p, &x0));
    }
}
