//! Preconditioned conjugate gradients from a zero initial guess.
//!
//! The recurrence residual drives the iteration; convergence is decided on
//! the true residual `‖b - Av_k‖ ≤ tol·‖b‖`, recomputed every step.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{breakdown, check_len, invalid_arg};
use crate::math::{dot, norm2, pow_i, sqrt};
use crate::{Error, Result};

/// A square real operator `x ↦ Ax`. Preconditioners implement it as
/// `x ↦ M⁻¹x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOptions {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            maxit: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// Steps taken.
    pub iterations: usize,
    /// `‖b - Av_k‖/‖b‖` for `k = 0..=iterations`.
    pub relative_residuals: Vec<f64>,
    /// `√(r_kᵀM⁻¹r_k) / √(r_0ᵀM⁻¹r_0)` from the recurrence, one entry per
    /// preconditioner application.
    pub preconditioned_residuals: Vec<f64>,
    /// Seconds spent in the iteration (zero without the `std` feature).
    pub wall_time: f64,
    pub converged: bool,
    /// `‖v_k - v*‖_A` for `k = 0..=iterations` when a reference is given.
    pub knorm_errors: Option<Vec<f64>>,
}

struct Clock {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

/// Solves `Av = b` with preconditioner `minv ≈ A⁻¹`.
///
/// Hitting `maxit` is not an error; the report says `converged: false`.
/// Loss of definiteness (`pᵀAp ≤ 0` or `rᵀM⁻¹r ≤ 0`) is.
pub fn pcg_solve<A, M>(
    a: &A,
    minv: &M,
    b: &[f64],
    opts: PcgOptions,
    reference: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)>
where
    A: LinearOperator + ?Sized,
    M: LinearOperator + ?Sized,
{
    let n = a.dim();
    check_len("right-hand side", b.len(), n)?;
    check_len("preconditioner", minv.dim(), n)?;
    if let Some(r) = reference {
        check_len("reference solution", r.len(), n)?;
    }
    if !(opts.tol > 0.0) {
        return Err(invalid_arg!("tolerance must be positive, got {}", opts.tol));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(invalid_arg!("right-hand side has non-finite entries"));
    }
    let clock = Clock::start();
    let mut x = vec![0.0; n];
    let mut report = SolveReport {
        relative_residuals: vec![1.0],
        ..SolveReport::default()
    };

    // A·v* is all that the energy-norm errors need: ‖e‖²_A = eᵀ(Ax - Av*).
    let a_ref = match reference {
        Some(r) => {
            let ar = a.apply(r)?;
            report.knorm_errors = Some(vec![sqrt(dot(r, &ar).max(0.0))]);
            Some(ar)
        }
        None => None,
    };

    let bnorm = norm2(b);
    if bnorm == 0.0 {
        report.converged = true;
        report.wall_time = clock.seconds();
        return Ok((x, report));
    }

    let mut r = b.to_vec();
    let mut z = minv.apply(&r)?;
    let mut rz = dot(&r, &z);
    if !(rz > 0.0) {
        return Err(breakdown!(
            "preconditioner is not positive definite (rᵀz = {rz:e})"
        ));
    }
    let rz0 = rz;
    report.preconditioned_residuals.push(1.0);
    let mut p = z.clone();

    for k in 1..=opts.maxit {
        let ap = a.apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(breakdown!(
                "operator is not positive definite (pᵀAp = {pap:e})"
            ));
        }
        let step = rz / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += step * pi;
            *ri -= step * api;
        }
        report.iterations = k;

        let ax = a.apply(&x)?;
        let true_res: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        let rel = norm2(&true_res) / bnorm;
        report.relative_residuals.push(rel);
        if let (Some(ar), Some(errs), Some(v)) = (&a_ref, report.knorm_errors.as_mut(), reference) {
            let mut e2 = 0.0;
            for i in 0..n {
                e2 += (x[i] - v[i]) * (ax[i] - ar[i]);
            }
            errs.push(sqrt(e2.max(0.0)));
        }
        if rel <= opts.tol {
            report.converged = true;
            break;
        }

        z = minv.apply(&r)?;
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(breakdown!(
                "preconditioner is not positive definite (rᵀz = {rz_new:e})"
            ));
        }
        report.preconditioned_residuals.push(sqrt(rz_new / rz0));
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    report.wall_time = clock.seconds();
    Ok((x, report))
}

/// Whether `e_k ≤ 2·3^{-k}·e_0` holds for every recorded energy-norm error.
pub fn convergence_bound_check(report: &SolveReport) -> Result<bool> {
    let errs = report
        .knorm_errors
        .as_ref()
        .ok_or_else(|| Error::InvalidState("report has no energy-norm errors".into()))?;
    let Some(&e0) = errs.first() else {
        return Err(Error::InvalidState(
            "report has no energy-norm errors".into(),
        ));
    };
    Ok(errs
        .iter()
        .enumerate()
        .all(|(k, &e)| e <= 2.0 * pow_i(1.0 / 3.0, k) * e0 * (1.0 + 1e-8)))
}
