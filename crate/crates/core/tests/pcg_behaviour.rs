mod common;

use common::{dense_solve, random_vec, rng};
use nalgebra::DMatrix;
use paradiag_core::dense::build_dense_for;
use paradiag_core::{
    choose_alpha, convergence_bound_check, pcg_solve, ControlProblem, IdentityPreconditioner,
    LinearOperator, MscPreconditioner, PcgOptions, PinTPreconditioner, Result, SchurOperator,
};
use rand::Rng;

struct Dense(DMatrix<f64>);

impl LinearOperator for Dense {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(common::matvec(&self.0, x))
    }
}

struct DenseInverse(DMatrix<f64>);

impl LinearOperator for DenseInverse {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(dense_solve(&self.0, x))
    }
}

fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let q = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    &q * q.transpose() + DMatrix::identity(n, n) * n as f64
}

#[test]
fn exact_preconditioner_converges_in_one_step() {
    let a = random_spd(50, 11);
    let b = random_vec(&mut rng(12), 50);
    let (x, rep) = pcg_solve(
        &Dense(a.clone()),
        &DenseInverse(a.clone()),
        &b,
        PcgOptions::default(),
        None,
    )
    .unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 1);
    assert!(common::rel_err(&x, &dense_solve(&a, &b)) < 1e-10);
}

#[test]
fn unpreconditioned_solve_reaches_tolerance() {
    let a = random_spd(40, 13);
    let b = random_vec(&mut rng(14), 40);
    let (_, rep) = pcg_solve(
        &Dense(a),
        &IdentityPreconditioner::new(40),
        &b,
        PcgOptions::default(),
        None,
    )
    .unwrap();
    assert!(rep.converged);
    assert!(*rep.relative_residuals.last().unwrap() <= 1e-8);
    assert_eq!(rep.relative_residuals.len(), rep.iterations + 1);
}

#[test]
fn energy_errors_obey_the_rate_bound() {
    let prob = ControlProblem::example1(8, 7, 1e-3).unwrap();
    let alpha = choose_alpha(prob.tau(), prob.gamma(), 1.0).unwrap();
    let set = build_dense_for(&prob, alpha).unwrap();
    let rhs = prob.assemble_rhs().unwrap();
    let b = prob.schur_rhs(&rhs).unwrap();
    let v = dense_solve(&set.k, &b);
    let op = SchurOperator::new(&prob);
    let pre = PinTPreconditioner::new(&prob, alpha).unwrap();
    let opts = PcgOptions {
        tol: 1e-12,
        maxit: 100,
    };
    let (_, rep) = pcg_solve(&op, &pre, &b, opts, Some(&v)).unwrap();
    let errs = rep.knorm_errors.as_ref().unwrap();
    assert!(errs.len() > 3);
    assert!(convergence_bound_check(&rep).unwrap());
    // energy-norm error never grows under CG
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10));
    }
}

fn iterations(prob: &ControlProblem, msc: bool) -> usize {
    let rhs = prob.assemble_rhs().unwrap();
    let b = prob.schur_rhs(&rhs).unwrap();
    let op = SchurOperator::new(prob);
    let rep = if msc {
        let pre = MscPreconditioner::new(prob).unwrap();
        pcg_solve(&op, &pre, &b, PcgOptions::default(), None)
            .unwrap()
            .1
    } else {
        let alpha = choose_alpha(prob.tau(), prob.gamma(), prob.t_final()).unwrap();
        let pre = PinTPreconditioner::new(prob, alpha).unwrap();
        pcg_solve(&op, &pre, &b, PcgOptions::default(), None)
            .unwrap()
            .1
    };
    assert!(rep.converged);
    for w in rep.preconditioned_residuals.windows(2) {
        assert!(
            w[1] <= w[0] * (1.0 + 1e-8),
            "{:?}",
            rep.preconditioned_residuals
        );
    }
    rep.iterations
}

#[test]
fn iterations_stable_under_refinement() {
    for gamma in [1e-5, 1e-1] {
        let mut counts = Vec::new();
        for n in [50usize, 100, 200] {
            for m in [15usize, 31] {
                counts.push(iterations(
                    &ControlProblem::example1(n, m, gamma).unwrap(),
                    false,
                ));
            }
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 2, "γ={gamma}: {counts:?}");
    }
}

#[test]
fn iterations_bounded_across_gamma() {
    for gamma in [1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2] {
        let prob = ControlProblem::example1(64, 15, gamma).unwrap();
        let a = iterations(&prob, false);
        let p = iterations(&prob, true);
        assert!(a <= 13 && p <= 13, "γ={gamma}: {a} {p}");
    }
}

#[test]
fn masked_problem_converges() {
    let prob = ControlProblem::example2(40, 15, 1e-3).unwrap();
    assert!(iterations(&prob, false) <= 30);
    assert!(iterations(&prob, true) <= 30);
}

#[test]
fn maxit_reports_nonconvergence() {
    let a = random_spd(30, 15);
    let b = random_vec(&mut rng(16), 30);
    let opts = PcgOptions {
        tol: 1e-14,
        maxit: 2,
    };
    let (_, rep) = pcg_solve(&Dense(a), &IdentityPreconditioner::new(30), &b, opts, None).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 2);
}
