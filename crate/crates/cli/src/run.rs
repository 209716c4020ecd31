//! One solve: problem → right-hand side → Schur solve → recovery → error.

use anyhow::{Context, Result};
use paradiag_core::{
    choose_alpha, pcg_solve, ControlProblem, IdentityPreconditioner, LinearOperator,
    MscPreconditioner, PcgOptions, PinTPreconditioner, Recovered, SchurOperator, SolveReport,
};

use crate::config::{PrecondKind, RunConfig};
use crate::problem::build_problem;

/// One CSV row of `solve` output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub gamma: f64,
    pub n: usize,
    pub j: usize,
    /// Unknowns per field, `N·J`.
    pub nou: usize,
    pub preconditioner: PrecondKind,
    pub iterations: usize,
    /// PCG loop only; assembly and preconditioner setup are excluded.
    pub cpu_s: f64,
    /// `None` when the problem has no reference solution.
    pub error: Option<f64>,
    pub converged: bool,
}

pub const HEADER: [&str; 9] = [
    "gamma",
    "N",
    "J",
    "NoU",
    "preconditioner",
    "iter",
    "cpu_s",
    "error",
    "converged",
];

impl RunRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            format!("{:e}", self.gamma),
            self.n.to_string(),
            self.j.to_string(),
            self.nou.to_string(),
            self.preconditioner.to_string(),
            self.iterations.to_string(),
            format!("{:.4}", self.cpu_s),
            self.error.map(|e| format!("{e:.5e}")).unwrap_or_default(),
            self.converged.to_string(),
        ]
    }
}

pub struct Outcome {
    pub row: RunRow,
    pub report: SolveReport,
    pub solution: Recovered,
}

/// `α` as configured, else the admissible default. An explicit value that
/// fails the invertibility check is used anyway, with a warning.
pub fn pint_preconditioner(
    prob: &ControlProblem,
    alpha: Option<f64>,
) -> Result<PinTPreconditioner> {
    match alpha {
        Some(a) => Ok(PinTPreconditioner::new_unchecked(prob, a)?),
        None => {
            let a = choose_alpha(prob.tau(), prob.gamma(), prob.t_final())?;
            Ok(PinTPreconditioner::new(prob, a)?)
        }
    }
}

pub fn solve_problem(
    prob: &ControlProblem,
    precond: PrecondKind,
    alpha: Option<f64>,
    opts: PcgOptions,
) -> Result<Outcome> {
    let rhs = prob.assemble_rhs()?;
    let b = prob.schur_rhs(&rhs)?;
    let op = SchurOperator::new(prob);
    let pre: Box<dyn LinearOperator> = match precond {
        PrecondKind::Palpha => Box::new(pint_preconditioner(prob, alpha)?),
        PrecondKind::Msc => Box::new(MscPreconditioner::new(prob)?),
        PrecondKind::None => Box::new(IdentityPreconditioner::new(prob.dim())),
    };
    let (v, report) = pcg_solve(&op, pre.as_ref(), &b, opts, None).context("PCG failed")?;
    let solution = prob.recover_solution(&v, &rhs)?;
    let error = match prob.reference() {
        Some(_) => Some(prob.error_measure(&solution.y, &solution.p)?),
        None => None,
    };
    let row = RunRow {
        gamma: prob.gamma(),
        n: prob.n(),
        j: prob.j(),
        nou: prob.dim(),
        preconditioner: precond,
        iterations: report.iterations,
        cpu_s: report.wall_time,
        error,
        converged: report.converged,
    };
    log::info!(
        "{} γ={:e} N={} J={}: {} iterations, {:.3}s",
        precond,
        row.gamma,
        row.n,
        row.j,
        row.iterations,
        row.cpu_s
    );
    Ok(Outcome {
        row,
        report,
        solution,
    })
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome> {
    let prob = build_problem(cfg)?;
    let opts = PcgOptions {
        tol: cfg.tol,
        maxit: cfg.maxit,
    };
    solve_problem(&prob, cfg.precond, cfg.alpha, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_formatting() {
        let row = RunRow {
            gamma: 1e-7,
            n: 200,
            j: 961,
            nou: 192200,
            preconditioner: PrecondKind::Palpha,
            iterations: 4,
            cpu_s: 0.123456,
            error: Some(4.42611e-3),
            converged: true,
        };
        assert_eq!(
            row.record(),
            [
                "1e-7",
                "200",
                "961",
                "192200",
                "palpha",
                "4",
                "0.1235",
                "4.42611e-3",
                "true"
            ]
        );
    }

    #[test]
    fn unpreconditioned_tiny_solve_converges() {
        let cfg = RunConfig {
            n: 4,
            m: 3,
            gamma: 0.1,
            precond: PrecondKind::None,
            ..RunConfig::default()
        };
        let out = solve(&cfg).unwrap();
        assert!(out.row.converged);
        assert!(out.row.error.unwrap() < 0.1);
    }
}
