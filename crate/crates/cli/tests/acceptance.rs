//! The eight acceptance criteria, run in order; one PASS/FAIL line each.

use std::time::Instant;

use anyhow::{ensure, Result};
use nalgebra::{DMatrix, DVector};
use paradiag_cli::bench::{self, BenchOptions};
use paradiag_cli::config::PrecondKind;
use paradiag_cli::reproduce::{reproduce, ComparisonRow, Scale, Table};
use paradiag_core::dense::{
    build_dense, build_dense_for, structural_identities, verify_instance, GRID_GAMMA, GRID_M,
    GRID_N,
};
use paradiag_core::{
    choose_alpha, convergence_bound_check, pcg_solve, unscale_solution, ControlProblem,
    LinearOperator, MscPreconditioner, PcgOptions, PinTPreconditioner, SchurOperator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn measured(rows: &[ComparisonRow], kind: PrecondKind) -> Result<Vec<(usize, f64)>> {
    rows.iter()
        .filter(|r| r.preconditioner == kind)
        .map(|r| {
            let run = r.run.as_ref().ok_or_else(|| {
                anyhow::anyhow!("solve failed: {}", r.failure.clone().unwrap_or_default())
            })?;
            ensure!(run.converged, "γ={:e} did not converge", run.gamma);
            Ok((run.iterations, run.error.unwrap_or(f64::NAN)))
        })
        .collect()
}

fn within(got: &[usize], want: &[usize], slack: usize) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| g.abs_diff(*w) <= slack)
}

const EXAMPLE1_ITERS: [usize; 5] = [4, 6, 11, 7, 4];
const EXAMPLE1_ERRORS: [f64; 5] = [4.43e-3, 2.45e-3, 1.38e-3, 6.16e-4, 6.82e-4];
const EXAMPLE2_ITERS: [usize; 5] = [24, 15, 11, 7, 5];

fn example1_rows() -> Result<Vec<ComparisonRow>> {
    let rows = reproduce(Table::One, Scale::Desk, PcgOptions::default());
    ensure!(
        rows.len() == 10,
        "expected 10 desk rows, got {}",
        rows.len()
    );
    ensure!(rows
        .iter()
        .all(|r| r.published.n == 200 && r.published.j == 961));
    Ok(rows)
}

fn criterion1(rows: &[ComparisonRow]) -> Result<Outcome> {
    let pa: Vec<usize> = measured(rows, PrecondKind::Palpha)?
        .iter()
        .map(|x| x.0)
        .collect();
    let p: Vec<usize> = measured(rows, PrecondKind::Msc)?
        .iter()
        .map(|x| x.0)
        .collect();
    outcome(
        within(&pa, &EXAMPLE1_ITERS, 2) && within(&p, &EXAMPLE1_ITERS, 2),
        format!("P_alpha {pa:?}, P {p:?}, published {EXAMPLE1_ITERS:?} ±2"),
    )
}

fn criterion2(rows: &[ComparisonRow]) -> Result<Outcome> {
    let mut ok = true;
    let mut errs = Vec::new();
    for kind in [PrecondKind::Palpha, PrecondKind::Msc] {
        for ((_, e), want) in measured(rows, kind)?.iter().zip(EXAMPLE1_ERRORS) {
            ok &= *e <= 2.0 * want && *e >= want / 2.0;
            errs.push(format!("{e:.3e}"));
        }
    }
    outcome(ok, format!("E = {errs:?} vs {EXAMPLE1_ERRORS:?} within ×2"))
}

fn criterion3() -> Result<Outcome> {
    let rows: Vec<ComparisonRow> = reproduce(Table::Two, Scale::Desk, PcgOptions::default())
        .into_iter()
        .filter(|r| r.published.n == 100)
        .collect();
    let pa: Vec<usize> = measured(&rows, PrecondKind::Palpha)?
        .iter()
        .map(|x| x.0)
        .collect();
    let gammas: Vec<f64> = rows
        .iter()
        .filter(|r| r.preconditioner == PrecondKind::Palpha)
        .map(|r| r.published.gamma)
        .collect();
    ensure!(
        gammas.windows(2).all(|w| w[0] < w[1]),
        "γ not increasing: {gammas:?}"
    );
    let monotone = pa.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        within(&pa, &EXAMPLE2_ITERS, 2) && monotone,
        format!("P_alpha {pa:?}, published {EXAMPLE2_ITERS:?} ±2, non-increasing in γ: {monotone}"),
    )
}

fn criterion4() -> Result<Outcome> {
    let start = Instant::now();
    let mut checks = 0;
    let mut violations = 0;
    let mut worst = Vec::new();
    for &n in &GRID_N {
        for &m in &GRID_M {
            for &g in &GRID_GAMMA {
                for rec in verify_instance(n, m, g)? {
                    checks += 1;
                    violations += rec.violations;
                    if !rec.passed {
                        worst.push(format!(
                            "N={n} m={m} γ={g:e} {} [{}, {}]",
                            rec.check, rec.min, rec.max
                        ));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && checks == 180,
        format!("{checks} pencils, {violations} eigenvalues outside bounds, {secs:.1}s {worst:?}"),
    )
}

fn criterion5() -> Result<Outcome> {
    let prob = ControlProblem::example1(8, 7, 1e-3)?;
    let alpha = choose_alpha(prob.tau(), prob.gamma(), prob.t_final())?;
    let set = build_dense_for(&prob, alpha)?;
    let rhs = prob.assemble_rhs()?;
    let b = prob.schur_rhs(&rhs)?;
    let v = set
        .k
        .clone()
        .cholesky()
        .ok_or_else(|| anyhow::anyhow!("K not SPD"))?
        .solve(&DVector::from_column_slice(&b));
    let op = SchurOperator::new(&prob);
    let pre = PinTPreconditioner::new(&prob, alpha)?;
    let opts = PcgOptions {
        tol: 1e-12,
        maxit: 100,
    };
    let (_, rep) = pcg_solve(&op, &pre, &b, opts, Some(v.as_slice()))?;
    let errs = rep.knorm_errors.clone().unwrap_or_default();
    let ratios: Vec<String> = errs
        .iter()
        .enumerate()
        .map(|(k, e)| format!("{:.2}", e / (2.0 * 3f64.powi(-(k as i32)) * errs[0])))
        .collect();
    outcome(
        convergence_bound_check(&rep)? && errs.len() > 1,
        format!("{} steps, e_k / (2·3^-k·e_0) = {ratios:?}", rep.iterations),
    )
}

fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular")
        .as_slice()
        .to_vec()
}

fn matvec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn criterion6() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut record = |name: &'static str, e: f64| match worst.iter_mut().find(|(n, _)| *n == name) {
        Some(w) => w.1 = w.1.max(e),
        None => worst.push((name, e)),
    };
    for (n, m) in [(4, 3), (6, 3)] {
        for masked in [false, true] {
            let prob = if masked {
                ControlProblem::example2(n, m, 1e-2)?
            } else {
                ControlProblem::example1(n, m, 1e-2)?
            };
            let alpha = choose_alpha(prob.tau(), prob.gamma(), prob.t_final())?;
            let set = build_dense_for(&prob, alpha)?;
            let msc = MscPreconditioner::new(&prob)?;
            let pint = PinTPreconditioner::new(&prob, alpha)?;
            let unscale = set.unscaling()?;
            let r_t = set.r_alpha.transpose();
            let dim = prob.dim();
            for _ in 0..20 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let k_name = if masked { "K masked" } else { "K" };
                record(k_name, rel_err(&prob.apply_k(&x)?, &matvec(&set.k, &x)));
                if masked {
                    continue;
                }
                record("G", rel_err(&prob.apply_g(&x)?, &matvec(&set.g, &x)));
                record(
                    "G^T",
                    rel_err(&prob.apply_gt(&x)?, &matvec(&set.g.transpose(), &x)),
                );
                record("P^-1", rel_err(&msc.apply(&x)?, &dense_solve(&set.p, &x)));
                record(
                    "P_alpha^-1",
                    rel_err(&pint.apply(&x)?, &dense_solve(&set.p_alpha, &x)),
                );
                record(
                    "R_alpha^-1",
                    rel_err(&pint.apply_ralpha_inv(&x)?, &dense_solve(&set.r_alpha, &x)),
                );
                record(
                    "R_alpha^-T",
                    rel_err(&pint.apply_ralpha_t_inv(&x)?, &dense_solve(&r_t, &x)),
                );
                let pt: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (y, p) = unscale_solution(&x, &pt, prob.j())?;
                let stacked: Vec<f64> = x.iter().chain(&pt).copied().collect();
                let want = matvec(&unscale, &stacked);
                let got: Vec<f64> = y.into_iter().chain(p).collect();
                record("W^-1", rel_err(&got, &want));
            }
        }
    }
    let passed = worst.len() == 9 && worst.iter().all(|&(_, e)| e <= 1e-9);
    let detail: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(passed, format!("max relative error: {}", detail.join(", ")))
}

fn criterion7() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut per_gamma = Vec::new();
    let mut count = 0;
    for gamma in GRID_GAMMA {
        let mut worst = 0.0_f64;
        for n in 1..=64 {
            let alpha = choose_alpha(1.0 / n as f64, gamma, 1.0)?;
            for check in structural_identities(&build_dense(n, 1, gamma, alpha, None)?)? {
                count += 1;
                worst = worst.max(check.max_deviation);
                if !check.passed {
                    failures.push(format!(
                        "N={n} γ={gamma:e} {}: {:.2e}",
                        check.name, check.max_deviation
                    ));
                }
            }
        }
        per_gamma.push(format!("γ={gamma:e} worst {worst:.1e}"));
    }
    outcome(
        failures.is_empty(),
        format!(
            "{count} identity checks for N = 1..64 ({}), {} over 1e-11 {failures:?}",
            per_gamma.join(", "),
            failures.len()
        ),
    )
}

fn criterion8() -> Result<Outcome> {
    let ns = [64, 128, 256, 512];
    let opts = BenchOptions {
        m: 31,
        gamma: 1e-3,
        repeats: 15,
    };
    let points = bench::sweep(&ns, 1, opts)?;
    let pa = bench::series_exponent(&points, PrecondKind::Palpha, 1).unwrap_or(f64::NAN);
    let p = bench::series_exponent(&points, PrecondKind::Msc, 1).unwrap_or(f64::NAN);
    let times: Vec<String> = points
        .iter()
        .map(|b| format!("{}:{}={:.2e}s", b.preconditioner, b.n, b.seconds))
        .collect();
    outcome(
        pa <= 1.3 && p >= 1.7,
        format!(
            "exponent P_alpha {pa:.2} (≤ 1.3), P {p:.2} (≥ 1.7), 1 thread, J=961; {}",
            times.join(" ")
        ),
    )
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Result<Outcome>)> = Vec::new();
    let start = Instant::now();
    let t1 = example1_rows();
    let t1_secs = start.elapsed().as_secs_f64();
    let (c1, c2) = match &t1 {
        Ok(rows) => (criterion1(rows), criterion2(rows)),
        Err(e) => (Err(anyhow::anyhow!("{e:#}")), Err(anyhow::anyhow!("{e:#}"))),
    };
    results.push((
        1,
        "Example 1 iteration parity",
        c1.map(|mut o| {
            o.detail.push_str(&format!(", {t1_secs:.1}s"));
            o
        }),
    ));
    results.push((2, "Example 1 error parity", c2));
    results.push((3, "Example 2 iteration parity", criterion3()));
    results.push((4, "Spectral bounds on the verification grid", criterion4()));
    results.push((5, "Convergence-rate bound", criterion5()));
    results.push((6, "Matrix-free vs dense oracles", criterion6()));
    results.push((7, "Structural identities", criterion7()));
    results.push((8, "PinT scaling in N", criterion8()));

    let mut all = true;
    for (k, name, res) in &results {
        let (passed, detail) = match res {
            Ok(o) => (o.passed, o.detail.clone()),
            Err(e) => (false, format!("error: {e:#}")),
        };
        all &= passed;
        println!(
            "[{}] {k}. {name}: {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
    }
    assert!(all, "acceptance criteria failed");
}
