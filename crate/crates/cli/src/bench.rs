//! Per-apply timings of the two preconditioners over a sweep in `N`.

use std::time::Instant;

use anyhow::{ensure, Result};
use paradiag_core::{ControlProblem, LinearOperator, MscPreconditioner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PrecondKind;
use crate::run::pint_preconditioner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchPoint {
    pub preconditioner: PrecondKind,
    pub threads: usize,
    pub n: usize,
    pub j: usize,
    /// Fastest of the timed applies, in seconds.
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub m: usize,
    pub gamma: f64,
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            m: 31,
            gamma: 1e-3,
            repeats: 5,
        }
    }
}

fn random_input(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn time_once(op: &dyn LinearOperator, w: &[f64]) -> Result<f64> {
    let start = Instant::now();
    std::hint::black_box(op.apply(std::hint::black_box(w))?);
    Ok(start.elapsed().as_secs_f64())
}

struct Case {
    kind: PrecondKind,
    n: usize,
    j: usize,
    op: Box<dyn LinearOperator + Sync>,
    input: Vec<f64>,
    best: f64,
}

/// Times `P_α⁻¹` and `P⁻¹` on Example 1 for each `N`, inside a pool of
/// `threads` workers. Repeats go round-robin over all cases so a slow stretch
/// of machine time cannot land on one `N` alone; each case keeps its minimum.
pub fn sweep(ns: &[usize], threads: usize, opts: BenchOptions) -> Result<Vec<BenchPoint>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    let threads = pool.current_num_threads();
    pool.install(|| {
        let mut cases = Vec::new();
        for &n in ns {
            let prob = ControlProblem::example1(n, opts.m, opts.gamma)?;
            let ops: [(PrecondKind, Box<dyn LinearOperator + Sync>); 2] = [
                (
                    PrecondKind::Palpha,
                    Box::new(pint_preconditioner(&prob, None)?),
                ),
                (PrecondKind::Msc, Box::new(MscPreconditioner::new(&prob)?)),
            ];
            for (kind, op) in ops {
                let input = random_input(op.dim(), n as u64);
                std::hint::black_box(op.apply(&input)?);
                cases.push(Case {
                    kind,
                    n,
                    j: prob.j(),
                    op,
                    input,
                    best: f64::INFINITY,
                });
            }
        }
        for _ in 0..opts.repeats.max(1) {
            for c in &mut cases {
                c.best = c.best.min(time_once(c.op.as_ref(), &c.input)?);
            }
        }
        Ok(cases
            .into_iter()
            .map(|c| {
                log::info!(
                    "{} N={} threads={threads}: {:.4e}s per apply",
                    c.kind,
                    c.n,
                    c.best
                );
                BenchPoint {
                    preconditioner: c.kind,
                    threads,
                    n: c.n,
                    j: c.j,
                    seconds: c.best,
                }
            })
            .collect())
    })
}

/// Least-squares slope of `ln t` against `ln N`.
pub fn fit_exponent(points: &[(usize, f64)]) -> Result<f64> {
    ensure!(points.len() >= 2, "need two points to fit an exponent");
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    ensure!(sxx > 0.0, "need two distinct N to fit an exponent");
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Exponent of one `(preconditioner, threads)` series; `None` if fewer than
/// two distinct `N`.
pub fn series_exponent(points: &[BenchPoint], kind: PrecondKind, threads: usize) -> Option<f64> {
    let series: Vec<(usize, f64)> = points
        .iter()
        .filter(|p| p.preconditioner == kind && p.threads == threads)
        .map(|p| (p.n, p.seconds))
        .collect();
    fit_exponent(&series).ok()
}

pub const HEADER: [&str; 6] = ["preconditioner", "threads", "N", "J", "apply_s", "exponent"];

pub fn records(points: &[BenchPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                p.preconditioner.to_string(),
                p.threads.to_string(),
                p.n.to_string(),
                p.j.to_string(),
                format!("{:.6e}", p.seconds),
                series_exponent(points, p.preconditioner, p.threads)
                    .map(|e| format!("{e:.3}"))
                    .unwrap_or_default(),
            ]
        })
        .collect()
}
