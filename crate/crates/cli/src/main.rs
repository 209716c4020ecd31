use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use paradiag_cli::bench::{self, BenchOptions};
use paradiag_cli::config::{PartialConfig, PrecondKind, ProblemKind, RunConfig, SpatialKind};
use paradiag_cli::output::{sink, write_csv};
use paradiag_cli::reproduce::{self, Scale, Table};
use paradiag_cli::{run, verify};
use paradiag_core::PcgOptions;

const EXIT_INVALID: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "paradiag",
    version,
    about = "Parallel-in-time PCG for parabolic optimal control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write a CSV row.
    Solve(SolveArgs),
    /// Re-run a published table and compare iteration counts.
    Reproduce(ReproduceArgs),
    /// Check the preconditioner eigenvalue bounds on dense instances.
    VerifySpectrum(VerifyArgs),
    /// Time preconditioner applies over a sweep in N.
    Bench(BenchArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    /// Flat TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Time steps.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Interior grid points per direction.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long, value_enum)]
    precond: Option<PrecondKind>,
    /// Circulant parameter; the admissible default is used if absent.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    spatial: Option<SpatialKind>,
    /// V-cycles per shifted solve with `--spatial multigrid`.
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    /// Worker threads; 0 for all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn into_config(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => PartialConfig::from_file(p)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            problem: self.problem,
            gamma: self.gamma,
            n: self.n,
            m: self.m,
            t_final: self.t_final,
            precond: self.precond,
            alpha: self.alpha,
            spatial: self.spatial,
            cycles: self.cycles,
            tol: self.tol,
            maxit: self.maxit,
            threads: self.threads,
            out: self.out,
            ..PartialConfig::default()
        };
        RunConfig::resolve(file.merge(flags))
    }
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    table: u8,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    maxit: usize,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// JSON-lines report; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated time-step counts.
    #[arg(long = "N", value_delimiter = ',', default_value = "64,128,256,512")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 31)]
    m: usize,
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Threads for the parallel series; 0 for all cores. A single-thread
    /// series is always timed.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn global_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("starting thread pool")
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let cfg = args.into_config()?;
    global_pool(cfg.threads)?;
    let outcome = run::solve(&cfg)?;
    let row = &outcome.row;
    write_csv(sink(cfg.out.as_deref())?, &run::HEADER, [row.record()])?;
    if !row.converged {
        log::warn!("no convergence after {} iterations", row.iterations);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<u8> {
    global_pool(args.threads)?;
    let table = Table::from_number(args.table).context("table must be 1 or 2")?;
    let opts = PcgOptions {
        tol: args.tol,
        maxit: args.maxit,
    };
    let rows = reproduce::reproduce(table, args.scale, opts);
    let matched = rows.iter().filter(|r| r.iterations_match()).count();
    eprintln!(
        "{matched}/{} rows within ±{} iterations",
        rows.len(),
        reproduce::ITER_SLACK
    );
    write_csv(
        sink(args.out.as_deref())?,
        &reproduce::header(),
        rows.iter().map(|r| r.record()),
    )?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    global_pool(args.threads)?;
    let lines = verify::run_grid()?;
    let failed = lines.iter().filter(|l| !l.passed).count();
    sink(args.out.as_deref())?.write_all(verify::to_json_lines(&lines)?.as_bytes())?;
    eprintln!("{} checks, {failed} with violations", lines.len());
    Ok(if failed == 0 { 0 } else { EXIT_VIOLATIONS })
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    anyhow::ensure!(!args.n.is_empty(), "need at least one N");
    let opts = BenchOptions {
        m: args.m,
        gamma: args.gamma,
        repeats: args.repeats,
    };
    let mut points = bench::sweep(&args.n, 1, opts)?;
    let parallel = if args.threads == 0 {
        std::thread::available_parallelism().map_or(1, usize::from)
    } else {
        args.threads
    };
    let mut series = vec![1];
    if parallel > 1 {
        points.extend(bench::sweep(&args.n, parallel, opts)?);
        series.push(parallel);
    }
    for kind in [PrecondKind::Palpha, PrecondKind::Msc] {
        for &t in &series {
            if let Some(e) = bench::series_exponent(&points, kind, t) {
                eprintln!("{kind} threads={t}: time ~ N^{e:.2}");
            }
        }
    }
    write_csv(
        sink(args.out.as_deref())?,
        &bench::HEADER,
        bench::records(&points),
    )?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::VerifySpectrum(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
