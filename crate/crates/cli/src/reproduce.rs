//! Re-runs the published tables and compares iteration counts.

use anyhow::Result;
use paradiag_core::{ControlProblem, PcgOptions};

use crate::config::PrecondKind;
use crate::published::{PublishedRow, TABLE1, TABLE2};
use crate::run::{solve_problem, RunRow, HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scale {
    /// `N ≤ 200`, `J = 961`.
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    One,
    Two,
}

impl Table {
    pub fn from_number(t: u8) -> Option<Self> {
        match t {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            _ => None,
        }
    }

    pub fn rows(self) -> &'static [PublishedRow] {
        match self {
            Self::One => &TABLE1,
            Self::Two => &TABLE2,
        }
    }

    fn problem(self, n: usize, m: usize, gamma: f64) -> paradiag_core::Result<ControlProblem> {
        match self {
            Self::One => ControlProblem::example1(n, m, gamma),
            Self::Two => ControlProblem::example2(n, m, gamma),
        }
    }
}

/// Allowed gap between measured and published iteration counts.
pub const ITER_SLACK: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: Option<RunRow>,
    /// Set when the solve itself failed.
    pub failure: Option<String>,
    pub published: PublishedRow,
    pub preconditioner: PrecondKind,
}

impl ComparisonRow {
    pub fn published_iterations(&self) -> usize {
        match self.preconditioner {
            PrecondKind::Msc => self.published.msc_iter,
            _ => self.published.palpha_iter,
        }
    }

    pub fn published_error(&self) -> f64 {
        match self.preconditioner {
            PrecondKind::Msc => self.published.msc_error,
            _ => self.published.palpha_error,
        }
    }

    pub fn iterations_match(&self) -> bool {
        self.run.as_ref().is_some_and(|r| {
            r.converged && r.iterations.abs_diff(self.published_iterations()) <= ITER_SLACK
        })
    }

    pub fn record(&self) -> Vec<String> {
        let mut rec = match &self.run {
            Some(r) => r.record(),
            None => {
                let p = &self.published;
                let mut v = vec![
                    format!("{:e}", p.gamma),
                    p.n.to_string(),
                    p.j.to_string(),
                    (p.n * p.j).to_string(),
                    self.preconditioner.to_string(),
                ];
                v.extend(["", "", "", "false"].map(String::from));
                v
            }
        };
        rec.push(self.published_iterations().to_string());
        rec.push(format!("{:.5e}", self.published_error()));
        rec.push(
            if self.iterations_match() {
                "pass"
            } else {
                "fail"
            }
            .into(),
        );
        rec.push(self.failure.clone().unwrap_or_default());
        rec
    }
}

pub fn header() -> Vec<&'static str> {
    let mut h = HEADER.to_vec();
    h.extend(["published_iter", "published_error", "iter_match", "failure"]);
    h
}

pub fn selected(table: Table, scale: Scale) -> Vec<PublishedRow> {
    table
        .rows()
        .iter()
        .filter(|r| scale == Scale::Full || (r.n <= 200 && r.j <= 961))
        .copied()
        .collect()
}

fn grid_side(j: usize) -> usize {
    let m = (j as f64).sqrt().round() as usize;
    debug_assert_eq!(m * m, j);
    m
}

/// Runs both preconditioners on every selected row. Per-row failures are
/// recorded, not raised.
pub fn reproduce(table: Table, scale: Scale, opts: PcgOptions) -> Vec<ComparisonRow> {
    let mut out = Vec::new();
    for published in selected(table, scale) {
        let m = grid_side(published.j);
        let prob = table.problem(published.n, m, published.gamma);
        for preconditioner in [PrecondKind::Palpha, PrecondKind::Msc] {
            let result: Result<RunRow> = match &prob {
                Ok(p) => solve_problem(p, preconditioner, None, opts).map(|o| o.row),
                Err(e) => Err(anyhow::anyhow!("{e}")),
            };
            let (run, failure) = match result {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(format!("{e:#}"))),
            };
            out.push(ComparisonRow {
                run,
                failure,
                published,
                preconditioner,
            });
        }
    }
    out
}
