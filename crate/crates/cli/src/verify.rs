//! Dense spectral verification over the standard grid, as JSON lines.

use anyhow::Result;
use paradiag_core::dense::{verify_instance, SpectrumRecord, GRID_GAMMA, GRID_M, GRID_N};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Line {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub check: String,
    pub lo: f64,
    pub hi: f64,
    pub min: f64,
    pub max: f64,
    pub violations: usize,
    pub passed: bool,
}

impl From<SpectrumRecord> for Line {
    fn from(r: SpectrumRecord) -> Self {
        Self {
            n: r.n,
            m: r.m,
            gamma: r.gamma,
            alpha: r.alpha,
            check: r.check,
            lo: r.lo,
            hi: r.hi,
            min: r.min,
            max: r.max,
            violations: r.violations,
            passed: r.passed,
        }
    }
}

/// Every `(N, m, γ)` of the grid; instances run in parallel.
pub fn run_grid() -> Result<Vec<Line>> {
    use rayon::prelude::*;
    let instances: Vec<(usize, usize, f64)> = GRID_N
        .iter()
        .flat_map(|&n| {
            GRID_M
                .iter()
                .flat_map(move |&m| GRID_GAMMA.iter().map(move |&g| (n, m, g)))
        })
        .collect();
    let nested = instances
        .par_iter()
        .map(|&(n, m, g)| verify_instance(n, m, g))
        .collect::<paradiag_core::Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().map(Line::from).collect())
}

pub fn to_json_lines(lines: &[Line]) -> Result<String> {
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(l)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_serializes_flat() {
        let rec = verify_instance(2, 1, 1.0).unwrap().remove(0);
        let text = to_json_lines(&[rec.into()]).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["N"], 2);
        assert_eq!(v["check"], "P^-1 K");
        assert_eq!(v["passed"], true);
    }
}
