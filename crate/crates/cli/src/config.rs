//! Run configuration: a flat TOML file, overridden field by field by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Example1,
    Example2,
    /// Data given as expressions in the config file.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    Palpha,
    Msc,
    None,
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Palpha => "palpha",
            Self::Msc => "msc",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpatialKind {
    Sine,
    Multigrid,
}

/// Expressions in `x1`, `x2`, `t` (and the constant `pi`) for a custom problem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CustomData {
    /// Diffusion coefficient `a(x1, x2)`.
    pub coefficient: Option<String>,
    pub source: String,
    pub target: String,
    pub y0: String,
    /// Boolean expression selecting observed points; everything if absent.
    pub mask: Option<String>,
    /// Known optimal state and adjoint; enables the error column.
    pub reference_y: Option<String>,
    pub reference_p: Option<String>,
}

/// Every field optional: what a config file or the flags may set.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub problem: Option<ProblemKind>,
    pub gamma: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub m: Option<usize>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub precond: Option<PrecondKind>,
    pub alpha: Option<f64>,
    pub spatial: Option<SpatialKind>,
    /// V-cycles per shifted solve in multigrid mode.
    pub cycles: Option<usize>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub coefficient: Option<String>,
    pub source: Option<String>,
    pub target: Option<String>,
    pub y0: Option<String>,
    pub mask: Option<String>,
    pub reference_y: Option<String>,
    pub reference_p: Option<String>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `over` win.
    pub fn merge(self, over: PartialConfig) -> Self {
        Self {
            problem: over.problem.or(self.problem),
            gamma: over.gamma.or(self.gamma),
            n: over.n.or(self.n),
            m: over.m.or(self.m),
            t_final: over.t_final.or(self.t_final),
            precond: over.precond.or(self.precond),
            alpha: over.alpha.or(self.alpha),
            spatial: over.spatial.or(self.spatial),
            cycles: over.cycles.or(self.cycles),
            tol: over.tol.or(self.tol),
            maxit: over.maxit.or(self.maxit),
            threads: over.threads.or(self.threads),
            out: over.out.or(self.out),
            coefficient: over.coefficient.or(self.coefficient),
            source: over.source.or(self.source),
            target: over.target.or(self.target),
            y0: over.y0.or(self.y0),
            mask: over.mask.or(self.mask),
            reference_y: over.reference_y.or(self.reference_y),
            reference_p: over.reference_p.or(self.reference_p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub gamma: f64,
    pub n: usize,
    pub m: usize,
    pub t_final: f64,
    pub precond: PrecondKind,
    pub alpha: Option<f64>,
    pub spatial: SpatialKind,
    pub cycles: usize,
    pub tol: f64,
    pub maxit: usize,
    /// 0 means all hardware threads.
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub custom: Option<CustomData>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Example1,
            gamma: 1e-3,
            n: 64,
            m: 31,
            t_final: 1.0,
            precond: PrecondKind::Palpha,
            alpha: None,
            spatial: SpatialKind::Sine,
            cycles: 1,
            tol: 1e-8,
            maxit: 500,
            threads: 0,
            out: None,
            custom: None,
        }
    }
}

impl RunConfig {
    /// Fills defaults and validates.
    pub fn resolve(p: PartialConfig) -> Result<Self> {
        let d = Self::default();
        let problem = p.problem.unwrap_or(d.problem);
        let has_expr = [&p.coefficient, &p.source, &p.target, &p.y0, &p.mask]
            .iter()
            .chain([&p.reference_y, &p.reference_p].iter())
            .any(|e| e.is_some());
        let custom = match problem {
            ProblemKind::Custom => {
                let need = |e: Option<String>, name: &str| {
                    e.with_context(|| format!("problem = \"custom\" needs a `{name}` expression"))
                };
                Some(CustomData {
                    coefficient: p.coefficient,
                    source: need(p.source, "source")?,
                    target: need(p.target, "target")?,
                    y0: need(p.y0, "y0")?,
                    mask: p.mask,
                    reference_y: p.reference_y,
                    reference_p: p.reference_p,
                })
            }
            _ if has_expr => bail!("expression fields are only allowed with problem = \"custom\""),
            _ => None,
        };
        let cfg = Self {
            problem,
            gamma: p.gamma.unwrap_or(d.gamma),
            n: p.n.unwrap_or(d.n),
            m: p.m.unwrap_or(d.m),
            t_final: p.t_final.unwrap_or(d.t_final),
            precond: p.precond.unwrap_or(d.precond),
            alpha: p.alpha,
            spatial: p.spatial.unwrap_or(d.spatial),
            cycles: p.cycles.unwrap_or(d.cycles),
            tol: p.tol.unwrap_or(d.tol),
            maxit: p.maxit.unwrap_or(d.maxit),
            threads: p.threads.unwrap_or(d.threads),
            out: p.out,
            custom,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("T", self.t_final),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                bail!("{name} must be positive, got {v}");
            }
        }
        for (name, v) in [
            ("N", self.n),
            ("m", self.m),
            ("maxit", self.maxit),
            ("cycles", self.cycles),
        ] {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                bail!("alpha must lie in (0, 1), got {a}");
            }
        }
        if (self.problem == ProblemKind::Custom) != self.custom.is_some() {
            bail!("custom problem data must come with problem = \"custom\"");
        }
        if let Some(c) = &self.custom {
            if c.reference_y.is_some() != c.reference_p.is_some() {
                bail!("reference_y and reference_p must be given together");
            }
        }
        if self.spatial == SpatialKind::Multigrid && !(self.m + 1).is_power_of_two() {
            bail!("multigrid needs m = 2^l - 1, got m = {}", self.m);
        }
        Ok(())
    }
}
