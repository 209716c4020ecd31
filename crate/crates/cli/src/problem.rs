//! Builds a [`ControlProblem`] from a [`RunConfig`].

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};
use paradiag_core::{Coefficient, ControlProblem, Reference, SpatialGrid, SpatialOperator};

use crate::config::{CustomData, ProblemKind, RunConfig, SpatialKind};

/// A parsed expression in `x1`, `x2`, `t` and `pi`.
#[derive(Clone)]
struct Expr {
    node: Arc<Node<DefaultNumericTypes>>,
    text: String,
}

impl Expr {
    fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let node = build_operator_tree::<DefaultNumericTypes>(text)
            .with_context(|| format!("parsing expression {text:?}"))?;
        for var in node.iter_variable_identifiers() {
            if var != "pi" && !allowed.contains(&var) {
                bail!("expression {text:?} uses unknown variable `{var}`");
            }
        }
        Ok(Self {
            node: Arc::new(node),
            text: text.to_owned(),
        })
    }

    fn is_constant(&self) -> bool {
        self.node.iter_variable_identifiers().all(|v| v == "pi")
    }

    fn context(x1: f64, x2: f64, t: f64) -> HashMapContext<DefaultNumericTypes> {
        let mut ctx = HashMapContext::new();
        for (k, v) in [
            ("x1", x1),
            ("x2", x2),
            ("t", t),
            ("pi", std::f64::consts::PI),
        ] {
            ctx.set_value(k.into(), Value::Float(v))
                .expect("float variables are always settable");
        }
        ctx
    }

    fn number(&self, x1: f64, x2: f64, t: f64) -> Result<f64> {
        self.node
            .eval_number_with_context(&Self::context(x1, x2, t))
            .with_context(|| format!("evaluating {:?}", self.text))
    }

    fn boolean(&self, x1: f64, x2: f64) -> Result<bool> {
        self.node
            .eval_boolean_with_context(&Self::context(x1, x2, 0.0))
            .with_context(|| format!("evaluating {:?}", self.text))
    }

    /// Checks one evaluation, then returns a closure that maps failures to NaN
    /// (the core rejects non-finite data).
    fn into_fn3(self) -> Result<impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static> {
        self.number(0.5, 0.5, 0.0)?;
        Ok(move |x1, x2, t| self.number(x1, x2, t).unwrap_or(f64::NAN))
    }
}

fn spatial_operator(cfg: &RunConfig, coefficient: Coefficient) -> Result<SpatialOperator> {
    let grid = SpatialGrid::new(cfg.m)?;
    let op = match cfg.spatial {
        SpatialKind::Sine => {
            if !coefficient.is_constant() {
                bail!("the sine solver needs a constant diffusion coefficient; use --spatial multigrid");
            }
            SpatialOperator::assemble(grid, coefficient)?
        }
        SpatialKind::Multigrid => {
            SpatialOperator::assemble_multigrid(grid, coefficient, cfg.cycles)?
        }
    };
    Ok(op)
}

fn custom_problem(cfg: &RunConfig, data: &CustomData) -> Result<ControlProblem> {
    let space = ["x1", "x2"];
    let space_time = ["x1", "x2", "t"];
    let coefficient = match &data.coefficient {
        None => Coefficient::Constant(1.0),
        Some(text) => {
            let e = Expr::parse(text, &space)?;
            if e.is_constant() {
                Coefficient::Constant(e.number(0.0, 0.0, 0.0)?)
            } else {
                let f = e.into_fn3()?;
                Coefficient::variable(move |x1, x2| f(x1, x2, 0.0))
            }
        }
    };
    let spatial = spatial_operator(cfg, coefficient)?;
    let source = Expr::parse(&data.source, &space_time)?.into_fn3()?;
    let target = Expr::parse(&data.target, &space_time)?.into_fn3()?;
    let y0 = Expr::parse(&data.y0, &space)?.into_fn3()?;
    let mut prob = ControlProblem::new(
        cfg.gamma,
        cfg.t_final,
        cfg.n,
        spatial,
        source,
        target,
        move |x1, x2| y0(x1, x2, 0.0),
    )?;
    if let Some(text) = &data.mask {
        let e = Expr::parse(text, &space)?;
        let grid = prob.grid();
        let mask = (0..grid.len())
            .map(|k| {
                let (x1, x2) = grid.point(k);
                e.boolean(x1, x2)
            })
            .collect::<Result<Vec<bool>>>()?;
        prob = prob.with_mask(&mask)?;
    }
    if let (Some(ry), Some(rp)) = (&data.reference_y, &data.reference_p) {
        let y = Expr::parse(ry, &space_time)?.into_fn3()?;
        let p = Expr::parse(rp, &space_time)?.into_fn3()?;
        prob = prob.with_reference(Reference {
            y: Arc::new(y),
            p: Arc::new(p),
        });
    }
    Ok(prob)
}

pub fn build_problem(cfg: &RunConfig) -> Result<ControlProblem> {
    let prob = match cfg.problem {
        ProblemKind::Example1 => ControlProblem::example1_with(
            spatial_operator(cfg, Coefficient::Constant(1.0))?,
            cfg.n,
            cfg.gamma,
            cfg.t_final,
        )?,
        ProblemKind::Example2 => ControlProblem::example2_with(
            spatial_operator(cfg, Coefficient::Constant(1.0))?,
            cfg.n,
            cfg.gamma,
            cfg.t_final,
        )?,
        ProblemKind::Custom => {
            let data = cfg.custom.as_ref().context("custom problem without data")?;
            custom_problem(cfg, data)?
        }
    };
    Ok(prob)
}
