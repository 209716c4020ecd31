//! The spatial operator `L_h ≈ -∇·(a(x)∇·)` on the unit square with
//! homogeneous Dirichlet conditions, and solvers for the complex-shifted
//! systems `(σI + s·L_h) x = r` that appear once per time frequency.
//!
//! Grid point `(i, j)` (1-based, `x₁ = i·h`, `x₂ = j·h`) maps to the linear
//! index `(j-1)·m + (i-1)`, `x₁` fastest.

mod multigrid;
mod sine;
mod stencil;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{breakdown, check_len, invalid_arg};
use crate::math::{norm2_c, sin, PI};
use crate::par;
use crate::Result;

use multigrid::Hierarchy;
use sine::SineTransform;
pub(crate) use stencil::Stencil;

/// Uniform grid of `m × m` interior points on `(0, 1)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    m: usize,
}

impl SpatialGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid_arg!(
                "grid needs at least one interior point per dimension"
            ));
        }
        Ok(Self { m })
    }

    /// Interior points per dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Mesh width `1/(m+1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.m + 1) as f64
    }

    /// Number of unknowns `J = m²`.
    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of the point with linear index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.h();
        ((idx % self.m + 1) as f64 * h, (idx / self.m + 1) as f64 * h)
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (x1, x2) = self.point(idx);
                f(x1, x2)
            })
            .collect()
    }
}

/// Diffusion coefficient `a(x₁, x₂)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Variable(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn variable(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Variable(Arc::new(f))
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Self::Constant(a) => *a,
            Self::Variable(f) => f(x1, x2),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            Self::Variable(_) => f.write_str("Variable(..)"),
        }
    }
}

#[derive(Debug, Clone)]
enum SolveMode {
    /// Exact solves by 2-D sine transform (constant coefficient only).
    Sine {
        eigs: Vec<f64>,
        transform: SineTransform,
    },
    /// `cycles` V-cycles from a zero initial guess.
    Multigrid { cycles: usize },
}

/// Assembled `L_h` plus whatever its shifted solves need.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    grid: SpatialGrid,
    coefficient: Coefficient,
    stencil: Stencil,
    hierarchy: Option<Hierarchy>,
    mode: SolveMode,
}

impl SpatialOperator {
    /// Assembles `L_h`. A constant coefficient selects sine-transform solves,
    /// a variable one selects a single V-cycle per shifted solve.
    pub fn assemble(grid: SpatialGrid, coefficient: Coefficient) -> Result<Self> {
        let mode = match coefficient {
            Coefficient::Constant(a) => SolveMode::Sine {
                eigs: sine_eigenvalues(grid, a),
                transform: SineTransform::new(grid.m()),
            },
            Coefficient::Variable(_) => SolveMode::Multigrid { cycles: 1 },
        };
        Self::build(grid, coefficient, mode)
    }

    /// Assembles `L_h` with multigrid shifted solves regardless of the
    /// coefficient. `m + 1` must be a power of two.
    pub fn assemble_multigrid(
        grid: SpatialGrid,
        coefficient: Coefficient,
        cycles: usize,
    ) -> Result<Self> {
        if cycles == 0 {
            return Err(invalid_arg!("multigrid needs at least one cycle"));
        }
        let op = Self::build(grid, coefficient, SolveMode::Multigrid { cycles })?;
        if op.hierarchy.is_none() {
            return Err(invalid_arg!(
                "m = {} cannot be coarsened; multigrid needs m = 2^l - 1",
                grid.m()
            ));
        }
        Ok(op)
    }

    fn build(grid: SpatialGrid, coefficient: Coefficient, mode: SolveMode) -> Result<Self> {
        let stencil = Stencil::assemble(grid.m(), &coefficient)?;
        let hierarchy = Hierarchy::build(stencil.clone(), &coefficient)?;
        Ok(Self {
            grid,
            coefficient,
            stencil,
            hierarchy,
            mode,
        })
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    /// Whether shifted solves go through the sine transform.
    pub fn is_sine(&self) -> bool {
        matches!(self.mode, SolveMode::Sine { .. })
    }

    /// Closed-form eigenvalues of `L_h` in sine mode, indexed
    /// `(q-1)·m + (p-1)`.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        match &self.mode {
            SolveMode::Sine { eigs, .. } => Some(eigs),
            SolveMode::Multigrid { .. } => None,
        }
    }

    /// `L_h u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("spatial vector", u.len(), self.grid.len())?;
        let mut out = vec![0.0; u.len()];
        self.stencil.apply_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        self.stencil.apply_into(u, out);
    }

    /// `(σI + s·L_h) x` on complex data.
    pub fn apply_shifted(
        &self,
        sigma: Complex64,
        scale: f64,
        x: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        check_len("spatial vector", x.len(), self.grid.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        self.stencil.apply_shifted_into(sigma, scale, x, &mut out);
        Ok(out)
    }

    /// Solves `(σI + s·L_h) x = r`: exactly in sine mode, by the configured
    /// number of V-cycles in multigrid mode.
    pub fn shifted_solve(
        &self,
        sigma: Complex64,
        scale: f64,
        r: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        check_len("spatial vector", r.len(), self.grid.len())?;
        if scale == 0.0 {
            return diagonal_solve(sigma, r);
        }
        match &self.mode {
            SolveMode::Sine { eigs, transform } => {
                self.sine_solve(eigs, transform, sigma, scale, r)
            }
            SolveMode::Multigrid { cycles } => {
                let mut x = vec![Complex64::new(0.0, 0.0); r.len()];
                for _ in 0..*cycles {
                    x = self.vcycle(sigma, scale, r, &x)?;
                }
                Ok(x)
            }
        }
    }

    /// Like [`shifted_solve`](Self::shifted_solve), but multigrid mode keeps
    /// cycling until the relative residual drops below `rtol`.
    pub fn shifted_solve_accurate(
        &self,
        sigma: Complex64,
        scale: f64,
        r: &[Complex64],
        rtol: f64,
    ) -> Result<Vec<Complex64>> {
        if self.is_sine() || scale == 0.0 {
            return self.shifted_solve(sigma, scale, r);
        }
        const MAX_CYCLES: usize = 200;
        let rnorm = norm2_c(r);
        let mut x = vec![Complex64::new(0.0, 0.0); r.len()];
        if rnorm == 0.0 {
            return Ok(x);
        }
        for _ in 0..MAX_CYCLES {
            x = self.vcycle(sigma, scale, r, &x)?;
            let ax = self.apply_shifted(sigma, scale, &x)?;
            let res: Vec<Complex64> = r.iter().zip(&ax).map(|(a, b)| a - b).collect();
            if norm2_c(&res) <= rtol * rnorm {
                return Ok(x);
            }
        }
        Err(breakdown!(
            "multigrid did not reach relative residual {rtol:e} in {MAX_CYCLES} cycles"
        ))
    }

    /// Real `(σI + s·L_h) x = r`: exact in sine mode, V-cycles down to
    /// relative residual `1e-12` in multigrid mode.
    pub fn shifted_solve_real(&self, sigma: f64, scale: f64, r: &[f64]) -> Result<Vec<f64>> {
        check_len("spatial vector", r.len(), self.grid.len())?;
        match &self.mode {
            SolveMode::Sine { eigs, transform } if scale != 0.0 => {
                let m = self.grid.m();
                let mut x = r.to_vec();
                transform.apply_real(&mut x);
                let norm = 2.0 / (m + 1) as f64;
                let norm = norm * norm;
                for (v, &lam) in x.iter_mut().zip(eigs) {
                    let d = sigma + scale * lam;
                    if d.abs() < 1e-300 {
                        return Err(breakdown!("singular shifted operator (sigma = {sigma})"));
                    }
                    *v *= norm / d;
                }
                transform.apply_real(&mut x);
                Ok(x)
            }
            _ => {
                let rc: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let x =
                    self.shifted_solve_accurate(Complex64::new(sigma, 0.0), scale, &rc, 1e-12)?;
                Ok(x.into_iter().map(|z| z.re).collect())
            }
        }
    }

    /// Solves `(σ_k I + s·L_h) x_k = r_k` for every block `k` of `data` in
    /// place. Sine mode transforms all blocks in batches; multigrid mode
    /// solves block by block.
    pub fn shifted_solve_blocks(
        &self,
        sigmas: &[Complex64],
        scale: f64,
        data: &mut [Complex64],
    ) -> Result<()> {
        let j = self.grid.len();
        check_len("block data", data.len(), sigmas.len() * j)?;
        let Some(basis) = self.sine_basis().filter(|_| scale != 0.0) else {
            return par::try_for_each_chunk(data, j, |k, blk| {
                let x = self.shifted_solve(sigmas[k], scale, blk)?;
                blk.copy_from_slice(&x);
                Ok(())
            });
        };
        let mut re: Vec<f64> = data.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = data.iter().map(|z| z.im).collect();
        basis.transform_blocks(&mut re);
        basis.transform_blocks(&mut im);
        for (k, &sigma) in sigmas.iter().enumerate() {
            for (idx, &lam) in (k * j..(k + 1) * j).zip(basis.eigs) {
                let d = sigma + scale * lam;
                if d.norm() < 1e-300 {
                    return Err(breakdown!("singular shifted operator (sigma = {sigma})"));
                }
                let z = Complex64::new(re[idx], im[idx]) * basis.norm / d;
                re[idx] = z.re;
                im[idx] = z.im;
            }
        }
        basis.transform_blocks(&mut re);
        basis.transform_blocks(&mut im);
        for ((z, r), i) in data.iter_mut().zip(re).zip(im) {
            *z = Complex64::new(r, i);
        }
        Ok(())
    }

    /// The sine eigenbasis, when `L_h` is diagonalized by it.
    pub(crate) fn sine_basis(&self) -> Option<SineBasis<'_>> {
        match &self.mode {
            SolveMode::Sine { eigs, transform } => {
                let c = 2.0 / (self.grid.m() + 1) as f64;
                Some(SineBasis {
                    transform,
                    eigs,
                    norm: c * c,
                })
            }
            SolveMode::Multigrid { .. } => None,
        }
    }

    /// One V(2,2)-cycle for `(σI + s·L_h)` starting from `x0`.
    pub fn vcycle(
        &self,
        sigma: Complex64,
        scale: f64,
        r: &[Complex64],
        x0: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        check_len("right-hand side", r.len(), self.grid.len())?;
        check_len("initial guess", x0.len(), self.grid.len())?;
        let h = self.hierarchy.as_ref().ok_or_else(|| {
            invalid_arg!(
                "m = {} cannot be coarsened; multigrid needs m = 2^l - 1",
                self.grid.m()
            )
        })?;
        h.vcycle(sigma, scale, r, x0)
    }

    fn sine_solve(
        &self,
        eigs: &[f64],
        transform: &SineTransform,
        sigma: Complex64,
        scale: f64,
        r: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let m = self.grid.m();
        let mut x = r.to_vec();
        transform.apply_complex(&mut x);
        for (v, &lam) in x.iter_mut().zip(eigs) {
            let d = sigma + scale * lam;
            if d.norm() < 1e-300 {
                return Err(breakdown!("singular shifted operator (sigma = {sigma})"));
            }
            *v /= d;
        }
        transform.apply_complex(&mut x);
        let norm = 2.0 / (m + 1) as f64;
        let norm = norm * norm;
        for v in &mut x {
            *v *= norm;
        }
        Ok(x)
    }
}

/// `L_h = norm·S·diag(eigs)·S` with `S` the unnormalized 2-D sine
/// transform, so `S·S = I/norm`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SineBasis<'a> {
    transform: &'a SineTransform,
    pub(crate) eigs: &'a [f64],
    pub(crate) norm: f64,
}

impl SineBasis<'_> {
    /// Applies `S` to every `J`-block of `data`.
    pub(crate) fn transform_blocks(&self, data: &mut [f64]) {
        self.transform.apply_blocks(data);
    }
}

fn diagonal_solve(sigma: Complex64, r: &[Complex64]) -> Result<Vec<Complex64>> {
    if sigma.norm() < 1e-300 {
        return Err(breakdown!("zero shift with zero scale"));
    }
    Ok(r.iter().map(|v| v / sigma).collect())
}

/// `(4a/h²)(sin²(pπh/2) + sin²(qπh/2))` at index `(q-1)·m + (p-1)`.
fn sine_eigenvalues(grid: SpatialGrid, a: f64) -> Vec<f64> {
    let m = grid.m();
    let h = grid.h();
    let s2: Vec<f64> = (1..=m)
        .map(|p| {
            let s = sin(p as f64 * PI * h / 2.0);
            s * s
        })
        .collect();
    let c = 4.0 * a / (h * h);
    let mut eigs = Vec::with_capacity(m * m);
    for q in 0..m {
        for p in 0..m {
            eigs.push(c * (s2[p] + s2[q]));
        }
    }
    eigs
}
