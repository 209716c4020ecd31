//! The discrete optimal-control problem and its Schur-complement form.
//!
//! Unknowns `y` (state) and `p` (adjoint) live at `t_n = nτ`, `n = 1..N`,
//! stored time-major: entry `(n-1)·J + j`. After the change of variables
//! `y = (B₂⁻¹⊗I)ỹ`, `p = (B₂⁻ᵀ⊗I)p̃` the system becomes symmetric, and
//! eliminating `ỹ` leaves
//!
//! `K v = b`, `K = τ(I_N⊗M) + ηGGᵀ`, `G = 2B⊗I_J + τI_N⊗L_h`,
//!
//! with `B = B₂⁻¹B₁`, `η = γ/τ` and `M` either the identity or the mask of
//! the observation subdomain.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Deref, DerefMut};

use crate::error::{check_len, invalid_arg};
use crate::math::{exp, sin, PI};
use crate::par;
use crate::pcg::LinearOperator;
use crate::spatial::{Coefficient, SpatialGrid, SpatialOperator};
use crate::temporal::{b2_inv_symbol, b_symbol, TemporalSymbol, ToeplitzApplier};
use crate::{Error, Result};

/// A function of `(x₁, x₂, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// A function of `(x₁, x₂)`.
pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `N·J` reals, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeVector {
    n: usize,
    j: usize,
    data: Vec<f64>,
}

impl SpaceTimeVector {
    pub fn new(n: usize, j: usize, data: Vec<f64>) -> Result<Self> {
        check_len("space-time vector", data.len(), n * j)?;
        Ok(Self { n, j, data })
    }

    pub fn zeros(n: usize, j: usize) -> Self {
        Self {
            n,
            j,
            data: vec![0.0; n * j],
        }
    }

    pub fn time_points(&self) -> usize {
        self.n
    }

    pub fn block_len(&self) -> usize {
        self.j
    }

    /// Values at `t_n`, `n` counted from 1.
    pub fn block(&self, n: usize) -> &[f64] {
        &self.data[(n - 1) * self.j..n * self.j]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl Deref for SpaceTimeVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.data
    }
}

impl DerefMut for SpaceTimeVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Right-hand side of the KKT system: `g_rhs` pairs with the adjoint rows,
/// `f_rhs` with the state rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRhs {
    pub g_rhs: SpaceTimeVector,
    pub f_rhs: SpaceTimeVector,
}

/// Analytical state and adjoint, for error reporting.
#[derive(Clone)]
pub struct Reference {
    pub y: SpaceTimeFn,
    pub p: SpaceTimeFn,
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Reference(..)")
    }
}

/// State, adjoint and control on the space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub y: SpaceTimeVector,
    pub p: SpaceTimeVector,
    pub u: SpaceTimeVector,
}

/// Distributed control of `y_t - ∇·(a∇y) = f + u` on `(0,1)²×(0,T]` with
/// tracking target `g`, initial state `y₀` and control cost `γ/2‖u‖²`.
#[derive(Clone)]
pub struct ControlProblem {
    gamma: f64,
    t_final: f64,
    n: usize,
    spatial: SpatialOperator,
    source: SpaceTimeFn,
    target: SpaceTimeFn,
    y0: SpaceFn,
    mask: Option<Vec<f64>>,
    reference: Option<Reference>,
    b_sym: TemporalSymbol,
    b_apply: ToeplitzApplier,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("gamma", &self.gamma)
            .field("t_final", &self.t_final)
            .field("n", &self.n)
            .field("m", &self.spatial.grid().m())
            .field("masked", &self.mask.is_some())
            .finish()
    }
}

impl ControlProblem {
    pub fn new(
        gamma: f64,
        t_final: f64,
        n: usize,
        spatial: SpatialOperator,
        source: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        target: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        y0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid_arg!("gamma must be positive, got {gamma}"));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(invalid_arg!("T must be positive, got {t_final}"));
        }
        if n == 0 {
            return Err(invalid_arg!("need at least one time step"));
        }
        let b_sym = b_symbol(n)?;
        let b_apply = ToeplitzApplier::new(&b_sym);
        Ok(Self {
            gamma,
            t_final,
            n,
            spatial,
            source: Arc::new(source),
            target: Arc::new(target),
            y0: Arc::new(y0),
            mask: None,
            reference: None,
            b_sym,
            b_apply,
        })
    }

    /// Restricts the tracking term to grid points where `mask` is true.
    pub fn with_mask(mut self, mask: &[bool]) -> Result<Self> {
        check_len("mask", mask.len(), self.j())?;
        if !mask.iter().any(|&b| b) {
            return Err(invalid_arg!("mask selects no grid point"));
        }
        self.mask = Some(mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
        Ok(self)
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Number of time points `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of spatial unknowns `J`.
    pub fn j(&self) -> usize {
        self.spatial.grid().len()
    }

    /// `N·J`.
    pub fn dim(&self) -> usize {
        self.n * self.j()
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n as f64
    }

    /// `γ/τ`.
    pub fn eta(&self) -> f64 {
        self.gamma / self.tau()
    }

    pub fn grid(&self) -> SpatialGrid {
        self.spatial.grid()
    }

    pub fn spatial(&self) -> &SpatialOperator {
        &self.spatial
    }

    /// `{0,1}` indicator of the observation subdomain, if any.
    pub fn mask(&self) -> Option<&[f64]> {
        self.mask.as_deref()
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    /// First column of `B = B₂⁻¹B₁`.
    pub fn b_symbol(&self) -> &TemporalSymbol {
        &self.b_sym
    }

    fn sample_at(&self, f: &SpaceTimeFn, t: f64) -> Vec<f64> {
        self.grid().sample(|x1, x2| f(x1, x2, t))
    }

    /// Builds `g_rhs` and `f_rhs`.
    ///
    /// * `g_rhs`, block `n`: `τ·g(t_n)`, and block 1 also carries `-(τ/2)·y₀`,
    ///   the known `y₀` column of the `(τ/2)B₂` tracking block.
    /// * `f_rhs`, block `n`: `(τ/2)(f(t_n) + f(t_{n-1}))`, and block 1 also
    ///   carries `(I - (τ/2)L_h)·y₀`.
    pub fn assemble_rhs(&self) -> Result<DiscreteRhs> {
        let (n, j, tau) = (self.n, self.j(), self.tau());
        let mut g = vec![0.0; n * j];
        let mut f = vec![0.0; n * j];
        let mut f_prev = self.sample_at(&self.source, 0.0);
        for step in 1..=n {
            let t = step as f64 * tau;
            let gt = self.sample_at(&self.target, t);
            let ft = self.sample_at(&self.source, t);
            let blk = (step - 1) * j..step * j;
            for ((gv, fv), (a, (b, c))) in g[blk.clone()]
                .iter_mut()
                .zip(&mut f[blk])
                .zip(gt.iter().zip(ft.iter().zip(&f_prev)))
            {
                *gv = tau * a;
                *fv = 0.5 * tau * (b + c);
            }
            f_prev = ft;
        }
        let y0 = self.grid().sample(|x1, x2| (self.y0)(x1, x2));
        let ly0 = self.spatial.apply(&y0)?;
        for k in 0..j {
            g[k] -= 0.5 * tau * y0[k];
            f[k] += y0[k] - 0.5 * tau * ly0[k];
        }
        Ok(DiscreteRhs {
            g_rhs: SpaceTimeVector::new(n, j, g)?,
            f_rhs: SpaceTimeVector::new(n, j, f)?,
        })
    }

    /// `out_n = scale·L_h v_n` for every time block.
    fn spatial_blocks(&self, v: &[f64], scale: f64) -> Vec<f64> {
        let j = self.j();
        let mut out = vec![0.0; v.len()];
        par::for_each_chunk(&mut out, j, |t, blk| {
            self.spatial.apply_into(&v[t * j..(t + 1) * j], blk);
            for x in blk.iter_mut() {
                *x *= scale;
            }
        });
        out
    }

    /// `(2B⊗I_J + τI_N⊗L_h) v`.
    pub fn apply_g(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("space-time vector", v.len(), self.dim())?;
        let bv = self.b_apply.apply(v, self.j())?;
        let mut out = self.spatial_blocks(v, self.tau());
        for (o, b) in out.iter_mut().zip(&bv) {
            *o += 2.0 * b;
        }
        Ok(out)
    }

    /// `(2Bᵀ⊗I_J + τI_N⊗L_h) v`.
    pub fn apply_gt(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("space-time vector", v.len(), self.dim())?;
        let bv = self.b_apply.apply_transpose(v, self.j())?;
        let mut out = self.spatial_blocks(v, self.tau());
        for (o, b) in out.iter_mut().zip(&bv) {
            *o += 2.0 * b;
        }
        Ok(out)
    }

    /// `τ(I_N⊗M)v + ηG(Gᵀv)`, with `M` the mask when one is set.
    pub fn apply_k(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply_g(&self.apply_gt(v)?)?;
        let (tau, eta, j) = (self.tau(), self.eta(), self.j());
        match &self.mask {
            None => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = eta * *o + tau * x;
                }
            }
            Some(mask) => {
                for (k, (o, x)) in out.iter_mut().zip(v).enumerate() {
                    *o = eta * *o + tau * mask[k % j] * x;
                }
            }
        }
        Ok(out)
    }

    /// `b = f_rhs - (1/τ)·G·g_rhs`.
    pub fn schur_rhs(&self, rhs: &DiscreteRhs) -> Result<SpaceTimeVector> {
        let gg = self.apply_g(&rhs.g_rhs)?;
        let inv_tau = 1.0 / self.tau();
        let b = rhs
            .f_rhs
            .iter()
            .zip(&gg)
            .map(|(f, g)| f - inv_tau * g)
            .collect();
        SpaceTimeVector::new(self.n, self.j(), b)
    }

    /// Recovers `(y, p, u)` from a solution `v` of `K v = schur_rhs(rhs)`.
    pub fn recover_solution(&self, v: &[f64], rhs: &DiscreteRhs) -> Result<Recovered> {
        let (n, j, tau, gamma) = (self.n, self.j(), self.tau(), self.gamma);
        let gtv = self.apply_gt(v)?;
        let y_tilde: Vec<f64> = rhs
            .g_rhs
            .iter()
            .zip(&gtv)
            .map(|(g, w)| (2.0 / tau) * g + (2.0 * gamma / tau) * w)
            .collect();
        let p_tilde: Vec<f64> = v.iter().map(|x| -2.0 * gamma * x).collect();
        let (y, p) = unscale_solution(&y_tilde, &p_tilde, j)?;
        let u: Vec<f64> = match &self.mask {
            None => p.iter().map(|x| x / gamma).collect(),
            Some(mask) => p
                .iter()
                .enumerate()
                .map(|(k, x)| mask[k % j] * x / gamma)
                .collect(),
        };
        Ok(Recovered {
            y: SpaceTimeVector::new(n, j, y)?,
            p: SpaceTimeVector::new(n, j, p)?,
            u: SpaceTimeVector::new(n, j, u)?,
        })
    }

    /// Reference `(y*, p*)` sampled at the grid points and `t_1..t_N`.
    pub fn reference_samples(&self) -> Result<(SpaceTimeVector, SpaceTimeVector)> {
        let r = self
            .reference
            .as_ref()
            .ok_or_else(|| Error::InvalidState("problem carries no reference solution".into()))?;
        let (n, j, tau) = (self.n, self.j(), self.tau());
        let mut ys = Vec::with_capacity(n * j);
        let mut ps = Vec::with_capacity(n * j);
        for step in 1..=n {
            let t = step as f64 * tau;
            ys.extend(self.sample_at(&r.y, t));
            ps.extend(self.sample_at(&r.p, t));
        }
        Ok((
            SpaceTimeVector::new(n, j, ys)?,
            SpaceTimeVector::new(n, j, ps)?,
        ))
    }

    /// `‖[p* ; y*] - [p ; y]‖_∞` against the reference solution.
    pub fn error_measure(&self, y: &[f64], p: &[f64]) -> Result<f64> {
        check_len("state", y.len(), self.dim())?;
        check_len("adjoint", p.len(), self.dim())?;
        let (ys, ps) = self.reference_samples()?;
        let ey = y.iter().zip(ys.iter()).map(|(a, b)| (a - b).abs());
        let ep = p.iter().zip(ps.iter()).map(|(a, b)| (a - b).abs());
        Ok(ey.chain(ep).fold(0.0, f64::max))
    }

    /// Unit diffusion, `T = 1`, target `g = sin(πx₁)sin(πx₂)e^{-t}` and a
    /// source chosen so that `y = g`, `p = u = 0` is the exact optimum.
    pub fn example1(n: usize, m: usize, gamma: f64) -> Result<Self> {
        let grid = SpatialGrid::new(m)?;
        let spatial = SpatialOperator::assemble(grid, Coefficient::Constant(1.0))?;
        Self::example1_with(spatial, n, gamma, 1.0)
    }

    /// [`example1`](Self::example1) on a caller-built spatial operator and
    /// horizon. The optimum stays exact only for unit diffusion.
    pub fn example1_with(
        spatial: SpatialOperator,
        n: usize,
        gamma: f64,
        t_final: f64,
    ) -> Result<Self> {
        let g = |x1: f64, x2: f64, t: f64| sin(PI * x1) * sin(PI * x2) * exp(-t);
        let prob = Self::new(
            gamma,
            t_final,
            n,
            spatial,
            move |x1, x2, t| (2.0 * PI * PI - 1.0) * g(x1, x2, t),
            g,
            |x1, x2| sin(PI * x1) * sin(PI * x2),
        )?;
        Ok(prob.with_reference(Reference {
            y: Arc::new(g),
            p: Arc::new(|_, _, _| 0.0),
        }))
    }

    /// [`example1`](Self::example1) with tracking only on
    /// `(0,1)² \ (0,½)²`; a point is observed iff `x₁ ≥ ½` or `x₂ ≥ ½`.
    pub fn example2(n: usize, m: usize, gamma: f64) -> Result<Self> {
        let grid = SpatialGrid::new(m)?;
        let spatial = SpatialOperator::assemble(grid, Coefficient::Constant(1.0))?;
        Self::example2_with(spatial, n, gamma, 1.0)
    }

    pub fn example2_with(
        spatial: SpatialOperator,
        n: usize,
        gamma: f64,
        t_final: f64,
    ) -> Result<Self> {
        let prob = Self::example1_with(spatial, n, gamma, t_final)?;
        let grid = prob.grid();
        let mask: Vec<bool> = (0..grid.len())
            .map(|k| {
                let (x1, x2) = grid.point(k);
                x1 >= 0.5 || x2 >= 0.5
            })
            .collect();
        prob.with_mask(&mask)
    }
}

/// The symmetrized system keeps the original right-hand side; only the
/// unknowns change to `(ỹ, p̃)`.
pub fn scale_rhs(rhs: DiscreteRhs) -> DiscreteRhs {
    rhs
}

/// `y = (B₂⁻¹⊗I)ỹ`, `p = (B₂⁻ᵀ⊗I)p̃`.
pub fn unscale_solution(
    y_tilde: &[f64],
    p_tilde: &[f64],
    block: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if block == 0 || y_tilde.len() % block != 0 {
        return Err(invalid_arg!(
            "length {} is not a multiple of the block size {block}",
            y_tilde.len()
        ));
    }
    check_len("scaled adjoint", p_tilde.len(), y_tilde.len())?;
    let n = y_tilde.len() / block;
    let s = ToeplitzApplier::new(&b2_inv_symbol(n)?);
    Ok((s.apply(y_tilde, block)?, s.apply_transpose(p_tilde, block)?))
}

/// The Schur complement `K` as a linear operator.
#[derive(Debug, Clone, Copy)]
pub struct SchurOperator<'a> {
    problem: &'a ControlProblem,
}

impl<'a> SchurOperator<'a> {
    pub fn new(problem: &'a ControlProblem) -> Self {
        Self { problem }
    }
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.apply_k(x)
    }
}
