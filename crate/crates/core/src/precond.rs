//! Preconditioners for the Schur complement `K`.
//!
//! Both are `P = RRᵀ` with
//! `R = (√τ·I_N + 2√η·T)⊗I_J + τ√η·I_N⊗L_h`; [`MscPreconditioner`] takes
//! `T = B` and substitutes block by block in time, [`PinTPreconditioner`]
//! takes the α-circulant `T = B_α` and decouples the time steps with FFTs.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{breakdown, check_len, invalid_arg};
use crate::kkt::ControlProblem;
use crate::math::sqrt;
use crate::par;
use crate::pcg::LinearOperator;
use crate::spatial::SpatialOperator;
use crate::temporal::{alpha_circulant_eigs, alpha_invertibility_check, AlphaCirculantFactor};
use crate::Result;

/// `M⁻¹ = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner {
    dim: usize,
}

impl IdentityPreconditioner {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl LinearOperator for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("vector", x.len(), self.dim)?;
        Ok(x.to_vec())
    }
}

/// `P = RRᵀ` with the exact lower-triangular Toeplitz time factor `B`.
///
/// Each application is two sweeps over time, each solving one
/// `(√τ + 2√η)I + τ√η·L_h` system per step and accumulating the full
/// Toeplitz history, `O(N²J)` in total. Inherently sequential in time.
///
/// With a constant coefficient the sweeps run in the sine eigenbasis of
/// `L_h`, where every diagonal block is a pointwise division; all time
/// blocks are transformed once on entry and once on exit.
#[derive(Debug, Clone)]
pub struct MscPreconditioner {
    n: usize,
    j: usize,
    /// `2√η·q_k`
    history: Vec<f64>,
    shift: f64,
    scale: f64,
    spatial: SpatialOperator,
    /// `1/(shift + scale·λ_j)` in sine mode.
    inv_diag: Option<Vec<f64>>,
}

#[derive(Clone, Copy)]
enum Sweep {
    Forward,
    Backward,
}

impl MscPreconditioner {
    pub fn new(problem: &ControlProblem) -> Result<Self> {
        let (tau, eta) = (problem.tau(), problem.eta());
        let c = 2.0 * sqrt(eta);
        let shift = sqrt(tau) + c;
        let scale = tau * sqrt(eta);
        let spatial = problem.spatial().clone();
        let inv_diag = spatial
            .sine_basis()
            .map(|b| b.eigs.iter().map(|l| 1.0 / (shift + scale * l)).collect());
        Ok(Self {
            n: problem.n(),
            j: problem.j(),
            history: problem.b_symbol().coeffs().iter().map(|q| c * q).collect(),
            shift,
            scale,
            spatial,
            inv_diag,
        })
    }

    /// Block substitution in place. `x` holds the right-hand side on entry;
    /// `solve` applies the inverse of the diagonal block.
    fn sweep(
        &self,
        x: &mut [f64],
        dir: Sweep,
        solve: impl Fn(&mut [f64]) -> Result<()>,
    ) -> Result<()> {
        let (n, j) = (self.n, self.j);
        for step in 0..n {
            let t = match dir {
                Sweep::Forward => step,
                Sweep::Backward => n - 1 - step,
            };
            let (before, rest) = x.split_at_mut(t * j);
            let (cur, after) = rest.split_at_mut(j);
            match dir {
                Sweep::Forward => subtract_history(cur, before, j, |s| self.history[t - s]),
                Sweep::Backward => subtract_history(cur, after, j, |off| self.history[off + 1]),
            }
            solve(cur)?;
        }
        Ok(())
    }

    fn block_solve(&self, blk: &mut [f64]) -> Result<()> {
        let sol = self
            .spatial
            .shifted_solve_real(self.shift, self.scale, blk)?;
        blk.copy_from_slice(&sol);
        Ok(())
    }

    fn apply_sweeps(&self, w: &[f64], sweeps: &[Sweep]) -> Result<Vec<f64>> {
        check_len("space-time vector", w.len(), self.n * self.j)?;
        let mut x = w.to_vec();
        match (self.spatial.sine_basis(), &self.inv_diag) {
            (Some(basis), Some(inv)) => {
                basis.transform_blocks(&mut x);
                let diag = |blk: &mut [f64]| {
                    for (v, d) in blk.iter_mut().zip(inv) {
                        *v *= d;
                    }
                    Ok(())
                };
                for &dir in sweeps {
                    self.sweep(&mut x, dir, diag)?;
                }
                basis.transform_blocks(&mut x);
                for v in &mut x {
                    *v *= basis.norm;
                }
            }
            _ => {
                for &dir in sweeps {
                    self.sweep(&mut x, dir, |blk| self.block_solve(blk))?;
                }
            }
        }
        Ok(x)
    }

    /// `R⁻¹w` by forward substitution.
    pub fn apply_r_inv(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.apply_sweeps(w, &[Sweep::Forward])
    }

    /// `R⁻ᵀw` by backward substitution.
    pub fn apply_rt_inv(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.apply_sweeps(w, &[Sweep::Backward])
    }

    /// `P⁻¹w = R⁻ᵀ(R⁻¹w)`.
    pub fn apply_p_inv(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.apply_sweeps(w, &[Sweep::Forward, Sweep::Backward])
    }
}

/// `cur -= Σ_s coeff(s)·blocks[s]`, four blocks per pass over `cur`.
fn subtract_history(cur: &mut [f64], blocks: &[f64], j: usize, coeff: impl Fn(usize) -> f64) {
    let nb = blocks.len() / j;
    let blk = |s: usize| &blocks[s * j..(s + 1) * j];
    let mut s = 0;
    while s + 4 <= nb {
        let (c0, c1, c2, c3) = (coeff(s), coeff(s + 1), coeff(s + 2), coeff(s + 3));
        let (x0, x1, x2, x3) = (blk(s), blk(s + 1), blk(s + 2), blk(s + 3));
        for i in 0..j {
            cur[i] -= c0 * x0[i] + c1 * x1[i] + c2 * x2[i] + c3 * x3[i];
        }
        s += 4;
    }
    for s in s..nb {
        let c = coeff(s);
        for (r, v) in cur.iter_mut().zip(blk(s)) {
            *r -= c * v;
        }
    }
}

impl LinearOperator for MscPreconditioner {
    fn dim(&self) -> usize {
        self.n * self.j
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_p_inv(x)
    }
}

/// Order in which the two triangular-like factors of `P_α⁻¹` are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorOrder {
    /// `R_α⁻ᵀ(R_α⁻¹w)`, the inverse of `R_αR_αᵀ`.
    #[default]
    Consistent,
    /// `R_α⁻¹(R_α⁻ᵀw)`, the inverse of `R_αᵀR_α`.
    AsWritten,
}

/// `P_α = R_αR_αᵀ` with the block α-circulant time factor `B_α`.
///
/// `R_α = (D_α⁻¹F⁻¹ ⊗ I)·blockdiag(σ_k I + τ√η L_h)·(F D_α ⊗ I)` with
/// `σ_k = √τ + 2√η·λ_k`, so `R_α⁻¹` is a scaled FFT along time, `N`
/// independent complex shifted solves, and an inverse FFT.
#[derive(Debug, Clone)]
pub struct PinTPreconditioner {
    n: usize,
    j: usize,
    factor: AlphaCirculantFactor,
    sigma: Vec<Complex64>,
    scale: f64,
    spatial: SpatialOperator,
    order: FactorOrder,
}

impl PinTPreconditioner {
    /// Rejects `α` outside `(0, 1] ∩ (0, τ/(2√γ))`.
    pub fn new(problem: &ControlProblem, alpha: f64) -> Result<Self> {
        if !alpha_invertibility_check(alpha, problem.tau(), problem.gamma()) {
            return Err(invalid_arg!(
                "alpha = {alpha:e} is outside (0, min(1, tau/(2 sqrt(gamma)))) = (0, {:e})",
                (problem.tau() / (2.0 * sqrt(problem.gamma()))).min(1.0)
            ));
        }
        Self::new_unchecked(problem, alpha)
    }

    /// Like [`new`](Self::new) but only requires `α ∈ (0, 1]` and
    /// `Re σ_k > 0`.
    pub fn new_unchecked(problem: &ControlProblem, alpha: f64) -> Result<Self> {
        if alpha < 1e-12 {
            log::warn!("alpha = {alpha:e}: D_alpha is badly conditioned, expect roundoff growth");
        }
        let factor = alpha_circulant_eigs(problem.b_symbol(), alpha)?;
        let (tau, eta) = (problem.tau(), problem.eta());
        let sigma: Vec<Complex64> = factor
            .eigs()
            .iter()
            .map(|l| l * (2.0 * sqrt(eta)) + sqrt(tau))
            .collect();
        if let Some(s) = sigma.iter().find(|s| !(s.re > 0.0)) {
            return Err(breakdown!("shift {s} has non-positive real part"));
        }
        Ok(Self {
            n: problem.n(),
            j: problem.j(),
            factor,
            sigma,
            scale: tau * sqrt(eta),
            spatial: problem.spatial().clone(),
            order: FactorOrder::default(),
        })
    }

    pub fn with_order(mut self, order: FactorOrder) -> Self {
        self.order = order;
        self
    }

    pub fn order(&self) -> FactorOrder {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.factor.alpha()
    }

    pub fn factor(&self) -> &AlphaCirculantFactor {
        &self.factor
    }

    /// Per-frequency shifts `σ_k`.
    pub fn shifts(&self) -> &[Complex64] {
        &self.sigma
    }

    /// Solves `R_α x = r`.
    pub fn apply_ralpha_inv_complex(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n as f64;
        let d = self.factor.d_scale();
        let pre: Vec<f64> = d.to_vec();
        let post: Vec<f64> = d.iter().map(|v| 1.0 / (n * v)).collect();
        self.three_step(r, &pre, &post, false)
    }

    /// Solves `R_αᵀ x = r`.
    pub fn apply_ralpha_t_inv_complex(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n as f64;
        let d = self.factor.d_scale();
        let pre: Vec<f64> = d.iter().map(|v| 1.0 / (n * v)).collect();
        self.three_step(r, &pre, d, true)
    }

    pub fn apply_ralpha_inv(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(real_part(self.apply_ralpha_inv_complex(&complexify(r))?))
    }

    pub fn apply_ralpha_t_inv(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(real_part(self.apply_ralpha_t_inv_complex(&complexify(r))?))
    }

    /// `P_α⁻¹w`, factors applied in the configured [`FactorOrder`].
    pub fn apply_palpha_inv(&self, w: &[f64]) -> Result<Vec<f64>> {
        match self.order {
            FactorOrder::Consistent => self.apply_ralpha_t_inv(&self.apply_ralpha_inv(w)?),
            FactorOrder::AsWritten => self.apply_ralpha_inv(&self.apply_ralpha_t_inv(w)?),
        }
    }

    /// Scale each time trace by `pre`, transform along time, solve the
    /// frequency blocks, transform back and scale by `post`. `adjoint`
    /// swaps which transform comes first.
    fn three_step(
        &self,
        r: &[Complex64],
        pre: &[f64],
        post: &[f64],
        adjoint: bool,
    ) -> Result<Vec<Complex64>> {
        let (n, j) = (self.n, self.j);
        check_len("space-time vector", r.len(), n * j)?;
        let fft = self.factor.fft();

        let zero = Complex64::new(0.0, 0.0);

        // trace-major: entry jj·N + t
        let mut traces = vec![zero; n * j];
        par::for_each_chunk(&mut traces, n, |jj, buf| {
            for (t, b) in buf.iter_mut().enumerate() {
                *b = r[t * j + jj] * pre[t];
            }
            if adjoint {
                fft.inverse(buf);
            } else {
                fft.forward(buf);
            }
        });

        let mut freq = vec![zero; n * j];
        par::transpose_into(&traces, &mut freq, j, n);
        self.spatial
            .shifted_solve_blocks(&self.sigma, self.scale, &mut freq)?;

        par::transpose_into(&freq, &mut traces, n, j);
        par::for_each_chunk(&mut traces, n, |_, buf| {
            if adjoint {
                fft.forward(buf);
            } else {
                fft.inverse(buf);
            }
        });

        let mut out = freq;
        par::for_each_chunk(&mut out, j, |t, row| {
            for (jj, o) in row.iter_mut().enumerate() {
                *o = traces[jj * n + t] * post[t];
            }
        });
        Ok(out)
    }
}

impl LinearOperator for PinTPreconditioner {
    fn dim(&self) -> usize {
        self.n * self.j
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_palpha_inv(x)
    }
}

fn complexify(r: &[f64]) -> Vec<Complex64> {
    r.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn real_part(z: Vec<Complex64>) -> Vec<f64> {
    z.into_iter().map(|v| v.re).collect()
}
