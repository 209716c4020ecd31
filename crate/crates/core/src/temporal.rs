//! Lower-triangular Toeplitz time operators and the α-circulant machinery.
//!
//! With the Crank–Nicolson bidiagonals `B₁ = tridiag(-1, 1, ·)` and
//! `B₂ = tridiag(1, 1, ·)`, both `B₂⁻¹` and `B = B₂⁻¹B₁` are lower-triangular
//! Toeplitz matrices with symbols `s_k = (-1)^k` and `q_0 = 1`,
//! `q_k = 2(-1)^k`. Space-time vectors are stored time-major, so a Toeplitz
//! operator in time acts as `T ⊗ I_J` on blocks of `J` entries.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, invalid_arg};
use crate::fft::Fft;
use crate::math::{powf, sqrt};
use crate::par;
use crate::Result;

/// First column of a lower-triangular Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSymbol {
    coeffs: Vec<f64>,
}

impl TemporalSymbol {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid_arg!(
                "temporal symbol needs at least one coefficient"
            ));
        }
        Ok(Self { coeffs })
    }

    /// The symbol of `I_n`.
    pub fn identity(n: usize) -> Result<Self> {
        let mut c = vec![0.0; n];
        if let Some(first) = c.first_mut() {
            *first = 1.0;
        }
        Self::new(c)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Symbol of `B = B₂⁻¹B₁`: `q_0 = 1`, `q_k = 2(-1)^k`.
pub fn b_symbol(n: usize) -> Result<TemporalSymbol> {
    if n == 0 {
        return Err(invalid_arg!("number of time points must be positive"));
    }
    let coeffs = (0..n)
        .map(|k| match k {
            0 => 1.0,
            k if k % 2 == 0 => 2.0,
            _ => -2.0,
        })
        .collect();
    TemporalSymbol::new(coeffs)
}

/// Symbol of `B₂⁻¹`: `s_k = (-1)^k`.
pub fn b2_inv_symbol(n: usize) -> Result<TemporalSymbol> {
    if n == 0 {
        return Err(invalid_arg!("number of time points must be positive"));
    }
    TemporalSymbol::new(
        (0..n)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
    )
}

/// Applies `(T ⊗ I_J)` (or its transpose) for a fixed lower-triangular
/// Toeplitz `T`, by circulant embedding and FFT along time.
///
/// Two real time traces are packed into one complex transform; because the
/// symbol is real the real and imaginary parts of the product separate
/// exactly.
#[derive(Debug, Clone)]
pub struct ToeplitzApplier {
    n: usize,
    fft: Fft,
    symbol_hat: Vec<Complex64>,
}

impl ToeplitzApplier {
    pub fn new(sym: &TemporalSymbol) -> Self {
        let n = sym.len();
        let len = (2 * n).next_power_of_two();
        let fft = Fft::new(len);
        let mut hat = vec![Complex64::new(0.0, 0.0); len];
        for (h, &c) in hat.iter_mut().zip(sym.coeffs()) {
            *h = Complex64::new(c, 0.0);
        }
        fft.forward(&mut hat);
        let scale = 1.0 / len as f64;
        for h in &mut hat {
            *h *= scale;
        }
        Self {
            n,
            fft,
            symbol_hat: hat,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(T ⊗ I_J) x`.
    pub fn apply(&self, x: &[f64], block: usize) -> Result<Vec<f64>> {
        self.apply_impl(x, block, false)
    }

    /// `(Tᵀ ⊗ I_J) x`, computed by reversing time on both sides.
    pub fn apply_transpose(&self, x: &[f64], block: usize) -> Result<Vec<f64>> {
        self.apply_impl(x, block, true)
    }

    fn apply_impl(&self, x: &[f64], block: usize, transpose: bool) -> Result<Vec<f64>> {
        let n = self.n;
        if block == 0 {
            return Err(invalid_arg!("block size must be positive"));
        }
        check_len("space-time vector", x.len(), n * block)?;
        let len = self.fft.len();
        let time_of = |t: usize| if transpose { n - 1 - t } else { t };

        // chunk p of `packed` holds traces 2p and 2p+1 as one complex signal
        let pairs = block.div_ceil(2);
        let mut packed = vec![Complex64::new(0.0, 0.0); pairs * len];
        par::for_each_chunk(&mut packed, len, |p, buf| {
            let j0 = 2 * p;
            let j1 = j0 + 1;
            for t in 0..n {
                let src = time_of(t) * block;
                let re = x[src + j0];
                let im = if j1 < block { x[src + j1] } else { 0.0 };
                buf[t] = Complex64::new(re, im);
            }
            self.fft.forward(buf);
            for (b, h) in buf.iter_mut().zip(&self.symbol_hat) {
                *b *= h;
            }
            self.fft.inverse(buf);
        });

        let mut out = vec![0.0; n * block];
        par::for_each_chunk(&mut out, block, |t, row| {
            let src_t = time_of(t);
            for (j, o) in row.iter_mut().enumerate() {
                let z = packed[(j / 2) * len + src_t];
                *o = if j % 2 == 0 { z.re } else { z.im };
            }
        });
        Ok(out)
    }
}

/// `(T ⊗ I_J) x` for the lower-triangular Toeplitz `T` with first column
/// `sym`, in `O(J·n log n)`.
pub fn apply_lower_toeplitz(sym: &TemporalSymbol, x: &[f64], block: usize) -> Result<Vec<f64>> {
    ToeplitzApplier::new(sym).apply(x, block)
}

/// `(Tᵀ ⊗ I_J) x`, the upper-triangular counterpart of [`apply_lower_toeplitz`].
pub fn apply_upper_toeplitz(sym: &TemporalSymbol, x: &[f64], block: usize) -> Result<Vec<f64>> {
    ToeplitzApplier::new(sym).apply_transpose(x, block)
}

/// `(B₂ ⊗ I_J) x`: block `n` becomes `x_n + x_{n-1}`.
pub fn apply_b2(x: &[f64], block: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    for t in (1..x.len() / block).rev() {
        for j in 0..block {
            out[t * block + j] += x[(t - 1) * block + j];
        }
    }
    out
}

/// `(B₂ᵀ ⊗ I_J) x`: block `n` becomes `x_n + x_{n+1}`.
pub fn apply_b2_transpose(x: &[f64], block: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    let n = x.len() / block;
    for t in 0..n.saturating_sub(1) {
        for j in 0..block {
            out[t * block + j] += x[(t + 1) * block + j];
        }
    }
    out
}

/// Everything needed to apply `B_α = D_α⁻¹ F Λ_α F* D_α` and its transpose.
///
/// `B_α` is `B` with its strict upper triangle filled by `α·q_{N-(j-i)}`,
/// i.e. an α-circulant matrix. `eigs` are the eigenvalues `λ_k`, obtained
/// from one forward FFT of the scaled symbol `q_j α^{j/N}`.
#[derive(Debug, Clone)]
pub struct AlphaCirculantFactor {
    alpha: f64,
    d_scale: Vec<f64>,
    eigs: Vec<Complex64>,
    fft: Fft,
}

impl AlphaCirculantFactor {
    pub fn n(&self) -> usize {
        self.d_scale.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Diagonal of `D_α`: `α^{i/N}`.
    pub fn d_scale(&self) -> &[f64] {
        &self.d_scale
    }

    pub fn eigs(&self) -> &[Complex64] {
        &self.eigs
    }

    pub(crate) fn fft(&self) -> &Fft {
        &self.fft
    }
}

/// Computes `λ_k^{(α)} = Σ_j q_j α^{j/N} e^{-2πi kj/N}` and `D_α`.
pub fn alpha_circulant_eigs(sym: &TemporalSymbol, alpha: f64) -> Result<AlphaCirculantFactor> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid_arg!("alpha must lie in (0, 1], got {alpha}"));
    }
    let n = sym.len();
    let d_scale: Vec<f64> = (0..n).map(|i| powf(alpha, i as f64 / n as f64)).collect();
    let mut eigs: Vec<Complex64> = sym
        .coeffs()
        .iter()
        .zip(&d_scale)
        .map(|(&q, &d)| Complex64::new(q * d, 0.0))
        .collect();
    let fft = Fft::new(n);
    fft.forward(&mut eigs);
    Ok(AlphaCirculantFactor {
        alpha,
        d_scale,
        eigs,
        fft,
    })
}

/// `α = ½·min{τ/(24√γ), τ^{3/2}/(2√(6γ)T), τ²/(8√(3γ)T), 1/3}`, the midpoint
/// of the interval on which the PCG rate bound `2·3^{-k}` holds.
pub fn choose_alpha(tau: f64, gamma: f64, t_final: f64) -> Result<f64> {
    if !(tau > 0.0 && gamma > 0.0 && t_final > 0.0) {
        return Err(invalid_arg!(
            "tau, gamma and T must be positive (tau={tau}, gamma={gamma}, T={t_final})"
        ));
    }
    let sg = sqrt(gamma);
    let terms = [
        tau / (24.0 * sg),
        tau * sqrt(tau) / (2.0 * sqrt(6.0 * gamma) * t_final),
        tau * tau / (8.0 * sqrt(3.0 * gamma) * t_final),
        1.0 / 3.0,
    ];
    Ok(0.5 * terms.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Whether `α ∈ (0, 1] ∩ (0, τ/(2√γ))`, the range on which `P_α` is
/// guaranteed invertible.
pub fn alpha_invertibility_check(alpha: f64, tau: f64, gamma: f64) -> bool {
    alpha > 0.0 && alpha <= 1.0 && alpha < tau / (2.0 * sqrt(gamma))
}
