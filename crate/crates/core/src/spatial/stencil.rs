use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::Coefficient;
use crate::error::invalid_arg;
use crate::Result;

/// Flux-form five-point stencil with the coefficient sampled at cell faces.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub(crate) m: usize,
    inv_h2: f64,
    /// `a((f + ½)h, (j + 1)h)` at `j·(m+1) + f`, faces `f = 0..=m`.
    ax: Vec<f64>,
    /// `a((i + 1)h, (f + ½)h)` at `f·m + i`.
    ay: Vec<f64>,
    /// Diagonal of `L_h`.
    pub(crate) diag: Vec<f64>,
}

impl Stencil {
    pub(crate) fn assemble(m: usize, coef: &Coefficient) -> Result<Self> {
        let h = 1.0 / (m + 1) as f64;
        let mut ax = Vec::with_capacity((m + 1) * m);
        for j in 0..m {
            for f in 0..=m {
                ax.push(checked(coef, (f as f64 + 0.5) * h, (j + 1) as f64 * h)?);
            }
        }
        let mut ay = Vec::with_capacity((m + 1) * m);
        for f in 0..=m {
            for i in 0..m {
                ay.push(checked(coef, (i + 1) as f64 * h, (f as f64 + 0.5) * h)?);
            }
        }
        let inv_h2 = 1.0 / (h * h);
        let mut diag = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                let s = ax[j * (m + 1) + i]
                    + ax[j * (m + 1) + i + 1]
                    + ay[j * m + i]
                    + ay[(j + 1) * m + i];
                diag.push(s * inv_h2);
            }
        }
        Ok(Self {
            m,
            inv_h2,
            ax,
            ay,
            diag,
        })
    }

    /// `out = L_h u`.
    pub(crate) fn apply_into<T>(&self, u: &[T], out: &mut [T])
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let m = self.m;
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                let c = u[k];
                let mut acc = c * self.diag[k];
                if i > 0 {
                    acc = acc - u[k - 1] * (self.ax[j * (m + 1) + i] * self.inv_h2);
                }
                if i + 1 < m {
                    acc = acc - u[k + 1] * (self.ax[j * (m + 1) + i + 1] * self.inv_h2);
                }
                if j > 0 {
                    acc = acc - u[k - m] * (self.ay[j * m + i] * self.inv_h2);
                }
                if j + 1 < m {
                    acc = acc - u[k + m] * (self.ay[(j + 1) * m + i] * self.inv_h2);
                }
                out[k] = acc;
            }
        }
    }

    /// `out = (σI + s·L_h) x`.
    pub(crate) fn apply_shifted_into(
        &self,
        sigma: Complex64,
        scale: f64,
        x: &[Complex64],
        out: &mut [Complex64],
    ) {
        self.apply_into(x, out);
        for (o, v) in out.iter_mut().zip(x) {
            *o = *o * scale + sigma * v;
        }
    }

    /// Dense `L_h`, row-major.
    pub(crate) fn dense(&self) -> Vec<f64> {
        let n = self.m * self.m;
        let mut a = alloc::vec![0.0; n * n];
        let mut e = alloc::vec![0.0; n];
        let mut col = alloc::vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            self.apply_into(&e, &mut col);
            for r in 0..n {
                a[r * n + c] = col[r];
            }
            e[c] = 0.0;
        }
        a
    }
}

fn checked(coef: &Coefficient, x1: f64, x2: f64) -> Result<f64> {
    let a = coef.eval(x1, x2);
    if !(a.is_finite() && a > 0.0) {
        return Err(invalid_arg!(
            "diffusion coefficient must be positive, got {a} at ({x1}, {x2})"
        ));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_for_variable_coefficient() {
        let coef = Coefficient::variable(|x1, x2| 1.0 + x1 * x1 + 0.5 * x2);
        let s = Stencil::assemble(4, &coef).unwrap();
        let a = s.dense();
        let n = 16;
        for r in 0..n {
            for c in 0..n {
                assert!((a[r * n + c] - a[c * n + r]).abs() < 1e-12);
            }
        }
    }
}
