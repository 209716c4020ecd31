//! Geometric V(2,2)-cycle for complex-shifted diffusion operators.
//!
//! Damped Jacobi smoothing, full-weighting restriction, bilinear
//! prolongation and rediscretized coarse operators. The coarsest level
//! (`m ≤ 3`) is solved by dense Gaussian elimination.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{Coefficient, Stencil};
use crate::error::breakdown;
use crate::Result;

const OMEGA: f64 = 0.8;
const PRE_SMOOTH: usize = 2;
const POST_SMOOTH: usize = 2;
const COARSEST: usize = 3;

#[derive(Debug, Clone)]
pub(crate) struct Hierarchy {
    /// Finest first.
    levels: Vec<Stencil>,
}

impl Hierarchy {
    /// `None` when `m + 1` is not a power of two.
    pub(crate) fn build(fine: Stencil, coef: &Coefficient) -> Result<Option<Self>> {
        if !(fine.m + 1).is_power_of_two() {
            return Ok(None);
        }
        let mut levels = vec![fine];
        loop {
            let m = levels.last().map(|s| s.m).unwrap_or(0);
            if m <= COARSEST {
                break;
            }
            levels.push(Stencil::assemble((m - 1) / 2, coef)?);
        }
        Ok(Some(Self { levels }))
    }

    pub(crate) fn vcycle(
        &self,
        sigma: Complex64,
        scale: f64,
        b: &[Complex64],
        x0: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let mut x = x0.to_vec();
        self.cycle(0, sigma, scale, b, &mut x)?;
        Ok(x)
    }

    fn cycle(
        &self,
        level: usize,
        sigma: Complex64,
        scale: f64,
        b: &[Complex64],
        x: &mut [Complex64],
    ) -> Result<()> {
        let st = &self.levels[level];
        if level + 1 == self.levels.len() {
            let sol = dense_solve(st, sigma, scale, b)?;
            x.copy_from_slice(&sol);
            return Ok(());
        }
        let mut r = vec![Complex64::new(0.0, 0.0); b.len()];
        for _ in 0..PRE_SMOOTH {
            jacobi(st, sigma, scale, b, x, &mut r)?;
        }
        residual(st, sigma, scale, b, x, &mut r);
        let coarse_m = self.levels[level + 1].m;
        let rc = restrict(st.m, coarse_m, &r);
        let mut ec = vec![Complex64::new(0.0, 0.0); rc.len()];
        self.cycle(level + 1, sigma, scale, &rc, &mut ec)?;
        prolong_add(coarse_m, st.m, &ec, x);
        for _ in 0..POST_SMOOTH {
            jacobi(st, sigma, scale, b, x, &mut r)?;
        }
        Ok(())
    }
}

fn residual(
    st: &Stencil,
    sigma: Complex64,
    scale: f64,
    b: &[Complex64],
    x: &[Complex64],
    r: &mut [Complex64],
) {
    st.apply_shifted_into(sigma, scale, x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn jacobi(
    st: &Stencil,
    sigma: Complex64,
    scale: f64,
    b: &[Complex64],
    x: &mut [Complex64],
    r: &mut [Complex64],
) -> Result<()> {
    residual(st, sigma, scale, b, x, r);
    for ((xi, ri), &d) in x.iter_mut().zip(r.iter()).zip(&st.diag) {
        let dd = sigma + scale * d;
        if dd.norm() < 1e-300 {
            return Err(breakdown!("zero diagonal in shifted smoother"));
        }
        *xi += ri / dd * OMEGA;
    }
    Ok(())
}

/// Full weighting. Coarse point `(I, J)` sits on fine point `(2I+1, 2J+1)`.
fn restrict(mf: usize, mc: usize, r: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); mc * mc];
    for jc in 0..mc {
        for ic in 0..mc {
            let (i0, j0) = (2 * ic + 1, 2 * jc + 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for dj in 0..3 {
                for di in 0..3 {
                    let w = [1.0, 2.0, 1.0][di] * [1.0, 2.0, 1.0][dj];
                    acc += r[(j0 + dj - 1) * mf + (i0 + di - 1)] * w;
                }
            }
            out[jc * mc + ic] = acc / 16.0;
        }
    }
    out
}

/// `x += P e` with bilinear interpolation and zero boundary values.
fn prolong_add(mc: usize, mf: usize, e: &[Complex64], x: &mut [Complex64]) {
    let at = |ic: isize, jc: isize| -> Complex64 {
        if ic < 0 || jc < 0 || ic >= mc as isize || jc >= mc as isize {
            Complex64::new(0.0, 0.0)
        } else {
            e[jc as usize * mc + ic as usize]
        }
    };
    // coarse neighbours of fine index i along one axis, with weights
    let nbrs = |i: usize| -> [(isize, f64); 2] {
        if i % 2 == 1 {
            [(((i - 1) / 2) as isize, 1.0), (0, 0.0)]
        } else {
            [(i as isize / 2 - 1, 0.5), (i as isize / 2, 0.5)]
        }
    };
    for j in 0..mf {
        let ny = nbrs(j);
        for i in 0..mf {
            let nx = nbrs(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(jc, wy) in &ny {
                if wy == 0.0 {
                    continue;
                }
                for &(ic, wx) in &nx {
                    if wx != 0.0 {
                        acc += at(ic, jc) * (wx * wy);
                    }
                }
            }
            x[j * mf + i] += acc;
        }
    }
}

/// Gaussian elimination with partial pivoting on the dense shifted operator.
fn dense_solve(
    st: &Stencil,
    sigma: Complex64,
    scale: f64,
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = st.m * st.m;
    let l = st.dense();
    let mut a: Vec<Complex64> = l.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
    for k in 0..n {
        a[k * n + k] += sigma;
    }
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm()))
            .unwrap_or(col);
        if a[piv * n + col].norm() < 1e-300 {
            return Err(breakdown!("singular coarse-grid operator"));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[row * n + c] -= f * v;
            }
            let xv = x[col];
            x[row] -= f * xv;
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for c in row + 1..n {
            acc -= a[row * n + c] * x[c];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::norm2_c;

    fn cvec(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new(libm::sin(0.9 * i as f64 + 0.1), libm::cos(1.3 * i as f64)))
            .collect()
    }

    #[test]
    fn restriction_is_quarter_prolongation_transpose() {
        let (mf, mc) = (7, 3);
        let r = cvec(mf * mf);
        let e = cvec(mc * mc);
        let rc = restrict(mf, mc, &r);
        let mut pe = vec![Complex64::new(0.0, 0.0); mf * mf];
        prolong_add(mc, mf, &e, &mut pe);
        let lhs: Complex64 = rc.iter().zip(&e).map(|(a, b)| a * b).sum();
        let rhs: Complex64 = r.iter().zip(&pe).map(|(a, b)| a * b).sum::<Complex64>() / 4.0;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn dense_solve_residual() {
        let st = Stencil::assemble(3, &Coefficient::Constant(2.0)).unwrap();
        let b = cvec(9);
        let sigma = Complex64::new(0.3, 2.0);
        let x = dense_solve(&st, sigma, 1.5, &b).unwrap();
        let mut ax = vec![Complex64::new(0.0, 0.0); 9];
        st.apply_shifted_into(sigma, 1.5, &x, &mut ax);
        let res: Vec<Complex64> = ax.iter().zip(&b).map(|(a, c)| a - c).collect();
        assert!(norm2_c(&res) < 1e-12 * norm2_c(&b));
    }

    #[test]
    fn one_cycle_contracts_the_error() {
        let coef = Coefficient::Constant(1.0);
        let fine = Stencil::assemble(7, &coef).unwrap();
        let h = Hierarchy::build(fine.clone(), &coef).unwrap().unwrap();
        let exact = cvec(49);
        let sigma = Complex64::new(1.0, 0.0);
        let mut b = vec![Complex64::new(0.0, 0.0); 49];
        fine.apply_shifted_into(sigma, 1.0, &exact, &mut b);
        let x0: Vec<Complex64> = (0..49)
            .map(|i| Complex64::new(libm::cos(2.1 * i as f64), 0.0))
            .collect();
        let e0: Vec<Complex64> = x0.iter().zip(&exact).map(|(a, c)| a - c).collect();
        let x1 = h.vcycle(sigma, 1.0, &b, &x0).unwrap();
        let e1: Vec<Complex64> = x1.iter().zip(&exact).map(|(a, c)| a - c).collect();
        assert!(
            norm2_c(&e1) <= 0.2 * norm2_c(&e0),
            "{} vs {}",
            norm2_c(&e1),
            norm2_c(&e0)
        );
    }
}
