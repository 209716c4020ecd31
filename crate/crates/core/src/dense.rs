//! Dense assembly of every operator for desk-scale verification.
//!
//! Everything here is built by explicit Kronecker products and dense
//! factorizations, independently of the matrix-free code paths, so the two
//! can be checked against each other. Sizes are capped at `N·J ≤ 4096`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::invalid_arg;
use crate::kkt::ControlProblem;
use crate::math::{cis, sqrt, PI};
use crate::temporal::{alpha_circulant_eigs, choose_alpha};
use crate::{Error, Result};

/// Largest `N·J` accepted by [`build_dense`].
pub const MAX_DENSE_DIM: usize = 4096;

/// Dense operators for one `(N, m, γ, α)` instance.
#[derive(Debug, Clone)]
pub struct DenseOperatorSet {
    pub n: usize,
    pub j: usize,
    pub gamma: f64,
    pub t_final: f64,
    pub tau: f64,
    pub eta: f64,
    pub alpha: f64,
    /// Lower bidiagonal `(1, -1)`.
    pub b1: DMatrix<f64>,
    /// Lower bidiagonal `(1, 1)`.
    pub b2: DMatrix<f64>,
    /// `B₂⁻¹B₁`.
    pub b: DMatrix<f64>,
    /// Strict upper wrap-around part: `B̃(i, j) = q_{N-(j-i)}` for `j > i`.
    pub b_tilde: DMatrix<f64>,
    /// `B + αB̃`.
    pub b_alpha: DMatrix<f64>,
    pub l_h: DMatrix<f64>,
    /// Observation mask as a `J×J` diagonal (identity when unmasked).
    pub mask: DMatrix<f64>,
    pub g: DMatrix<f64>,
    /// `τ(I⊗M) + ηGGᵀ`.
    pub k: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub r_alpha: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub p_alpha: DMatrix<f64>,
}

fn bidiagonal(n: usize, sub: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            sub
        } else {
            0.0
        }
    })
}

fn lower_triangular_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    a.solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::NumericBreakdown("singular triangular matrix".into()))
}

/// `L_h` as a dense matrix, column by column from the matrix-free apply.
pub fn dense_spatial(problem: &ControlProblem) -> Result<DMatrix<f64>> {
    let j = problem.j();
    let mut l = DMatrix::zeros(j, j);
    let mut e = vec![0.0; j];
    for c in 0..j {
        e[c] = 1.0;
        let col = problem.spatial().apply(&e)?;
        for (r, v) in col.iter().enumerate() {
            l[(r, c)] = *v;
        }
        e[c] = 0.0;
    }
    Ok(l)
}

/// Dense operators for unit diffusion on the `m × m` grid, `T = 1`.
pub fn build_dense(
    n: usize,
    m: usize,
    gamma: f64,
    alpha: f64,
    mask: Option<&[bool]>,
) -> Result<DenseOperatorSet> {
    if n * m * m > MAX_DENSE_DIM {
        return Err(invalid_arg!(
            "N·J = {} exceeds the dense cap {MAX_DENSE_DIM}",
            n * m * m
        ));
    }
    let mut prob = ControlProblem::example1(n, m, gamma)?;
    if let Some(mask) = mask {
        prob = prob.with_mask(mask)?;
    }
    build_dense_for(&prob, alpha)
}

/// Dense operators for an existing problem.
pub fn build_dense_for(problem: &ControlProblem, alpha: f64) -> Result<DenseOperatorSet> {
    let (n, j) = (problem.n(), problem.j());
    if n * j > MAX_DENSE_DIM {
        return Err(invalid_arg!(
            "N·J = {} exceeds the dense cap {MAX_DENSE_DIM}",
            n * j
        ));
    }
    let (tau, eta, gamma) = (problem.tau(), problem.eta(), problem.gamma());
    let b1 = bidiagonal(n, -1.0);
    let b2 = bidiagonal(n, 1.0);
    let b = lower_triangular_inverse(&b2)? * &b1;
    let b_tilde = DMatrix::from_fn(n, n, |r, c| if c > r { b[(n - (c - r), 0)] } else { 0.0 });
    let b_alpha = &b + &b_tilde * alpha;
    let l_h = dense_spatial(problem)?;
    let mask = match problem.mask() {
        Some(m) => DMatrix::from_diagonal(&DVector::from_column_slice(m)),
        None => DMatrix::identity(j, j),
    };
    let i_n = DMatrix::<f64>::identity(n, n);
    let i_j = DMatrix::<f64>::identity(j, j);
    let g = b.kronecker(&i_j) * 2.0 + i_n.kronecker(&l_h) * tau;
    let k = i_n.kronecker(&mask) * tau + &g * g.transpose() * eta;
    let time_factor = |t: &DMatrix<f64>| (&i_n * sqrt(tau) + t * (2.0 * sqrt(eta))).kronecker(&i_j);
    let r = time_factor(&b) + i_n.kronecker(&l_h) * (tau * sqrt(eta));
    let r_alpha = time_factor(&b_alpha) + i_n.kronecker(&l_h) * (tau * sqrt(eta));
    let p = &r * r.transpose();
    let p_alpha = &r_alpha * r_alpha.transpose();
    Ok(DenseOperatorSet {
        n,
        j,
        gamma,
        t_final: problem.t_final(),
        tau,
        eta,
        alpha,
        b1,
        b2,
        b,
        b_tilde,
        b_alpha,
        l_h,
        mask,
        g,
        k,
        r,
        r_alpha,
        p,
        p_alpha,
    })
}

impl DenseOperatorSet {
    /// The original KKT matrix acting on `[y; p]`.
    pub fn kkt(&self) -> DMatrix<f64> {
        let i_j = DMatrix::<f64>::identity(self.j, self.j);
        let t2 = self.tau / 2.0;
        let a11 = (&self.b2 * t2).kronecker(&i_j);
        let a12 =
            self.b1.transpose().kronecker(&i_j) + (self.b2.transpose() * t2).kronecker(&self.l_h);
        let a21 = self.b1.kronecker(&i_j) + (&self.b2 * t2).kronecker(&self.l_h);
        let a22 = (self.b2.transpose() * (-self.tau / (2.0 * self.gamma))).kronecker(&self.mask);
        block2(&a11, &a12, &a21, &a22)
    }

    /// The symmetrized KKT matrix acting on `[ỹ; p̃]`.
    pub fn symmetrized_kkt(&self) -> DMatrix<f64> {
        let nj = self.n * self.j;
        let a11 = DMatrix::<f64>::identity(nj, nj) * (self.tau / 2.0);
        let a12 = self.g.transpose() * 0.5;
        let a21 = &self.g * 0.5;
        let a22 = DMatrix::<f64>::identity(self.n, self.n).kronecker(&self.mask)
            * (-self.tau / (2.0 * self.gamma));
        block2(&a11, &a12, &a21, &a22)
    }

    /// `(B₂⁻¹⊗I, B₂⁻ᵀ⊗I)` as one block-diagonal matrix.
    pub fn unscaling(&self) -> Result<DMatrix<f64>> {
        let i_j = DMatrix::<f64>::identity(self.j, self.j);
        let inv = lower_triangular_inverse(&self.b2)?;
        let z = DMatrix::zeros(self.n * self.j, self.n * self.j);
        Ok(block2(
            &inv.kronecker(&i_j),
            &z,
            &z,
            &inv.transpose().kronecker(&i_j),
        ))
    }
}

fn block2(
    a11: &DMatrix<f64>,
    a12: &DMatrix<f64>,
    a21: &DMatrix<f64>,
    a22: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (r1, c1) = a11.shape();
    let (r2, c2) = a22.shape();
    let mut out = DMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a11);
    out.view_mut((0, c1), (r1, c2)).copy_from(a12);
    out.view_mut((r1, 0), (r2, c1)).copy_from(a21);
    out.view_mut((r1, c1), (r2, c2)).copy_from(a22);
    out
}

/// Extreme generalized eigenvalues of a symmetric-definite pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub min: f64,
    pub max: f64,
    /// Eigenvalues outside `[lo - 1e-10, hi + 1e-10]`.
    pub violations: usize,
    pub eigenvalues: Vec<f64>,
}

impl SpectrumReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn max_abs_entry(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn asymmetry(a: &DMatrix<f64>) -> f64 {
    max_abs_entry(&(a - a.transpose())) / max_abs_entry(a).max(f64::MIN_POSITIVE)
}

/// Eigenvalues of `A⁻¹B` for SPD `A` and symmetric `B`, through
/// `A = LLᵀ` and the symmetric eigenproblem of `L⁻¹BL⁻ᵀ`.
pub fn check_spectrum(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lo: f64,
    hi: f64,
) -> Result<SpectrumReport> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(invalid_arg!(
            "pencil matrices must be square and of equal size"
        ));
    }
    if asymmetry(a) > 1e-12 || asymmetry(b) > 1e-12 {
        return Err(invalid_arg!("pencil matrices must be symmetric"));
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| invalid_arg!("first pencil matrix is not positive definite"))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::NumericBreakdown("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::NumericBreakdown("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let min = eigenvalues.first().copied().unwrap_or(f64::NAN);
    let max = eigenvalues.last().copied().unwrap_or(f64::NAN);
    let violations = eigenvalues
        .iter()
        .filter(|&&e| !(e >= lo - 1e-10 && e <= hi + 1e-10))
        .count();
    Ok(SpectrumReport {
        min,
        max,
        violations,
        eigenvalues,
    })
}

/// Outcome of one structural identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation, relative to the scale of the compared quantity.
    pub max_deviation: f64,
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs_entry(&(a - b)) / max_abs_entry(b).max(1.0)
}

/// Checks the closed forms the preconditioner analysis rests on.
pub fn structural_identities(set: &DenseOperatorSet) -> Result<Vec<IdentityCheck>> {
    const TOL: f64 = 1e-11;
    let n = set.n;
    let nf = n as f64;
    let mut out = Vec::new();
    let mut push = |name, dev: f64, ok: bool| {
        out.push(IdentityCheck {
            name,
            passed: ok,
            max_deviation: dev,
        })
    };

    // B₂⁻¹ and B against their Toeplitz symbols
    let b2_inv = lower_triangular_inverse(&set.b2)?;
    let s = DMatrix::from_fn(n, n, |r, c| if r >= c { sign(r - c) } else { 0.0 });
    let dev = rel_diff(&b2_inv, &s);
    push("b2_inverse_symbol", dev, dev == 0.0);
    let q = DMatrix::from_fn(n, n, |r, c| match r.checked_sub(c) {
        Some(0) => 1.0,
        Some(k) => 2.0 * sign(k),
        None => 0.0,
    });
    let dev = rel_diff(&set.b, &q);
    push("b_symbol", dev, dev == 0.0);

    // B + Bᵀ = 2·D̂𝟙𝟙ᵀD̂ with D̂ = diag((-1)^{N-i})
    let d_hat = DVector::from_fn(n, |i, _| sign(n - 1 - i));
    let rank1 = &d_hat * d_hat.transpose() * 2.0;
    let dev = rel_diff(&(&set.b + set.b.transpose()), &rank1);
    push("b_sym_rank_one", dev, dev == 0.0);

    // ‖B̃B̃ᵀ‖₁ = 2N(N-1), ‖B̃B̃ᵀ‖₂ ≤ 2T²/τ²
    let bb = &set.b_tilde * set.b_tilde.transpose();
    let norm1 = (0..n)
        .map(|c| bb.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let want = 2.0 * nf * (nf - 1.0);
    let dev = (norm1 - want).abs() / want.max(1.0);
    push("b_tilde_norm1", dev, dev <= TOL);
    let norm2 = SymmetricEigen::new(bb.clone())
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = 2.0 * set.t_final * set.t_final / (set.tau * set.tau);
    push(
        "b_tilde_norm2_bound",
        (norm2 - bound).max(0.0) / bound,
        norm2 <= bound * (1.0 + TOL),
    );

    // K = (τI + 4ηBBᵀ)⊗I + 2ητ(B+Bᵀ)⊗L + τ²η·I⊗L², unmasked
    let i_n = DMatrix::<f64>::identity(n, n);
    let i_j = DMatrix::<f64>::identity(set.j, set.j);
    let k_unmasked = i_n.kronecker(&i_j) * set.tau + &set.g * set.g.transpose() * set.eta;
    let expanded = (&i_n * set.tau + &set.b * set.b.transpose() * (4.0 * set.eta)).kronecker(&i_j)
        + (&set.b + set.b.transpose()).kronecker(&set.l_h) * (2.0 * set.eta * set.tau)
        + i_n.kronecker(&(&set.l_h * &set.l_h)) * (set.tau * set.tau * set.eta);
    let dev = max_abs_entry(&(&k_unmasked - &expanded)) / max_abs_entry(&k_unmasked);
    push("k_expansion", dev, dev <= TOL);

    // spectrum of H(B_α): N[1+α(-1)^N] - α(-1)^N once, -α(-1)^N (N-1) times
    let h = (&set.b_alpha + set.b_alpha.transpose()) * 0.5;
    let mut got: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    got.sort_by(f64::total_cmp);
    let sn = sign(n);
    let mut want: Vec<f64> = vec![-set.alpha * sn; n - 1];
    want.push(nf * (1.0 + set.alpha * sn) - set.alpha * sn);
    want.sort_by(f64::total_cmp);
    let dev = got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / nf;
    push("h_b_alpha_spectrum", dev, dev <= TOL);

    // B_α = D_α⁻¹ F⁻¹ Λ_α F D_α with an explicit DFT matrix
    let factor = alpha_circulant_eigs(&crate::temporal::b_symbol(n)?, set.alpha)?;
    let f = DMatrix::from_fn(n, n, |r, c| cis(-2.0 * PI * ((r * c) % n) as f64 / nf));
    let f_inv = f.adjoint() / Complex64::new(nf, 0.0);
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(factor.eigs()));
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        factor.d_scale().iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    let d_inv = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        factor
            .d_scale()
            .iter()
            .map(|&v| Complex64::new(1.0 / v, 0.0)),
    ));
    let recon = d_inv * f_inv * lam * f * d;
    let dev = (0..n * n)
        .map(|i| (recon[i] - Complex64::new(set.b_alpha[i], 0.0)).norm())
        .fold(0.0, f64::max)
        / max_abs_entry(&set.b_alpha);
    push("b_alpha_diagonalization", dev, dev <= TOL);

    Ok(out)
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One spectral check on one grid instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// `"P^-1 K"`, `"P_alpha^-1 P"` or `"P_alpha^-1 K"`.
    pub check: String,
    pub lo: f64,
    pub hi: f64,
    pub min: f64,
    pub max: f64,
    pub violations: usize,
    pub passed: bool,
}

/// `N`, `m` and `γ` values of the standard verification grid.
pub const GRID_N: [usize; 5] = [2, 3, 4, 8, 16];
pub const GRID_M: [usize; 3] = [1, 3, 7];
pub const GRID_GAMMA: [f64; 4] = [1e-6, 1e-2, 1.0, 10.0];

/// The three preconditioner bounds on one instance, with `α` from
/// [`choose_alpha`] and `T = 1`.
pub fn verify_instance(n: usize, m: usize, gamma: f64) -> Result<Vec<SpectrumRecord>> {
    let alpha = choose_alpha(1.0 / n as f64, gamma, 1.0)?;
    let set = build_dense(n, m, gamma, alpha, None)?;
    let checks: [(&str, &DMatrix<f64>, &DMatrix<f64>, f64, f64); 3] = [
        ("P^-1 K", &set.p, &set.k, 0.5, 1.0),
        ("P_alpha^-1 P", &set.p_alpha, &set.p, 0.75, 1.5),
        ("P_alpha^-1 K", &set.p_alpha, &set.k, 0.375, 1.5),
    ];
    checks
        .iter()
        .map(|&(name, a, b, lo, hi)| {
            let rep = check_spectrum(a, b, lo, hi)?;
            Ok(SpectrumRecord {
                n,
                m,
                gamma,
                alpha,
                check: name.into(),
                lo,
                hi,
                min: rep.min,
                max: rep.max,
                violations: rep.violations,
                passed: rep.passed(),
            })
        })
        .collect()
}
