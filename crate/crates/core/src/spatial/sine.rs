use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fft::Dst1;
use crate::math::{sin, PI};
use crate::par;

/// Largest `m` for which the 2-D transform is done as two dense products
/// `S·X·S`; above it the FFT-based DST takes over.
const MATRIX_MAX: usize = 255;

/// Unnormalized 2-D type-I sine transform on an `m × m` grid, `x₁` fastest.
#[derive(Debug, Clone)]
pub(crate) enum SineTransform {
    Matrix(DMatrix<f64>),
    Fft(Dst1),
}

impl SineTransform {
    pub(crate) fn new(m: usize) -> Self {
        if m <= MATRIX_MAX {
            Self::matrix(m)
        } else {
            Self::fft(m)
        }
    }

    pub(crate) fn matrix(m: usize) -> Self {
        let h = PI / (m + 1) as f64;
        Self::Matrix(DMatrix::from_fn(m, m, |i, j| {
            sin(h * ((i + 1) * (j + 1)) as f64)
        }))
    }

    pub(crate) fn fft(m: usize) -> Self {
        Self::Fft(Dst1::new(m))
    }

    /// Transforms one `m × m` block.
    pub(crate) fn apply_real(&self, data: &mut [f64]) {
        self.apply_batch(data);
    }

    /// Transforms the real and imaginary parts of one block.
    pub(crate) fn apply_complex(&self, data: &mut [Complex64]) {
        let mut parts: Vec<f64> = Vec::with_capacity(2 * data.len());
        parts.extend(data.iter().map(|z| z.re));
        parts.extend(data.iter().map(|z| z.im));
        self.apply_batch(&mut parts);
        let (re, im) = parts.split_at(data.len());
        for ((z, &r), &i) in data.iter_mut().zip(re).zip(im) {
            *z = Complex64::new(r, i);
        }
    }

    /// Transforms every consecutive `m × m` block of `data`.
    pub(crate) fn apply_blocks(&self, data: &mut [f64]) {
        let mm = self.m() * self.m();
        par::for_each_chunk(data, BATCH * mm, |_, chunk| self.apply_batch(chunk));
    }

    fn m(&self) -> usize {
        match self {
            Self::Matrix(s) => s.nrows(),
            Self::Fft(dst) => dst.len(),
        }
    }

    fn apply_batch(&self, chunk: &mut [f64]) {
        let m = self.m();
        let mm = m * m;
        match self {
            Self::Fft(dst) => {
                for blk in chunk.chunks_mut(mm) {
                    dst.apply_2d_real(blk);
                }
            }
            Self::Matrix(s) => {
                // Block X_b is column-major with rows along x₁, so the blocks
                // side by side form one m × (m·nb) matrix. S·X_b for all b is
                // one product; transposing each block and multiplying by S
                // again gives (S·X_b·S)ᵀ, since S is symmetric.
                let nb = chunk.len() / mm;
                let a = s * DMatrix::from_column_slice(m, m * nb, chunk);
                transpose_blocks(a.as_slice(), chunk, m);
                let y = s * DMatrix::from_column_slice(m, m * nb, chunk);
                transpose_blocks(y.as_slice(), chunk, m);
            }
        }
    }
}

/// Blocks processed per dense product.
const BATCH: usize = 16;

fn transpose_blocks(src: &[f64], dst: &mut [f64], m: usize) {
    let mm = m * m;
    for (s, d) in src.chunks(mm).zip(dst.chunks_mut(mm)) {
        for c in 0..m {
            for r in 0..m {
                d[r * m + c] = s[c * m + r];
            }
        }
    }
}
