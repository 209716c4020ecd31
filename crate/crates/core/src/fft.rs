//! Complex FFTs of arbitrary length and the type-I discrete sine transform.
//!
//! Powers of two use an iterative radix-2 kernel; every other length goes
//! through Bluestein's chirp-z algorithm on a power-of-two convolution.
//! Both directions are unnormalized:
//!
//! * forward: `X_k = Σ_j x_j e^{-2πi jk/n}`
//! * inverse: `x_j = Σ_k X_k e^{+2πi jk/n}`
//!
//! so `inverse(forward(x)) = n·x`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math::{cis, PI};

#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    /// `e^{-2πi k/n}` for `k < n/2`.
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| cis(-2.0 * PI * k as f64 / n as f64))
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Self {
            n,
            twiddles,
            bitrev,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    n: usize,
    inner: Radix2,
    /// `e^{-πi j²/n}`
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp filter, pre-divided by the
    /// inner length.
    filter_hat: Vec<Complex64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // j² mod 2n keeps the angle argument small.
        let chirp: Vec<Complex64> = (0..n)
            .map(|j| {
                let jj = (j as u128 * j as u128 % (2 * n as u128)) as f64;
                cis(-PI * jj / n as f64)
            })
            .collect();
        let mut filter = vec![Complex64::new(0.0, 0.0); m];
        filter[0] = chirp[0].conj();
        for j in 1..n {
            filter[j] = chirp[j].conj();
            filter[m - j] = chirp[j].conj();
        }
        inner.forward(&mut filter);
        let scale = 1.0 / m as f64;
        for f in &mut filter {
            *f *= scale;
        }
        Self {
            n,
            inner,
            chirp,
            filter_hat: filter,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let m = self.inner.n;
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..self.n {
            work[j] = buf[j] * self.chirp[j];
        }
        self.inner.forward(&mut work);
        for (w, f) in work.iter_mut().zip(&self.filter_hat) {
            *w = (*w * f).conj();
        }
        // inverse via conjugation; the 1/m factor is folded into the filter
        self.inner.forward(&mut work);
        for k in 0..self.n {
            buf[k] = work[k].conj() * self.chirp[k];
        }
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// A reusable FFT plan for one transform length.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    kernel: Kernel,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        let kernel = if n <= 1 {
            Kernel::Trivial
        } else if n.is_power_of_two() {
            Kernel::Radix2(Radix2::new(n))
        } else {
            Kernel::Bluestein(Bluestein::new(n))
        };
        Self { n, kernel }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, kernel `e^{-2πi jk/n}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "fft buffer length");
        match &self.kernel {
            Kernel::Trivial => {}
            Kernel::Radix2(r) => r.forward(buf),
            Kernel::Bluestein(b) => b.forward(buf),
        }
    }

    /// In-place unnormalized inverse transform, kernel `e^{+2πi jk/n}`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        for z in buf.iter_mut() {
            *z = z.conj();
        }
    }
}

/// Type-I discrete sine transform of length `m`:
/// `y_k = Σ_{j=1}^{m} x_j sin(π jk/(m+1))`, `k = 1..m`.
///
/// The transform is its own inverse up to the factor `(m+1)/2`.
#[derive(Debug, Clone)]
pub struct Dst1 {
    m: usize,
    fft: Fft,
}

impl Dst1 {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            fft: Fft::new(2 * (m + 1)),
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Transforms `data` in place. `work` must hold `2(m+1)` entries.
    pub fn apply(&self, data: &mut [Complex64], work: &mut [Complex64]) {
        let m = self.m;
        debug_assert_eq!(data.len(), m);
        debug_assert_eq!(work.len(), 2 * (m + 1));
        // odd extension: [0, x_1..x_m, 0, -x_m..-x_1]
        work[0] = Complex64::new(0.0, 0.0);
        work[m + 1] = Complex64::new(0.0, 0.0);
        for j in 0..m {
            work[j + 1] = data[j];
            work[2 * (m + 1) - 1 - j] = -data[j];
        }
        self.fft.forward(work);
        // X_k = -2i·y_k
        for k in 0..m {
            let z = work[k + 1];
            data[k] = Complex64::new(-z.im * 0.5, z.re * 0.5);
        }
    }

    /// Applies the transform along both axes of an `m × m` array stored
    /// with the first index fastest.
    pub fn apply_2d(&self, data: &mut [Complex64]) {
        let m = self.m;
        debug_assert_eq!(data.len(), m * m);
        let mut work = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
        for row in data.chunks_mut(m) {
            self.apply(row, &mut work);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..m {
                col[j] = data[j * m + i];
            }
            self.apply(&mut col, &mut work);
            for j in 0..m {
                data[j * m + i] = col[j];
            }
        }
    }
}

impl Dst1 {
    /// [`apply_2d`](Self::apply_2d) for real data, two lines per complex
    /// transform.
    pub fn apply_2d_real(&self, data: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(data.len(), m * m);
        let mut work = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        // pass 0 runs along x₁ (contiguous rows), pass 1 along x₂
        for pass in 0..2 {
            let at = |line_idx: usize, k: usize| {
                if pass == 0 {
                    line_idx * m + k
                } else {
                    k * m + line_idx
                }
            };
            for first in (0..m).step_by(2) {
                let second = first + 1;
                for k in 0..m {
                    let im = if second < m { data[at(second, k)] } else { 0.0 };
                    line[k] = Complex64::new(data[at(first, k)], im);
                }
                self.apply(&mut line, &mut work);
                for k in 0..m {
                    data[at(first, k)] = line[k].re;
                    if second < m {
                        data[at(second, k)] = line[k].im;
                    }
                }
            }
        }
    }
}
