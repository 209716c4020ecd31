//! `f64` helpers that work without `std`.

use num_complex::Complex64;

pub(crate) const PI: f64 = core::f64::consts::PI;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub(crate) fn pow_i(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * x)
}

/// `e^{iθ}`
#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    Complex64::new(cos(theta), sin(theta))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub(crate) fn norm2_c(a: &[Complex64]) -> f64 {
    sqrt(a.iter().map(|z| z.norm_sqr()).sum())
}
