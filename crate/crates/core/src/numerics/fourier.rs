use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of the single Fourier normalization used throughout:
/// `f(θ) = Σ c_n e^{inθ}`, `c_n = (2π)^{-1} ∫ f(θ) e^{-inθ} dθ`.
pub const CONVENTION: &str = "exp(+in theta), normalized mean";

/// Fourier coefficients `c_n` for `n ∈ [-n_max, n_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    n_max: usize,
    coeffs: Vec<Complex64>,
    convention_tag: String,
}

impl ModeCoefficients {
    pub fn zeros(n_max: usize) -> Self {
        Self { n_max, coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_max + 1], convention_tag: CONVENTION.into() }
    }

    /// Coefficients listed from `-n_max` to `n_max`.
    pub fn from_vec(coeffs: Vec<Complex64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "mode vector must have odd length");
        let n_max = coeffs.len() / 2;
        Self { n_max, coeffs, convention_tag: CONVENTION.into() }
    }

    pub fn delta(n_max: usize, n: i64) -> Self {
        let mut c = Self::zeros(n_max);
        c.set(n, Complex64::new(1.0, 0.0));
        c
    }

    pub fn from_fn(n_max: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let mut c = Self::zeros(n_max);
        for n in c.modes() {
            c.set(n, f(n));
        }
        c
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn convention_tag(&self) -> &str {
        &self.convention_tag
    }

    pub fn modes(&self) -> std::ops::RangeInclusive<i64> {
        -(self.n_max as i64)..=self.n_max as i64
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `e^{inθ}`; zero outside the stored range.
    pub fn get(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.n_max as i64) as usize]
        }
    }

    pub fn set(&mut self, n: i64, v: Complex64) {
        assert!(n.unsigned_abs() as usize <= self.n_max, "mode {n} outside stored range");
        let i = (n + self.n_max as i64) as usize;
        self.coeffs[i] = v;
    }

    /// Homogeneous `Ḣ^s` norm `(Σ_{n≠0} |n|^{2s}|c_n|²)^{1/2}`, times
    /// `scale^{-s}` when a scale is given. For `s = 0` this is the plain ℓ²
    /// norm including `n = 0`.
    pub fn hs_norm(&self, s: f64, scale: Option<f64>) -> f64 {
        assert!(s >= 0.0, "Sobolev index must be nonnegative");
        let sum: f64 = if s == 0.0 {
            self.coeffs.iter().map(|c| c.norm_sqr()).sum()
        } else {
            self.modes()
                .filter(|n| *n != 0)
                .map(|n| (n.unsigned_abs() as f64).powf(2.0 * s) * self.get(n).norm_sqr())
                .sum()
        };
        let norm = sum.sqrt();
        match scale {
            Some(h) => {
                assert!(h > 0.0, "scale must be positive");
                norm * h.powf(-s)
            }
            None => norm,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.hs_norm(0.0, None)
    }

    /// Whether `c_{-n} = conj(c_n)` within `tol`, i.e. the function is real.
    pub fn is_real(&self, tol: f64) -> bool {
        self.modes().all(|n| (self.get(-n) - self.get(n).conj()).norm() <= tol)
    }

    /// Same function with a different stored range (zero padded or cut).
    pub fn resized(&self, n_max: usize) -> Self {
        Self::from_fn(n_max, |n| self.get(n))
    }

    pub fn map_modes(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        Self::from_fn(self.n_max, |n| f(n, self.get(n)))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n_max = self.n_max.max(other.n_max);
        Self::from_fn(n_max, |n| self.get(n) + other.get(n))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n_max = self.n_max.max(other.n_max);
        Self::from_fn(n_max, |n| self.get(n) - other.get(n))
    }

    /// Coefficients of the product of the two functions, cut to `n_max`.
    pub fn product(&self, other: &Self, n_max: usize) -> Self {
        let mut out = Self::zeros(n_max);
        let cap = n_max as i64;
        for m in self.modes() {
            let a = self.get(m);
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for l in other.modes() {
                let n = m + l;
                if n.abs() <= cap {
                    let i = (n + cap) as usize;
                    out.coeffs[i] += a * other.get(l);
                }
            }
        }
        out
    }

    /// Coefficients of `exp(f)` cut to `n_max`, summing `f^n/n!` by repeated
    /// convolution until a term has ℓ² norm below `tol`.
    pub fn exp_series(&self, n_max: usize, tol: f64) -> Result<Self> {
        const MAX_TERMS: usize = 400;
        let base = self.resized(n_max);
        let mut term = Self::delta(n_max, 0);
        let mut sum = term.clone();
        for j in 1..=MAX_TERMS {
            term = base.product(&term, n_max).scale(Complex64::new(1.0 / j as f64, 0.0));
            sum = sum.add(&term);
            let t = term.l2_norm();
            if !t.is_finite() {
                return Err(Error::SeriesNotConverged { terms: j, tail: t });
            }
            if t < tol {
                return Ok(sum);
            }
        }
        Err(Error::SeriesNotConverged { terms: MAX_TERMS, tail: term.l2_norm() })
    }

    /// Coefficients from `m` equispaced samples `f(2πj/m)`, cut to `n_max`.
    pub fn from_samples(samples: &[Complex64], n_max: usize) -> Self {
        let m = samples.len();
        assert!(m > 2 * n_max, "need more samples than modes");
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let inv = 1.0 / m as f64;
        Self::from_fn(n_max, |n| buf[n.rem_euclid(m as i64) as usize] * inv)
    }

    /// `m` equispaced samples of the represented function.
    pub fn to_samples(&self, m: usize) -> Vec<Complex64> {
        assert!(m > 2 * self.n_max, "need more samples than modes");
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for n in self.modes() {
            buf[n.rem_euclid(m as i64) as usize] += self.get(n);
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf
    }

    /// Point evaluation.
    pub fn eval(&self, theta: f64) -> Complex64 {
        self.modes().map(|n| self.get(n) * Complex64::from_polar(1.0, n as f64 * theta)).sum()
    }
}

/// Coefficients of a function given as a closure, from `m` samples.
pub fn coefficients_of(f: impl Fn(f64) -> Complex64, n_max: usize, m: usize) -> ModeCoefficients {
    let samples: Vec<Complex64> = (0..m).map(|j| f(2.0 * PI * j as f64 / m as f64)).collect();
    ModeCoefficients::from_samples(&samples, n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn mode_zero_is_invisible_to_homogeneous_norm() {
        assert_eq!(ModeCoefficients::delta(4, 0).hs_norm(0.5, None), 0.0);
        assert_eq!(ModeCoefficients::delta(4, 0).hs_norm(0.0, None), 1.0);
    }

    #[test]
    fn plus_minus_one_has_h1_norm_sqrt_two() {
        let f = ModeCoefficients::delta(3, 1).add(&ModeCoefficients::delta(3, -1));
        assert!((f.hs_norm(1.0, None) - 2f64.sqrt()).abs() < 1e-15);
        assert!((f.hs_norm(1.0, Some(4.0)) - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn samples_round_trip() {
        let f = ModeCoefficients::from_vec(vec![c(0.5), Complex64::new(0.0, 1.0), c(2.0), c(-1.0), c(0.25)]);
        let back = ModeCoefficients::from_samples(&f.to_samples(16), 2);
        assert!(f.sub(&back).l2_norm() < 1e-14);
        let s = f.to_samples(16)[3];
        assert!((s - f.eval(2.0 * PI * 3.0 / 16.0)).norm() < 1e-13);
    }

    #[test]
    fn cosine_coefficients_follow_convention() {
        let f = coefficients_of(|x| c(2.0 * x.cos()), 4, 32);
        assert!((f.get(1) - c(1.0)).norm() < 1e-14);
        assert!((f.get(-1) - c(1.0)).norm() < 1e-14);
        assert!(f.is_real(1e-14));
        let g = coefficients_of(|x| Complex64::new(0.0, x.sin()), 4, 32);
        assert!(!g.is_real(1e-3));
    }

    #[test]
    fn exp_series_matches_sampled_exponential() {
        let f = coefficients_of(|x| Complex64::new(0.3 * x.cos(), 0.7 * (2.0 * x).sin()), 4, 64);
        let e = f.exp_series(24, 1e-14).unwrap();
        let direct = coefficients_of(|x| Complex64::new(0.3 * x.cos(), 0.7 * (2.0 * x).sin()).exp(), 24, 256);
        assert!(e.sub(&direct).l2_norm() < 1e-12);
    }

    #[test]
    fn product_is_convolution() {
        let a = ModeCoefficients::delta(2, 1);
        let b = ModeCoefficients::delta(2, -2);
        let p = a.product(&b, 2);
        assert_eq!(p.get(-1), c(1.0));
        assert_eq!(p.l2_norm(), 1.0);
    }
}
