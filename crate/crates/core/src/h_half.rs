//! Two descriptions of `H^{1/2}(T)`: the Fourier weight `|n|` and the
//! double integral `∫∫ |f(x) − f(y)|²/|x − y|²`, and the bounds on
//! `e^f` and `e^{if}` that the transport results rely on.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::fourier::ModeCoefficients;
use crate::report::{BoundReport, ExponentFit, ReportRow, Status};

/// Equispaced samples `f(2πj/M)` together with their coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunctionSamples {
    samples: Vec<Complex64>,
    coeffs: ModeCoefficients,
}

impl CircleFunctionSamples {
    /// `m` must be a power of two, at least 8.
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        let m = samples.len();
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::Invalid(format!("sample count {m} must be a power of two ≥ 8")));
        }
        let coeffs = ModeCoefficients::from_samples(&samples, m / 2 - 1);
        Ok(Self { samples, coeffs })
    }

    pub fn from_fn(f: impl Fn(f64) -> Complex64, m: usize) -> Result<Self> {
        Self::from_samples((0..m).map(|j| f(2.0 * PI * j as f64 / m as f64)).collect())
    }

    pub fn from_coefficients(c: &ModeCoefficients, m: usize) -> Result<Self> {
        if 2 * c.n_max() >= m {
            return Err(Error::Invalid("too few samples for the modes".into()));
        }
        Self::from_samples(c.to_samples(m))
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn coefficients(&self) -> &ModeCoefficients {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest sample deviation after coefficients → samples.
    pub fn round_trip_error(&self) -> f64 {
        let back = self.coeffs.to_samples(self.len());
        back.iter().zip(&self.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::from_samples(self.samples.iter().map(|z| f(*z)).collect())
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.samples.iter().all(|z| z.im.abs() <= tol)
    }

    /// `(mean |f|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64).sqrt()
    }

    fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.len() as f64
    }

    fn every_other(&self) -> Vec<Complex64> {
        self.samples.iter().step_by(2).copied().collect()
    }
}

/// `(|c_0|² + Σ_{n≠0} |n| |c_n|²)^{1/2}`.
pub fn fourier_norm(c: &ModeCoefficients) -> f64 {
    (c.get(0).norm_sqr() + c.hs_norm(0.5, None).powi(2)).sqrt()
}

/// Periodic lag sums `h² Σ_{i≠j} |f_i − f_j|² / d(x_i, x_j)²`.
fn lag_sum(s: &[Complex64]) -> f64 {
    let m = s.len();
    let h = 2.0 * PI / m as f64;
    (1..m)
        .map(|u| {
            let d = h * u.min(m - u) as f64;
            let diff: f64 = (0..m).map(|i| (s[i] - s[(i + u) % m]).norm_sqr()).sum();
            diff / (d * d)
        })
        .sum::<f64>()
        * h
        * h
}

/// `∫_T∫_T |f(x) − f(y)|² / |x − y|² dx dy`, `|x − y|` the distance on the
/// circle. The diagonal cell is excluded, which costs `O(h)`; one
/// Richardson step against every other sample removes it.
pub fn double_integral(f: &CircleFunctionSamples) -> f64 {
    let fine = lag_sum(f.samples());
    let coarse = lag_sum(&f.every_other());
    2.0 * fine - coarse
}

/// `(|f̂(0)|² + ∫∫ |f(x) − f(y)|²/|x − y|²)^{1/2}`.
pub fn double_integral_norm(f: &CircleFunctionSamples) -> f64 {
    (f.mean().norm_sqr() + double_integral(f).max(0.0)).sqrt()
}

/// The double integral of `e^{iθ}`, which fixes the equivalence constant.
pub fn equivalence_constant(m: usize) -> Result<f64> {
    let e1 = CircleFunctionSamples::from_fn(|x| Complex64::from_polar(1.0, x), m)?;
    Ok(double_integral(&e1))
}

/// Fourier norm with the frozen constant on the oscillating part:
/// `(|c_0|² + κ Σ |n||c_n|²)^{1/2}`.
pub fn calibrated_fourier_norm(c: &ModeCoefficients, kappa: f64) -> f64 {
    (c.get(0).norm_sqr() + kappa * c.hs_norm(0.5, None).powi(2)).sqrt()
}

/// Ten test functions sampled at `m` points.
pub fn corpus(m: usize) -> Result<Vec<(String, CircleFunctionSamples)>> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws: Vec<Complex64> = (0..25).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let random = ModeCoefficients::from_fn(12, |n| draws[(n + 12) as usize] / (1.0 + n.unsigned_abs() as f64));
    let list: Vec<(&str, Box<dyn Fn(f64) -> Complex64>)> = vec![
        ("constant", Box::new(move |_| c(1.0))),
        ("exp_i_theta", Box::new(|x| Complex64::from_polar(1.0, x))),
        ("cos", Box::new(move |x| c(x.cos()))),
        ("shifted_sin2", Box::new(move |x| c(0.5 + (2.0 * x).sin()))),
        ("two_modes", Box::new(|x| Complex64::from_polar(1.0, 3.0 * x) + Complex64::from_polar(1.0, -5.0 * x))),
        ("sawtooth16", Box::new(move |x| c((1..=16).map(|n| (n as f64 * x).sin() / n as f64).sum()))),
        ("square31", Box::new(move |x| c((1..=31).step_by(2).map(|n| 4.0 * (n as f64 * x).sin() / (PI * n as f64)).sum()))),
        ("exp_cos", Box::new(move |x| c(x.cos().exp()))),
        ("poisson", Box::new(move |x| c(1.0 / (1.5 - x.cos())))),
        ("random12", Box::new(move |x| random.eval(x))),
    ];
    list.into_iter().map(|(n, f)| Ok((n.to_string(), CircleFunctionSamples::from_fn(f, m)?))).collect()
}

/// Both norms on a corpus, with the constant frozen on `e^{iθ}`: every
/// ratio must lie within `band` of 1.
pub fn equivalence_check(corpus: &[(String, CircleFunctionSamples)], band: f64) -> Result<BoundReport> {
    let m = corpus.first().map(|c| c.1.len()).ok_or_else(|| Error::Invalid("empty corpus".into()))?;
    let kappa = equivalence_constant(m)?;
    let ratios: Vec<f64> = corpus
        .par_iter()
        .map(|(_, f)| {
            let a = double_integral_norm(f);
            let b = calibrated_fourier_norm(f.coefficients(), kappa);
            if b == 0.0 {
                1.0
            } else {
                a / b
            }
        })
        .collect();
    let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let mut r = BoundReport::new("h_half_equivalence", worst, band, Status::from_bool(worst <= band)).with_constant(kappa);
    r.rows = ratios.iter().enumerate().map(|(i, q)| ReportRow { param: i as f64, lhs: *q, rhs: 1.0 }).collect();
    r.notes = corpus.iter().zip(&ratios).map(|((n, _), q)| format!("{n}: {q:.4}")).collect();
    Ok(r.with_tolerance("relative_band", band))
}

/// `log ‖e^{c f}‖₂` for each rung `c` against `C₂ ‖c f‖²_{H^{1/2}}`, with
/// `C₁ = 1` and `C₂` fitted on the smallest rung; enforced with a factor 2.
/// Also compares `‖fⁿ‖₂ ≤ (Cn)^{n/2}‖f‖ⁿ` at `n = 3` with the constant of
/// `n ≤ 2` (factor 2), `fⁿ` computed by direct convolution.
pub fn exp_map_bound_check(f: &CircleFunctionSamples, ladder: &[f64]) -> Result<BoundReport> {
    if ladder.is_empty() {
        return Err(Error::Invalid("empty ladder".into()));
    }
    let mut pts = Vec::new();
    for &c in ladder {
        let top = f.samples().iter().map(|z| c * z.re).fold(f64::NEG_INFINITY, f64::max);
        if top > 300.0 {
            return Err(Error::ExpOverflow(top));
        }
        let e = f.map(|z| (z * c).exp())?;
        let h2 = fourier_norm(&f.coefficients().scale(Complex64::new(c, 0.0))).powi(2);
        pts.push((c, e.l2_norm().ln(), h2));
    }
    let (_, l0, h0) = pts[0];
    let c2 = if h0 > 0.0 { (l0 / h0).max(0.0) } else { 0.0 };
    let worst = pts.iter().map(|(_, l, h)| l - 2.0 * c2 * h).fold(f64::NEG_INFINITY, f64::max);
    let mut env = BoundReport::new("exp_envelope", worst, 1e-12, Status::from_bool(worst <= 1e-12)).with_constant(c2);
    env.rows = pts.iter().map(|(c, l, h)| ReportRow { param: *c, lhs: *l, rhs: c2 * h }).collect();

    let norm = fourier_norm(f.coefficients());
    let mut powers = Vec::new();
    let mut p = f.coefficients().clone();
    let width = f.coefficients().n_max();
    for n in 1..=3u32 {
        if n > 1 {
            p = p.product(f.coefficients(), width * n as usize);
        }
        let c_n = if norm > 0.0 { (p.l2_norm() / norm.powi(n as i32)).powf(2.0 / n as f64) / n as f64 } else { 0.0 };
        powers.push(c_n);
    }
    let cal = powers[0].max(powers[1]);
    let power = BoundReport::new("power_route", powers[2], 2.0 * cal, Status::from_bool(powers[2] <= 2.0 * cal + 1e-12))
        .with_constant(cal)
        .with_note(format!("C_1 = {:.4}, C_2 = {:.4}, C_3 = {:.4}", powers[0], powers[1], powers[2]));
    Ok(BoundReport::combine("exp_map", vec![env, power]))
}

/// `‖e^{if} − 1‖_{H^{1/2}} ≲ ‖f‖_{H^{1/2}}` over `f ↦ εf`, constant fitted
/// on the smallest `ε` and enforced with a factor 2; continuity along
/// `f_n = f + n^{-1} cos 3θ` (distances decrease, slope in `1/n` within
/// 0.2 of 1); and the chord bound `|e^{if(x)} − e^{if(y)}| ≤ |f(x) − f(y)|`
/// on all sample pairs.
pub fn unimodular_exp_check(f: &CircleFunctionSamples, eps_ladder: &[f64], n_list: &[usize]) -> Result<BoundReport> {
    if !f.is_real(1e-12) {
        return Err(Error::Invalid("f must be real-valued".into()));
    }
    if eps_ladder.is_empty() || n_list.len() < 3 {
        return Err(Error::Invalid("need a nonempty ladder and at least three continuity steps".into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let fnorm = fourier_norm(f.coefficients());
    let kappa = equivalence_constant(f.len())?;
    let mut rows = Vec::new();
    let mut dual = Vec::new();
    for &e in eps_ladder {
        let g = f.map(|z| (i * e * z.re).exp() - 1.0)?;
        let lhs = fourier_norm(g.coefficients());
        rows.push(ReportRow { param: e, lhs, rhs: e * fnorm });
        dual.push(double_integral_norm(&g) / calibrated_fourier_norm(g.coefficients(), kappa).max(f64::MIN_POSITIVE));
    }
    let cal = if rows[0].rhs > 0.0 { rows[0].lhs / rows[0].rhs } else { 0.0 };
    let worst = rows.iter().filter(|r| r.rhs > 0.0).map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    let lip = BoundReport::new("lipschitz_at_zero", worst, 2.0 * cal, Status::from_bool(worst <= 2.0 * cal + 1e-12))
        .with_constant(cal)
        .with_rows(rows)
        .with_note(format!("double-integral / calibrated Fourier ratios {dual:.4?}"));

    let base = f.map(|z| (i * z.re).exp())?;
    let mut dists = Vec::new();
    for &n in n_list {
        let shifted = CircleFunctionSamples::from_samples(
            f.samples()
                .iter()
                .enumerate()
                .map(|(j, z)| {
                    let x = 2.0 * PI * j as f64 / f.len() as f64;
                    (i * (z.re + (3.0 * x).cos() / n as f64)).exp()
                })
                .collect(),
        )?;
        let diff = shifted.coefficients().sub(base.coefficients());
        dists.push(fourier_norm(&diff));
    }
    let inv: Vec<f64> = n_list.iter().map(|n| 1.0 / *n as f64).collect();
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    let cont = match ExponentFit::log_log(&inv, &dists) {
        Some(fit) => {
            let mut r = BoundReport::new("continuity", fit.slope, 1.0, Status::from_bool(decreasing && (fit.slope - 1.0).abs() <= 0.2));
            r.fit = Some(fit);
            r
        }
        None => BoundReport::new("continuity", 0.0, 1.0, Status::Fail).with_note("distances vanish"),
    };
    let cont = cont.with_rows(inv.iter().zip(&dists).map(|(x, d)| ReportRow { param: *x, lhs: *d, rhs: *x }).collect());

    let s = f.samples();
    let excess = (0..s.len())
        .into_par_iter()
        .map(|a| {
            (0..s.len())
                .map(|b| (Complex64::from_polar(1.0, s[a].re) - Complex64::from_polar(1.0, s[b].re)).norm() - (s[a].re - s[b].re).abs())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let chord = BoundReport::new("chord_bound", excess, 1e-14, Status::from_bool(excess <= 1e-14));
    Ok(BoundReport::combine("unimodular_exp", vec![lip, cont, chord]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_only_the_mean() {
        let f = CircleFunctionSamples::from_fn(|_| Complex64::new(2.0, 0.0), 64).unwrap();
        assert!((double_integral_norm(&f) - 2.0).abs() < 1e-12);
        assert!(f.round_trip_error() < 1e-12);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(CircleFunctionSamples::from_samples(vec![Complex64::new(0.0, 0.0); 12]).is_err());
    }

    #[test]
    fn first_mode_matches_the_sine_integral() {
        // 2π ∫_{-π}^{π} 4 sin²(u/2)/u² du = 8π (Si(π) − 2/π)
        let si_pi = 1.851_937_051_982_466_2;
        let exact = 8.0 * PI * (si_pi - 2.0 / PI);
        let k = equivalence_constant(512).unwrap();
        assert!((k - exact).abs() < 1e-3 * exact, "{k} vs {exact}");
    }

    #[test]
    fn zero_function_is_fixed_by_the_exponential() {
        let f = CircleFunctionSamples::from_fn(|_| Complex64::new(0.0, 0.0), 64).unwrap();
        let r = exp_map_bound_check(&f, &[1.0, 2.0]).unwrap();
        assert_eq!(r.status, Status::Pass);
    }

    fn bessel_i0(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= (x / 2.0).powi(2) / (k * k) as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn exp_of_cosine_matches_bessel() {
        // mean e^{2c cos θ} = I₀(2c)
        let f = CircleFunctionSamples::from_fn(|x| Complex64::new(x.cos(), 0.0), 128).unwrap();
        for c in [0.5, 1.0, 3.0] {
            let e = f.map(|z| (z * c).exp()).unwrap();
            let direct = e.l2_norm().ln();
            assert!((direct - 0.5 * bessel_i0(2.0 * c).ln()).abs() < 1e-12, "c = {c}");
        }
    }

    #[test]
    fn cube_by_convolution_matches_samples() {
        let f = CircleFunctionSamples::from_fn(|x| Complex64::new(x.cos() + 0.3 * (2.0 * x).sin(), 0.1), 64).unwrap();
        let c = f.coefficients();
        let cube = c.product(c, 62).product(c, 62);
        let pointwise = f.map(|z| z * z * z).unwrap();
        assert!((cube.l2_norm() - pointwise.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn corpus_norms_are_equivalent() {
        let r = equivalence_check(&corpus(256).unwrap(), 0.2).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
    }

    #[test]
    fn unimodular_checks_pass_for_a_trigonometric_polynomial() {
        let f = CircleFunctionSamples::from_fn(|x| Complex64::new(x.sin() - 0.5 * (2.0 * x).cos(), 0.0), 128).unwrap();
        let r = unimodular_exp_check(&f, &[0.25, 0.5, 1.0, 2.0], &[2, 4, 8, 16]).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
        assert!(unimodular_exp_check(&f.map(|z| z * Complex64::new(0.0, 1.0)).unwrap(), &[1.0], &[1, 2, 3]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn chord_never_exceeds_the_angle(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let chord = (Complex64::from_polar(1.0, a) - Complex64::from_polar(1.0, b)).norm();
            proptest::prop_assert!(chord <= (a - b).abs() + 1e-14);
        }

        #[test]
        fn samples_round_trip(coef in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let c = ModeCoefficients::from_fn(4, |n| Complex64::new(coef[(n + 4) as usize], 0.0));
            let f = CircleFunctionSamples::from_coefficients(&c, 32).unwrap();
            proptest::prop_assert!(f.round_trip_error() < 1e-10);
            proptest::prop_assert!((f.coefficients().sub(&c)).l2_norm() < 1e-10);
        }
    }
}
