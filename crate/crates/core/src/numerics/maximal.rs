use num_complex::Complex64;

use super::grid::TimeGrid;
use super::quad::GaussLegendre;
use crate::error::{Error, Result};

const MAX_LEVELS: usize = 8;
const REL_TOL: f64 = 1e-6;
/// Cells the scan starts from at least; a coarser grid can hide several
/// local maxima of `|F|` inside one cell, and refinement then stalls early.
const MIN_CELLS: usize = 32;

/// `sup_t |∫_{t0}^t f(τ) e^{-ikτ} dτ|` over the span of `grid`.
///
/// Each cell is integrated with Gauss-Legendre (split so that `h|k| ≤ 1`);
/// interior maxima are located by bisection on the derivative of `|F|²`,
/// which is `2 Re(conj(F) f e^{-ikt})`. The grid is refined dyadically until
/// the supremum moves by less than 1e-6 relative, starting from at least
/// [`MIN_CELLS`] cells with `h|k| ≤ 1`.
pub fn maximal_partial_integral<F>(f: F, k: f64, grid: &TimeGrid) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let mut g = grid.clone();
    let widest = |g: &TimeGrid| g.nodes().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    while g.nodes().len() <= MIN_CELLS || widest(&g) * k.abs() > 1.0 {
        g = g.refine();
    }
    let mut prev = prefix_sup(&f, k, &g);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_LEVELS {
        g = g.refine();
        let next = prefix_sup(&f, k, &g);
        change = (next - prev).abs();
        let done = change <= REL_TOL * next.max(f64::MIN_POSITIVE) || next == 0.0;
        prev = prev.max(next);
        if done {
            return Ok(prev);
        }
    }
    Err(Error::MaximalNotConverged { levels: MAX_LEVELS, estimate: prev, change })
}

fn prefix_sup<F: Fn(f64) -> Complex64>(f: &F, k: f64, grid: &TimeGrid) -> f64 {
    let gl = GaussLegendre::eight();
    let integrand = |t: f64| f(t) * Complex64::from_polar(1.0, -k * t);
    let piece = |a: f64, b: f64| -> Complex64 {
        let m = ((b - a) * k.abs()).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        (0..m).map(|i| gl.integrate(a + h * i as f64, a + h * (i + 1) as f64, integrand)).sum()
    };
    let slope = |big_f: Complex64, t: f64| (big_f.conj() * integrand(t)).re;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut best = 0.0f64;
    for w in grid.nodes().windows(2) {
        let (a, b) = (w[0], w[1]);
        let end = acc + piece(a, b);
        // Nudge inside the cell so one-sided values at breakpoints are used.
        let eps = 1e-12 * (b - a);
        if slope(acc, a + eps) > 0.0 && slope(end, b - eps) < 0.0 {
            let (mut lo, mut hi) = (a, b);
            let mut f_lo = acc;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let f_mid = f_lo + piece(lo, mid);
                if slope(f_mid, mid) > 0.0 {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * (1.0 + b.abs()) {
                    break;
                }
            }
            best = best.max(f_lo.norm());
        }
        acc = end;
        best = best.max(acc.norm());
    }
    best
}

/// Weak-L¹ quasinorm `sup_λ λ·|{|h| > λ}|` of samples with quadrature
/// weights. The supremum over all levels is attained at a sample value, so
/// it is evaluated exactly over those.
pub fn weak_l1_quasinorm(values: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(values.len(), weights.len());
    let mut pairs: Vec<(f64, f64)> = values.iter().map(|v| v.abs()).zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut mass = 0.0;
    let mut best = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let level = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == level {
            mass += pairs[i].1;
            i += 1;
        }
        best = best.max(level * mass);
    }
    best
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::numerics::grid::KGrid;

    fn one(_: f64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn zero_function() {
        let g = TimeGrid::uniform(0.0, 1.0, 4);
        assert_eq!(maximal_partial_integral(|_| Complex64::new(0.0, 0.0), 3.0, &g).unwrap(), 0.0);
    }

    #[test]
    fn ramp_at_zero_frequency() {
        let g = TimeGrid::uniform(0.0, 1.0, 4);
        assert!((maximal_partial_integral(one, 0.0, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_period_sup_is_one_over_pi() {
        // |(1 - e^{-2πit}) / 2π| peaks at t = 1/2, strictly inside the
        // coarse grid's only cell.
        let g = TimeGrid::uniform(0.0, 1.0, 1);
        let m = maximal_partial_integral(one, 2.0 * PI, &g).unwrap();
        assert!((m - 0.31830988618379067154).abs() < 1e-12, "{m}");
    }

    #[test]
    fn bounded_by_l1_norm() {
        let g = TimeGrid::uniform(0.0, 10.0, 10);
        let f = |t: f64| Complex64::new((1.0 + t).powf(-0.8), 0.0);
        let m = maximal_partial_integral(f, 1.3, &g).unwrap();
        let l1 = (11f64.powf(0.2) - 1.0) / 0.2;
        assert!(m <= l1);
        assert!(m > 0.5);
    }

    #[test]
    fn weak_l1_of_indicator_and_hyperbola() {
        assert_eq!(weak_l1_quasinorm(&[0.0; 5], &[1.0; 5]), 0.0);
        let g = KGrid::interval(0.0, 10.0, 100);
        let vals: Vec<f64> = g.samples().iter().map(|k| if *k < 3.0 { 2.5 } else { 0.0 }).collect();
        assert!((weak_l1_quasinorm(&vals, g.weights()) - 7.5).abs() < 0.25);
        let g = KGrid::symmetric(50.0, 20000);
        let vals: Vec<f64> = g.samples().iter().map(|k| (1.0 / k.abs()).min(2.0)).collect();
        assert!((weak_l1_quasinorm(&vals, g.weights()) - 2.0).abs() < 0.01);
    }
}
