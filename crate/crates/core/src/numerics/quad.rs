use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 8-point rule.
    pub fn eight() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(8))
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<T, F>(&self, a: f64, b: f64, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(f64) -> T,
    {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + r * x) * (w * r);
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre over `nodes`, each cell split so that no
/// sub-cell exceeds `max_step`.
pub fn composite<T, F>(nodes: &[f64], max_step: f64, f: F) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    F: Fn(f64) -> T,
{
    let gl = GaussLegendre::eight();
    let mut acc = T::default();
    for w in nodes.windows(2) {
        let m = ((w[1] - w[0]) / max_step).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / m as f64;
        for i in 0..m {
            let a = w[0] + h * i as f64;
            acc = acc + gl.integrate(a, a + h, &f);
        }
    }
    acc
}

/// Composite trapezoid on `cells` equal cells with a Richardson correction
/// against the half-resolution rule. Returns `(estimate, error_estimate)`.
pub fn trapezoid_richardson<F: Fn(f64) -> f64>(a: f64, b: f64, cells: usize, f: F) -> (f64, f64) {
    let cells = cells.max(2) & !1;
    let h = (b - a) / cells as f64;
    let vals: Vec<f64> = (0..=cells).map(|i| f(a + h * i as f64)).collect();
    let fine = h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[cells]));
    let coarse = 2.0 * h * (vals.iter().step_by(2).sum::<f64>() - 0.5 * (vals[0] + vals[cells]));
    let est = fine + (fine - coarse) / 3.0;
    (est, (fine - coarse).abs() / 3.0)
}

/// `∫_a^b f(τ) e^{-ikτ} dτ` with cells short enough to resolve the phase.
pub fn oscillatory<F: Fn(f64) -> Complex64>(a: f64, b: f64, k: f64, f: F) -> Complex64 {
    let step = if k == 0.0 { b - a } else { (1.0 / k.abs()).min(b - a) };
    composite(&[a, b], step.max(1e-300), |t| f(t) * Complex64::from_polar(1.0, -k * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_degree_fifteen() {
        let gl = GaussLegendre::new(8);
        let s: f64 = gl.integrate(0.0, 1.0, |x: f64| x.powi(15));
        assert!((s - 1.0 / 16.0).abs() < 1e-15);
        let total: f64 = gl.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rule_has_zero_node() {
        let gl = GaussLegendre::new(5);
        assert!(gl.nodes[2].abs() < 1e-15);
        let s: f64 = gl.integrate(-1.0, 1.0, |x: f64| x * x);
        assert!((s - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_richardson_on_smooth_function() {
        let (v, err) = trapezoid_richardson(0.0, PI, 512, f64::sin);
        assert!((v - 2.0).abs() < 1e-8);
        assert!(err < 1e-5 && err > (v - 2.0).abs());
    }

    #[test]
    fn oscillatory_matches_closed_form() {
        let k = 7.0;
        let got = oscillatory(0.0, 3.0, k, |t| Complex64::new((-t).exp(), 0.0));
        let z = Complex64::new(-1.0, -k);
        let want = ((z * 3.0).exp() - 1.0) / z;
        assert!((got - want).norm() < 1e-12);
    }
}
