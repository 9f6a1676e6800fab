use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing sample times. The first node is the initial time of
/// the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    refinement_level: u32,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Invalid("time grid needs at least one node".into()));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("time grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes, refinement_level: 0 })
    }

    /// `cells` equal intervals between `t0` and `t1`.
    pub fn uniform(t0: f64, t1: f64, cells: usize) -> Self {
        assert!(t1 > t0 && cells > 0, "uniform grid needs t1 > t0 and at least one cell");
        let h = (t1 - t0) / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|i| t0 + h * i as f64).collect();
        nodes[cells] = t1;
        Self { nodes, refinement_level: 0 }
    }

    /// Grid through the given breakpoints, with cells no longer than `max_step`.
    pub fn through(points: &[f64], max_step: f64) -> Result<Self> {
        let base = Self::new(points.to_vec())?;
        let mut nodes = vec![base.nodes[0]];
        for w in base.nodes.windows(2) {
            let n = ((w[1] - w[0]) / max_step).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / n as f64;
            for i in 1..n {
                nodes.push(w[0] + h * i as f64);
            }
            nodes.push(w[1]);
        }
        Ok(Self { nodes, refinement_level: 0 })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn refinement_level(&self) -> u32 {
        self.refinement_level
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Inserts every cell midpoint; same endpoints, node count doubles.
    pub fn refine(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.end());
        Self { nodes, refinement_level: self.refinement_level + 1 }
    }

    /// Splits every cell until none is longer than `max_step`.
    pub fn with_max_step(&self, max_step: f64) -> Self {
        let mut g = Self::through(&self.nodes, max_step).expect("grid nodes already validated");
        g.refinement_level = self.refinement_level;
        g
    }
}

/// Coupling samples with quadrature weights.
///
/// Real grids use the midpoint rule on `[-K_max, K_max]` (or a sub-interval),
/// so `k = 0` is never sampled and the weights sum to the interval length.
/// Imaginary grids carry no weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    samples: Vec<f64>,
    weights: Vec<f64>,
    truncation_radius: f64,
    imaginary: bool,
}

impl KGrid {
    /// `n` midpoint cells on `[-k_max, k_max]`.
    pub fn symmetric(k_max: f64, n: usize) -> Self {
        Self::interval(-k_max, k_max, n)
    }

    /// `n` midpoint cells on `[a, b]`.
    pub fn interval(a: f64, b: f64, n: usize) -> Self {
        assert!(b > a && n > 0, "k interval needs b > a and n > 0");
        let h = (b - a) / n as f64;
        let samples = (0..n).map(|i| a + h * (i as f64 + 0.5)).collect();
        Self { samples, weights: vec![h; n], truncation_radius: a.abs().max(b.abs()), imaginary: false }
    }

    /// Midpoint cells of width at most `dk` on `[-k_max, k_max]`.
    pub fn symmetric_with_step(k_max: f64, dk: f64) -> Self {
        let n = ((2.0 * k_max / dk).ceil() as usize).max(1);
        Self::symmetric(k_max, n)
    }

    /// Purely imaginary couplings `k = i y`, used pointwise.
    pub fn imaginary(ys: Vec<f64>) -> Self {
        let r = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        Self { samples: ys, weights: Vec::new(), truncation_radius: r, imaginary: true }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn is_imaginary(&self) -> bool {
        self.imaginary
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Weighted sum of values sampled on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.samples.len());
        assert!(!self.imaginary, "imaginary grids carry no weights");
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Same as [`integrate`](Self::integrate) restricted to `|k| <= radius`.
    pub fn integrate_within(&self, values: &[f64], radius: f64) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .zip(&self.samples)
            .filter(|(_, k)| k.abs() <= radius)
            .map(|((v, w), _)| v * w)
            .sum()
    }

    /// Integral over the grid together with a tail estimate obtained by
    /// comparing the full radius with half of it (mass decaying like `1/k^2`
    /// beyond the radius equals the mass between `K/2` and `K`).
    pub fn integrate_with_tail(&self, values: &[f64]) -> (f64, f64) {
        let full = self.integrate(values);
        let half = self.integrate_within(values, 0.5 * self.truncation_radius);
        (full, full - half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_doubles_cells_between_same_endpoints() {
        let g = TimeGrid::uniform(0.0, 2.0, 4);
        let r = g.refine();
        assert_eq!(r.len(), 9);
        assert_eq!(r.start(), 0.0);
        assert_eq!(r.end(), 2.0);
        assert_eq!(r.refinement_level(), 1);
        assert!(r.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_non_increasing_nodes() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![]).is_err());
    }

    #[test]
    fn through_keeps_breakpoints() {
        let g = TimeGrid::through(&[0.0, 1.0, 5.0], 0.3).unwrap();
        assert!(g.nodes().contains(&1.0));
        assert!(g.max_step() <= 0.3 + 1e-12);
        assert_eq!(g.end(), 5.0);
    }

    #[test]
    fn uniform_k_weights_sum_to_interval_length() {
        let g = KGrid::symmetric(60.0, 1200);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 120.0).abs() < 1e-9);
        assert!(g.samples().iter().all(|k| *k != 0.0));
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn imaginary_grid_has_no_weights() {
        let g = KGrid::imaginary(vec![50.0, 100.0]);
        assert!(g.weights().is_empty());
        assert!(g.is_imaginary());
    }
}
