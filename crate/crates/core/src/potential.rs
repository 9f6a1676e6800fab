//! Time-dependent Hermitian potentials `V(t)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::linalg::{CMatrix, ZERO};
use crate::numerics::quad;
use crate::profile::ScalarProfile;

/// A Hermitian matrix-valued function of time.
pub trait MatrixPotential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Dense sample `V(t)`.
    fn sample(&self, t: f64) -> CMatrix;

    /// `out = V(t) x`. The default goes through [`sample`](Self::sample).
    fn apply(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let v = self.sample(t);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..x.len()).map(|j| v[(i, j)] * x[j]).sum();
        }
    }

    /// Times where `V` is not smooth; integrators place grid nodes there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Time after which `V` vanishes identically, if known.
    fn support_end(&self) -> Option<f64> {
        None
    }

    /// Whether Hermiticity holds structurally, so samples need no check.
    fn hermitian_by_construction(&self) -> bool {
        false
    }

    /// Whether all diagonal entries vanish identically.
    fn diagonal_free(&self) -> bool {
        false
    }

    /// Upper bound for `‖V(t)‖`, used to size steps.
    fn norm_bound(&self, t: f64) -> f64 {
        self.sample(t).norm()
    }

    /// `∫_a^b |V_{kl}(τ)|² dτ`.
    fn entry_l2_squared(&self, k: usize, l: usize, a: f64, b: f64) -> f64 {
        let mut nodes = vec![a];
        nodes.extend(self.breakpoints().into_iter().filter(|t| *t > a && *t < b));
        nodes.push(b);
        nodes.sort_by(f64::total_cmp);
        quad::composite(&nodes, 0.25, |t| self.sample(t)[(k, l)].norm_sqr())
    }
}

/// Shared handle to a potential.
pub type PotentialRef = Arc<dyn MatrixPotential>;

/// One Hermitian coupling: `V[row][col] = profile`, `V[col][row] = conj`.
/// Diagonal couplings must be real-valued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub row: usize,
    pub col: usize,
    pub profile: ScalarProfile,
}

/// Sparse Hermitian potential assembled from scalar profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseHermitian {
    pub dim: usize,
    pub couplings: Vec<Coupling>,
}

impl SparseHermitian {
    pub fn new(dim: usize, couplings: Vec<Coupling>) -> Self {
        for c in &couplings {
            assert!(c.row < dim && c.col < dim, "coupling index outside dimension");
        }
        Self { dim, couplings }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, couplings: Vec::new() }
    }

    /// Toeplitz potential `V_{ij} = q_{i-j}` with `q_{-d} = conj(q_d)` and
    /// `q_0 = 0`; `symbols[d-1]` is `q_d`.
    pub fn toeplitz(dim: usize, symbols: &[ScalarProfile]) -> Self {
        let mut couplings = Vec::new();
        for (d0, q) in symbols.iter().enumerate() {
            let d = d0 + 1;
            if q.is_zero() {
                continue;
            }
            for j in 0..dim.saturating_sub(d) {
                couplings.push(Coupling { row: j + d, col: j, profile: q.clone() });
            }
        }
        Self { dim, couplings }
    }

    /// Single coupling between `i` and `j`.
    pub fn pair(dim: usize, i: usize, j: usize, q: ScalarProfile) -> Self {
        Self::new(dim, vec![Coupling { row: i, col: j, profile: q }])
    }

    /// Same potential multiplied by a real constant.
    pub fn scaled(&self, a: f64) -> Self {
        let c = Complex64::new(a, 0.0);
        Self {
            dim: self.dim,
            couplings: self
                .couplings
                .iter()
                .map(|cp| Coupling { row: cp.row, col: cp.col, profile: cp.profile.scaled(c) })
                .collect(),
        }
    }
}

impl MatrixPotential for SparseHermitian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, t: f64) -> CMatrix {
        let mut v = CMatrix::zeros(self.dim, self.dim);
        for c in &self.couplings {
            let q = c.profile.eval(t);
            if c.row == c.col {
                v[(c.row, c.row)] += Complex64::new(q.re, 0.0);
            } else {
                v[(c.row, c.col)] += q;
                v[(c.col, c.row)] += q.conj();
            }
        }
        v
    }

    fn apply(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for c in &self.couplings {
            let q = c.profile.eval(t);
            if c.row == c.col {
                out[c.row] += x[c.row] * q.re;
            } else {
                out[c.row] += q * x[c.col];
                out[c.col] += q.conj() * x[c.row];
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.couplings.iter().flat_map(|c| c.profile.breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn support_end(&self) -> Option<f64> {
        self.couplings.iter().map(|c| c.profile.support_end()).try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))
    }

    fn hermitian_by_construction(&self) -> bool {
        true
    }

    fn diagonal_free(&self) -> bool {
        self.couplings.iter().all(|c| c.row != c.col || c.profile.is_zero())
    }

    fn norm_bound(&self, t: f64) -> f64 {
        // Gershgorin-type bound: every coupling counted on both rows.
        let mut rows = vec![0.0; self.dim];
        for c in &self.couplings {
            let q = c.profile.eval(t).norm();
            rows[c.row] += q;
            if c.row != c.col {
                rows[c.col] += q;
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    fn entry_l2_squared(&self, k: usize, l: usize, a: f64, b: f64) -> f64 {
        let matching: Vec<&Coupling> =
            self.couplings.iter().filter(|c| (c.row, c.col) == (k, l) || (c.row, c.col) == (l, k)).collect();
        match matching.as_slice() {
            [] => 0.0,
            [one] => one.profile.l2_squared(a, b),
            _ => {
                let mut nodes = vec![a];
                nodes.extend(self.breakpoints().into_iter().filter(|t| *t > a && *t < b));
                nodes.push(b);
                quad::composite(&nodes, 0.25, |t| self.sample(t)[(k, l)].norm_sqr())
            }
        }
    }
}

/// Constant matrices on consecutive cells `[0, e_0), [e_0, e_1), …`; zero after
/// the last cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub ends: Vec<f64>,
    pub values: Vec<CMatrix>,
}

impl PiecewiseConstant {
    pub fn new(ends: Vec<f64>, values: Vec<CMatrix>) -> Self {
        assert_eq!(ends.len(), values.len());
        assert!(!values.is_empty());
        assert!(ends.windows(2).all(|w| w[1] > w[0]) && ends[0] > 0.0);
        Self { ends, values }
    }
}

impl MatrixPotential for PiecewiseConstant {
    fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    fn sample(&self, t: f64) -> CMatrix {
        if t >= 0.0 {
            for (e, v) in self.ends.iter().zip(&self.values) {
                if t < *e {
                    return v.clone();
                }
            }
        }
        CMatrix::zeros(self.dim(), self.dim())
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.ends.clone()
    }

    fn support_end(&self) -> Option<f64> {
        self.ends.last().copied()
    }
}

/// Potential given by a closure.
pub struct FnPotential<F> {
    dim: usize,
    f: F,
    breakpoints: Vec<f64>,
}

impl<F: Fn(f64) -> CMatrix + Send + Sync> FnPotential<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }
}

impl<F> fmt::Debug for FnPotential<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPotential").field("dim", &self.dim).finish()
    }
}

impl<F: Fn(f64) -> CMatrix + Send + Sync> MatrixPotential for FnPotential<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, t: f64) -> CMatrix {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// The 2×2 potential `[[0, q], [conj q, 0]]` of the model systems.
pub fn two_by_two(q: ScalarProfile) -> SparseHermitian {
    SparseHermitian::pair(2, 0, 1, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::hermitian_defect;

    #[test]
    fn toeplitz_layout() {
        let q1 = ScalarProfile::Constant { amp: Complex64::new(1.0, 2.0) };
        let q2 = ScalarProfile::constant(3.0);
        let v = SparseHermitian::toeplitz(4, &[q1, q2]).sample(0.0);
        assert_eq!(v[(1, 0)], Complex64::new(1.0, 2.0));
        assert_eq!(v[(0, 1)], Complex64::new(1.0, -2.0));
        assert_eq!(v[(3, 1)], Complex64::new(3.0, 0.0));
        assert_eq!(v[(0, 0)], ZERO);
        assert_eq!(v[(3, 0)], ZERO);
        assert_eq!(hermitian_defect(&v), 0.0);
    }

    #[test]
    fn sparse_apply_matches_dense() {
        let v = SparseHermitian::toeplitz(
            5,
            &[ScalarProfile::power(0.4, 0.9), ScalarProfile::exponential(Complex64::new(0.1, 0.3), 0.5)],
        );
        let x: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut out = vec![ZERO; 5];
        v.apply(1.3, &x, &mut out);
        let dense = v.sample(1.3) * nalgebra::DVector::from_vec(x);
        for i in 0..5 {
            assert!((out[i] - dense[i]).norm() < 1e-14);
        }
        assert!(v.norm_bound(1.3) >= crate::numerics::linalg::op_norm(&v.sample(1.3)));
    }

    #[test]
    fn entry_l2_uses_closed_form() {
        let v = SparseHermitian::pair(3, 0, 1, ScalarProfile::indicator(Complex64::new(0.2, 0.0), 0.0, 1.0));
        assert!((v.entry_l2_squared(1, 0, 0.0, 5.0) - 0.04).abs() < 1e-15);
        assert_eq!(v.entry_l2_squared(2, 0, 0.0, 5.0), 0.0);
        assert_eq!(v.support_end(), Some(1.0));
        assert!(v.diagonal_free());
    }

    #[test]
    fn piecewise_constant_cells() {
        let a = CMatrix::identity(2, 2);
        let p = PiecewiseConstant::new(vec![1.0, 2.0], vec![a.clone(), a.clone() * Complex64::new(2.0, 0.0)]);
        assert_eq!(p.sample(0.5), a);
        assert_eq!(p.sample(1.5)[(0, 0)].re, 2.0);
        assert_eq!(p.sample(2.5)[(0, 0)].re, 0.0);
    }
}
