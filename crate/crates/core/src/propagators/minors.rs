//! Leading principal minors `Δ_j(t, k) = det X_j(t, k)` through the
//! exterior-power flow.
//!
//! The column `e_1 ∧ … ∧ e_j` of `Λ^j X` solves `w' = i(kΣ + D_j(V))w`, with
//! `Σ = diag(σ_J)`, `σ_J = Σ_{i∈J} λ_i`, and `D_j(V)` the derived action of
//! `V` on `Λ^j C^N`. Integrating `w̃ = e^{-ikσ_I t} w` for `I = {1..j}` keeps
//! the flow contractive for `Im k > 0`, so `Δ_j = e^{ikσ_I t} w̃_I` is
//! obtained without under- or overflow even when `e^{-σ_I y t}` is tiny.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::{evolve, EvolveOptions, Generator};
use crate::error::{Error, Result};
use crate::numerics::grid::TimeGrid;
use crate::numerics::linalg::{CMatrix, ZERO};
use crate::potential::{MatrixPotential, PotentialRef};
use crate::report::{BoundReport, ReportRow, Status};

/// `j`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(j);
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < j - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, j, cur, out);
            cur.pop();
        }
    }
    rec(0, n, j, &mut cur, &mut out);
    out
}

/// `D_j(V(t))` on the basis `e_J`, `J` from [`subsets`].
#[derive(Debug)]
pub struct CompoundPotential {
    base: PotentialRef,
    sets: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl CompoundPotential {
    pub fn new(base: PotentialRef, j: usize) -> Self {
        let sets = subsets(base.dim(), j);
        let index = sets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { base, sets, index }
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }
}

impl MatrixPotential for CompoundPotential {
    fn dim(&self) -> usize {
        self.sets.len()
    }

    fn sample(&self, t: f64) -> CMatrix {
        let v = self.base.sample(t);
        let n = v.nrows();
        let d = self.sets.len();
        let mut out = CMatrix::zeros(d, d);
        for (col, set) in self.sets.iter().enumerate() {
            for &i in set {
                out[(col, col)] += v[(i, i)];
            }
            // Replace i by m: e_{J with i→m}, reordered with a sign.
            for (p, &i) in set.iter().enumerate() {
                for m in 0..n {
                    if set.contains(&m) || v[(m, i)] == ZERO {
                        continue;
                    }
                    let mut target: Vec<usize> = set.clone();
                    target[p] = m;
                    let between = set.iter().filter(|&&s| s != i && (s > i.min(m) && s < i.max(m))).count();
                    target.sort_unstable();
                    let row = self.index[&target];
                    let sign = if between % 2 == 0 { 1.0 } else { -1.0 };
                    out[(row, col)] += v[(m, i)] * sign;
                }
            }
        }
        out
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }

    fn support_end(&self) -> Option<f64> {
        self.base.support_end()
    }

    fn hermitian_by_construction(&self) -> bool {
        self.base.hermitian_by_construction()
    }

    fn norm_bound(&self, t: f64) -> f64 {
        // Each column receives at most j replacements of a bounded row.
        self.base.norm_bound(t) * self.sets.first().map_or(1, |s| s.len().max(1)) as f64
    }
}

/// Generator of `w̃` for the minor of order `j` (1-based).
pub fn compound_generator(g: &Generator, j: usize) -> Result<Generator> {
    if j == 0 || j > g.dim() {
        return Err(Error::Invalid(format!("minor order {j} outside 1..={}", g.dim())));
    }
    let cp = CompoundPotential::new(g.potential().clone(), j);
    let shift: f64 = g.lambdas()[..j].iter().sum();
    let lambdas = cp.sets().iter().map(|s| s.iter().map(|&i| g.lambdas()[i]).sum::<f64>() - shift).collect();
    Generator::unordered(lambdas, Arc::new(cp))
}

/// `w̃_I(T)` with `Δ_j(T,k) = e^{ikσ_I T} w̃_I(T)`; `j = 0` gives 1.
pub fn reduced_minor(g: &Generator, j: usize, k: Complex64, t: f64, opts: &EvolveOptions) -> Result<Complex64> {
    if j == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let cg = compound_generator(g, j)?;
    let grid = TimeGrid::new(vec![0.0, t])?;
    let x = evolve(&cg, k, &grid, opts)?;
    Ok(x.last()[(0, 0)])
}

/// `Δ_j(T, k)`.
pub fn minor(g: &Generator, j: usize, k: Complex64, t: f64, opts: &EvolveOptions) -> Result<Complex64> {
    let sigma: f64 = g.lambdas()[..j].iter().sum();
    Ok((Complex64::i() * k * sigma * t).exp() * reduced_minor(g, j, k, t, opts)?)
}

/// `ln |Δ_j(T, k)|`, finite even where `Δ_j` itself underflows.
pub fn ln_abs_minor(g: &Generator, j: usize, k: Complex64, t: f64, opts: &EvolveOptions) -> Result<f64> {
    let w = reduced_minor(g, j, k, t, opts)?;
    if w.norm() == 0.0 || !w.norm().is_finite() {
        return Err(Error::Underflow(k.im));
    }
    let sigma: f64 = g.lambdas()[..j].iter().sum();
    Ok(w.norm().ln() - k.im * sigma * t)
}

/// `Σ_{k≤j<l} |λ_l − λ_k|^{-1} ∫_0^T |V_kl|²` with 1-based `j`.
pub fn interaction_sum(g: &Generator, j: usize, t: f64) -> Result<f64> {
    let lam = g.lambdas();
    let mut s = 0.0;
    for k in 0..j {
        for l in j..g.dim() {
            let gap = (lam[l] - lam[k]).abs();
            let mass = g.potential().entry_l2_squared(k, l, 0.0, t);
            if mass == 0.0 {
                continue;
            }
            if gap == 0.0 {
                return Err(Error::GapViolated { i: k + 1, j: l + 1 });
            }
            s += mass / gap;
        }
    }
    Ok(s)
}

/// Large-`Im k` expansion of `ln Δ_j(T, iy)`: the coefficient
/// `c(y) = y(ln|Δ_j| + σ_j yT)` is compared with the double sum
/// `−Σ |λ_l−λ_k|^{-1}∫|V_kl|²`. Passes when the two largest `y` both give
/// `c(y)` within 10% of the formula.
pub fn complex_k_expansion_check(g: &Generator, j: usize, t: f64, ys: &[f64], opts: &EvolveOptions) -> Result<BoundReport> {
    if ys.len() < 2 || ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("expansion check needs at least two increasing y".into()));
    }
    let predicted = -interaction_sum(g, j, t)?;
    let sigma: f64 = g.lambdas()[..j].iter().sum();
    let mut rows = Vec::new();
    for &y in ys {
        let l = ln_abs_minor(g, j, Complex64::new(0.0, y), t, opts)?;
        rows.push(ReportRow { param: y, lhs: y * (l + sigma * y * t), rhs: predicted });
    }
    let tail = &rows[rows.len() - 2..];
    let ok = tail.iter().all(|r| {
        if predicted == 0.0 {
            r.lhs.abs() <= 1e-9
        } else {
            (r.lhs - predicted).abs() <= 0.1 * predicted.abs()
        }
    });
    let last = rows[rows.len() - 1];
    let mut rep = BoundReport::new("complex_k_expansion", last.lhs, predicted, Status::from_bool(ok))
        .with_constant(last.lhs)
        .with_rows(rows)
        .with_tolerance("relative", 0.1);
    rep.meta.t_max = Some(t);
    rep.meta.n_max = Some(g.dim());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::SparseHermitian;
    use crate::profile::ScalarProfile;

    fn toeplitz4(a: f64) -> Generator {
        let v = SparseHermitian::toeplitz(4, &[ScalarProfile::power(a, 1.0), ScalarProfile::exponential(Complex64::new(0.0, 0.05), 0.2)]);
        Generator::from_potential(vec![0.0, 1.0, 4.0, 9.0], v).unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn compound_of_constant_matrix_matches_minors() {
        // For constant V and k = 0, Λ^j exp(iV) = exp(i D_j(V)); compare the
        // (I, I) entry with the leading minor of exp(iV).
        let v = SparseHermitian::toeplitz(4, &[ScalarProfile::constant(0.3), ScalarProfile::Constant { amp: Complex64::new(0.1, 0.2) }]);
        let vm = v.sample(0.0);
        let x = crate::numerics::linalg::exp_i_hermitian(&vm);
        for j in 1..=3 {
            let d = CompoundPotential::new(Arc::new(v.clone()), j).sample(0.0);
            assert!(crate::numerics::linalg::hermitian_defect(&d) < 1e-15);
            let w = crate::numerics::linalg::exp_i_hermitian(&d);
            let det = x.view((0, 0), (j, j)).determinant();
            assert!((w[(0, 0)] - det).norm() < 1e-12, "j = {j}");
        }
    }

    #[test]
    fn minors_match_direct_determinants() {
        let g = toeplitz4(0.2);
        let opts = EvolveOptions::default();
        for k in [Complex64::new(0.7, 0.0), Complex64::new(0.3, 0.8)] {
            let x = evolve(&g, k, &TimeGrid::new(vec![0.0, 3.0]).unwrap(), &opts).unwrap();
            for j in 1..=3 {
                let direct = x.last().view((0, 0), (j, j)).determinant();
                let via = minor(&g, j, k, 3.0, &opts).unwrap();
                assert!((direct - via).norm() < 1e-8, "k = {k}, j = {j}");
            }
        }
    }

    #[test]
    fn free_minor_is_exact_phase() {
        let g = Generator::from_potential(vec![0.0, 1.0, 4.0], SparseHermitian::zero(3)).unwrap();
        let y = 200.0;
        let l = ln_abs_minor(&g, 2, Complex64::new(0.0, y), 1.0, &EvolveOptions::default()).unwrap();
        assert!((l + y).abs() < 1e-12);
    }

    #[test]
    fn expansion_for_single_pair() {
        let q = ScalarProfile::indicator(Complex64::new(0.2, 0.0), 0.0, 1.0);
        let g = Generator::from_potential(vec![0.0, 1.0, 4.0], SparseHermitian::pair(3, 0, 1, q)).unwrap();
        let rep = complex_k_expansion_check(&g, 1, 2.0, &[50.0, 100.0, 200.0], &EvolveOptions::default()).unwrap();
        assert!((rep.rhs + 0.04).abs() < 1e-15);
        assert!(rep.passed(), "{rep:?}");
        let rep2 = complex_k_expansion_check(&g, 2, 2.0, &[50.0, 100.0, 200.0], &EvolveOptions::default()).unwrap();
        assert_eq!(rep2.rhs, 0.0);
        assert!(rep2.passed(), "{rep2:?}");
    }
}
