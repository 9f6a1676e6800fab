//! Evolution of `X_t = i(kΛ + V(t))X` and the model systems built on it.

pub mod bvp;
pub mod krein;
pub mod minors;
pub mod pair;
pub mod recursion;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::grid::TimeGrid;
use crate::numerics::linalg::{self, CMatrix, I, ZERO};
use crate::potential::{MatrixPotential, PotentialRef};

/// Frequencies `Λ = diag(λ_1, …, λ_N)` together with a potential `V(t)`.
#[derive(Debug, Clone)]
pub struct Generator {
    lambdas: Vec<f64>,
    potential: PotentialRef,
    diagonal_zeroed: bool,
}

impl Generator {
    /// Requires nondecreasing frequencies.
    pub fn new(lambdas: Vec<f64>, potential: PotentialRef) -> Result<Self> {
        if !lambdas.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Invalid("frequencies must be nondecreasing".into()));
        }
        Self::unordered(lambdas, potential)
    }

    /// Same as [`new`](Self::new) without the ordering requirement; used for
    /// derived systems such as exterior powers.
    pub fn unordered(lambdas: Vec<f64>, potential: PotentialRef) -> Result<Self> {
        if lambdas.len() != potential.dim() {
            return Err(Error::Invalid(format!(
                "{} frequencies for a {}-dimensional potential",
                lambdas.len(),
                potential.dim()
            )));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Invalid("frequencies must be finite".into()));
        }
        let diagonal_zeroed = potential.diagonal_free();
        Ok(Self { lambdas, potential, diagonal_zeroed })
    }

    pub fn from_potential(lambdas: Vec<f64>, potential: impl MatrixPotential + 'static) -> Result<Self> {
        Self::new(lambdas, Arc::new(potential))
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn potential(&self) -> &PotentialRef {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn diagonal_zeroed(&self) -> bool {
        self.diagonal_zeroed
    }

    /// Whether `λ` is nondecreasing.
    pub fn is_sorted(&self) -> bool {
        self.lambdas.windows(2).all(|w| w[0] <= w[1])
    }

    /// `kΛ + V(t)`.
    pub fn hamiltonian(&self, k: Complex64, t: f64) -> Result<CMatrix> {
        let mut h = self.potential.sample(t);
        if !self.potential.hermitian_by_construction() {
            let d = linalg::hermitian_defect(&h);
            if d > 1e-12 * h.norm().max(1.0) {
                return Err(Error::NonHermitian { t, defect: d });
            }
        }
        for (i, l) in self.lambdas.iter().enumerate() {
            h[(i, i)] += k * *l;
        }
        Ok(h)
    }

    fn lambda_max(&self) -> f64 {
        self.lambdas.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

/// Step-size control for the integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    /// Accepted step-doubling error per unit time.
    pub tol_per_unit_time: f64,
    /// Maximum number of step halvings.
    pub max_levels: u32,
    /// Initial step; chosen from the data when absent.
    pub initial_step: Option<f64>,
    /// Permit `Im k < 0`, where the flow grows.
    pub allow_growing: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol_per_unit_time: 1e-10, max_levels: 8, initial_step: None, allow_growing: false }
    }
}

impl EvolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol_per_unit_time: tol, ..Self::default() }
    }
}

/// Sampled solution `X(t_i, k)` at the grid nodes.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub k: Complex64,
    pub times: Vec<f64>,
    pub snapshots: Vec<CMatrix>,
    /// `max_i ‖X_i* X_i − I‖` (Frobenius).
    pub unitarity_defect: f64,
    /// `max_i (‖X_i‖ − 1)⁺`; zero for real `k`.
    pub contraction_defect: f64,
    /// Step-doubling error estimate of the returned snapshots.
    pub error_estimate: f64,
    pub refinement_level: u32,
}

impl Propagator {
    pub fn last(&self) -> &CMatrix {
        self.snapshots.last().expect("propagator has at least one snapshot")
    }

    /// Snapshot at a grid node.
    pub fn at(&self, t: f64) -> Option<&CMatrix> {
        self.times.iter().position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|i| &self.snapshots[i])
    }
}

/// Integration stations: grid nodes plus potential breakpoints, each tagged
/// with the snapshot index it produces.
fn stations(grid: &TimeGrid, breakpoints: &[f64]) -> Vec<(f64, Option<usize>)> {
    let (a, b) = (grid.start(), grid.end());
    let mut s: Vec<(f64, Option<usize>)> = grid.nodes().iter().enumerate().map(|(i, t)| (*t, Some(i))).collect();
    for &p in breakpoints {
        if p > a && p < b && !grid.nodes().iter().any(|t| (t - p).abs() <= 1e-14 * p.abs().max(1.0)) {
            s.push((p, None));
        }
    }
    s.sort_by(|x, y| x.0.total_cmp(&y.0));
    s
}

fn default_step(g: &Generator, k: Complex64, grid: &TimeGrid) -> f64 {
    let stiff = (k.norm() * g.lambda_max()).sqrt();
    0.25 / (1.0 + max_norm(g, grid) + stiff)
}

/// The splitting engine integrates the free part exactly, so its step feels
/// the stiffness only through commutators.
fn default_state_step(g: &Generator, k: Complex64, grid: &TimeGrid) -> f64 {
    let stiff = (k.norm() * g.lambda_max()).powf(0.25);
    0.25 / (1.0 + max_norm(g, grid) + stiff)
}

fn max_norm(g: &Generator, grid: &TimeGrid) -> f64 {
    let p = g.potential();
    let mut v = 0.0f64;
    let n = 16;
    for i in 0..=n {
        let t = grid.start() + (grid.end() - grid.start()) * i as f64 / n as f64;
        v = v.max(p.norm_bound(t));
    }
    v
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const COMMUTATOR_WEIGHT: f64 = 0.144_337_567_297_406_44; // √3/12

/// One fourth-order Magnus step over `[t, t+h]`.
fn magnus_step(g: &Generator, k: Complex64, t: f64, h: f64) -> Result<CMatrix> {
    let t1 = t + (0.5 - GAUSS_OFFSET) * h;
    let t2 = t + (0.5 + GAUSS_OFFSET) * h;
    let h1 = g.hamiltonian(k, t1)?;
    let h2 = g.hamiltonian(k, t2)?;
    let n = g.dim();
    let diagonal = |m: &CMatrix| (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == ZERO));
    if diagonal(&h1) && diagonal(&h2) {
        let d: Vec<Complex64> = (0..n).map(|i| (I * (h1[(i, i)] + h2[(i, i)]) * (0.5 * h)).exp()).collect();
        return Ok(linalg::diag(&d));
    }
    let comm = &h2 * &h1 - &h1 * &h2;
    if k.im == 0.0 {
        let gm = (&h1 + &h2) * Complex64::new(0.5 * h, 0.0) + comm * (I * (COMMUTATOR_WEIGHT * h * h));
        Ok(linalg::exp_i_hermitian(&gm))
    } else {
        // Ω = h/2 (A1 + A2) + (√3/12) h² [A2, A1] with A = iH.
        let omega = (&h1 + &h2) * (I * (0.5 * h)) - comm * Complex64::new(COMMUTATOR_WEIGHT * h * h, 0.0);
        linalg::expm(&omega)
    }
}

fn run_dense(g: &Generator, k: Complex64, st: &[(f64, Option<usize>)], h: f64, count: usize) -> Result<Vec<CMatrix>> {
    let n = g.dim();
    let mut x = linalg::identity(n);
    let mut out = vec![CMatrix::zeros(0, 0); count];
    if let Some(i) = st[0].1 {
        out[i] = x.clone();
    }
    for w in st.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        let m = ((b - a) / h).ceil().max(1.0) as usize;
        let hs = (b - a) / m as f64;
        for j in 0..m {
            let step = magnus_step(g, k, a + hs * j as f64, hs)?;
            x = step * x;
        }
        if let Some(i) = w[1].1 {
            out[i] = x.clone();
        }
    }
    Ok(out)
}

fn check_k(k: Complex64, opts: &EvolveOptions) -> Result<()> {
    if k.im < 0.0 && !opts.allow_growing {
        return Err(Error::GrowingFlow(k.im));
    }
    Ok(())
}

/// Solves `X_t = i(kΛ + V(t))X`, `X(t_0) = I`, and returns `X` at every grid
/// node. Fourth-order Magnus steps; the step is halved until two successive
/// resolutions agree to `tol_per_unit_time` per unit time.
pub fn evolve(g: &Generator, k: Complex64, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Propagator> {
    check_k(k, opts)?;
    let st = stations(grid, &g.potential().breakpoints());
    let span = (grid.end() - grid.start()).max(1e-300);
    let h0 = opts.initial_step.unwrap_or_else(|| default_step(g, k, grid));
    let count = grid.len();
    let mut coarse = run_dense(g, k, &st, h0, count)?;
    let mut est = f64::INFINITY;
    for level in 1..=opts.max_levels {
        let fine = run_dense(g, k, &st, h0 / f64::from(1u32 << level), count)?;
        let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        est = diff / 15.0;
        if est <= opts.tol_per_unit_time * span.max(1.0) {
            return Ok(finish(k, grid, fine, est, level));
        }
        coarse = fine;
    }
    Err(Error::RefinementExhausted { levels: opts.max_levels as usize, defect: est / span.max(1.0) })
}

fn finish(k: Complex64, grid: &TimeGrid, snapshots: Vec<CMatrix>, est: f64, level: u32) -> Propagator {
    let unitarity_defect = snapshots.iter().map(linalg::unitarity_defect).fold(0.0, f64::max);
    let contraction_defect = if k.im == 0.0 {
        0.0
    } else {
        snapshots.iter().map(|x| (linalg::op_norm(x) - 1.0).max(0.0)).fold(0.0, f64::max)
    };
    Propagator {
        k,
        times: grid.nodes().to_vec(),
        snapshots,
        unitarity_defect,
        contraction_defect,
        error_estimate: est,
        refinement_level: level,
    }
}

/// `X(t0, t1, k)`: the propagator from `t0` to `t1`.
pub fn propagate(g: &Generator, k: Complex64, t0: f64, t1: f64, opts: &EvolveOptions) -> Result<CMatrix> {
    let grid = TimeGrid::new(vec![t0, t1])?;
    Ok(evolve(g, k, &grid, opts)?.last().clone())
}

/// `‖X(t1,t2)X(t0,t1) − X(t0,t2)‖` (Frobenius).
pub fn semigroup_defect(g: &Generator, k: Complex64, t0: f64, t1: f64, t2: f64, opts: &EvolveOptions) -> Result<f64> {
    if !(t0 < t1 && t1 < t2) {
        return Err(Error::Invalid("semigroup check needs t0 < t1 < t2".into()));
    }
    let a = propagate(g, k, t0, t1, opts)?;
    let b = propagate(g, k, t1, t2, opts)?;
    let c = propagate(g, k, t0, t2, opts)?;
    Ok((b * a - c).norm())
}

/// Solution vectors `x(t_i)` of `x' = i(kΛ + V)x`.
#[derive(Debug, Clone)]
pub struct StateEvolution {
    pub k: Complex64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// `max_i | ‖x_i‖ − ‖x_0‖ |`.
    pub norm_defect: f64,
    pub error_estimate: f64,
    pub refinement_level: u32,
}

impl StateEvolution {
    pub fn last(&self) -> &[Complex64] {
        self.states.last().expect("at least one state")
    }
}

/// `exp(i s V(t)) x` by a Taylor series on vectors.
fn exp_potential_apply(p: &dyn MatrixPotential, t: f64, s: f64, x: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let bound = p.norm_bound(t) * s.abs();
    if bound == 0.0 {
        return;
    }
    let pieces = bound.ceil().max(1.0) as usize;
    let ds = s / pieces as f64;
    let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut term = x.to_vec();
    scratch.resize(x.len(), ZERO);
    for _ in 0..pieces {
        term.copy_from_slice(x);
        for j in 1..60 {
            p.apply(t, &term, scratch);
            let c = I * (ds / j as f64);
            let mut tn = 0.0;
            for (tm, v) in term.iter_mut().zip(scratch.iter()) {
                *tm = v * c;
                tn += tm.norm_sqr();
            }
            for (xi, tm) in x.iter_mut().zip(term.iter()) {
                *xi += tm;
            }
            if tn.sqrt() <= 1e-17 * nx.max(1e-300) {
                break;
            }
        }
    }
}

/// Weights `(w1, w0)` of the symmetric triple-jump composition of order four.
const TRIPLE_JUMP: (f64, f64) = (1.351_207_191_959_657_8, -1.702_414_383_919_315_3);

fn run_state(
    g: &Generator,
    k: Complex64,
    st: &[(f64, Option<usize>)],
    h: f64,
    x0: &[Complex64],
    count: usize,
) -> Vec<Vec<Complex64>> {
    let p = g.potential().as_ref();
    let mut x = x0.to_vec();
    let mut scratch = Vec::new();
    let mut out = vec![Vec::new(); count];
    if let Some(i) = st[0].1 {
        out[i] = x.clone();
    }
    for w in st.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        let m = ((b - a) / h).ceil().max(1.0) as usize;
        let hs = (b - a) / m as f64;
        let phases = |w: f64| -> Vec<Complex64> { g.lambdas.iter().map(|l| (I * k * *l * (0.5 * w * hs)).exp()).collect() };
        let (p1, p0) = (phases(TRIPLE_JUMP.0), phases(TRIPLE_JUMP.1));
        for j in 0..m {
            let mut t = a + hs * j as f64;
            for (w, ph) in [(TRIPLE_JUMP.0, &p1), (TRIPLE_JUMP.1, &p0), (TRIPLE_JUMP.0, &p1)] {
                let s = w * hs;
                x.iter_mut().zip(ph).for_each(|(xi, e)| *xi *= e);
                exp_potential_apply(p, t + 0.5 * s, s, &mut x, &mut scratch);
                x.iter_mut().zip(ph).for_each(|(xi, e)| *xi *= e);
                t += s;
            }
        }
        if let Some(i) = w[1].1 {
            out[i] = x.clone();
        }
    }
    out
}

/// Evolves a single vector. Each step is a triple-jump composition of
/// Strang steps: exact free phases around `exp(i s V(t_mid))`, which is
/// applied through matrix-vector products only. Fourth order; step doubling
/// as in [`evolve`].
pub fn evolve_state(
    g: &Generator,
    k: Complex64,
    grid: &TimeGrid,
    x0: &[Complex64],
    opts: &EvolveOptions,
) -> Result<StateEvolution> {
    check_k(k, opts)?;
    if x0.len() != g.dim() {
        return Err(Error::Invalid("initial vector has wrong dimension".into()));
    }
    if !g.potential().hermitian_by_construction() {
        g.hamiltonian(k, grid.start())?;
    }
    let st = stations(grid, &g.potential().breakpoints());
    let span = (grid.end() - grid.start()).max(1e-300);
    let h0 = opts.initial_step.unwrap_or_else(|| default_state_step(g, k, grid));
    let count = grid.len();
    let dist = |a: &[Vec<Complex64>], b: &[Vec<Complex64>]| {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    let mut coarse = run_state(g, k, &st, h0, x0, count);
    let mut est = f64::INFINITY;
    for level in 1..=opts.max_levels {
        let fine = run_state(g, k, &st, h0 / f64::from(1u32 << level), x0, count);
        est = dist(&coarse, &fine) / 15.0;
        if est <= opts.tol_per_unit_time * span.max(1.0) {
            let n0: f64 = x0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let norm_defect = fine
                .iter()
                .map(|x| (x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - n0).abs())
                .fold(0.0, f64::max);
            return Ok(StateEvolution {
                k,
                times: grid.nodes().to_vec(),
                states: fine,
                norm_defect,
                error_estimate: est,
                refinement_level: level,
            });
        }
        coarse = fine;
    }
    Err(Error::RefinementExhausted { levels: opts.max_levels as usize, defect: est / span.max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::SparseHermitian;
    use crate::profile::ScalarProfile;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn free_flow_is_diagonal_phases() {
        let g = Generator::from_potential(vec![0.0, 1.0, 4.0], SparseHermitian::zero(3)).unwrap();
        let p = evolve(&g, c(2.0), &TimeGrid::uniform(0.0, 1.0, 1), &EvolveOptions::default()).unwrap();
        let want = linalg::diag(&[c(1.0), Complex64::from_polar(1.0, 2.0), Complex64::from_polar(1.0, 8.0)]);
        assert!((p.last() - want).norm() < 1e-14);
        assert!(p.unitarity_defect < 1e-14);
    }

    #[test]
    fn constant_imaginary_coupling_rotates() {
        let q = ScalarProfile::Constant { amp: Complex64::new(0.0, 0.1) };
        let g = Generator::from_potential(vec![0.0, 0.0], SparseHermitian::pair(2, 0, 1, q)).unwrap();
        let p = evolve(&g, c(0.0), &TimeGrid::uniform(0.0, 10.0, 1), &EvolveOptions::default()).unwrap();
        let (s, co) = 1f64.sin_cos();
        let want = CMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)]);
        assert!((p.last() - want).norm() < 1e-12);
    }

    #[test]
    fn growing_flow_needs_opt_in() {
        let g = Generator::from_potential(vec![0.0, 1.0], SparseHermitian::zero(2)).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 1);
        let k = Complex64::new(0.0, -1.0);
        assert!(matches!(evolve(&g, k, &grid, &EvolveOptions::default()), Err(Error::GrowingFlow(_))));
        let opts = EvolveOptions { allow_growing: true, ..EvolveOptions::default() };
        assert!(evolve(&g, k, &grid, &opts).is_ok());
    }

    #[test]
    fn non_hermitian_sample_is_rejected() {
        let p = crate::potential::FnPotential::new(2, |_| CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]));
        let g = Generator::from_potential(vec![0.0, 1.0], p).unwrap();
        let r = evolve(&g, c(1.0), &TimeGrid::uniform(0.0, 1.0, 1), &EvolveOptions::default());
        assert!(matches!(r, Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn state_engine_agrees_with_dense() {
        let v = SparseHermitian::toeplitz(4, &[ScalarProfile::power(0.3, 0.9), ScalarProfile::exponential(Complex64::new(0.1, 0.2), 0.3)]);
        let g = Generator::from_potential(vec![0.0, 1.0, 4.0, 9.0], v).unwrap();
        let grid = TimeGrid::uniform(0.0, 5.0, 5);
        let k = c(0.7);
        let opts = EvolveOptions::with_tol(1e-11);
        let dense = evolve(&g, k, &grid, &opts).unwrap();
        let x0 = vec![c(1.0), c(0.0), c(0.0), c(0.0)];
        let st = evolve_state(&g, k, &grid, &x0, &opts).unwrap();
        for (x, s) in dense.snapshots.iter().zip(&st.states) {
            for i in 0..4 {
                assert!((x[(i, 0)] - s[i]).norm() < 1e-8);
            }
        }
        assert!(st.norm_defect < 1e-12);
    }
}
