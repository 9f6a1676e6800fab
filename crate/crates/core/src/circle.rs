//! Weak solutions of `u_t = −i k u_θθ + i V(t,θ) u` through truncated Fourier
//! systems.
//!
//! Modes `|n| ≤ N` are stored in the order `{1, e^{iθ}, e^{−iθ}, e^{2iθ}, …}`,
//! so the frequencies `0, 1, 1, 4, 4, …` are nondecreasing and each
//! `±n` pair is adjacent. The matrix of `V̂∗` has entry `V̂_{n−m}` in row `n`,
//! column `m`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fourier::ModeCoefficients;
use crate::numerics::grid::{KGrid, TimeGrid};
use crate::numerics::linalg::{CMatrix, ZERO};
use crate::potential::MatrixPotential;
use crate::profile::ScalarProfile;
use crate::propagators::pair::evolve_pair;
use crate::propagators::{evolve_state, EvolveOptions, Generator};
use crate::report::{cauchy_status, within_calibrated, BoundReport, ExponentFit, ReportRow, Status};
use crate::transport::{CircleMode, CirclePotential};

/// Truncation sensitivity allowed before asking for a larger `N_max`.
pub const TRUNCATION_LIMIT: f64 = 1e-4;

/// Position of mode `n` in the basis `{1, e^{iθ}, e^{−iθ}, …}`.
pub fn basis_index(n: i64) -> usize {
    match n.cmp(&0) {
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 2 * n as usize - 1,
        std::cmp::Ordering::Less => 2 * n.unsigned_abs() as usize,
    }
}

/// Inverse of [`basis_index`].
pub fn basis_mode(i: usize) -> i64 {
    if i == 0 {
        0
    } else if i % 2 == 1 {
        i.div_ceil(2) as i64
    } else {
        -((i / 2) as i64)
    }
}

pub fn to_basis(c: &ModeCoefficients, n_max: usize) -> Vec<Complex64> {
    (0..2 * n_max + 1).map(|i| c.get(basis_mode(i))).collect()
}

pub fn from_basis(x: &[Complex64]) -> ModeCoefficients {
    let n_max = x.len() / 2;
    ModeCoefficients::from_fn(n_max, |n| x[basis_index(n)])
}

/// `V̂∗` on modes `|n| ≤ N`, in the basis order above.
#[derive(Debug, Clone)]
pub struct ConvolutionPotential {
    n_max: usize,
    modes: Vec<CircleMode>,
}

impl ConvolutionPotential {
    fn coeffs(&self, t: f64) -> Vec<(i64, Complex64)> {
        self.modes.iter().map(|m| (m.n, m.profile.eval(t))).filter(|(_, v)| *v != ZERO).collect()
    }
}

impl MatrixPotential for ConvolutionPotential {
    fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    fn sample(&self, t: f64) -> CMatrix {
        let n = self.n_max as i64;
        let mut v = CMatrix::zeros(self.dim(), self.dim());
        for (d, c) in self.coeffs(t) {
            for m in -n..=n {
                let row = m + d;
                if row.abs() <= n {
                    v[(basis_index(row), basis_index(m))] += c;
                }
            }
        }
        v
    }

    fn apply(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.n_max as i64;
        out.iter_mut().for_each(|o| *o = ZERO);
        for (d, c) in self.coeffs(t) {
            for m in (-n).max(-n - d)..=n.min(n - d) {
                out[basis_index(m + d)] += c * x[basis_index(m)];
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.modes.iter().flat_map(|m| m.profile.breakpoints()).collect()
    }

    fn support_end(&self) -> Option<f64> {
        self.modes.iter().map(|m| m.profile.support_end()).try_fold(0.0f64, |acc, e| e.map(|e| acc.max(e)))
    }

    fn hermitian_by_construction(&self) -> bool {
        true
    }

    fn diagonal_free(&self) -> bool {
        true
    }

    fn norm_bound(&self, t: f64) -> f64 {
        self.coeffs(t).iter().map(|(_, c)| c.norm()).sum()
    }
}

/// Fourier truncation of the circle problem with a real potential.
#[derive(Debug, Clone)]
pub struct CircleGenerator {
    n_max: usize,
    potential: CirclePotential,
    mean: Option<ScalarProfile>,
    /// Frequency of mode `n`; `n²` for the Schrödinger operator.
    symbol: Symbol,
}

/// Diagonal symbol of the free flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    /// `n²`
    Square,
    /// `n`, the transport operator `−i∂_θ`
    Linear,
}

impl Symbol {
    pub fn eval(self, n: i64) -> f64 {
        match self {
            Symbol::Square => (n * n) as f64,
            Symbol::Linear => n as f64,
        }
    }
}

impl CircleGenerator {
    /// Real potential required (`V̂_{−n} = conj V̂_n`). A mean `V̂_0` is split
    /// off and kept as the scalar phase `exp(i ∫ V̂_0)`.
    pub fn new(n_max: usize, potential: CirclePotential) -> Result<Self> {
        Self::with_symbol(n_max, potential, Symbol::Square)
    }

    pub fn with_symbol(n_max: usize, potential: CirclePotential, symbol: Symbol) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Invalid("N_max must be positive".into()));
        }
        let horizon = potential.support_end().unwrap_or(64.0).max(1.0);
        for i in 0..=128 {
            let t = horizon * i as f64 / 128.0;
            for m in potential.modes() {
                let d = potential.fourier(t, -m.n) - potential.fourier(t, m.n).conj();
                if d.norm() > 1e-12 * (1.0 + potential.fourier(t, m.n).norm()) {
                    return Err(Error::NonHermitian { t, defect: d.norm() });
                }
            }
        }
        let mean = potential.modes().iter().find(|m| m.n == 0).map(|m| m.profile.clone());
        let rest = CirclePotential::new(potential.modes().iter().filter(|m| m.n != 0).cloned().collect());
        Ok(Self { n_max, potential: rest, mean, symbol })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn potential(&self) -> &CirclePotential {
        &self.potential
    }

    pub fn symbol(&self) -> Symbol {
        self.symbol
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    /// `exp(i ∫_0^t V̂_0)`.
    pub fn mean_phase(&self, t: f64) -> Complex64 {
        match &self.mean {
            None => Complex64::new(1.0, 0.0),
            Some(p) => {
                let s = p.fourier_integral(0.0, 0.0, t);
                (Complex64::new(0.0, 1.0) * s).exp()
            }
        }
    }

    /// Same problem on a different truncation.
    pub fn truncated(&self, n_max: usize) -> Self {
        Self { n_max, ..self.clone() }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.symbol.eval(basis_mode(i))).collect()
    }

    pub fn generator(&self) -> Result<Generator> {
        let pot = ConvolutionPotential { n_max: self.n_max, modes: self.potential.modes().to_vec() };
        Generator::unordered(self.lambdas(), Arc::new(pot))
    }

    /// `∫_0^t ∫_T |V|²` (the split-off mean included).
    pub fn l2_mass(&self, t: f64) -> f64 {
        let mean = self.mean.as_ref().map_or(0.0, |p| 2.0 * std::f64::consts::PI * p.l2_squared(0.0, t));
        self.potential.l2_mass(0.0, t) + mean
    }
}

/// Sampled solution of the truncated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSolution {
    pub k: f64,
    pub times: Vec<f64>,
    pub states: Vec<ModeCoefficients>,
    /// ℓ² distance to the solution on `N_max/2` at the last time.
    pub truncation_sensitivity: f64,
    pub norm_defect: f64,
}

impl CircleSolution {
    pub fn last(&self) -> &ModeCoefficients {
        self.states.last().expect("at least one state")
    }
}

fn run_truncation(g: &CircleGenerator, k: f64, grid: &TimeGrid, psi0: &ModeCoefficients, opts: &EvolveOptions) -> Result<(Vec<ModeCoefficients>, f64)> {
    if g.potential.modes().is_empty() {
        let states = grid
            .nodes()
            .iter()
            .map(|t| {
                psi0.resized(g.n_max)
                    .map_modes(|n, c| c * Complex64::from_polar(1.0, k * g.symbol.eval(n) * t))
                    .scale(g.mean_phase(*t))
            })
            .collect();
        return Ok((states, 0.0));
    }
    let gen = g.generator()?;
    let x0 = to_basis(psi0, g.n_max);
    let ev = evolve_state(&gen, Complex64::new(k, 0.0), grid, &x0, opts)?;
    let states = ev
        .states
        .iter()
        .zip(grid.nodes())
        .map(|(x, t)| from_basis(x).scale(g.mean_phase(*t)))
        .collect();
    Ok((states, ev.norm_defect))
}

/// Evolves `psi0` on `N_max` and on `N_max/2`; a sensitivity above
/// [`TRUNCATION_LIMIT`] is an error.
pub fn evolve_circle(g: &CircleGenerator, k: f64, grid: &TimeGrid, psi0: &ModeCoefficients, opts: &EvolveOptions) -> Result<CircleSolution> {
    let (states, norm_defect) = run_truncation(g, k, grid, psi0, opts)?;
    let half = g.truncated((g.n_max / 2).max(psi0.n_max()).max(1));
    let sensitivity = if half.n_max < g.n_max {
        let (coarse, _) = run_truncation(&half, k, grid, psi0, opts)?;
        states.last().unwrap().sub(&coarse.last().unwrap().resized(g.n_max)).l2_norm()
    } else {
        0.0
    };
    if sensitivity > TRUNCATION_LIMIT {
        return Err(Error::Truncation { sensitivity, limit: TRUNCATION_LIMIT });
    }
    Ok(CircleSolution { k, times: grid.nodes().to_vec(), states, truncation_sensitivity: sensitivity, norm_defect })
}

/// ℓ² distances between solutions at consecutive truncations in `n_list`.
pub fn approximation_convergence(
    g: &CircleGenerator,
    k: f64,
    t: f64,
    n_list: &[usize],
    psi0: &ModeCoefficients,
    opts: &EvolveOptions,
) -> Result<BoundReport> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("N list must be increasing with at least two entries".into()));
    }
    let grid = TimeGrid::new(vec![0.0, t])?;
    let n_top = *n_list.last().unwrap();
    let sols: Vec<ModeCoefficients> = n_list
        .par_iter()
        .map(|&n| run_truncation(&g.truncated(n), k, &grid, psi0, opts).map(|(s, _)| s.last().unwrap().resized(n_top)))
        .collect::<Result<_>>()?;
    let dists: Vec<f64> = sols.windows(2).map(|w| w[1].sub(&w[0]).l2_norm()).collect();
    // Distances at the integrator's noise floor count as saturated, not as growth.
    let floor = 1e3 * opts.tol_per_unit_time * t.max(1.0);
    let clean: Vec<f64> = dists.iter().map(|d| d.max(floor)).collect();
    let decreasing = clean.windows(2).all(|w| w[1] < w[0] || w[0] <= floor);
    let last = *dists.last().unwrap();
    let status = Status::from_bool(decreasing && last < 1e-6);
    let rows = n_list[1..].iter().zip(&dists).map(|(n, d)| ReportRow { param: *n as f64, lhs: *d, rhs: 1e-6 }).collect();
    let mut rep = BoundReport::new("approximation_lemma", last, 1e-6, status).with_rows(rows).with_tolerance("noise_floor", floor);
    rep.meta.n_max = Some(n_top);
    rep.meta.t_max = Some(t);
    Ok(rep)
}

/// The `k`-independent blocks `Ψ_n(t)` of the pair flows `{e^{inθ}, e^{−inθ}}`.
#[derive(Debug, Clone)]
pub struct CorrectionFlow {
    pub times: Vec<f64>,
    /// `psi_blocks[n-1][i]` is `Ψ_n(times[i])`.
    pub psi_blocks: Vec<Vec<CMatrix>>,
    pub unitarity_defect: f64,
}

impl CorrectionFlow {
    /// Each pair flow is driven by the entry `V̂_{2n}` coupling `e^{−inθ}` to
    /// `e^{inθ}`; blocks with no such mode are the identity.
    pub fn new(g: &CircleGenerator, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Self> {
        let mut blocks = Vec::with_capacity(g.n_max);
        let mut defect: f64 = 0.0;
        for n in 1..=g.n_max as i64 {
            let drive = g.potential.modes().iter().find(|m| m.n == 2 * n).map(|m| m.profile.clone());
            match drive {
                None => blocks.push(vec![CMatrix::identity(2, 2); grid.len()]),
                Some(p) => {
                    let w = evolve_pair(&p, grid, opts)?;
                    defect = defect.max(w.unitarity_defect);
                    blocks.push(w.snapshots);
                }
            }
        }
        Ok(Self { times: grid.nodes().to_vec(), psi_blocks: blocks, unitarity_defect: defect })
    }

    /// `W^{-1}(0,t_i,k) x` for a state in mode form.
    pub fn unwind(&self, g: &CircleGenerator, i: usize, k: f64, x: &ModeCoefficients) -> ModeCoefficients {
        let t = self.times[i];
        let free = x.map_modes(|n, c| c * Complex64::from_polar(1.0, -k * g.symbol.eval(n) * t));
        let mut out = free.clone();
        for n in 1..=free.n_max().min(self.psi_blocks.len()) as i64 {
            let psi = &self.psi_blocks[n as usize - 1][i];
            let (a, b) = (free.get(n), free.get(-n));
            // Ψ* applied to (c_n, c_{−n}).
            out.set(n, psi[(0, 0)].conj() * a + psi[(1, 0)].conj() * b);
            out.set(-n, psi[(0, 1)].conj() * a + psi[(1, 1)].conj() * b);
        }
        out
    }
}

/// `∫_I ‖W^{-1}û(t) − W^{-1}û(t_max)‖² dk` decreasing across `t_list`, and
/// `‖W^{-1}û(t_max,k)‖ = ‖ψ_0‖` within `1e-6` at every `k`.
pub fn corrected_limit_check(
    g: &CircleGenerator,
    kgrid: &KGrid,
    t_list: &[f64],
    psi0: &ModeCoefficients,
    opts: &EvolveOptions,
) -> Result<BoundReport> {
    if t_list.len() < 3 {
        return Err(Error::Invalid("need at least three times".into()));
    }
    let grid = TimeGrid::new(std::iter::once(0.0).chain(t_list.iter().copied().filter(|t| *t > 0.0)).collect())?;
    let flow = CorrectionFlow::new(g, &grid, opts)?;
    let last = grid.len() - 1;
    let norm0 = psi0.l2_norm();
    let per_k: Vec<(Vec<f64>, f64)> = kgrid
        .samples()
        .par_iter()
        .map(|&k| {
            let sol = evolve_circle(g, k, &grid, psi0, opts)?;
            let limit = flow.unwind(g, last, k, &sol.states[last]);
            let d = (1..last).map(|i| flow.unwind(g, i, k, &sol.states[i]).sub(&limit).l2_norm().powi(2)).collect();
            Ok((d, (limit.l2_norm() - norm0).abs()))
        })
        .collect::<Result<_>>()?;
    let dists: Vec<f64> = (0..last - 1).map(|i| kgrid.integrate(&per_k.iter().map(|(d, _)| d[i]).collect::<Vec<_>>())).collect();
    let isometry = per_k.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let times = &grid.nodes()[1..last];
    let rows = times.iter().zip(&dists).map(|(t, d)| ReportRow { param: *t, lhs: *d, rhs: 1e-3 * dists[0] }).collect();
    let cauchy = BoundReport::new("corrected_cauchy", *dists.last().unwrap(), 1e-3 * dists[0], cauchy_status(&dists, 0.1, 1e-3)).with_rows(rows);
    let iso = BoundReport::upper("corrected_isometry", isometry, 1e-6)
        .with_note(format!("pair-flow unitarity defect {:.2e}", flow.unitarity_defect));
    let mut rep = BoundReport::combine("corrected_limit", vec![cauchy, iso]);
    rep.meta.k_max = Some(kgrid.truncation_radius());
    rep.meta.t_max = Some(grid.end());
    rep.meta.n_max = Some(g.n_max);
    Ok(rep)
}

/// `Σ_{n≠0} |n|^{2γ} |c_n|²`.
pub fn h_gamma_squared(c: &ModeCoefficients, gamma: f64) -> f64 {
    c.hs_norm(gamma, None).powi(2)
}

/// `∫ Σ_{|m|>l} |c_m(k)|² dk` for each cutoff.
fn tail_masses(kgrid: &KGrid, states: &[ModeCoefficients], cutoffs: &[usize]) -> Vec<f64> {
    cutoffs
        .iter()
        .map(|&l| {
            let v: Vec<f64> = states
                .iter()
                .map(|c| c.modes().filter(|m| m.unsigned_abs() as usize > l).map(|m| c.get(m).norm_sqr()).sum())
                .collect();
            kgrid.integrate(&v)
        })
        .collect()
}

/// `∫ ‖u(T,·,k)‖²_{Ḣ^γ} dk ≲ ∫_0^T ∫_T |V|²` for `ψ = 1`, `γ < 1/2` (any
/// `γ ≤ 1/2` for the linear symbol), plus the tail envelope
/// `∫ Σ_{|m|>l} |u_m|² dk ≤ C l^{-1} ∫∫|V|²` over `cutoffs`, with `C` taken
/// at the smallest cutoff and a factor 2 allowed; the fitted exponent is
/// recorded. The bound itself is checked against `2×` the calibration.
pub fn sobolev_growth_check(
    g: &CircleGenerator,
    kgrid: &KGrid,
    t: f64,
    gamma: f64,
    cutoffs: &[usize],
    calibration: Option<f64>,
    opts: &EvolveOptions,
) -> Result<BoundReport> {
    let max_gamma = if g.symbol == Symbol::Linear { 0.5 } else { 0.5 - f64::EPSILON };
    if !(0.0..=max_gamma).contains(&gamma) {
        return Err(Error::Invalid(format!("gamma {gamma} outside the admissible range")));
    }
    let grid = TimeGrid::new(vec![0.0, t])?;
    let psi0 = ModeCoefficients::delta(0, 0);
    let states: Vec<ModeCoefficients> = kgrid
        .samples()
        .par_iter()
        .map(|&k| evolve_circle(g, k, &grid, &psi0, opts).map(|s| s.last().clone()))
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = states.iter().map(|c| h_gamma_squared(c, gamma)).collect();
    let (lhs, tail) = kgrid.integrate_with_tail(&vals);
    let rhs = g.l2_mass(t);
    let fitted = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    let status = if rhs == 0.0 {
        Status::from_bool(lhs == 0.0)
    } else {
        calibration.map_or(Status::Pass, |c| within_calibrated(lhs, rhs, c, 2.0))
    };
    let mut bound = BoundReport::new("sobolev_bound", lhs, rhs, status).with_constant(fitted).with_tolerance("gamma", gamma);
    bound.tail_estimate = Some(tail);
    if calibration.is_none() {
        bound.notes.push("calibration run".into());
    }
    let mut parts = vec![bound];
    if cutoffs.len() >= 2 && rhs > 0.0 {
        let masses = tail_masses(kgrid, &states, cutoffs);
        let xs: Vec<f64> = cutoffs.iter().map(|l| *l as f64).collect();
        let fit = ExponentFit::log_log(&xs, &masses);
        // The envelope C l^{-1}‖V‖² with C fitted at the smallest cutoff.
        let c0 = masses[0] * xs[0] / rhs;
        let worst = xs.iter().zip(&masses).map(|(l, m)| m * l / rhs).fold(0.0, f64::max);
        let mut decay = BoundReport::new("tail_decay", worst, 2.0 * c0, Status::from_bool(worst <= 2.0 * c0))
            .with_constant(c0);
        match fit {
            Some(f) => {
                decay.fit = Some(f);
                decay.notes.push(format!("fitted tail exponent {:.3}", f.slope));
            }
            None => decay.notes.push("tail masses vanish".into()),
        }
        decay.rows = xs.iter().zip(&masses).map(|(l, m)| ReportRow { param: *l, lhs: *m, rhs: c0 * rhs / l }).collect();
        parts.push(decay);
    }
    let mut rep = BoundReport::combine("sobolev_growth", parts);
    rep.meta.k_max = Some(kgrid.truncation_radius());
    rep.meta.t_max = Some(t);
    rep.meta.n_max = Some(g.n_max);
    Ok(rep)
}

/// Among the columns `e_{α(0)}, …, e_{α(T−1)}` (basis order), the number
/// whose `k`-integrated mass beyond mode `T` exceeds `σ T^{-2}`, next to
/// `σ^{-1} T ∫∫|V|²`. Informational: the constant is not specified.
pub fn localization_diagnostic(g: &CircleGenerator, kgrid: &KGrid, t: f64, columns: usize, sigma: f64, opts: &EvolveOptions) -> Result<BoundReport> {
    if columns == 0 || columns > g.dim() {
        return Err(Error::Invalid("column count outside the truncation".into()));
    }
    let grid = TimeGrid::new(vec![0.0, t])?;
    let cut = columns;
    let masses: Vec<f64> = (0..columns)
        .map(|col| {
            let psi0 = ModeCoefficients::delta(g.n_max, basis_mode(col));
            let states: Vec<ModeCoefficients> = kgrid
                .samples()
                .par_iter()
                .map(|&k| run_truncation(g, k, &grid, &psi0, opts).map(|(s, _)| s.last().unwrap().clone()))
                .collect::<Result<_>>()?;
            Ok(tail_masses(kgrid, &states, &[cut])[0])
        })
        .collect::<Result<_>>()?;
    let threshold = sigma / (cut as f64).powi(2);
    let count = masses.iter().filter(|m| **m > threshold).count();
    let bound = g.l2_mass(t) * cut as f64 / sigma;
    let rows = masses.iter().enumerate().map(|(i, m)| ReportRow { param: i as f64, lhs: *m, rhs: threshold }).collect();
    Ok(BoundReport::new("column_localization", count as f64, bound, Status::Informational)
        .with_rows(rows)
        .with_constant(if bound > 0.0 { count as f64 / bound } else { 0.0 })
        .with_tolerance("sigma", sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg;
    use crate::propagators::pair::pair_closed_form;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_order_round_trip() {
        assert_eq!((0..7).map(basis_mode).collect::<Vec<_>>(), vec![0, 1, -1, 2, -2, 3, -3]);
        for n in -10..=10 {
            assert_eq!(basis_mode(basis_index(n)), n);
        }
        let m = ModeCoefficients::from_fn(3, |n| c(n as f64, 1.0));
        assert_eq!(from_basis(&to_basis(&m, 3)), m);
    }

    #[test]
    fn convolution_matrix_is_hermitian_and_matches_apply() {
        let q = CirclePotential::cosine(ScalarProfile::constant(0.7), 1)
            .scaled(c(1.0, 0.0));
        let extra = CirclePotential::new(vec![
            CircleMode { n: 2, profile: ScalarProfile::Constant { amp: c(0.2, 0.3) } },
            CircleMode { n: -2, profile: ScalarProfile::Constant { amp: c(0.2, -0.3) } },
        ]);
        let mut modes = q.modes().to_vec();
        modes.extend(extra.modes().iter().cloned());
        let g = CircleGenerator::new(4, CirclePotential::new(modes)).unwrap();
        let gen = g.generator().unwrap();
        let v = gen.potential().sample(0.0);
        assert!(linalg::hermitian_defect(&v) < 1e-15);
        let x: Vec<Complex64> = (0..9).map(|i| c(i as f64, -(i as f64) * 0.5)).collect();
        let mut out = vec![ZERO; 9];
        gen.potential().apply(0.0, &x, &mut out);
        let want = &v * nalgebra::DVector::from_column_slice(&x);
        assert!(out.iter().zip(want.iter()).all(|(a, b)| (a - b).norm() < 1e-14));
        assert_eq!(v[(basis_index(2), basis_index(-2))], ZERO);
        assert_eq!(v[(basis_index(1), basis_index(-1))], c(0.2, 0.3));
    }

    #[test]
    fn complex_potential_is_rejected() {
        let q = CirclePotential::new(vec![CircleMode { n: 1, profile: ScalarProfile::constant(1.0) }]);
        assert!(CircleGenerator::new(4, q).is_err());
    }

    #[test]
    fn free_flow_is_a_single_phase() {
        let g = CircleGenerator::new(4, CirclePotential::zero()).unwrap();
        let sol = evolve_circle(&g, 1.5, &TimeGrid::new(vec![0.0, 2.0]).unwrap(), &ModeCoefficients::delta(1, 1), &EvolveOptions::default()).unwrap();
        let want = Complex64::from_polar(1.0, 3.0);
        assert!((sol.last().get(1) - want).norm() < 1e-14);
        assert!(sol.last().get(-1).norm() < 1e-15);
    }

    #[test]
    fn mean_is_a_scalar_phase() {
        let q = CirclePotential::new(vec![CircleMode { n: 0, profile: ScalarProfile::constant(0.4) }]);
        let g = CircleGenerator::new(2, q).unwrap();
        let sol = evolve_circle(&g, 1.0, &TimeGrid::new(vec![0.0, 1.0]).unwrap(), &ModeCoefficients::delta(0, 0), &EvolveOptions::default()).unwrap();
        assert!((sol.last().get(0) - Complex64::from_polar(1.0, 0.4)).norm() < 1e-14);
    }

    #[test]
    fn even_potential_pair_flow_has_closed_form() {
        let p = ScalarProfile::exponential(c(1.0, 0.0), 1.0);
        let g = CircleGenerator::new(3, CirclePotential::cosine(p.clone(), 2)).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0, 5.0]).unwrap();
        let flow = CorrectionFlow::new(&g, &grid, &EvolveOptions::with_tol(1e-12)).unwrap();
        let psi = &flow.psi_blocks[0][2];
        let want = pair_closed_form(p.fourier_integral(0.0, 0.0, 5.0));
        assert!((psi - want).norm() < 1e-10);
        assert_eq!(flow.psi_blocks[1][2], CMatrix::identity(2, 2));
    }
}
