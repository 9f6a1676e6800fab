//! Seeded random scenarios.
//!
//! Draws come from ChaCha8 with the seed as key and the scenario index as
//! stream number, so scenario `i` is the same whatever order or thread it
//! runs in.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circle::{evolve_circle, CircleGenerator};
use crate::error::Result;
use crate::numerics::fourier::ModeCoefficients;
use crate::numerics::grid::TimeGrid;
use crate::numerics::linalg::{self, CMatrix};
use crate::potential::SparseHermitian;
use crate::profile::ScalarProfile;
use crate::propagators::krein::evolve_krein;
use crate::propagators::{evolve, EvolveOptions, Generator};
use crate::report::{BoundReport, ReportRow};
use crate::spectral_limits::{model31, remark1_defect};
use crate::transport::{transport_solution, CirclePotential};

/// Generator for draw `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn complex_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU))
}

/// A decaying, step or oscillating profile with `|amp| ≤ 1`.
pub fn random_profile(rng: &mut ChaCha8Rng) -> ScalarProfile {
    let amp = complex_in_disc(rng, 1.0);
    match rng.random_range(0..5) {
        0 => ScalarProfile::PowerDecay { amp, power: rng.random_range(0.6..1.5) },
        1 => ScalarProfile::Exponential { amp, rate: rng.random_range(0.1..2.0) },
        2 => {
            let start = rng.random_range(0.0..2.0);
            ScalarProfile::Indicator { amp, start, end: start + rng.random_range(0.5..4.0) }
        }
        3 => ScalarProfile::Oscillating { amp, power: rng.random_range(0.6..1.2), omega: rng.random_range(0.0..3.0), phase: rng.random_range(0.0..3.0) },
        _ => ScalarProfile::Steps {
            widths: (0..3).map(|_| rng.random_range(0.3..2.0)).collect(),
            values: (0..3).map(|_| complex_in_disc(rng, 1.0)).collect(),
        },
    }
}

/// Random matrix with operator norm in `(0, 1]`; `exact` forces norm 1.
pub fn random_contraction(rng: &mut ChaCha8Rng, n: usize, exact: bool) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let r = if exact { 1.0 } else { rng.random_range(0.05..1.0) };
    let s = r / linalg::op_norm(&a);
    a * Complex64::new(s, 0.0)
}

/// `e^{iH}` for a random Hermitian `H`.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
    linalg::exp_i_hermitian(&((&a + a.adjoint()) * Complex64::new(0.5, 0.0)))
}

/// `‖adj Z‖ ≤ 1` for `count` random `dim × dim` contractions: every tenth
/// has norm exactly 1 and every tenth (offset 5) is unitary, where the
/// bound is attained; `tol` is the allowed excess. `adj(Z) Z = det Z · I` is recorded alongside.
pub fn adjugate_contraction_check(seed: u64, count: usize, dim: usize, tol: f64) -> BoundReport {
    let mut rows = Vec::with_capacity(count);
    let mut identity_defect: f64 = 0.0;
    for i in 0..count {
        let mut rng = stream(seed, i as u64);
        let z = if i % 10 == 5 { random_unitary(&mut rng, dim) } else { random_contraction(&mut rng, dim, i % 10 == 0) };
        let adj = linalg::adjugate(&z);
        let det = z.determinant();
        identity_defect = identity_defect.max((&adj * &z - linalg::identity(dim) * det).norm());
        rows.push(ReportRow { param: i as f64, lhs: linalg::op_norm(&adj), rhs: linalg::op_norm(&z) });
    }
    let worst = rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
    BoundReport::upper("adjugate_contraction", worst, 1.0 + tol)
        .with_rows(rows)
        .with_note(format!("max ‖adj(Z)Z − det(Z)I‖ = {identity_defect:.2e}"))
}

/// Which flow a random scenario exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Model2x2,
    Nxn,
    Krein,
    Circle,
    Transport,
}

const KINDS: [FlowKind; 5] = [FlowKind::Model2x2, FlowKind::Nxn, FlowKind::Krein, FlowKind::Circle, FlowKind::Transport];

/// Structural defect of scenario `index`: unitarity (`J`-unitarity for the
/// Krein system, norm conservation for the circle flows) and, for the 2×2
/// model, the `x21`/`x22` symmetry.
pub fn random_flow_defects(seed: u64, index: u64, opts: &EvolveOptions) -> Result<(FlowKind, f64, Option<f64>)> {
    let mut rng = stream(seed, index);
    let kind = KINDS[index as usize % KINDS.len()];
    let k: f64 = rng.random_range(-5.0..5.0);
    let t: f64 = rng.random_range(1.0..8.0);
    let grid = TimeGrid::new(vec![0.0, t])?;
    let q = random_profile(&mut rng);
    Ok(match kind {
        FlowKind::Model2x2 => {
            let p = evolve(&model31(q), Complex64::new(k, 0.0), &grid, opts)?;
            (kind, p.unitarity_defect, Some(remark1_defect(p.last(), k, t)))
        }
        FlowKind::Nxn => {
            let n = rng.random_range(3..=6);
            let mut lams: Vec<f64> = Vec::with_capacity(n);
            let mut l = 0.0;
            for _ in 0..n {
                lams.push(l);
                l += rng.random_range(0.5..3.0);
            }
            let second = random_profile(&mut rng).scaled(Complex64::new(0.5, 0.0));
            let g = Generator::from_potential(lams, SparseHermitian::toeplitz(n, &[q, second]))?;
            (kind, evolve(&g, Complex64::new(k, 0.0), &grid, opts)?.unitarity_defect, None)
        }
        FlowKind::Krein => (kind, linalg::j_defect(&evolve_krein(&q, k, &grid, opts)?), None),
        FlowKind::Circle => {
            let real = ScalarProfile::PowerDecay { amp: Complex64::new(rng.random_range(0.2..1.0), 0.0), power: rng.random_range(0.7..1.5) };
            let v = CirclePotential::cosine(real, rng.random_range(1..=2));
            let g = CircleGenerator::new(24, v)?;
            let psi0 = ModeCoefficients::delta(0, 0);
            (kind, evolve_circle(&g, k, &grid, &psi0, opts)?.norm_defect, None)
        }
        FlowKind::Transport => {
            let imag = ScalarProfile::PowerDecay { amp: Complex64::new(0.0, rng.random_range(0.1..1.0)), power: rng.random_range(0.7..1.5) };
            let v = CirclePotential::cosine(imag, rng.random_range(1..=3));
            let u = transport_solution(&v, &ModeCoefficients::delta(0, 0), t, k, 60)?;
            (kind, (u.l2_norm() - 1.0).abs(), None)
        }
    })
}

/// Unitarity and symmetry over `count` random scenarios, both below `tol`.
pub fn unitarity_suite_check(seed: u64, count: usize, tol: f64, opts: &EvolveOptions) -> Result<BoundReport> {
    let mut rows = Vec::with_capacity(count);
    let mut worst_sym: f64 = 0.0;
    for i in 0..count as u64 {
        let (_, d, sym) = random_flow_defects(seed, i, opts)?;
        if let Some(s) = sym {
            worst_sym = worst_sym.max(s);
        }
        rows.push(ReportRow { param: i as f64, lhs: d, rhs: tol });
    }
    let worst = rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
    let unit = BoundReport::upper("unitarity", worst, tol).with_rows(rows);
    let sym = BoundReport::upper("remark1_symmetry", worst_sym, tol);
    Ok(BoundReport::combine("unitarity_suite", vec![unit, sym]).with_tolerance("defect", tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_order() {
        let a: f64 = stream(3, 7).random();
        let _: f64 = stream(3, 6).random();
        assert_eq!(a, stream(3, 7).random::<f64>());
        assert_ne!(a, stream(3, 8).random::<f64>());
    }

    #[test]
    fn contractions_have_norm_at_most_one() {
        let mut rng = stream(1, 0);
        for exact in [true, false] {
            let z = random_contraction(&mut rng, 4, exact);
            assert!(linalg::op_norm(&z) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn every_flow_kind_is_structure_preserving() {
        let opts = EvolveOptions::default();
        for i in 0..5 {
            let (_, d, sym) = random_flow_defects(11, i, &opts).unwrap();
            assert!(d < 1e-8, "scenario {i}: {d}");
            assert!(sym.unwrap_or(0.0) < 1e-8);
        }
    }
}
