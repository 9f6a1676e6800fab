//! The `k`-independent flow of an adjacent pair with equal frequencies.

use num_complex::Complex64;

use super::{evolve, EvolveOptions, Generator, Propagator};
use crate::error::Result;
use crate::numerics::grid::TimeGrid;
use crate::numerics::linalg::{CMatrix, I};
use crate::potential::two_by_two;
use crate::profile::ScalarProfile;

/// `W' = i[[0, v], [conj v, 0]] W`, `W(t_0) = I`.
pub fn evolve_pair(v: &ScalarProfile, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Propagator> {
    let g = Generator::from_potential(vec![0.0, 0.0], two_by_two(v.clone()))?;
    evolve(&g, Complex64::new(0.0, 0.0), grid, opts)
}

/// Closed form of the pair flow when `v` keeps a fixed phase (mod π): with
/// `s = ∫_a^b v`, `W = cos|s| I + i sin|s| [[0, s/|s|], [conj s/|s|, 0]]`.
pub fn pair_closed_form(integral: Complex64) -> CMatrix {
    let r = integral.norm();
    let u = if r == 0.0 { Complex64::new(1.0, 0.0) } else { integral / r };
    let (s, c) = r.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c.into(), I * s * u, I * s * u.conj(), c.into()])
}

/// Whether `v` has constant phase mod π on the sample points of `grid`.
pub fn has_fixed_phase(v: &ScalarProfile, grid: &TimeGrid) -> bool {
    let mut reference: Option<Complex64> = None;
    let samples = grid.with_max_step(0.05);
    for &t in samples.nodes() {
        let z = v.eval(t);
        if z.norm() < 1e-300 {
            continue;
        }
        let u = z / z.norm();
        match reference {
            None => reference = Some(u),
            Some(r) => {
                if (u * r.conj()).im.abs() > 1e-12 {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::unitarity_defect;

    #[test]
    fn zero_coupling_is_identity() {
        let w = evolve_pair(&ScalarProfile::Zero, &TimeGrid::uniform(0.0, 3.0, 3), &EvolveOptions::default()).unwrap();
        assert!((w.last() - CMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn constant_imaginary_coupling_rotates_one_radian() {
        let v = ScalarProfile::Constant { amp: Complex64::new(0.0, 0.1) };
        let grid = TimeGrid::uniform(0.0, 10.0, 1);
        let w = evolve_pair(&v, &grid, &EvolveOptions::default()).unwrap();
        let want = pair_closed_form(v.fourier_integral(0.0, 0.0, 10.0));
        assert!((w.last() - &want).norm() < 1e-10);
        let (s, c) = 1f64.sin_cos();
        assert!((want[(0, 1)] - Complex64::new(-s, 0.0)).norm() < 1e-15);
        assert!((want[(1, 0)] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((want[(0, 0)] - Complex64::new(c, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decaying_complex_coupling_is_unitary_and_matches_closed_form() {
        let amp = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        let v = ScalarProfile::exponential(amp, 1.0);
        let grid = TimeGrid::uniform(0.0, 8.0, 4);
        assert!(has_fixed_phase(&v, &grid));
        let w = evolve_pair(&v, &grid, &EvolveOptions::with_tol(1e-12)).unwrap();
        assert!(w.unitarity_defect < 1e-10);
        let want = pair_closed_form(v.fourier_integral(0.0, 0.0, 8.0));
        assert!((w.last() - &want).norm() < 1e-10, "{} {}", w.last(), want);
        assert!(unitarity_defect(w.last()) < 1e-10);
    }
}
