//! Krein system `Z_t = [[ik, conj q], [q, 0]] Z`, `Z(0) = I`.

use num_complex::Complex64;

use super::EvolveOptions;
use crate::error::{Error, Result};
use crate::numerics::grid::TimeGrid;
use crate::numerics::linalg::{self, CMatrix};
use crate::profile::ScalarProfile;

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9;
const COMMUTATOR_WEIGHT: f64 = 0.144_337_567_297_406_44;

fn generator(q: &ScalarProfile, k: f64, t: f64) -> CMatrix {
    let v = q.eval(t);
    CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, k), v.conj(), v, Complex64::new(0.0, 0.0)])
}

fn run(q: &ScalarProfile, k: f64, nodes: &[f64], h: f64) -> Result<CMatrix> {
    let mut z = linalg::identity(2);
    for w in nodes.windows(2) {
        let m = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
        let hs = (w[1] - w[0]) / m as f64;
        for j in 0..m {
            let t = w[0] + hs * j as f64;
            let a1 = generator(q, k, t + (0.5 - GAUSS_OFFSET) * hs);
            let a2 = generator(q, k, t + (0.5 + GAUSS_OFFSET) * hs);
            let omega = (&a1 + &a2) * Complex64::new(0.5 * hs, 0.0)
                + (&a2 * &a1 - &a1 * &a2) * Complex64::new(COMMUTATOR_WEIGHT * hs * hs, 0.0);
            z = linalg::expm(&omega)? * z;
        }
    }
    Ok(z)
}

/// `Z(T)` at the end of `grid`. Fails if `Z* J Z = J` is violated by more than 1e-9.
pub fn evolve_krein(q: &ScalarProfile, k: f64, grid: &TimeGrid, opts: &EvolveOptions) -> Result<CMatrix> {
    let mut nodes: Vec<f64> = grid.nodes().to_vec();
    nodes.extend(q.breakpoints().into_iter().filter(|t| *t > grid.start() && *t < grid.end()));
    nodes.sort_by(f64::total_cmp);
    let span = grid.end() - grid.start();
    let bound = (0..=16).map(|i| q.eval(grid.start() + span * i as f64 / 16.0).norm()).fold(0.0, f64::max);
    let h0 = opts.initial_step.unwrap_or(0.25 / (1.0 + bound + k.abs().sqrt()));
    let mut coarse = run(q, k, &nodes, h0)?;
    let mut est = f64::INFINITY;
    for level in 1..=opts.max_levels {
        let fine = run(q, k, &nodes, h0 / f64::from(1u32 << level))?;
        est = (&fine - &coarse).norm() / 15.0;
        if est <= opts.tol_per_unit_time * span.max(1.0) {
            let d = linalg::j_defect(&fine);
            if d > 1e-9 * fine.norm().max(1.0) {
                return Err(Error::Invalid(format!("Krein solution lost J-unitarity: defect {d:e}")));
            }
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::RefinementExhausted { levels: opts.max_levels as usize, defect: est / span.max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::j_defect;

    #[test]
    fn free_krein_flow() {
        let z = evolve_krein(&ScalarProfile::Zero, 1.0, &TimeGrid::uniform(0.0, std::f64::consts::PI, 1), &EvolveOptions::default())
            .unwrap();
        let want = linalg::diag(&[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!((&z - want).norm() < 1e-13);
        assert!(j_defect(&z) < 1e-13);
    }

    #[test]
    fn constant_step_is_hyperbolic_rotation() {
        let q = ScalarProfile::indicator(Complex64::new(0.2, 0.0), 0.0, 5.0);
        let z = evolve_krein(&q, 0.0, &TimeGrid::uniform(0.0, 6.0, 1), &EvolveOptions::default()).unwrap();
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        let want = CMatrix::from_row_slice(2, 2, &[c.into(), s.into(), s.into(), c.into()]);
        assert!((&z - want).norm() < 1e-10);
        assert!(j_defect(&z) < 1e-10);
    }

    #[test]
    fn slowly_decaying_coupling_keeps_j_form() {
        let q = ScalarProfile::power(1.0, 1.0);
        let z = evolve_krein(&q, 2.0, &TimeGrid::uniform(0.0, 30.0, 3), &EvolveOptions::default()).unwrap();
        assert!(j_defect(&z) < 1e-9);
    }
}
