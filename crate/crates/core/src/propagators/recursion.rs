//! The discrete analogue `X_{n+1} = ρ_n^{-1/2} [[1, γ_n], [-conj γ_n, 1]] diag(z, 1) X_n`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::linalg::{identity, CMatrix};

/// Product of all recursion steps applied to `X_0 = I`.
pub fn discrete_recursion(gammas: &[Complex64], z: Complex64) -> Result<CMatrix> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnimodular(z.norm()));
    }
    let mut x = identity(2);
    for g in gammas {
        let s = 1.0 / (1.0 + g.norm_sqr()).sqrt();
        let one = Complex64::new(s, 0.0);
        let step = CMatrix::from_row_slice(2, 2, &[one * z, g * s, -g.conj() * s * z, one]);
        x = step * x;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::unitarity_defect;
    use rand::{Rng, SeedableRng};

    #[test]
    fn empty_is_identity() {
        assert_eq!(discrete_recursion(&[], Complex64::new(1.0, 0.0)).unwrap(), identity(2));
    }

    #[test]
    fn single_unit_step() {
        let x = discrete_recursion(&[Complex64::new(1.0, 0.0)], Complex64::new(1.0, 0.0)).unwrap();
        let r = 0.5f64.sqrt();
        let want = CMatrix::from_row_slice(2, 2, &[r.into(), r.into(), (-r).into(), r.into()]);
        assert!((x - want).norm() < 1e-15);
    }

    #[test]
    fn random_steps_stay_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let gammas: Vec<Complex64> =
            (0..100).map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
        let x = discrete_recursion(&gammas, Complex64::from_polar(1.0, 0.7)).unwrap();
        assert!(unitarity_defect(&x) < 1e-12);
    }

    #[test]
    fn off_circle_point_is_rejected() {
        assert!(matches!(discrete_recursion(&[], Complex64::new(1.1, 0.0)), Err(Error::NotUnimodular(_))));
    }
}
