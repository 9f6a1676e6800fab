use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Classical adjugate (transposed cofactor matrix).
pub fn adjugate(z: &CMatrix) -> CMatrix {
    let n = z.nrows();
    assert_eq!(n, z.ncols(), "adjugate needs a square matrix");
    assert!(n >= 1);
    if n == 1 {
        return CMatrix::from_element(1, 1, ONE);
    }
    let mut adj = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = z.clone().remove_row(j).remove_column(i);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(i, j)] = minor.determinant() * sign;
        }
    }
    adj
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Frobenius norm of `X*X - I`, an upper bound for the operator-norm defect.
pub fn unitarity_defect(x: &CMatrix) -> f64 {
    (x.adjoint() * x - identity(x.nrows())).norm()
}

/// Frobenius norm of `M - M*`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `exp(i G)` for Hermitian `G`, through its eigendecomposition; the result
/// is unitary to rounding.
pub fn exp_i_hermitian(g: &CMatrix) -> CMatrix {
    let n = g.nrows();
    if n == 1 {
        return CMatrix::from_element(1, 1, Complex64::from_polar(1.0, g[(0, 0)].re));
    }
    // Symmetrize first so rounding in the caller cannot leak into the basis.
    let h = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let u = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, *l)).collect();
    let mut ud = u.clone();
    for (j, p) in phases.iter().enumerate() {
        for i in 0..n {
            ud[(i, j)] *= *p;
        }
    }
    ud * u.adjoint()
}

/// General matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    if !norm.is_finite() || norm > 600.0 {
        return Err(Error::ExpOverflow(norm));
    }
    Ok(a.exp())
}

/// Frobenius norm of `Z* J Z - J` with `J = diag(1, -1)`.
pub fn j_defect(z: &CMatrix) -> f64 {
    let j = diag(&[ONE, -ONE]);
    (z.adjoint() * &j * z - j).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn adjugate_of_identity_and_diagonal() {
        assert_eq!(adjugate(&identity(3)), identity(3));
        let d = diag(&[c(2.0, 0.0), c(0.0, 3.0)]);
        assert_eq!(adjugate(&d), diag(&[c(0.0, 3.0), c(2.0, 0.0)]));
    }

    #[test]
    fn adjugate_times_matrix_is_determinant() {
        let z = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.1 - 0.4, ((i + 2 * j) % 5) as f64 * 0.2));
        let prod = &z * adjugate(&z);
        let want = identity(4) * z.determinant();
        assert!((prod - &want).norm() <= 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn hermitian_exponential_is_unitary_and_correct() {
        let g = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(i as f64, 0.0)
            } else if i < j {
                c(0.3, 0.1 * (i + j) as f64)
            } else {
                c(0.3, -0.1 * (i + j) as f64)
            }
        });
        let u = exp_i_hermitian(&g);
        assert!(unitarity_defect(&u) < 1e-14);
        let v = expm(&(g * I)).unwrap();
        assert!((u - v).norm() < 1e-13);
    }

    #[test]
    fn diagonal_phase() {
        let u = exp_i_hermitian(&diag(&[c(0.0, 0.0), c(2.0, 0.0)]));
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn op_norm_of_diagonal() {
        assert!((op_norm(&diag(&[c(0.5, 0.0), c(0.0, -2.0)])) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn expm_guards_overflow() {
        assert!(expm(&(identity(2) * c(1000.0, 0.0))).is_err());
    }
}
