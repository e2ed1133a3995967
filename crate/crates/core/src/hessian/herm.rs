//! Small dense Hermitian matrices: determinants, spectra and adjugates, with
//! closed forms for n ≤ 2 and a nalgebra fallback above.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn det(m: &CMatrix) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)].re,
        2 => m[(0, 0)].re * m[(1, 1)].re - m[(1, 0)].norm_sqr(),
        _ => m.clone().determinant().re,
    }
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    match m.nrows() {
        1 => vec![m[(0, 0)].re],
        2 => {
            let (a, c) = (m[(0, 0)].re, m[(1, 1)].re);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + m[(1, 0)].norm_sqr()).sqrt();
            vec![mid - rad, mid + rad]
        }
        _ => {
            let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
            ev.sort_by(|a, b| a.total_cmp(b));
            ev
        }
    }
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues(m)[0]
}

pub fn trace(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Adjugate `adj(M)`, so `M · adj(M) = det(M) · I`. Defined for singular M.
pub fn adjugate(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    match n {
        1 => CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        2 => CMatrix::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]]),
        _ => {
            let mut adj = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let minor = m.clone().remove_row(j).remove_column(i);
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    adj[(i, j)] = minor.determinant() * sign;
                }
            }
            adj
        }
    }
}

/// Hermitian square root of a positive semi-definite matrix.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_forms_match_nalgebra() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, -1.0), c(0.5, 1.0), c(3.0, 0.0)]);
        assert!((det(&m) - m.clone().determinant().re).abs() < 1e-14);
        let ev = eigenvalues(&m);
        let mut reference: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
        reference.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in ev.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-13);
        }
        let prod = &m * adjugate(&m);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { det(&m) } else { 0.0 };
                assert!((prod[(i, j)] - c(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn adjugate_three_by_three() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(4.0, 0.0),
                c(1.0, 1.0),
                c(0.0, -0.5),
                c(1.0, -1.0),
                c(3.0, 0.0),
                c(0.2, 0.0),
                c(0.0, 0.5),
                c(0.2, 0.0),
                c(2.0, 0.0),
            ],
        );
        let prod = &m * adjugate(&m);
        let d = det(&m);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { d } else { 0.0 };
                assert!((prod[(i, j)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
