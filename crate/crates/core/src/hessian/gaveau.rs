//! Gaveau's dual description of the Monge-Ampère operator:
//! `det(M)^{1/n} = (1/n) inf { tr(a·M) : a > 0 Hermitian, det a ≥ 1 }`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::herm::{self, CMatrix};
use crate::{Error, Result};

pub const DEFAULT_DUAL_SAMPLES: usize = 64;
pub const DEFAULT_DUAL_SEED: u64 = 0x6a7e_a0;

/// Finite family of Hermitian positive definite matrices with `det ≥ 1`.
/// Always contains the identity.
#[derive(Debug, Clone)]
pub struct DualMatrixSet {
    n: usize,
    members: Vec<CMatrix>,
}

impl DualMatrixSet {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            members: vec![CMatrix::identity(n, n)],
        }
    }

    /// Identity plus `count` random `Q·diag(d)·Q*` with `Q` unitary and
    /// `Π d = 1`; `log d` has standard deviation `spread`.
    pub fn sampled(n: usize, count: usize, spread: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = Self::identity(n);
        for _ in 0..count {
            let g = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            });
            let q = g.qr().q();
            let mut logs: Vec<f64> = (0..n)
                .map(|_| { let s: f64 = StandardNormal.sample(&mut rng); spread * s })
                .collect();
            let mean = logs.iter().sum::<f64>() / n as f64;
            logs.iter_mut().for_each(|l| *l -= mean);
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                logs.iter().map(|l| Complex64::new(l.exp(), 0.0)),
            ));
            let a = &q * d * q.adjoint();
            // Symmetrize away rounding so the stored member is exactly Hermitian.
            let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
            set.members.push(a);
        }
        set
    }

    /// The default family: 64 samples at unit spread, fixed seed.
    pub fn default_for(n: usize) -> Self {
        Self::sampled(n, DEFAULT_DUAL_SAMPLES, 1.0, DEFAULT_DUAL_SEED)
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Add a member after checking positivity and `det ≥ 1 - 10⁻¹²`.
    pub fn push(&mut self, a: CMatrix) -> Result<()> {
        if a.nrows() != self.n || !herm::is_hermitian(&a, 1e-12) {
            return Err(Error::InvalidDomain("dual matrix must be n × n Hermitian".into()));
        }
        let min_eigenvalue = herm::min_eigenvalue(&a);
        if min_eigenvalue <= 0.0 {
            return Err(Error::NotPositiveSemiDefinite { min_eigenvalue });
        }
        if herm::det(&a) < 1.0 - 1e-12 {
            return Err(Error::InvalidDomain(format!("dual matrix det {} < 1", herm::det(&a))));
        }
        self.members.push(a);
        Ok(())
    }

    /// `min over members of (1/n)·tr(a·M)`.
    pub fn min_trace(&self, m: &CMatrix) -> f64 {
        self.members
            .iter()
            .map(|a| trace_product(a, m) / self.n as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

fn trace_product(a: &CMatrix, m: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * m[(k, i)];
        }
    }
    s.re
}

/// Analytic minimizer `det(M)^{1/n} · M⁻¹` for non-singular positive `M`.
pub fn analytic_minimizer(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let d = herm::det(m);
    if !(d > 0.0) {
        return None;
    }
    let inv = m.clone().try_inverse()?;
    let a = inv * Complex64::new(d.powf(1.0 / n as f64), 0.0);
    Some((&a + a.adjoint()) * Complex64::new(0.5, 0.0))
}

fn check_psd(m: &CMatrix) -> Result<()> {
    let scale = 1.0 + m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let min_eigenvalue = herm::min_eigenvalue(m);
    if min_eigenvalue < -1e-12 * scale {
        return Err(Error::NotPositiveSemiDefinite { min_eigenvalue });
    }
    Ok(())
}

/// Gaveau value of a positive semi-definite `M`: the minimum of
/// `(1/n)·tr(a·M)` over `duals`, with the analytic minimizer added when `M` is
/// non-singular. Never below `det(M)^{1/n}`.
pub fn gaveau_value(m: &CMatrix, duals: &DualMatrixSet) -> Result<f64> {
    check_psd(m)?;
    let mut best = duals.min_trace(m);
    if let Some(a) = analytic_minimizer(m) {
        best = best.min(trace_product(&a, m) / m.nrows() as f64);
    }
    Ok(best)
}

/// Same as [`gaveau_value`] but restricted to the given duals.
pub fn gaveau_value_sampled(m: &CMatrix, duals: &DualMatrixSet) -> Result<f64> {
    check_psd(m)?;
    Ok(duals.min_trace(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|x| Complex64::new(*x, 0.0)),
        ))
    }

    #[test]
    fn identity_gives_one() {
        let v = gaveau_value(&diag(&[1.0, 1.0]), &DualMatrixSet::identity(2)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diag_one_four_hits_determinant_root() {
        let m = diag(&[1.0, 4.0]);
        let a = analytic_minimizer(&m).unwrap();
        assert!((a[(0, 0)].re - 2.0).abs() < 1e-14 && (a[(1, 1)].re - 0.5).abs() < 1e-14);
        let v = gaveau_value(&m, &DualMatrixSet::identity(2)).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        // Identity alone overestimates: (1 + 4) / 2.
        assert!((gaveau_value_sampled(&m, &DualMatrixSet::identity(2)).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_decreases_towards_zero_with_more_duals() {
        // Same seed, so each family extends the previous one.
        let m = diag(&[0.0, 1.0]);
        let mut last = f64::INFINITY;
        for count in [16, 256, 4096] {
            let v = gaveau_value(&m, &DualMatrixSet::sampled(2, count, 2.0, 7)).unwrap();
            assert!(v >= 0.0);
            assert!(v <= last + 1e-12);
            last = v;
        }
        assert!(last < 0.1, "value {last} did not approach 0");
    }

    #[test]
    fn members_are_admissible() {
        let set = DualMatrixSet::default_for(3);
        assert_eq!(set.len(), DEFAULT_DUAL_SAMPLES + 1);
        for a in set.members() {
            assert!(herm::min_eigenvalue(a) > 0.0);
            assert!(herm::det(a) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let err = gaveau_value(&diag(&[-1.0, 1.0]), &DualMatrixSet::identity(2)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveSemiDefinite { .. }));
    }
}
