//! Sparse LU factorization of the Newton and Poisson systems (backed by faer).

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::{Error, Result};

/// Square sparse matrix accumulated from `(row, col, value)` triplets.
pub(crate) struct SparseBuilder {
    n: usize,
    triplets: Vec<Triplet<usize, usize, f64>>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.triplets.push(Triplet::new(row, col, value));
    }

    pub fn factor(mut self) -> Result<Factorization> {
        // Merge duplicates ourselves so the factorization sees one entry per slot.
        self.triplets.sort_by(|a, b| (a.col, a.row).cmp(&(b.col, b.row)));
        let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(self.triplets.len());
        for t in self.triplets {
            match merged.last_mut() {
                Some(last) if last.row == t.row && last.col == t.col => last.val += t.val,
                _ => merged.push(t),
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &merged)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        Ok(Factorization { n: self.n, lu })
    }
}

pub(crate) struct Factorization {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

impl Factorization {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.n);
        let mut x = faer::Col::<f64>::from_fn(self.n, |i| rhs[i]);
        self.lu.solve_in_place(x.as_mat_mut());
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular system".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let mut b = SparseBuilder::new(3);
        for (r, c, v) in [(0, 0, 4.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 5.0), (1, 2, 1.0), (2, 2, 3.0), (2, 2, 1.0)] {
            b.add(r, c, v);
        }
        let f = b.factor().unwrap();
        let x = f.solve(&[5.0, 8.0, 4.0]).unwrap();
        for (xi, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - want).abs() < 1e-14);
        }
    }
}
