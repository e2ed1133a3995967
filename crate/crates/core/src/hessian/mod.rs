//! Discrete complex Hessian `u_{jk̄}`, the Monge-Ampère determinant,
//! plurisubharmonicity tests and comparison-principle utilities.

mod gaveau;
pub mod herm;
mod stencil;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{GridDomain, NodeClass};
use crate::{Error, Result};

pub use gaveau::{analytic_minimizer, gaveau_value, gaveau_value_sampled, DualMatrixSet};
pub use herm::CMatrix;
pub use stencil::HessianStencil;
pub(crate) use stencil::entry_index;

/// Stencil for `grid`, built on first use.
pub fn stencil(grid: &GridDomain) -> &HessianStencil {
    grid.stencil.get_or_init(|| HessianStencil::build(grid))
}

/// Real grid function. The Hessian stencil reads interior node values plus
/// the Dirichlet trace at boundary crossing points; the trace is zero for
/// every solver output and for fields built from interior values.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<GridDomain>,
    values: Vec<f64>,
    /// Dirichlet data at the stencil's boundary crossing points; `None` is zero.
    trace: Option<Arc<Vec<f64>>>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<GridDomain>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.node_count()],
            trace: None,
        }
    }

    /// Sample `f` at every node and at the boundary crossing points, so the
    /// discrete Hessian sees the true Dirichlet trace of `f`.
    pub fn from_fn(grid: &Arc<GridDomain>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.real_dim()];
        let values = (0..grid.node_count())
            .map(|idx| {
                grid.coords_into(idx, &mut x);
                f(&x)
            })
            .collect();
        let trace = stencil(grid).crossings().iter().map(|p| f(p)).collect();
        Self {
            grid: grid.clone(),
            values,
            trace: Some(Arc::new(trace)),
        }
    }

    /// Sample `f` at interior nodes; zero elsewhere.
    pub fn from_fn_interior(grid: &Arc<GridDomain>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let mut x = vec![0.0; grid.real_dim()];
        for &idx in grid.interior() {
            grid.coords_into(idx, &mut x);
            out.values[idx] = f(&x);
        }
        out
    }

    pub fn from_values(grid: &Arc<GridDomain>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.node_count());
        Self {
            grid: grid.clone(),
            values,
            trace: None,
        }
    }

    /// Values listed in interior order; zero elsewhere.
    pub fn from_interior(grid: &Arc<GridDomain>, interior: &[f64]) -> Self {
        assert_eq!(interior.len(), grid.interior().len());
        let mut out = Self::zeros(grid);
        for (&idx, &v) in grid.interior().iter().zip(interior) {
            out.values[idx] = v;
        }
        out
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Dirichlet data at boundary crossings, if non-zero.
    pub fn trace(&self) -> Option<&[f64]> {
        self.trace.as_deref().map(|v| v.as_slice())
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.grid.interior().iter().map(|&i| self.values[i]).collect()
    }

    /// Sup norm over interior nodes.
    pub fn sup_norm(&self) -> f64 {
        self.grid
            .interior()
            .iter()
            .map(|&i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    pub fn min_interior(&self) -> f64 {
        self.grid
            .interior()
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_interior(&self) -> f64 {
        self.grid
            .interior()
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, theta: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| theta * v).collect(),
            trace: self
                .trace
                .as_ref()
                .map(|t| Arc::new(t.iter().map(|v| theta * v).collect())),
        }
    }

    /// Sup over interior nodes of `|self - other|`.
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.grid
            .interior()
            .iter()
            .map(|&i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Copy with every non-interior value set to zero.
    pub fn with_zero_trace(&self) -> Self {
        let mut out = self.clone();
        out.trace = None;
        for (idx, v) in out.values.iter_mut().enumerate() {
            if self.grid.class(idx) != NodeClass::Interior {
                *v = 0.0;
            }
        }
        out
    }

    /// Largest `|value|` over boundary and exterior nodes and crossing points.
    pub fn boundary_trace_sup(&self) -> f64 {
        let nodes = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.grid.class(*idx) != NodeClass::Interior)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        self.trace()
            .into_iter()
            .flatten()
            .fold(nodes, |m, v| m.max(v.abs()))
    }

    /// Sup of the centred-difference gradient over interior nodes.
    pub fn gradient_sup(&self) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let mut best: f64 = 0.0;
        for &idx in g.interior() {
            let mut s = 0.0;
            for a in 0..g.real_dim() {
                let up = g.neighbor(idx, &[(a, 1)]).map_or(0.0, |i| self.values[i]);
                let down = g.neighbor(idx, &[(a, -1)]).map_or(0.0, |i| self.values[i]);
                let d = (up - down) / (2.0 * h);
                s += d * d;
            }
            best = best.max(s.sqrt());
        }
        best
    }
}

/// Per-interior-node Hermitian `n × n` matrix, stored as a real diagonal and a
/// strictly lower triangle so that `M = M*` holds structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    n: usize,
    diag: Vec<f64>,
    lower: Vec<Complex64>,
}

impl HermitianField {
    pub fn new(n: usize, len: usize) -> Self {
        Self {
            n,
            diag: vec![0.0; len * n],
            lower: vec![Complex64::new(0.0, 0.0); len * n * (n - 1) / 2],
        }
    }

    pub fn from_parts(n: usize, diag: Vec<f64>, lower: Vec<Complex64>) -> Result<Self> {
        let len = diag.len() / n.max(1);
        if diag.len() != len * n || lower.len() != len * n * (n - 1) / 2 {
            return Err(Error::Format("hermitian field buffer sizes disagree".into()));
        }
        Ok(Self { n, diag, lower })
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.diag.len() / self.n
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn lower(&self) -> &[Complex64] {
        &self.lower
    }

    fn lower_slot(&self, k: usize, j: usize, l: usize) -> usize {
        debug_assert!(j > l);
        k * self.n * (self.n - 1) / 2 + j * (j - 1) / 2 + l
    }

    /// Entry `(j, l)` at interior position `k`.
    pub fn entry(&self, k: usize, j: usize, l: usize) -> Complex64 {
        use std::cmp::Ordering::*;
        match j.cmp(&l) {
            Equal => Complex64::new(self.diag[k * self.n + j], 0.0),
            Greater => self.lower[self.lower_slot(k, j, l)],
            Less => self.lower[self.lower_slot(k, l, j)].conj(),
        }
    }

    /// Set entry `(j, l)` with `j ≥ l`; the diagonal keeps only the real part.
    pub fn set(&mut self, k: usize, j: usize, l: usize, v: Complex64) {
        if j == l {
            self.diag[k * self.n + j] = v.re;
        } else {
            let slot = self.lower_slot(k, j, l);
            self.lower[slot] = v;
        }
    }

    pub fn matrix(&self, k: usize) -> CMatrix {
        DMatrix::from_fn(self.n, self.n, |j, l| self.entry(k, j, l))
    }

    pub fn det(&self, k: usize) -> f64 {
        let n = self.n;
        match n {
            1 => self.diag[k],
            2 => self.diag[2 * k] * self.diag[2 * k + 1] - self.lower[k].norm_sqr(),
            _ => herm::det(&self.matrix(k)),
        }
    }

    pub fn min_eigenvalue(&self, k: usize) -> f64 {
        match self.n {
            1 => self.diag[k],
            2 => {
                let (a, c) = (self.diag[2 * k], self.diag[2 * k + 1]);
                0.5 * (a + c) - (0.25 * (a - c) * (a - c) + self.lower[k].norm_sqr()).sqrt()
            }
            _ => herm::min_eigenvalue(&self.matrix(k)),
        }
    }

    pub fn trace(&self, k: usize) -> f64 {
        self.diag[k * self.n..(k + 1) * self.n].iter().sum()
    }
}

/// Discrete complex Hessian at every interior node.
pub fn complex_hessian(u: &ScalarField) -> HermitianField {
    let grid = u.grid();
    let st = stencil(grid);
    let n = grid.complex_dim();
    let m = grid.interior().len();
    let mut out = HermitianField::new(n, m);
    for k in 0..m {
        for j in 0..n {
            for l in 0..=j {
                out.set(k, j, l, st.apply_entry(k, entry_index(j, l), u.values(), u.trace()));
            }
        }
    }
    out
}

/// Pointwise `det(u_{jk̄})`, zero off the interior. May be negative where `u`
/// is not plurisubharmonic.
pub fn ma_det(u: &ScalarField) -> ScalarField {
    let hess = complex_hessian(u);
    let grid = u.grid();
    let mut out = ScalarField::zeros(grid);
    for (k, &idx) in grid.interior().iter().enumerate() {
        out.values[idx] = hess.det(k);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PshReport {
    pub is_psh: bool,
    /// Smallest Hessian eigenvalue over interior nodes.
    pub min_eigenvalue: f64,
    pub worst_node: usize,
}

/// Default plurisubharmonicity tolerance `10·h²`.
pub fn default_psh_tol(grid: &GridDomain) -> f64 {
    10.0 * grid.h() * grid.h()
}

pub fn is_psh(u: &ScalarField, tol: f64) -> PshReport {
    psh_report(u.grid(), &complex_hessian(u), tol)
}

pub(crate) fn psh_report(grid: &GridDomain, hess: &HermitianField, tol: f64) -> PshReport {
    let mut worst = (f64::INFINITY, grid.interior()[0]);
    for (k, &idx) in grid.interior().iter().enumerate() {
        let ev = hess.min_eigenvalue(k);
        if ev < worst.0 {
            worst = (ev, idx);
        }
    }
    PshReport {
        is_psh: worst.0 >= -tol,
        min_eigenvalue: worst.0,
        worst_node: worst.1,
    }
}

/// `L_a u = (1/n) Σ a_{jk̄} u_{jk̄}` at every interior node.
pub fn apply_la(a: &CMatrix, u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let n = grid.complex_dim();
    assert_eq!(a.nrows(), n);
    let hess = complex_hessian(u);
    let mut out = ScalarField::zeros(grid);
    for (k, &idx) in grid.interior().iter().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for l in 0..n {
                s += a[(j, l)] * hess.entry(k, j, l);
            }
        }
        out.values[idx] = s.re / n as f64;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    /// `min (u - v)` over interior nodes.
    pub min_gap: f64,
    pub worst_node: usize,
}

/// Discrete comparison principle: with `u`, `v` plurisubharmonic,
/// `det u ≤ det v` and `u ≥ v` on the boundary layer, checks
/// `u ≥ v - tol·(1 + ‖v‖)` on the interior. Preconditions are verified
/// first and reported with the offending node.
pub fn check_comparison(u: &ScalarField, v: &ScalarField, tol: f64) -> Result<ComparisonReport> {
    let grid = u.grid();
    for (name, f) in [("u", u), ("v", v)] {
        let rep = is_psh(f, tol);
        if !rep.is_psh {
            return Err(Error::PreconditionViolated {
                node: rep.worst_node,
                what: format!("{name} not plurisubharmonic (min eigenvalue {:e})", rep.min_eigenvalue),
            });
        }
    }
    let (du, dv) = (ma_det(u), ma_det(v));
    for &idx in grid.interior() {
        if du.values[idx] > dv.values[idx] + tol {
            return Err(Error::PreconditionViolated {
                node: idx,
                what: format!(
                    "det(u) = {} exceeds det(v) = {}",
                    du.values[idx], dv.values[idx]
                ),
            });
        }
    }
    for idx in 0..grid.node_count() {
        if grid.class(idx) == NodeClass::Boundary && u.values[idx] < v.values[idx] - tol {
            return Err(Error::PreconditionViolated {
                node: idx,
                what: "u < v on the boundary layer".into(),
            });
        }
    }
    let slack = tol * (1.0 + v.sup_norm());
    let mut worst = (f64::INFINITY, grid.interior()[0]);
    for &idx in grid.interior() {
        let gap = u.values[idx] - v.values[idx];
        if gap < worst.0 {
            worst = (gap, idx);
        }
    }
    Ok(ComparisonReport {
        holds: worst.0 >= -slack,
        min_gap: worst.0,
        worst_node: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};

    fn norm2(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    /// Interior nodes whose full Hessian stencil stays inside.
    fn deep_nodes(grid: &GridDomain) -> Vec<usize> {
        let d = grid.real_dim();
        grid.interior()
            .iter()
            .cloned()
            .filter(|&idx| {
                (0..d).all(|a| {
                    (0..d).all(|b| {
                        [-1isize, 1].iter().all(|&s| {
                            [-1isize, 1].iter().all(|&t| {
                                let steps: Vec<(usize, isize)> =
                                    if a == b { vec![(a, s)] } else { vec![(a, s), (b, t)] };
                                grid.neighbor(idx, &steps)
                                    .map_or(false, |nb| grid.class(nb) == NodeClass::Interior)
                            })
                        })
                    })
                })
            })
            .collect()
    }

    #[test]
    fn identity_for_squared_modulus() {
        for (n, h) in [(1, 0.1), (2, 0.25)] {
            let grid = build_grid(DomainSpec::centered_ball(n, 1.0), h).unwrap();
            // |z|² - 1 vanishes on the sphere: exact at every interior node.
            let u = ScalarField::from_fn(&grid, |x| norm2(x) - 1.0);
            let hess = complex_hessian(&u);
            for k in 0..grid.interior().len() {
                for j in 0..n {
                    for l in 0..n {
                        let want = if j == l { 1.0 } else { 0.0 };
                        assert!((hess.entry(k, j, l) - Complex64::new(want, 0.0)).norm() < 1e-9);
                    }
                }
            }
            // |z|² sampled with its trace: exact at every interior node.
            let u = ScalarField::from_fn(&grid, norm2);
            let hess = complex_hessian(&u);
            for k in 0..grid.interior().len() {
                assert!((hess.det(k) - 1.0).abs() < 1e-9);
            }
            // Interior-only samples see a zero trace: exact away from the boundary layer.
            let u = ScalarField::from_fn_interior(&grid, norm2);
            let hess = complex_hessian(&u);
            let deep = deep_nodes(&grid);
            assert!(!deep.is_empty());
            for idx in deep {
                let k = grid.interior_position(idx);
                assert!((hess.det(k) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pluriharmonic_quadratic_has_zero_hessian() {
        let grid = build_grid(DomainSpec::centered_ball(2, 1.0), 0.25).unwrap();
        let u = ScalarField::from_fn(&grid, |x| x[0] * x[0] - x[1] * x[1] + x[0] * x[2] - x[1] * x[3]);
        let hess = complex_hessian(&u);
        for idx in deep_nodes(&grid) {
            let m = hess.matrix(grid.interior_position(idx));
            assert!(m.iter().all(|c| c.norm() < 1e-10));
        }
    }

    #[test]
    fn n1_determinant_is_quarter_laplacian() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.1).unwrap();
        let u = ScalarField::from_fn_interior(&grid, |x| (x[0] * 3.0).sin() * (1.0 - norm2(x)));
        let det = ma_det(&u);
        let h = grid.h();
        for &idx in grid.interior() {
            let mut lap = 0.0;
            for a in 0..2 {
                let tm = grid.boundary_offset(idx, a, false);
                let tp = grid.boundary_offset(idx, a, true);
                let up = if tp < 1.0 { 0.0 } else { u.value(grid.neighbor(idx, &[(a, 1)]).unwrap()) };
                let um = if tm < 1.0 { 0.0 } else { u.value(grid.neighbor(idx, &[(a, -1)]).unwrap()) };
                let u0 = u.value(idx);
                lap += 2.0 * ((up - u0) / (tp * h) - (u0 - um) / (tm * h)) / ((tp + tm) * h);
            }
            assert!((det.value(idx) - 0.25 * lap).abs() <= 1e-12 * (1.0 + lap.abs()));
        }
    }

    #[test]
    fn psh_examples() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.1).unwrap();
        let u = ScalarField::from_fn(&grid, |x| norm2(x) - 1.0);
        assert!(is_psh(&u, 0.0).is_psh);
        let v = ScalarField::from_fn(&grid, |x| -norm2(x));
        let rep = is_psh(&v, 1e-3);
        assert!(!rep.is_psh);
        let w = ScalarField::from_fn(&grid, |x| x[0] * x[0] - x[1] * x[1]);
        let rep = is_psh(&w, grid.h());
        assert!(rep.is_psh);
        assert!(rep.min_eigenvalue.abs() < 1e-9);
    }

    #[test]
    fn la_with_identity_is_trace_over_n() {
        let grid = build_grid(DomainSpec::centered_ball(2, 1.0), 0.25).unwrap();
        let u = ScalarField::from_fn(&grid, |x| norm2(x) - 1.0);
        let id = CMatrix::identity(2, 2);
        let la = apply_la(&id, &u);
        for &idx in grid.interior() {
            assert!((la.value(idx) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn comparison_examples() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.1).unwrap();
        let u = ScalarField::from_fn_interior(&grid, |x| norm2(x) - 1.0);
        let v = u.scaled(2.0);
        assert!(check_comparison(&u, &v, 1e-9).unwrap().holds);
        assert!(check_comparison(&u, &u, 1e-9).unwrap().holds);
        // Swapped: det(v) > det(u) violates the precondition.
        let err = check_comparison(&v, &u, 1e-9).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated { .. }));
    }
}
