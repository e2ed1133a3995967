//! Zero-boundary Dirichlet problems `det(u_{jk̄}) = ψ(z, u)`.
//!
//! The inner solver is a damped Newton method on the concave residual
//! `det(u_{jk̄})^{1/n} - ψ(z, u)^{1/n}`, keeping every iterate strictly
//! plurisubharmonic. On top of it sit the inverse operator `T`, the monotone
//! outer iteration `det(u_{j+1}) = ψ(·, u_j)`, ε-regularization of degenerate
//! right-hand sides and a multi-start solver for quasi-monotone `H`.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::GridDomain;
use crate::hessian::{self, complex_hessian, entry_index, psh_report, HermitianField, ScalarField};
use crate::linsolve::{Factorization, SparseBuilder};
use crate::{Error, Result};

/// Floor μ on Hessian eigenvalues used to keep the Newton Jacobian finite.
pub const EIGENVALUE_FLOOR: f64 = 1e-8;
const MAX_NEWTON: usize = 60;
const MAX_HALVINGS: usize = 30;

pub type ScalarFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Monotonicity {
    NonIncreasingInT,
    /// `∂H/∂t ≥ -λ₀`.
    DerivativeBoundedBelow(f64),
}

/// Separable factor `g` in `ψ(z, t) = w(z) · g(z, t)`.
#[derive(Clone)]
pub enum Factor {
    /// `(1 - λt)ⁿ fⁿ`.
    Branch { lambda: f64, density: Vec<f64> },
    /// `(-λt)ⁿ fⁿ`.
    Eigen { lambda: f64, density: Vec<f64> },
    /// `Hⁿ(z, t)` with `∂H/∂t` supplied.
    PowerH { h: ScalarFn, dh: ScalarFn },
}

#[derive(Clone)]
pub enum RhsKind {
    /// `ψ(z, t) = h(z)`, node values.
    Frozen(Vec<f64>),
    Separable { weight: Vec<f64>, factor: Factor },
    /// `ψ = Hⁿ(z, t)`.
    GeneralH { h: ScalarFn, dh: ScalarFn },
}

/// Right-hand side `ψ(z, t)` on a grid, evaluated for `t ≤ 0`, plus the
/// regularization shift `ψ + εⁿ`.
#[derive(Clone)]
pub struct RhsSpec {
    grid: Arc<GridDomain>,
    kind: RhsKind,
    monotonicity: Monotonicity,
    epsilon: f64,
}

impl std::fmt::Debug for RhsSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.kind {
            RhsKind::Frozen(_) => "Frozen",
            RhsKind::Separable { factor: Factor::Branch { .. }, .. } => "Branch",
            RhsKind::Separable { factor: Factor::Eigen { .. }, .. } => "Eigen",
            RhsKind::Separable { factor: Factor::PowerH { .. }, .. } => "SeparablePowerH",
            RhsKind::GeneralH { .. } => "GeneralH",
        };
        f.debug_struct("RhsSpec")
            .field("kind", &kind)
            .field("monotonicity", &self.monotonicity)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

const SPOT_T: [f64; 8] = [0.0, -0.05, -0.2, -0.5, -1.0, -2.0, -5.0, -10.0];

impl RhsSpec {
    pub fn new(grid: &Arc<GridDomain>, kind: RhsKind, monotonicity: Monotonicity) -> Result<Self> {
        let spec = Self {
            grid: grid.clone(),
            kind,
            monotonicity,
            epsilon: 0.0,
        };
        spec.spot_check()?;
        Ok(spec)
    }

    pub fn frozen(grid: &Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        assert_eq!(values.len(), grid.node_count());
        Self::new(grid, RhsKind::Frozen(values), Monotonicity::NonIncreasingInT)
    }

    /// Frozen right-hand side from a scalar field (interior values).
    pub fn frozen_field(field: &ScalarField) -> Result<Self> {
        Self::frozen(field.grid(), field.values().to_vec())
    }

    /// `(1 - λt)ⁿ fⁿ` with `density` = f at every node.
    pub fn branch(grid: &Arc<GridDomain>, lambda: f64, density: Vec<f64>) -> Result<Self> {
        Self::new(
            grid,
            RhsKind::Separable {
                weight: vec![1.0; grid.node_count()],
                factor: Factor::Branch { lambda, density },
            },
            Monotonicity::NonIncreasingInT,
        )
    }

    /// `(-λt)ⁿ fⁿ`.
    pub fn eigen(grid: &Arc<GridDomain>, lambda: f64, density: Vec<f64>) -> Result<Self> {
        Self::new(
            grid,
            RhsKind::Separable {
                weight: vec![1.0; grid.node_count()],
                factor: Factor::Eigen { lambda, density },
            },
            Monotonicity::NonIncreasingInT,
        )
    }

    /// `Hⁿ(z, t)` with `∂H/∂t ≥ -λ₀`.
    pub fn general_h(grid: &Arc<GridDomain>, h: ScalarFn, dh: ScalarFn, lambda0: f64) -> Result<Self> {
        let monotonicity = if lambda0 <= 0.0 {
            Monotonicity::NonIncreasingInT
        } else {
            Monotonicity::DerivativeBoundedBelow(lambda0)
        };
        Self::new(grid, RhsKind::GeneralH { h, dh }, monotonicity)
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn kind(&self) -> &RhsKind {
        &self.kind
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ψ + εⁿ`.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut out = self.clone();
        out.epsilon = epsilon;
        out
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self.kind, RhsKind::Frozen(_))
    }

    /// `ψ(z_node, t)`; rejects `t > 0`.
    pub fn psi(&self, node: usize, t: f64) -> Result<f64> {
        if t > 0.0 {
            return Err(Error::PositiveArgument { t });
        }
        let x = self.grid.coords(node);
        let (r, _) = self.root(node, &x, t);
        Ok(r.powi(self.n() as i32))
    }

    fn n(&self) -> usize {
        self.grid.complex_dim()
    }

    /// `(ψ^{1/n}, ∂_t ψ^{1/n})` at a node; `t` is clamped to `≤ 0`.
    pub(crate) fn root(&self, node: usize, x: &[f64], t: f64) -> (f64, f64) {
        let n = self.n();
        let t = t.min(0.0);
        let (r, dr) = match &self.kind {
            RhsKind::Frozen(h) => (h[node].max(0.0).powf(1.0 / n as f64), 0.0),
            RhsKind::Separable { weight, factor } => {
                let w = weight[node].max(0.0).powf(1.0 / n as f64);
                let (g, dg) = match factor {
                    Factor::Branch { lambda, density } => {
                        ((1.0 - lambda * t) * density[node], -lambda * density[node])
                    }
                    Factor::Eigen { lambda, density } => {
                        (-lambda * t * density[node], -lambda * density[node])
                    }
                    Factor::PowerH { h, dh } => (h(x, t), dh(x, t)),
                };
                (w * g, w * dg)
            }
            RhsKind::GeneralH { h, dh } => (h(x, t), dh(x, t)),
        };
        if self.epsilon > 0.0 {
            let rn = r.max(0.0).powi(n as i32);
            let re = (rn + self.epsilon.powi(n as i32)).powf(1.0 / n as f64);
            let dre = if n == 1 { dr } else { r.max(0.0).powi(n as i32 - 1) * dr / re.powi(n as i32 - 1) };
            (re, dre)
        } else {
            (r, dr)
        }
    }

    /// `ψ(·, u)` at every node (zero off the interior).
    pub fn evaluate(&self, u: &ScalarField) -> Vec<f64> {
        let n = self.n() as i32;
        let mut out = vec![0.0; self.grid.node_count()];
        let mut x = vec![0.0; self.grid.real_dim()];
        for &idx in self.grid.interior() {
            self.grid.coords_into(idx, &mut x);
            out[idx] = self.root(idx, &x, u.value(idx)).0.max(0.0).powi(n);
        }
        out
    }

    fn spot_check(&self) -> Result<()> {
        let interior = self.grid.interior();
        let stride = (interior.len() / 50).max(1);
        for &idx in interior.iter().step_by(stride) {
            let x = self.grid.coords(idx);
            let mut prev: Option<(f64, f64)> = None;
            for &t in &SPOT_T {
                let (r, dr) = self.root(idx, &x, t);
                if !(r >= 0.0) {
                    return Err(Error::NotMonotone(format!("ψ^(1/n) = {r} < 0 at node {idx}, t = {t}")));
                }
                match self.monotonicity {
                    Monotonicity::NonIncreasingInT => {
                        if let Some((_, rp)) = prev {
                            // t decreases along SPOT_T, so ψ must not decrease.
                            if r < rp * (1.0 - 1e-12) - 1e-14 {
                                return Err(Error::NotMonotone(format!(
                                    "ψ increases in t at node {idx} near t = {t}"
                                )));
                            }
                        }
                    }
                    Monotonicity::DerivativeBoundedBelow(l0) => {
                        if dr < -l0 - 1e-12 {
                            return Err(Error::NotMonotone(format!(
                                "∂H/∂t = {dr} < -{l0} at node {idx}, t = {t}"
                            )));
                        }
                    }
                }
                prev = Some((t, r));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `sup |det(u_{jk̄}) - ψ(·, u)|` over interior nodes.
    pub residual: f64,
    /// Smallest Hessian eigenvalue over interior nodes.
    pub psh_margin: f64,
    pub sup_norm: f64,
    pub grad_sup: f64,
    pub laplacian_sup: f64,
    pub converged: bool,
}

impl SolveReport {
    fn measure(u: &ScalarField, hess: &HermitianField, residual: f64, iterations: usize, tol: f64) -> Self {
        let grid = u.grid();
        let lap = (0..hess.len()).map(|k| 4.0 * hess.trace(k).abs()).fold(0.0, f64::max);
        Self {
            iterations,
            residual,
            psh_margin: psh_report(grid, hess, 0.0).min_eigenvalue,
            sup_norm: u.sup_norm(),
            grad_sup: u.gradient_sup(),
            laplacian_sup: lap,
            converged: residual <= tol,
        }
    }

    /// Report for an arbitrary field against `rhs`.
    pub fn for_field(u: &ScalarField, rhs: &RhsSpec, tol: f64) -> Self {
        let hess = complex_hessian(u);
        let r = residual_sup(u, &hess, rhs);
        Self::measure(u, &hess, r, 0, tol)
    }
}

/// `sup |det(u_{jk̄}) - ψ(·, u)|` over interior nodes.
pub fn residual(u: &ScalarField, rhs: &RhsSpec) -> f64 {
    residual_sup(u, &complex_hessian(u), rhs)
}

fn residual_sup(u: &ScalarField, hess: &HermitianField, rhs: &RhsSpec) -> f64 {
    let grid = u.grid();
    let n = grid.complex_dim() as i32;
    let mut x = vec![0.0; grid.real_dim()];
    let mut worst: f64 = 0.0;
    for (k, &idx) in grid.interior().iter().enumerate() {
        grid.coords_into(idx, &mut x);
        let psi = rhs.root(idx, &x, u.value(idx)).0.max(0.0).powi(n);
        worst = worst.max((hess.det(k) - psi).abs());
    }
    worst
}

/// `ρ` sampled at interior nodes (vanishes at the boundary crossings).
pub fn rho_field(grid: &Arc<GridDomain>) -> ScalarField {
    ScalarField::from_fn_interior(grid, |x| grid.rho(x))
}

/// Smallest value of `det(ρ_{jk̄})` over interior nodes.
fn rho_det_min(grid: &Arc<GridDomain>) -> f64 {
    let hess = complex_hessian(&rho_field(grid));
    (0..hess.len()).map(|k| hess.det(k)).fold(f64::INFINITY, f64::min)
}

/// Multiple `c·ρ` with `det(c·ρ_{jk̄}) ≥ target` wherever ρ is discretely
/// strictly plurisubharmonic.
pub fn scaled_rho(grid: &Arc<GridDomain>, target: f64) -> ScalarField {
    let n = grid.complex_dim() as f64;
    let d = rho_det_min(grid);
    let c = if d > 0.0 { (target / d).powf(1.0 / n) } else { target.powf(1.0 / n) };
    rho_field(grid).scaled(c)
}

/// Per-node coefficients `G = (1/n) det^{1/n - 1} adj(M)` of the derivative of
/// `det(M)^{1/n}` and the value `det(M)^{1/n}` (n ≥ 2 requires M > 0).
fn root_det_and_gradient(hess: &HermitianField, k: usize) -> (f64, hessian::CMatrix) {
    let n = hess.complex_dim();
    let m = hess.matrix(k);
    let det = hess.det(k);
    if n == 1 {
        return (det, hessian::CMatrix::identity(1, 1));
    }
    let floor = EIGENVALUE_FLOOR.powi(n as i32);
    let d = det.max(floor);
    let scale = d.powf(1.0 / n as f64 - 1.0) / n as f64;
    let g = hessian::herm::adjugate(&m) * num_complex::Complex64::new(scale, 0.0);
    (det.max(0.0).powf(1.0 / n as f64), g)
}

fn assemble(grid: &GridDomain, hess: &HermitianField, diag_shift: &[f64]) -> Result<Factorization> {
    let n = grid.complex_dim();
    let st = hessian::stencil(grid);
    let m = grid.interior().len();
    let mut b = SparseBuilder::new(m);
    for k in 0..m {
        let (_, g) = root_det_and_gradient(hess, k);
        for j in 0..n {
            for l in 0..=j {
                let e = entry_index(j, l);
                for (node, w) in st.terms(k, e) {
                    let col = grid.interior_position(node);
                    let coef = if j == l {
                        g[(j, j)].re * w.re
                    } else {
                        2.0 * (g[(l, j)] * w).re
                    };
                    b.add(k, col, coef);
                }
            }
        }
        b.add(k, k, -diag_shift[k]);
    }
    b.factor()
}

fn laplace_factor(grid: &Arc<GridDomain>) -> Result<&Factorization> {
    if let Some(f) = grid.laplace_factor.get() {
        return Ok(f);
    }
    let m = grid.interior().len();
    let hess = HermitianField::new(1, m);
    let f = assemble(grid, &hess, &vec![0.0; m])?;
    Ok(grid.laplace_factor.get_or_init(|| f))
}

struct NewtonState {
    u: ScalarField,
    hess: HermitianField,
    /// `det^{1/n} - ψ^{1/n}` per interior node.
    f: Vec<f64>,
    /// `∂_t ψ^{1/n}` per interior node.
    dr: Vec<f64>,
    residual: f64,
}

fn newton_state(u: ScalarField, rhs: &RhsSpec) -> Option<NewtonState> {
    let grid = u.grid().clone();
    let n = grid.complex_dim();
    let hess = complex_hessian(&u);
    let m = grid.interior().len();
    let mut f = Vec::with_capacity(m);
    let mut dr = Vec::with_capacity(m);
    let mut residual: f64 = 0.0;
    let mut x = vec![0.0; grid.real_dim()];
    for (k, &idx) in grid.interior().iter().enumerate() {
        if n > 1 && hess.min_eigenvalue(k) <= 0.0 {
            return None;
        }
        grid.coords_into(idx, &mut x);
        let (r, drk) = rhs.root(idx, &x, u.value(idx));
        let det = hess.det(k);
        let root = if n == 1 { det } else { det.max(0.0).powf(1.0 / n as f64) };
        f.push(root - r);
        dr.push(drk);
        residual = residual.max((det - r.max(0.0).powi(n as i32)).abs());
    }
    Some(NewtonState {
        u,
        hess,
        f,
        dr,
        residual,
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton solve of `det(u_{jk̄}) = ψ(·, u)` from `init`. For `n ≥ 2`
/// the initial field must be strictly plurisubharmonic; steps are halved
/// until the iterate stays so and the residual decreases.
pub fn solve_newton(rhs: &RhsSpec, init: &ScalarField, tol: f64) -> Result<(ScalarField, SolveReport)> {
    let grid = rhs.grid().clone();
    let n = grid.complex_dim();
    let init = init.with_zero_trace();
    let mut state = newton_state(init, rhs).ok_or_else(|| Error::NotPsh {
        node: 0,
        min_eigenvalue: f64::NAN,
    })?;
    let frozen = rhs.is_frozen() && rhs.epsilon() == 0.0;
    for iter in 0..MAX_NEWTON {
        if state.residual <= tol {
            let report = SolveReport::measure(&state.u, &state.hess, state.residual, iter, tol);
            return Ok((state.u, report));
        }
        let rhs_vec: Vec<f64> = state.f.iter().map(|v| -v).collect();
        let delta = if n == 1 && frozen {
            laplace_factor(&grid)?.solve(&rhs_vec)?
        } else {
            assemble(&grid, &state.hess, &state.dr)?.solve(&rhs_vec)?
        };
        let merit = norm2(&state.f);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = state.u.clone();
            for (k, &idx) in grid.interior().iter().enumerate() {
                trial.values_mut()[idx] += alpha * delta[k];
            }
            if let Some(s) = newton_state(trial, rhs) {
                if norm2(&s.f) <= (1.0 - 1e-4 * alpha) * merit || s.residual <= tol {
                    accepted = Some(s);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(s) => state = s,
            None => {
                return Err(Error::NewtonStalled {
                    halvings: MAX_HALVINGS,
                    residual: state.residual,
                })
            }
        }
    }
    if state.residual <= tol {
        let report = SolveReport::measure(&state.u, &state.hess, state.residual, MAX_NEWTON, tol);
        return Ok((state.u, report));
    }
    Err(Error::NotConverged {
        iterations: MAX_NEWTON,
        residual: state.residual,
    })
}

/// Unique plurisubharmonic solution of `det(u_{jk̄}) = h` with zero boundary
/// values (`h ≥ 0` per node). For `n = 1` this is one Poisson solve
/// `Δu = 4h`.
pub fn solve_frozen(h: &[f64], grid: &Arc<GridDomain>, tol: f64) -> Result<(ScalarField, SolveReport)> {
    solve_frozen_from(h, grid, tol, None)
}

/// [`solve_frozen`] with an optional warm start.
pub fn solve_frozen_from(
    h: &[f64],
    grid: &Arc<GridDomain>,
    tol: f64,
    init: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    let rhs = RhsSpec::frozen(grid, h.iter().map(|v| v.max(0.0)).collect())?;
    let hmax = grid.interior().iter().map(|&i| h[i]).fold(0.0, f64::max);
    if hmax <= 0.0 {
        let u = ScalarField::zeros(grid);
        let report = SolveReport::for_field(&u, &rhs, tol);
        return Ok((u, report));
    }
    let start = match init {
        Some(u) if grid.complex_dim() == 1 || hessian::is_psh(u, 0.0).min_eigenvalue > 0.0 => u.clone(),
        _ => scaled_rho(grid, hmax),
    };
    solve_newton(&rhs, &start, tol)
}

/// `T(v)`: the solution of `det(u_{jk̄}) = ψ(·, v)`.
pub fn apply_t(v: &ScalarField, rhs: &RhsSpec, tol: f64) -> Result<(ScalarField, SolveReport)> {
    apply_t_from(v, rhs, tol, None)
}

fn apply_t_from(
    v: &ScalarField,
    rhs: &RhsSpec,
    tol: f64,
    init: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    if let Some(idx) = v.grid().interior().iter().find(|&&i| v.value(i) > 0.0) {
        return Err(Error::PositiveArgument { t: v.value(*idx) });
    }
    let h = rhs.evaluate(v);
    solve_frozen_from(&h, rhs.grid(), tol, init)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionCheck {
    pub holds: bool,
    /// Smallest slack of the checked inequality over interior nodes.
    pub margin: f64,
    pub worst_node: usize,
}

/// `det(u̲_{jk̄}) ≥ ψ(·, u̲) + ε₀ - tol` at every interior node, with `u̲`
/// plurisubharmonic within `tol`.
pub fn check_subsolution(u: &ScalarField, rhs: &RhsSpec, tol: f64, strict_margin: f64) -> SolutionCheck {
    check_inequality(u, rhs, tol, |det, psi| det - psi - strict_margin)
}

/// `det(ū_{jk̄}) ≤ ψ(·, ū) + tol` at every interior node, with `ū`
/// plurisubharmonic within `tol`.
pub fn check_supersolution(u: &ScalarField, rhs: &RhsSpec, tol: f64) -> SolutionCheck {
    check_inequality(u, rhs, tol, |det, psi| psi - det)
}

fn check_inequality(u: &ScalarField, rhs: &RhsSpec, tol: f64, slack: impl Fn(f64, f64) -> f64) -> SolutionCheck {
    let grid = u.grid();
    let hess = complex_hessian(u);
    let psh = psh_report(grid, &hess, tol);
    let n = grid.complex_dim() as i32;
    let mut x = vec![0.0; grid.real_dim()];
    let mut worst = (f64::INFINITY, grid.interior()[0]);
    for (k, &idx) in grid.interior().iter().enumerate() {
        grid.coords_into(idx, &mut x);
        let t = u.value(idx);
        if t > tol {
            return SolutionCheck {
                holds: false,
                margin: -t,
                worst_node: idx,
            };
        }
        let psi = rhs.root(idx, &x, t).0.max(0.0).powi(n);
        let s = slack(hess.det(k), psi);
        if s < worst.0 {
            worst = (s, idx);
        }
    }
    SolutionCheck {
        holds: psh.is_psh && worst.0 >= -tol,
        margin: worst.0,
        worst_node: worst.1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Increment {
    /// `max (u_{j+1} - u_j)`.
    pub max_increase: f64,
    /// `min (u_{j+1} - u_j)`; non-negative up to discretization error.
    pub min_increase: f64,
}

#[derive(Debug, Clone)]
pub struct MonotoneOutcome {
    pub u: ScalarField,
    pub history: Vec<Increment>,
    pub reports: Vec<SolveReport>,
    /// Outer iterates `u_1, u_2, …` when requested.
    pub iterates: Vec<ScalarField>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MonotoneOptions {
    pub tol: f64,
    pub max_outer: usize,
    pub keep_iterates: bool,
    /// Abort with `BranchInfeasible` once the sup norm exceeds this.
    pub sup_cap: f64,
}

impl MonotoneOptions {
    pub fn new(tol: f64, max_outer: usize) -> Self {
        Self {
            tol,
            max_outer,
            keep_iterates: false,
            sup_cap: f64::INFINITY,
        }
    }
}

/// Monotone iteration `det(u_{j+1}) = ψ(·, u_j)` from a subsolution, for
/// right-hand sides non-increasing in `t`. The iterates increase towards the
/// fixed point; decreases beyond `10·tol` abort with `MonotonicityViolated`.
pub fn monotone_iteration(sub: &ScalarField, rhs: &RhsSpec, opts: MonotoneOptions) -> Result<MonotoneOutcome> {
    if rhs.monotonicity() != Monotonicity::NonIncreasingInT {
        return Err(Error::NotMonotone("monotone iteration needs ψ non-increasing in t".into()));
    }
    let tol = opts.tol;
    let sub_check = check_subsolution(sub, rhs, tol.max(hessian::default_psh_tol(rhs.grid())), 0.0);
    if !sub_check.holds {
        return Err(Error::PreconditionViolated {
            node: sub_check.worst_node,
            what: format!("initial field is not a subsolution (margin {:e})", sub_check.margin),
        });
    }
    iterate_t(sub.with_zero_trace(), rhs, opts, true)
}

/// Shared outer loop. With `increasing` the iterates must not decrease;
/// otherwise (start from a supersolution) they must not increase.
fn iterate_t(start: ScalarField, rhs: &RhsSpec, opts: MonotoneOptions, increasing: bool) -> Result<MonotoneOutcome> {
    let tol = opts.tol;
    let inner = tol / 10.0;
    let mut u = start;
    let mut out = MonotoneOutcome {
        u: u.clone(),
        history: Vec::new(),
        reports: Vec::new(),
        iterates: Vec::new(),
        residual: f64::INFINITY,
    };
    for j in 0..opts.max_outer {
        let (next, report) = apply_t_from(&u, rhs, inner, Some(&u))?;
        let grid = u.grid();
        let mut inc = Increment {
            max_increase: f64::NEG_INFINITY,
            min_increase: f64::INFINITY,
        };
        let mut worst_node = grid.interior()[0];
        for &idx in grid.interior() {
            let d = next.value(idx) - u.value(idx);
            inc.max_increase = inc.max_increase.max(d);
            if d < inc.min_increase {
                inc.min_increase = d;
                if increasing {
                    worst_node = idx;
                }
            }
            if !increasing && d > 0.0 && d >= inc.max_increase {
                worst_node = idx;
            }
        }
        let violation = if increasing { -inc.min_increase } else { inc.max_increase };
        if violation > 10.0 * tol {
            return Err(Error::MonotonicityViolated {
                iteration: j + 1,
                node: worst_node,
                drop: violation,
            });
        }
        out.history.push(inc);
        let sup = next.sup_norm();
        if sup > opts.sup_cap {
            return Err(Error::BranchInfeasible {
                lambda: f64::NAN,
                reason: format!("sup norm {sup} exceeded cap {} at outer iteration {}", opts.sup_cap, j + 1),
            });
        }
        let res = residual(&next, rhs);
        out.reports.push(SolveReport { residual: res, converged: res <= tol, ..report });
        if opts.keep_iterates {
            out.iterates.push(next.clone());
        }
        u = next;
        if res <= tol {
            out.u = u;
            out.residual = res;
            return Ok(out);
        }
    }
    let res = residual(&u, rhs);
    Err(Error::NotConverged {
        iterations: opts.max_outer,
        residual: res,
    })
}

/// Monotone iteration downwards from a supersolution (used for warm-started
/// branch continuation). Divergence shows up as the sup norm passing
/// `opts.sup_cap`.
pub fn monotone_iteration_from_above(sup: &ScalarField, rhs: &RhsSpec, opts: MonotoneOptions) -> Result<MonotoneOutcome> {
    if rhs.monotonicity() != Monotonicity::NonIncreasingInT {
        return Err(Error::NotMonotone("monotone iteration needs ψ non-increasing in t".into()));
    }
    iterate_t(sup.with_zero_trace(), rhs, opts, false)
}

#[derive(Debug, Clone)]
pub struct RegularizedOutcome {
    pub u: ScalarField,
    pub epsilons: Vec<f64>,
    pub reports: Vec<SolveReport>,
    /// `‖u_ε - u_ε'‖_∞` for consecutive ε.
    pub differences: Vec<f64>,
    pub solutions: Vec<ScalarField>,
}

/// Default schedule `10⁻¹, ½·10⁻¹, …` down to `10⁻³`.
pub fn default_epsilon_schedule() -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = 0.1;
    while e >= 1e-3 * (1.0 - 1e-12) {
        out.push(e);
        e *= 0.5;
    }
    out
}

/// Solve `det(u_{jk̄}) = ψ(·, u) + εⁿ` along a decreasing ε schedule, warm
/// starting each level from the previous solution (a subsolution for the
/// next ε). Non-degenerate right-hand sides stop after the first ε.
pub fn solve_regularized(rhs: &RhsSpec, schedule: &[f64], tol: f64, max_outer: usize) -> Result<RegularizedOutcome> {
    if schedule.is_empty()
        || schedule.windows(2).any(|w| !(w[1] < w[0]))
        || *schedule.last().unwrap() < 1e-4
    {
        return Err(Error::InvalidDomain(
            "epsilon schedule must be strictly decreasing and stay >= 1e-4".into(),
        ));
    }
    let grid = rhs.grid().clone();
    let zero = ScalarField::zeros(&grid);
    let degenerate = rhs
        .evaluate(&zero)
        .iter()
        .enumerate()
        .any(|(idx, &v)| grid.interior_position(idx) != crate::domain::NOT_INTERIOR && v <= 0.0);

    let mut out = RegularizedOutcome {
        u: zero,
        epsilons: Vec::new(),
        reports: Vec::new(),
        differences: Vec::new(),
        solutions: Vec::new(),
    };
    let mut prev: Option<ScalarField> = None;
    for &eps in schedule {
        let reg = rhs.with_epsilon(eps);
        let sub = match &prev {
            Some(u) => u.clone(),
            None => find_scaled_subsolution(&reg, tol)?,
        };
        let res = monotone_iteration(&sub, &reg, MonotoneOptions::new(tol, max_outer))?;
        if let Some(p) = &prev {
            out.differences.push(res.u.sup_distance(p));
        }
        out.epsilons.push(eps);
        out.reports.push(*res.reports.last().unwrap());
        out.solutions.push(res.u.clone());
        prev = Some(res.u);
        if !degenerate {
            break;
        }
    }
    out.u = prev.unwrap();
    Ok(out)
}

/// Search `c·ρ` over geometric `c` for a subsolution of `rhs`.
pub fn find_scaled_subsolution(rhs: &RhsSpec, tol: f64) -> Result<ScalarField> {
    let grid = rhs.grid();
    let rho = rho_field(grid);
    let rho_det = rho_det_min(grid);
    let n = grid.complex_dim() as f64;
    let zero_rhs = rhs.evaluate(&ScalarField::zeros(grid));
    let top = grid.interior().iter().map(|&i| zero_rhs[i]).fold(0.0, f64::max).max(1e-12);
    let mut c = (top / rho_det.max(1e-300)).powf(1.0 / n);
    let check_tol = tol.max(hessian::default_psh_tol(grid));
    for _ in 0..40 {
        let cand = rho.scaled(c);
        if check_subsolution(&cand, rhs, check_tol, 0.0).holds {
            return Ok(cand);
        }
        c *= 1.5;
    }
    // For the branch (1 - λt)ⁿfⁿ, k·u₀ with k = 1/(1 - λ‖u₀‖) works below 1/‖u₀‖.
    if let RhsKind::Separable { factor: Factor::Branch { lambda, density }, .. } = rhs.kind() {
        let g: Vec<f64> = density.iter().map(|f| f.powf(n)).collect();
        let (u0, _) = solve_frozen(&g, grid, tol / 10.0)?;
        let m = u0.sup_norm();
        if lambda * m < 1.0 {
            let cand = u0.scaled(1.0 / (1.0 - lambda * m) * (1.0 + tol));
            if check_subsolution(&cand, rhs, check_tol, 0.0).holds {
                return Ok(cand);
            }
        }
    }
    Err(Error::PreconditionViolated {
        node: grid.interior()[0],
        what: "no multiple of rho is a subsolution".into(),
    })
}

#[derive(Debug, Clone)]
pub struct QuasiMonotoneOutcome {
    pub u: ScalarField,
    pub report: SolveReport,
    /// Solutions from the subsolution, zero-adjacent and random starts.
    pub solutions: Vec<ScalarField>,
    pub max_pairwise_distance: f64,
}

/// Solve `det(u_{jk̄}) = Hⁿ(·, u)` for `∂H/∂t ≥ -λ₀` with `λ₀` below the first
/// eigenvalue estimate, from three different starts; disagreement is
/// reported as `InitializationsDisagree`.
pub fn solve_quasimonotone(rhs: &RhsSpec, lambda1_estimate: f64, tol: f64, seed: u64) -> Result<QuasiMonotoneOutcome> {
    let lambda0 = match rhs.monotonicity() {
        Monotonicity::DerivativeBoundedBelow(l) => l,
        Monotonicity::NonIncreasingInT => 0.0,
    };
    if lambda0 >= lambda1_estimate {
        return Err(Error::EigenvalueBoundViolated {
            lambda0,
            lambda1: lambda1_estimate,
        });
    }
    let grid = rhs.grid().clone();
    let zero_rhs = rhs.evaluate(&ScalarField::zeros(&grid));
    let top = grid.interior().iter().map(|&i| zero_rhs[i]).fold(0.0, f64::max).max(1e-12);
    let n = grid.complex_dim() as i32;
    let starts = vec![
        scaled_rho(&grid, top * 2f64.powi(n)),
        scaled_rho(&grid, 1e-6_f64.powi(n)),
        {
            let r = crate::variational::random_psh_field(&grid, seed)?;
            // Strict positivity for the Newton start.
            let rho = scaled_rho(&grid, 1e-4_f64.powi(n));
            ScalarField::from_values(&grid, r.values().iter().zip(rho.values()).map(|(a, b)| a + b).collect())
        },
    ];
    let inner = tol / 10.0;
    let mut solutions = Vec::with_capacity(3);
    let mut report = None;
    for s in &starts {
        let (u, rep) = solve_newton(rhs, s, inner)?;
        report.get_or_insert(rep);
        solutions.push(u);
    }
    let mut dist: f64 = 0.0;
    for a in 0..solutions.len() {
        for b in a + 1..solutions.len() {
            dist = dist.max(solutions[a].sup_distance(&solutions[b]));
        }
    }
    if dist > 10.0 * tol {
        return Err(Error::InitializationsDisagree {
            distance: dist,
            limit: 10.0 * tol,
        });
    }
    Ok(QuasiMonotoneOutcome {
        u: solutions[0].clone(),
        report: report.unwrap(),
        solutions,
        max_pairwise_distance: dist,
    })
}
