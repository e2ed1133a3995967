//! Energy `E(φ) = 1/(n+1) ∫(-φ)(dd^c φ)ⁿ`, mass `I_g(φ) = 1/(n+1) ∫(-φ)^{n+1} g ωⁿ`,
//! their quotient, the inequalities bounding them, and the inverse power
//! iteration for the first eigenpair.
//!
//! Integrals are node-centred sums against the clipped cell volumes, carrying
//! the factor [`omega_weight`] so that `(dd^c|z|²)ⁿ = 2ⁿ n! dV`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dirichlet::solve_frozen_from;
use crate::domain::GridDomain;
use crate::eigenpath::{eigen_residual, normalize, EigenMethod, EigenResult};
use crate::hessian::{self, ma_det, CMatrix, ScalarField};
use crate::{factorial, omega_weight, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub energy: f64,
    pub mass: f64,
    /// `None` when the mass vanishes.
    pub rayleigh: Option<f64>,
}

/// Deterministic sum in interior order.
fn quadrature(grid: &GridDomain, mut f: impl FnMut(usize) -> f64) -> f64 {
    let n = grid.complex_dim();
    let s: f64 = grid.interior().iter().map(|&i| f(i) * grid.cell_volume(i)).sum();
    s * omega_weight(n) / (n as f64 + 1.0)
}

fn require_psh(phi: &ScalarField) -> Result<()> {
    let report = hessian::is_psh(phi, hessian::default_psh_tol(phi.grid()));
    if !report.is_psh {
        return Err(Error::NotPsh {
            node: report.worst_node,
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    Ok(())
}

/// `E(φ)` for plurisubharmonic `φ ≤ 0`.
pub fn energy(phi: &ScalarField) -> Result<f64> {
    require_psh(phi)?;
    Ok(energy_unchecked(phi))
}

fn energy_unchecked(phi: &ScalarField) -> f64 {
    let det = ma_det(phi);
    quadrature(phi.grid(), |i| (-phi.value(i)).max(0.0) * det.value(i)).max(0.0)
}

/// `I_g(φ)` with `g` given per node.
pub fn mass(phi: &ScalarField, g: &[f64]) -> f64 {
    let p = phi.grid().complex_dim() as i32 + 1;
    quadrature(phi.grid(), |i| (-phi.value(i)).max(0.0).powi(p) * g[i])
}

/// `E(φ) / I_g(φ)`.
pub fn rayleigh(phi: &ScalarField, g: &[f64]) -> Result<f64> {
    let e = energy(phi)?;
    let m = mass(phi, g);
    if !(m > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(e / m)
}

pub fn functional_value(phi: &ScalarField, g: &[f64]) -> Result<FunctionalValue> {
    let energy = energy(phi)?;
    let mass = mass(phi, g);
    Ok(FunctionalValue {
        energy,
        mass,
        rayleigh: (mass > 0.0).then(|| energy / mass),
    })
}

/// `¼∫|∇φ|²` by forward differences over lattice edges (n = 1 only), with
/// zero outside the interior. Equals `E(φ)` up to quadrature error.
pub fn gradient_energy(phi: &ScalarField) -> f64 {
    let grid = phi.grid();
    assert_eq!(grid.complex_dim(), 1);
    let value = |idx: Option<usize>| idx.map_or(0.0, |i| {
        if grid.interior_position(i) == crate::domain::NOT_INTERIOR {
            0.0
        } else {
            phi.value(i)
        }
    });
    let mut s = 0.0;
    for idx in 0..grid.node_count() {
        let here = value(Some(idx));
        for a in 0..2 {
            let there = value(grid.neighbor(idx, &[(a, 1)]));
            s += (there - here).powi(2);
        }
    }
    0.25 * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `A := (n+1)·(n+1)!·‖φ₀‖ⁿ_∞` with `φ₀ = solve_frozen(g)`.
pub fn sobolev_constant(g: &[f64], grid: &Arc<GridDomain>, tol: f64) -> Result<f64> {
    let n = grid.complex_dim();
    let (phi0, _) = solve_frozen_from(g, grid, tol, None)?;
    Ok((n as f64 + 1.0) * factorial(n + 1) * phi0.sup_norm().powi(n as i32))
}

/// `∫(-φ)^{n+1} dV_g ≤ A·E(φ) + tol`, i.e. `(n+1)·I_g(φ) ≤ A·E(φ) + tol`.
pub fn check_sobolev(phi: &ScalarField, g: &[f64], a: f64, tol: f64) -> Result<InequalityCheck> {
    let n = phi.grid().complex_dim() as f64;
    let lhs = (n + 1.0) * mass(phi, g);
    let rhs = a * energy(phi)?;
    Ok(InequalityCheck {
        holds: lhs <= rhs + tol,
        lhs,
        rhs,
    })
}

/// `∫(-u)^{n+1}(dd^c v)ⁿ ≤ (n+1)!·‖v‖ⁿ_∞·∫(-u)(dd^c u)ⁿ + tol`.
pub fn check_blocki(u: &ScalarField, v: &ScalarField, tol: f64) -> Result<InequalityCheck> {
    require_psh(u)?;
    require_psh(v)?;
    let grid = u.grid();
    let n = grid.complex_dim();
    let dv = ma_det(v);
    let du = ma_det(u);
    let lhs = quadrature(grid, |i| (-u.value(i)).max(0.0).powi(n as i32 + 1) * dv.value(i)) * (n as f64 + 1.0);
    let rhs = factorial(n + 1)
        * v.sup_norm().powi(n as i32)
        * quadrature(grid, |i| (-u.value(i)).max(0.0) * du.value(i))
        * (n as f64 + 1.0);
    Ok(InequalityCheck {
        holds: lhs <= rhs + tol,
        lhs,
        rhs,
    })
}

fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    let q = g.qr().q();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|_| Complex64::new(rng.random_range(0.2..2.0), 0.0)),
    ));
    let a = &q * d * q.adjoint();
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `(z - c)* A (z - c)` with `z` packed as `[x₁, y₁, …]`.
fn hermitian_quadratic(a: &CMatrix, c: &[f64], x: &[f64]) -> f64 {
    let n = a.nrows();
    let w: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(x[2 * j] - c[2 * j], x[2 * j + 1] - c[2 * j + 1]))
        .collect();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            s += w[j].conj() * a[(j, k)] * w[k];
        }
    }
    s.re
}

/// Random non-positive plurisubharmonic field with zero boundary values:
/// `max(K·ρ, q₁ - c₁, …, q_m - c_m)` for random positive Hermitian quadratics
/// `q_i`, with `c_i` the largest value of `q_i` on the boundary. For n = 1 the
/// discrete Laplacian of a maximum dominates that of each piece, so the field
/// is exactly discretely subharmonic. When the kinks break discrete
/// plurisubharmonicity (n ≥ 2) the field is replaced by the solution of
/// `det = h` for a random positive bump density `h`.
pub fn random_psh_field(grid: &Arc<GridDomain>, seed: u64) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.complex_dim();
    let (lo, hi) = grid.spec().bounding_box();
    let crossings = hessian::stencil(grid).crossings();
    let boundary: Vec<Vec<f64>> = if crossings.is_empty() {
        grid.interior().iter().map(|&i| grid.coords(i)).collect()
    } else {
        crossings.to_vec()
    };
    let k = rng.random_range(0.5..2.0);
    let count = rng.random_range(1..=3);
    let mut pieces = Vec::with_capacity(count);
    for _ in 0..count {
        let a = random_pd(n, &mut rng);
        let c: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| {
                let mid = 0.5 * (l + h);
                mid + 0.5 * (h - l) * rng.random_range(-0.5..0.5)
            })
            .collect();
        let top = boundary
            .iter()
            .map(|p| hermitian_quadratic(&a, &c, p))
            .fold(f64::NEG_INFINITY, f64::max);
        pieces.push((a, c, top));
    }
    let field = ScalarField::from_fn_interior(grid, |x| {
        pieces
            .iter()
            .map(|(a, c, top)| hermitian_quadratic(a, c, x) - top)
            .fold(k * grid.rho(x), f64::max)
            .min(0.0)
    });
    if hessian::is_psh(&field, hessian::default_psh_tol(grid)).is_psh {
        return Ok(field);
    }
    let centre: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random_range(0.3..0.7)).collect();
    let width = rng.random_range(0.2..0.6) * hi.iter().zip(&lo).map(|(h, l)| h - l).fold(f64::INFINITY, f64::min);
    let amp = rng.random_range(0.0..4.0);
    let mut h = vec![0.0; grid.node_count()];
    for &i in grid.interior() {
        let x = grid.coords(i);
        let r2: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b).powi(2)).sum();
        h[i] = k.powi(n as i32) * (1.0 + amp * (-r2 / (width * width)).exp());
    }
    Ok(solve_frozen_from(&h, grid, 1e-10, None)?.0)
}

#[derive(Debug, Clone, Copy)]
pub struct InversePowerOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl InversePowerOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_iters: 500 }
    }
}

/// Inverse power iteration `w_{k+1} ∝ solve_frozen(η_kⁿ(-w_k)ⁿ g)` with
/// `η_kⁿ = rayleigh(w_k)` and `‖w_k‖_∞ = 1`. The default start is
/// `solve_frozen(g)`.
pub fn inverse_power(
    g: &[f64],
    grid: &Arc<GridDomain>,
    opts: InversePowerOptions,
    w0: Option<&ScalarField>,
) -> Result<EigenResult> {
    let n = grid.complex_dim() as i32;
    let tol = opts.tol;
    let inner = tol / 10.0;
    let mut w = match w0 {
        Some(w) => {
            if w.max_interior() > tol || w.sup_norm() == 0.0 {
                return Err(Error::PreconditionViolated {
                    node: grid.deepest_interior_node(),
                    what: "initial iterate must be non-positive and non-zero".into(),
                });
            }
            require_psh(w)?;
            normalize(&w.with_zero_trace())
        }
        None => normalize(&solve_frozen_from(g, grid, inner, None)?.0),
    };
    let mut eta = rayleigh_checked(&w, g)?.powf(1.0 / n as f64);
    let mut history = vec![eta];
    for k in 0..opts.max_iters {
        let h: Vec<f64> = (0..grid.node_count())
            .map(|i| (eta * (-w.value(i)).max(0.0)).powi(n) * g[i])
            .collect();
        let (next, _) = solve_frozen_from(&h, grid, inner, Some(&w))?;
        let next = normalize(&next);
        let eta_next = rayleigh_checked(&next, g)?.powf(1.0 / n as f64);
        history.push(eta_next);
        let change = next.sup_distance(&w);
        let step = (eta_next - eta).abs();
        w = next;
        eta = eta_next;
        if step <= tol && change <= tol {
            let density: Vec<f64> = g.iter().map(|v| v.max(0.0).powf(1.0 / n as f64)).collect();
            let residual = eigen_residual(&w, eta, &density);
            return Ok(EigenResult {
                lambda1: eta,
                rayleigh_value: eta.powi(n),
                eigenfunction: w,
                branch: Vec::new(),
                method: EigenMethod::InversePower,
                residual,
                fit_residual: None,
                history,
                iterations: k + 1,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iters,
        residual: (history[history.len() - 1] - history[history.len() - 2]).abs(),
    })
}

fn rayleigh_checked(w: &ScalarField, g: &[f64]) -> Result<f64> {
    let m = mass(w, g);
    if m < 1e-12 {
        return Err(Error::DegenerateIterate { mass: m });
    }
    Ok(energy(w)? / m)
}
