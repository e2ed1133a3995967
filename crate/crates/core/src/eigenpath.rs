//! First eigenpair by λ-continuation of `det(u_{jk̄}) = (1 - λu)ⁿ fⁿ`.
//!
//! The branch `u_λ` exists for `λ < λ₁` and `‖u_λ‖_∞` blows up as `λ → λ₁`.
//! The schedule walks λ upwards with warm starts until the sup norm passes
//! `S_max`, then extrapolates `1/‖u_λ‖ → 0` with a linear fit.

use std::sync::Arc;

use serde::Serialize;

use crate::dirichlet::{
    find_scaled_subsolution, monotone_iteration, solve_frozen, solve_newton, MonotoneOptions, RhsSpec, SolveReport,
};
use crate::domain::{sample_density, DensitySpec, GridDomain};
use crate::hessian::{self, ScalarField};
use crate::{variational, Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub sup_norm: f64,
    #[serde(skip)]
    pub u: Option<ScalarField>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenMethod {
    Continuation,
    InversePower,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    #[serde(skip)]
    pub eigenfunction: ScalarField,
    pub branch: Vec<BranchPoint>,
    pub method: EigenMethod,
    /// `sup |det(u₁) - (-λ₁u₁)ⁿfⁿ|`.
    pub residual: f64,
    pub rayleigh_value: f64,
    /// RMS misfit of the final linear fit (continuation only).
    pub fit_residual: Option<f64>,
    /// η per iteration (inverse power only).
    pub history: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SchedulePolicy {
    /// Blow-up threshold on `‖u_λ‖_∞`.
    pub s_max: f64,
    /// λ cap as a multiple of the lower bound.
    pub cap_factor: f64,
    /// First step as a fraction of the lower bound.
    pub initial_step: f64,
    /// Smallest step, relative to the lower bound, before giving up.
    pub min_step: f64,
    /// Points in the final fit.
    pub fit_points: usize,
    pub keep_fields: bool,
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        Self {
            s_max: 50.0,
            cap_factor: 10.0,
            initial_step: 0.25,
            min_step: 1e-7,
            fit_points: 4,
            keep_fields: false,
        }
    }
}

/// `1/‖solve_frozen(fⁿ)‖_∞`, a lower bound for λ₁.
pub fn lower_bound(f: &DensitySpec, grid: &Arc<GridDomain>, tol: f64) -> Result<f64> {
    let density = sample_density(f, grid)?;
    lower_bound_from(&density, grid, tol).map(|(b, _)| b)
}

fn lower_bound_from(density: &[f64], grid: &Arc<GridDomain>, tol: f64) -> Result<(f64, ScalarField)> {
    let n = grid.complex_dim() as i32;
    let g: Vec<f64> = density.iter().map(|f| f.powi(n)).collect();
    let (u0, _) = solve_frozen(&g, grid, tol)?;
    Ok((1.0 / u0.sup_norm(), u0))
}

/// Sup-norm cap above which a branch solve is declared infeasible.
const BRANCH_CAP: f64 = 1e4;

/// Solve the branch problem at `λ` (cold start).
pub fn solve_branch(lambda: f64, f: &DensitySpec, grid: &Arc<GridDomain>, tol: f64) -> Result<BranchPoint> {
    let density = sample_density(f, grid)?;
    solve_branch_from(lambda, &density, grid, tol, None)
}

/// Solve the branch problem at `λ`, warm starting from `warm` (normally the
/// branch solution at a smaller λ, which is a supersolution here).
pub fn solve_branch_from(
    lambda: f64,
    density: &[f64],
    grid: &Arc<GridDomain>,
    tol: f64,
    warm: Option<&ScalarField>,
) -> Result<BranchPoint> {
    if !(lambda >= 0.0) {
        return Err(Error::BranchInfeasible {
            lambda,
            reason: "negative lambda".into(),
        });
    }
    let rhs = RhsSpec::branch(grid, lambda, density.to_vec())?;
    let n = grid.complex_dim() as i32;
    let newton = {
        let start = match warm {
            Some(u) => u.clone(),
            None => {
                let g: Vec<f64> = density.iter().map(|f| f.powi(n)).collect();
                solve_frozen(&g, grid, tol)?.0
            }
        };
        solve_newton(&rhs, &start, tol)
    };
    let (u, report) = match newton {
        Ok(v) => v,
        Err(Error::NewtonStalled { .. } | Error::NotConverged { .. } | Error::NotPsh { .. } | Error::LinearSolve(_)) => {
            let sub = find_scaled_subsolution(&rhs, tol).map_err(|_| Error::BranchInfeasible {
                lambda,
                reason: "Newton failed and no scaled subsolution exists".into(),
            })?;
            let mut opts = MonotoneOptions::new(tol, 500);
            opts.sup_cap = BRANCH_CAP;
            let out = monotone_iteration(&sub, &rhs, opts).map_err(|e| Error::BranchInfeasible {
                lambda,
                reason: format!("monotone fallback failed: {e}"),
            })?;
            let report = *out.reports.last().unwrap();
            (out.u, report)
        }
        Err(e) => return Err(e),
    };
    let top = u.max_interior();
    if top > tol {
        return Err(Error::BranchInfeasible {
            lambda,
            reason: format!("solution has positive value {top:e}"),
        });
    }
    let psh = hessian::is_psh(&u, hessian::default_psh_tol(grid));
    if !psh.is_psh {
        return Err(Error::BranchInfeasible {
            lambda,
            reason: format!("solution not plurisubharmonic (min eigenvalue {:e})", psh.min_eigenvalue),
        });
    }
    let sup_norm = u.sup_norm();
    if sup_norm > BRANCH_CAP {
        return Err(Error::BranchInfeasible {
            lambda,
            reason: format!("sup norm {sup_norm:e} exceeds cap"),
        });
    }
    Ok(BranchPoint {
        lambda,
        sup_norm,
        u: Some(u),
        report,
    })
}

/// Least-squares line through `(λ, 1/S)`; returns `(root, rms misfit)`.
fn fit_root(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let m = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return None;
    }
    let intercept = my - slope * mx;
    let rms = (points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Some((-intercept / slope, rms))
}

/// λ-continuation for the first eigenpair.
pub fn continuation(
    f: &DensitySpec,
    grid: &Arc<GridDomain>,
    tol: f64,
    policy: SchedulePolicy,
) -> Result<EigenResult> {
    let density = sample_density(f, grid)?;
    continuation_from(&density, grid, tol, policy)
}

pub fn continuation_from(
    density: &[f64],
    grid: &Arc<GridDomain>,
    tol: f64,
    policy: SchedulePolicy,
) -> Result<EigenResult> {
    let (lb, u0) = lower_bound_from(density, grid, tol)?;
    let cap = policy.cap_factor * lb;
    let rhs0 = RhsSpec::branch(grid, 0.0, density.to_vec())?;
    let mut branch = vec![BranchPoint {
        lambda: 0.0,
        sup_norm: u0.sup_norm(),
        u: policy.keep_fields.then(|| u0.clone()),
        report: SolveReport::for_field(&u0, &rhs0, tol),
    }];
    let mut current = u0;
    let mut lambda = 0.0;
    let mut step = policy.initial_step * lb;
    let mut easy = 0usize;
    let mut iterations: Vec<usize> = Vec::new();

    while branch.last().unwrap().sup_norm < policy.s_max {
        // Never step past 70% of the distance to the secant prediction.
        let recent: Vec<(f64, f64)> = branch.iter().rev().take(2).map(|p| (p.lambda, 1.0 / p.sup_norm)).collect();
        if let Some((root, _)) = fit_root(&recent) {
            if root > lambda {
                step = step.min(0.7 * (root - lambda));
            }
        }
        let trial = lambda + step;
        if trial > cap {
            return Err(Error::ScheduleExhausted { cap, lower_bound: lb });
        }
        match solve_branch_from(trial, density, grid, tol, Some(&current)) {
            Ok(mut point) => {
                let u = point.u.take().unwrap();
                let its = point.report.iterations;
                let mut sorted = iterations.clone();
                sorted.sort_unstable();
                let median = sorted.get(sorted.len() / 2).copied().unwrap_or(its);
                iterations.push(its);
                if policy.keep_fields {
                    point.u = Some(u.clone());
                }
                branch.push(point);
                current = u;
                lambda = trial;
                if its > 2 * median.max(1) {
                    step *= 0.5;
                    easy = 0;
                } else {
                    easy += 1;
                    if easy >= 3 {
                        step *= 2.0;
                        easy = 0;
                    }
                }
            }
            Err(Error::BranchInfeasible { .. }) => {
                step *= 0.5;
                easy = 0;
                if step < policy.min_step * lb {
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }

    let k = policy.fit_points.min(branch.len());
    let tail: Vec<(f64, f64)> = branch[branch.len() - k..]
        .iter()
        .map(|p| (p.lambda, 1.0 / p.sup_norm))
        .collect();
    let (lambda1, fit_rms) = fit_root(&tail).ok_or(Error::ScheduleExhausted { cap, lower_bound: lb })?;
    let lambda1 = lambda1.max(lambda);
    let eigenfunction = normalize(&current);
    let residual = eigen_residual(&eigenfunction, lambda1, density);
    let rayleigh_value = rayleigh_of(&eigenfunction, density)?;
    Ok(EigenResult {
        lambda1,
        eigenfunction,
        branch,
        method: EigenMethod::Continuation,
        residual,
        rayleigh_value,
        fit_residual: Some(fit_rms),
        history: Vec::new(),
        iterations: iterations.len(),
    })
}

fn rayleigh_of(u: &ScalarField, density: &[f64]) -> Result<f64> {
    let n = u.grid().complex_dim() as i32;
    let g: Vec<f64> = density.iter().map(|f| f.powi(n)).collect();
    variational::rayleigh(u, &g)
}

/// `u / ‖u‖_∞`, oriented so the field is non-positive.
pub fn normalize(u: &ScalarField) -> ScalarField {
    let s = u.sup_norm();
    let sign = if u.min_interior().abs() >= u.max_interior().abs() { 1.0 } else { -1.0 };
    u.scaled(sign / s)
}

/// `sup |det(u_{jk̄}) - (-λu)ⁿ fⁿ|` over interior nodes (`u > 0` counts as 0
/// on the right).
pub fn eigen_residual(u: &ScalarField, lambda: f64, density: &[f64]) -> f64 {
    let grid = u.grid();
    let n = grid.complex_dim() as i32;
    let det = hessian::ma_det(u);
    grid.interior()
        .iter()
        .map(|&i| (det.value(i) - (-lambda * u.value(i)).max(0.0).powi(n) * density[i].powi(n)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenpairReport {
    pub residual: f64,
    pub psh_margin: f64,
    pub sup_norm: f64,
    pub boundary_trace: f64,
    /// `(θ, residual(θu) / (θⁿ residual(u)))`.
    pub scale_ratios: Vec<(f64, f64)>,
    pub normalized: bool,
    pub scale_invariant: bool,
    pub holds: bool,
}

/// Recompute residual, PSH margin, normalization and boundary trace of an
/// eigenpair, and check degree-n homogeneity of the residual.
pub fn verify_eigenpair(result: &EigenResult, f: &DensitySpec, tol: f64) -> Result<EigenpairReport> {
    let u = &result.eigenfunction;
    let density = sample_density(f, u.grid())?;
    Ok(verify_eigenpair_from(u, result.lambda1, &density, tol))
}

pub fn verify_eigenpair_from(u: &ScalarField, lambda1: f64, density: &[f64], tol: f64) -> EigenpairReport {
    let grid = u.grid();
    let n = grid.complex_dim() as i32;
    let residual = eigen_residual(u, lambda1, density);
    let psh = hessian::is_psh(u, hessian::default_psh_tol(grid));
    let sup_norm = u.sup_norm();
    let normalized = (sup_norm - 1.0).abs() <= 1e-9 && u.max_interior() <= tol;
    let mut scale_ratios = Vec::new();
    let mut scale_invariant = true;
    for theta in [0.5, 2.0] {
        let r = eigen_residual(&u.scaled(theta), lambda1, density);
        let ratio = if residual > 0.0 { r / (theta.powi(n) * residual) } else { 1.0 };
        scale_invariant &= (ratio - 1.0).abs() <= 0.1;
        scale_ratios.push((theta, ratio));
    }
    let boundary_trace = u.boundary_trace_sup();
    EigenpairReport {
        residual,
        psh_margin: psh.min_eigenvalue,
        sup_norm,
        boundary_trace,
        scale_ratios,
        normalized,
        scale_invariant,
        holds: normalized && scale_invariant && psh.is_psh && boundary_trace <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};

    #[test]
    fn fit_root_of_exact_line() {
        let pts = [(1.0, 0.4), (1.2, 0.3), (1.4, 0.2), (1.6, 0.1)];
        let (root, rms) = fit_root(&pts).unwrap();
        assert!((root - 1.8).abs() < 1e-12);
        assert!(rms < 1e-12);
    }

    #[test]
    fn lower_bound_unit_ball_is_one() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 1.0 / 16.0).unwrap();
        let lb = lower_bound(&DensitySpec::Constant(1.0), &grid, 1e-10).unwrap();
        assert!((lb - 1.0).abs() < 1e-8, "{lb}");
    }

    #[test]
    fn zero_field_fails_normalization() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.125).unwrap();
        let u = ScalarField::zeros(&grid);
        let density = vec![1.0; grid.node_count()];
        assert!(!verify_eigenpair_from(&u, 1.4, &density, 1e-8).normalized);
    }

    #[test]
    fn branch_sup_norm_grows_with_lambda() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 1.0 / 16.0).unwrap();
        let f = DensitySpec::Constant(1.0);
        let a = solve_branch(1.0, &f, &grid, 1e-9).unwrap();
        let b = solve_branch(1.3, &f, &grid, 1e-9).unwrap();
        assert!(b.sup_norm > a.sup_norm);
    }
}
