//! Radial reduction of the eigenvalue problem on balls with `f ≡ 1`.
//!
//! For `u(z) = φ(|z|²)` the complex Hessian has eigenvalues `φ'` (multiplicity
//! `n - 1`) and `φ' + tφ''`, so `det(u_{jk̄}) = φ'^{n-1}(φ' + tφ'')` and the
//! eigen equation becomes the ODE
//!
//! ```text
//! φ'' = [λⁿ(-φ)ⁿ / φ'^{n-1} - φ'] / t,   φ(0) = -1,   φ'(0) = λ,
//! ```
//!
//! whose first eigenvalue on `B(0, R)` is the λ for which `φ(R²) = 0`.

use serde::Serialize;

use crate::{Error, Result};

/// Start of integration, relative to `R²`.
const SERIES_START: f64 = 1e-6;
/// Nominal step, relative to `R²`.
pub const DEFAULT_STEP: f64 = 1e-4;
const GRADIENT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub n: usize,
    pub radius: f64,
    pub lambda: f64,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub shoot_residual: f64,
}

/// `φ''` from the radial equation. Past the zero of φ the source term is
/// clamped to zero so the terminal value keeps increasing with λ.
pub fn radial_rhs(n: usize, lambda: f64, t: f64, phi: f64, dphi: f64) -> Result<f64> {
    if dphi <= GRADIENT_FLOOR {
        return Err(Error::VanishingGradient { t, derivative: dphi });
    }
    if t == 0.0 {
        return Ok(series_curvature(n, lambda));
    }
    let source = (lambda * (-phi).max(0.0)).powi(n as i32) / dphi.powi(n as i32 - 1);
    Ok((source - dphi) / t)
}

/// `φ''(0) = -n λ² / (n + 1)`, from balancing the order-t terms of
/// `φ'^{n-1}(φ' + tφ'') = λⁿ(1 - λt)ⁿ` with `φ = -1 + λt + c t²/2`.
pub fn series_curvature(n: usize, lambda: f64) -> f64 {
    -(n as f64) * lambda * lambda / (n as f64 + 1.0)
}

/// Integrate from the regular singular point to `R²`; returns `φ(R²)`.
pub fn shoot(n: usize, radius: f64, lambda: f64, step: f64) -> Result<(f64, RadialProfile)> {
    assert!(lambda > 0.0 && radius > 0.0 && step > 0.0);
    let scale = radius * radius;
    let end = scale;
    let h_max = step * scale;
    let c2 = series_curvature(n, lambda);
    let mut t = SERIES_START * scale;
    let mut phi = -1.0 + lambda * t + 0.5 * c2 * t * t;
    let mut dphi = lambda + c2 * t;

    let mut profile = RadialProfile {
        n,
        radius,
        lambda,
        t: vec![0.0, t],
        phi: vec![-1.0, phi],
        dphi: vec![lambda, dphi],
        shoot_residual: f64::NAN,
    };
    let f = |t: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        Ok([y[1], radial_rhs(n, lambda, t, y[0], y[1])?])
    };
    while t < end {
        // Near t = 0 the equation is stiff (eigenvalue ≈ -n/t); grade the
        // steps geometrically until the nominal size is reached.
        let h = h_max.min(0.25 * t).min(end - t);
        let y = [phi, dphi];
        let k1 = f(t, y)?;
        let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
        let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
        let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]])?;
        phi += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        dphi += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        t = if end - t <= h { end } else { t + h };
        if dphi <= GRADIENT_FLOOR {
            return Err(Error::VanishingGradient { t, derivative: dphi });
        }
        profile.t.push(t);
        profile.phi.push(phi);
        profile.dphi.push(dphi);
    }
    profile.shoot_residual = phi.abs();
    Ok((phi, profile))
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialEigen {
    pub lambda: f64,
    pub profile: RadialProfile,
    pub bisections: usize,
}

/// First eigenvalue of `B(0, R)` in dimension `n` by bisection on the
/// terminal value over `[R⁻², 20·R⁻²]` (upper end doubled up to three times).
pub fn radial_eigen(n: usize, radius: f64, tol: f64) -> Result<RadialEigen> {
    let r2 = radius * radius;
    let terminal = |lambda: f64| shoot(n, radius, lambda, DEFAULT_STEP).map(|(v, _)| v);
    let lo0 = 1.0 / r2;
    let mut lo = lo0;
    let mut hi = 20.0 / r2;
    let f_lo = terminal(lo)?;
    if f_lo >= 0.0 {
        return Err(Error::BracketFailed { lo, hi });
    }
    let mut widen = 0;
    while terminal(hi)? <= 0.0 {
        widen += 1;
        if widen > 3 {
            return Err(Error::BracketFailed { lo: lo0, hi });
        }
        lo = hi;
        hi *= 2.0;
    }
    let mut bisections = 0;
    while hi - lo > tol * 1e-3 && bisections < 200 {
        let mid = 0.5 * (lo + hi);
        if terminal(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        bisections += 1;
    }
    let lambda = 0.5 * (lo + hi);
    let (_, profile) = shoot(n, radius, lambda, DEFAULT_STEP)?;
    Ok(RadialEigen {
        lambda,
        profile,
        bisections,
    })
}

pub fn radial_lambda1(n: usize, radius: f64, tol: f64) -> Result<f64> {
    radial_eigen(n, radius, tol).map(|e| e.lambda)
}

impl RadialProfile {
    /// Linear interpolation of φ at `t ∈ [0, R²]`.
    pub fn phi_at(&self, t: f64) -> f64 {
        let i = self.t.partition_point(|&s| s < t);
        if i == 0 {
            return self.phi[0];
        }
        if i >= self.t.len() {
            return *self.phi.last().unwrap();
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        (1.0 - w) * self.phi[i - 1] + w * self.phi[i]
    }
}
