//! Numerical toolkit for the complex Monge-Ampère operator on bounded
//! strongly pseudoconvex domains in ℂⁿ.
//!
//! The crate solves zero-boundary Dirichlet problems
//! `det(u_{jk̄}) = ψ(z, u)` on uniform Cartesian grids and computes the first
//! eigenpair of `(dd^c u)^n = (-λu)^n f^n ω^n` by two independent routes:
//! λ-continuation of the branch `(1 - λu)^n f^n` ([`eigenpath`]) and
//! Rayleigh-quotient inverse power iteration ([`variational`]). Balls in any
//! dimension are cross-checked against a radial shooting ODE ([`radial`]).

pub mod dirichlet;
pub mod domain;
pub mod eigenpath;
mod error;
pub mod hessian;
pub mod io;
mod linsolve;
pub mod radial;
pub mod variational;

pub use error::{Error, Result};

/// Weight converting Lebesgue measure to the mass of `ω^n`:
/// `(dd^c |z|²)^n = 2^n · n! · dV`.
pub fn omega_weight(n: usize) -> f64 {
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    2f64.powi(n as i32) * factorial
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
