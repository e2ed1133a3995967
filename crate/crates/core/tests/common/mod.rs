//! Independent reference values shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use cma::domain::{build_grid, DomainSpec, GridDomain};

/// `J₀(x) = Σ (-1)^k (x/2)^{2k} / (k!)²`, summed until the terms vanish.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero of `J₀` by bisection on `[2, 3]`.
pub fn bessel_j01() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    assert!(bessel_j0(lo) > 0.0 && bessel_j0(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// First eigenvalue of the unit disc for `det = (-λu) f` with `f ≡ 1`:
/// `Δu = -4λu` gives `λ₁ = j₀,₁² / 4`.
pub fn disc_lambda1() -> f64 {
    let j = bessel_j01();
    j * j / 4.0
}

/// Normalized first mode `-J₀(j₀,₁ r / R)` on a disc of radius `R`.
pub fn disc_mode(x: &[f64], radius: f64) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt() / radius;
    -bessel_j0(bessel_j01() * r)
}

pub fn ball(n: usize, radius: f64, h: f64) -> Arc<GridDomain> {
    build_grid(DomainSpec::centered_ball(n, radius), h).unwrap()
}

/// First eigenvalue of the unit ball in ℂ², frozen from the shooting
/// oracle (see `fixtures/radial_n2.txt`).
pub fn radial_n2_constant() -> f64 {
    let text = include_str!("../fixtures/radial_n2.txt");
    text.lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .unwrap()
        .trim()
        .parse()
        .unwrap()
}

/// Relative difference.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
