mod common;

use cma::hessian::{ma_det, ScalarField};
use cma::radial::{radial_eigen, radial_lambda1};
use common::{disc_lambda1, radial_n2_constant, rel};

#[test]
fn disc_matches_bessel_root() {
    let l = radial_lambda1(1, 1.0, 1e-10).unwrap();
    assert!((l - disc_lambda1()).abs() < 1e-7, "{l}");
}

#[test]
fn ball_in_c2_matches_frozen_value() {
    let l = radial_lambda1(2, 1.0, 1e-10).unwrap();
    assert!(rel(l, radial_n2_constant()) < 1e-8, "{l}");
}

#[test]
fn eigenvalue_scales_with_inverse_square_radius() {
    for n in [1, 2, 3] {
        let base = radial_lambda1(n, 1.0, 1e-10).unwrap();
        for r in [0.5, 2.0] {
            let l = radial_lambda1(n, r, 1e-10).unwrap();
            assert!(rel(l * r * r, base) < 1e-6, "n={n} r={r}");
        }
        assert!(base >= 1.0);
    }
}

#[test]
fn profile_starts_at_minus_one_and_ends_at_zero() {
    let eig = radial_eigen(2, 1.0, 1e-10).unwrap();
    let p = &eig.profile;
    assert!((p.phi[0] + 1.0).abs() < 1e-12);
    assert!(p.shoot_residual.abs() < 1e-6);
    assert!(p.phi.windows(2).all(|w| w[1] >= w[0]));
}

/// The profile, sampled on the grid as a function of |z|², satisfies the
/// discrete equation det = (-λu)ⁿ up to discretization error.
#[test]
fn profile_solves_the_grid_equation() {
    for (n, h) in [(1, 1.0 / 32.0), (2, 1.0 / 8.0)] {
        let eig = radial_eigen(n, 1.0, 1e-10).unwrap();
        let grid = common::ball(n, 1.0, h);
        let u = ScalarField::from_fn_interior(&grid, |x| eig.profile.phi_at(x.iter().map(|v| v * v).sum()));
        let det = ma_det(&u);
        let mut worst: f64 = 0.0;
        for &i in grid.interior() {
            let r = grid.coords(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (0.3..0.8).contains(&r) {
                let want = (-eig.lambda * u.value(i)).powi(n as i32);
                worst = worst.max((det.value(i) - want).abs() / want);
            }
        }
        assert!(worst < 0.05, "n={n}: {worst}");
    }
}
