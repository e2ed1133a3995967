mod common;

use cma::domain::DensitySpec;
use cma::eigenpath::{continuation, eigen_residual, lower_bound, verify_eigenpair, SchedulePolicy};
use cma::hessian::{ma_det, ScalarField};
use common::{ball, bessel_j01, disc_mode, rel};

#[test]
fn radius_two_disc_eigenvalue() {
    let grid = ball(1, 2.0, 2.0 / 32.0);
    let res = continuation(&DensitySpec::Constant(1.0), &grid, 1e-8, SchedulePolicy::default()).unwrap();
    let exact = bessel_j01().powi(2) / 16.0;
    assert!(rel(res.lambda1, exact) < 0.02, "{} vs {exact}", res.lambda1);
}

#[test]
fn branch_sup_norm_grows_and_lower_bound_holds() {
    let grid = ball(1, 1.0, 1.0 / 32.0);
    let f = DensitySpec::Constant(1.0);
    let res = continuation(&f, &grid, 1e-8, SchedulePolicy::default()).unwrap();
    assert!(res.branch.len() >= 4);
    assert!(res.branch.windows(2).all(|w| w[1].lambda > w[0].lambda && w[1].sup_norm > w[0].sup_norm));
    let lb = lower_bound(&f, &grid, 1e-8).unwrap();
    assert!((lb - 1.0).abs() < 1e-6);
    assert!(res.lambda1 >= lb);
}

/// Second order away from the boundary, first order at the irregular
/// nodes next to it.
#[test]
fn bessel_mode_residual_orders() {
    let lambda = bessel_j01().powi(2) / 4.0;
    let res = |h: f64| {
        let grid = ball(1, 1.0, h);
        let u = ScalarField::from_fn_interior(&grid, |x| disc_mode(x, 1.0));
        let det = ma_det(&u);
        let inner = grid
            .interior()
            .iter()
            .filter(|&&i| grid.coords(i).iter().map(|v| v * v).sum::<f64>() < 0.64)
            .map(|&i| (det.value(i) + lambda * u.value(i)).abs())
            .fold(0.0, f64::max);
        (inner, eigen_residual(&u, lambda, &vec![1.0; grid.node_count()]))
    };
    let (coarse, fine) = (res(1.0 / 16.0), res(1.0 / 32.0));
    assert!(coarse.0 / fine.0 > 3.5, "interior ratio {}", coarse.0 / fine.0);
    assert!(coarse.1 / fine.1 > 1.5, "boundary ratio {}", coarse.1 / fine.1);
    assert!(fine.0 < 1e-3);
}

#[test]
fn eigenpair_is_normalized_and_scale_invariant() {
    let grid = ball(1, 1.0, 1.0 / 32.0);
    let f = DensitySpec::Constant(1.0);
    let res = continuation(&f, &grid, 1e-8, SchedulePolicy::default()).unwrap();
    let report = verify_eigenpair(&res, &f, 1e-8).unwrap();
    assert!(report.normalized);
    assert!(report.scale_invariant, "{:?}", report.scale_ratios);
    assert!(report.boundary_trace < 1e-12);
    assert!((res.eigenfunction.min_interior() + 1.0).abs() < 1e-12);
    assert!(res.eigenfunction.max_interior() <= 0.0);
}

#[test]
fn eigenfunction_matches_bessel_mode() {
    let grid = ball(1, 1.0, 1.0 / 32.0);
    let res = continuation(&DensitySpec::Constant(1.0), &grid, 1e-8, SchedulePolicy::default()).unwrap();
    let mode = ScalarField::from_fn_interior(&grid, |x| disc_mode(x, 1.0));
    assert!(res.eigenfunction.sup_distance(&mode) < 0.02);
}
