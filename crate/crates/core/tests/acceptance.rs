//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any
//! failure.

mod common;

use std::sync::Arc;
use std::time::Instant;

use cma::dirichlet::{
    check_subsolution, check_supersolution, find_scaled_subsolution, monotone_iteration, solve_frozen,
    solve_quasimonotone, MonotoneOptions, RhsSpec,
};
use cma::domain::{build_grid, sample_density, DensitySpec, DomainSpec, GridDomain};
use cma::eigenpath::{continuation_from, lower_bound, EigenResult, SchedulePolicy};
use cma::hessian::{gaveau_value, gaveau_value_sampled, herm, CMatrix, DualMatrixSet};
use cma::variational::{self, InversePowerOptions};
use cma::{radial, Error, Result};
use common::{ball, disc_lambda1, radial_n2_constant, rel};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;
const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

struct Fixture {
    grid: Arc<GridDomain>,
    density: Vec<f64>,
    cont: EigenResult,
    inv: EigenResult,
}

impl Fixture {
    fn new(spec: DomainSpec, h: f64, f: &DensitySpec) -> Result<Self> {
        let grid = build_grid(spec, h)?;
        let density = sample_density(f, &grid)?;
        let n = grid.complex_dim() as i32;
        let g: Vec<f64> = density.iter().map(|v| v.powi(n)).collect();
        let cont = continuation_from(&density, &grid, TOL, SchedulePolicy::default())?;
        let inv = variational::inverse_power(&g, &grid, InversePowerOptions::new(TOL), None)?;
        Ok(Self {
            grid,
            density,
            cont,
            inv,
        })
    }

    fn g(&self) -> Vec<f64> {
        let n = self.grid.complex_dim() as i32;
        self.density.iter().map(|v| v.powi(n)).collect()
    }
}

fn bump() -> DensitySpec {
    DensitySpec::GaussianBump {
        center: vec![0.25, -0.1],
        amplitude: 1.5,
        width: 0.4,
    }
}

fn fixtures() -> Result<Vec<Fixture>> {
    let one = DensitySpec::Constant(1.0);
    Ok(vec![
        Fixture::new(DomainSpec::centered_ball(1, 1.0), 1.0 / 64.0, &one)?,
        Fixture::new(DomainSpec::centered_ball(1, 0.8), 1.0 / 64.0, &one)?,
        Fixture::new(DomainSpec::centered_ball(1, 1.0), 1.0 / 64.0, &bump())?,
        Fixture::new(DomainSpec::centered_ball(2, 1.0), 0.25, &one)?,
    ])
}

fn c1_ball_lower_bound() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    for n in [1, 2] {
        for r in [0.5, 1.0, 2.0] {
            worst = worst.min(radial::radial_lambda1(n, r, 1e-9)? * r * r);
        }
    }
    for r in [0.5, 1.0, 2.0] {
        let grid = ball(1, r, r / 32.0);
        let res = continuation_from(&vec![1.0; grid.node_count()], &grid, TOL, SchedulePolicy::default())?;
        worst = worst.min(res.lambda1 * r * r);
    }
    outcome(worst >= 1.0, format!("min lambda1*R^2 = {worst:.6} (need >= 1)"))
}

fn c2_exact_eigenvalue(fx: &[Fixture]) -> Result<Outcome> {
    let exact = disc_lambda1();
    let d = &fx[0];
    let rc = rel(d.cont.lambda1, exact);
    let ri = rel(d.inv.lambda1, exact);
    let radial = radial::radial_lambda1(1, 1.0, 1e-9)?;
    let er = (radial - exact).abs();
    outcome(
        rc <= 0.02 && ri <= 0.02 && er <= 1e-5,
        format!(
            "exact {exact:.6}; continuation {:.6} ({:.3}%), inverse power {:.6} ({:.3}%), radial err {er:.1e}",
            d.cont.lambda1,
            100.0 * rc,
            d.inv.lambda1,
            100.0 * ri
        ),
    )
}

fn c3_method_agreement(fx: &[Fixture]) -> Result<Outcome> {
    let mut worst_l: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    for f in fx {
        worst_l = worst_l.max(rel(f.cont.lambda1, f.inv.lambda1));
        worst_u = worst_u.max(f.cont.eigenfunction.sup_distance(&f.inv.eigenfunction));
    }
    outcome(
        worst_l <= 0.03 && worst_u <= 0.05,
        format!(
            "{} fixtures: max lambda gap {:.3}% (<= 3%), max eigenfunction gap {:.4} (<= 0.05)",
            fx.len(),
            100.0 * worst_l,
            worst_u
        ),
    )
}

fn c4_rayleigh_infimum(fx: &[Fixture]) -> Result<Outcome> {
    let mut pass = true;
    let mut worst_ratio = f64::INFINITY;
    let mut worst_eig: f64 = 0.0;
    for (i, f) in fx.iter().enumerate() {
        let n = f.grid.complex_dim() as i32;
        let target = f.cont.lambda1.powi(n);
        let g = f.g();
        let mut best = f64::INFINITY;
        for k in 0..100u64 {
            let phi = variational::random_psh_field(&f.grid, SEED + 1000 * i as u64 + k)?;
            best = best.min(variational::rayleigh(&phi, &g)?);
        }
        worst_ratio = worst_ratio.min(best / target);
        let own = variational::rayleigh(&f.cont.eigenfunction, &g)?;
        worst_eig = worst_eig.max(rel(own, target));
        pass &= best >= target * 0.95 && rel(own, target) <= 0.03;
    }
    let grid = ball(1, 1.0, 1.0 / 64.0);
    let phi = cma::hessian::ScalarField::from_fn_interior(&grid, |x| x[0] * x[0] + x[1] * x[1] - 1.0);
    let spot = variational::rayleigh(&phi, &vec![1.0; grid.node_count()])?;
    pass &= rel(spot, 1.5) <= 0.02 && spot >= 1.4458;
    outcome(
        pass,
        format!(
            "min random rayleigh / lambda1^n = {worst_ratio:.4} (>= 0.95); eigenfunction gap {:.3}% (<= 3%); paraboloid {spot:.5} (1.5 +- 2%)",
            100.0 * worst_eig
        ),
    )
}

fn c5_lower_bound_chain(fx: &[Fixture]) -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    for f in fx {
        let n = f.grid.complex_dim() as i32;
        let g: Vec<f64> = f.density.iter().map(|v| v.powi(n)).collect();
        let (u0, _) = solve_frozen(&g, &f.grid, TOL)?;
        let lb = 1.0 / u0.sup_norm();
        worst = worst.min(f.cont.lambda1.min(f.inv.lambda1) - lb);
    }
    let _ = lower_bound(&DensitySpec::Constant(1.0), &fx[0].grid, TOL)?;
    outcome(worst >= -1e-3, format!("min lambda1 - 1/||u0|| = {worst:.5} (>= -1e-3)"))
}

fn c6_scaling_law() -> Result<Outcome> {
    let spread = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        (hi - lo) / lo
    };
    let mut rad = Vec::new();
    let mut grid_vals = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        rad.push(radial::radial_lambda1(1, r, 1e-9)? * r * r);
        let grid = ball(1, r, r / 64.0);
        let res = continuation_from(&vec![1.0; grid.node_count()], &grid, TOL, SchedulePolicy::default())?;
        grid_vals.push(res.lambda1 * r * r);
    }
    let (sr, sg) = (spread(&rad), spread(&grid_vals));
    outcome(
        sr <= 0.02 && sg <= 0.05,
        format!("lambda1*R^2 spread: radial {:.2e} (<= 2%), grid {:.2e} (<= 5%)", sr, sg),
    )
}

fn c7_domain_monotonicity(fx: &[Fixture]) -> Result<Outcome> {
    let (big, small) = (fx[0].cont.lambda1, fx[1].cont.lambda1);
    let ratio = small / big - 1.0;
    outcome(
        big <= small && ratio >= 0.10,
        format!("lambda1(r=1) = {big:.5}, lambda1(r=0.8) = {small:.5}, increase {:.1}% (>= 10%)", 100.0 * ratio),
    )
}

fn c8_monotone_structure() -> Result<Outcome> {
    let tol = 1e-7;
    let grid = ball(1, 1.0, 1.0 / 32.0);
    let one = vec![1.0; grid.node_count()];
    let bump = sample_density(&bump(), &grid)?;
    let mut worst_drop = f64::INFINITY;
    let mut worst_sandwich = f64::INFINITY;
    let mut count = 0;
    for density in [&one, &bump] {
        let (u0, _) = solve_frozen(density, &grid, tol / 10.0)?;
        let lb = 1.0 / u0.sup_norm();
        for frac in [0.0, 0.2, 0.4, 0.6, 0.8] {
            let lambda = frac * lb;
            let rhs = RhsSpec::branch(&grid, lambda, density.clone())?;
            let sub = find_scaled_subsolution(&rhs, tol)?;
            let (sup, _) = solve_frozen(density, &grid, tol / 10.0)?;
            let psh_tol = cma::hessian::default_psh_tol(&grid);
            if !check_subsolution(&sub, &rhs, psh_tol, 0.0).holds || !check_supersolution(&sup, &rhs, psh_tol).holds {
                return outcome(false, format!("bracket check failed at lambda = {lambda}"));
            }
            let mut opts = MonotoneOptions::new(tol, 1000);
            opts.keep_iterates = true;
            let out = monotone_iteration(&sub, &rhs, opts)?;
            let mut prev = sub.clone();
            for u in &out.iterates {
                for &i in grid.interior() {
                    worst_drop = worst_drop.min(u.value(i) - prev.value(i) + 10.0 * tol);
                    worst_sandwich = worst_sandwich
                        .min(u.value(i) - sub.value(i) + 10.0 * tol)
                        .min(sup.value(i) - u.value(i) + 10.0 * tol);
                }
                prev = u.clone();
            }
            count += 1;
        }
    }
    outcome(
        worst_drop >= 0.0 && worst_sandwich >= 0.0,
        format!("{count} fixtures: min slack nondecreasing {worst_drop:.2e}, sandwich {worst_sandwich:.2e} (>= 0)"),
    )
}

fn c9_inequalities(fx: &[Fixture]) -> Result<Outcome> {
    let mut failures = 0;
    let mut checks = 0;
    for (i, f) in fx.iter().enumerate() {
        let g = f.g();
        let a = variational::sobolev_constant(&g, &f.grid, TOL)?;
        for k in 0..50u64 {
            let base = SEED + 10_000 * (i as u64 + 1) + 3 * k;
            let phi = variational::random_psh_field(&f.grid, base)?;
            let u = variational::random_psh_field(&f.grid, base + 1)?;
            let v = variational::random_psh_field(&f.grid, base + 2)?;
            failures += !variational::check_sobolev(&phi, &g, a, 1e-12)?.holds as usize;
            failures += !variational::check_blocki(&u, &v, 1e-12)?.holds as usize;
            checks += 2;
        }
    }
    outcome(failures == 0, format!("{failures} failures in {checks} checks over {} fixtures", fx.len()))
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let b = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &b * b.adjoint()
}

fn c10_gaveau() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_eq: f64 = 0.0;
    let mut worst_lb = f64::INFINITY;
    for n in [2, 3] {
        let duals = DualMatrixSet::default_for(n);
        for _ in 0..100 {
            let m = random_psd(n, &mut rng);
            let root = herm::det(&m).max(0.0).powf(1.0 / n as f64);
            worst_eq = worst_eq.max((gaveau_value(&m, &duals)? - root).abs());
            worst_lb = worst_lb.min(gaveau_value_sampled(&m, &duals)? - root);
        }
    }
    outcome(
        worst_eq <= 1e-10 && worst_lb >= -1e-12,
        format!("with minimizer max |gap| {worst_eq:.1e} (<= 1e-10); without, min gap {worst_lb:.3e} (>= 0)"),
    )
}

fn c11_quasimonotone() -> Result<Outcome> {
    let tol = 1e-7;
    let grid = ball(1, 1.0, 1.0 / 32.0);
    let estimate = continuation_from(&vec![1.0; grid.node_count()], &grid, TOL, SchedulePolicy::default())?.lambda1;
    let h: cma::dirichlet::ScalarFn = Arc::new(|_x: &[f64], t: f64| 1.0 + 0.5 * t.sin());
    let dh: cma::dirichlet::ScalarFn = Arc::new(|_x: &[f64], t: f64| 0.5 * t.cos());
    let rhs = RhsSpec::general_h(&grid, h.clone(), dh.clone(), 0.5)?;
    let out = solve_quasimonotone(&rhs, estimate, tol, SEED)?;
    let agree = out.max_pairwise_distance <= 10.0 * tol;
    let guarded = RhsSpec::general_h(&grid, h, dh, estimate + 0.1)?;
    let guard = matches!(
        solve_quasimonotone(&guarded, estimate, tol, SEED),
        Err(Error::EigenvalueBoundViolated { .. })
    );
    outcome(
        agree && guard,
        format!(
            "three starts agree to {:.2e} (<= {:.0e}); guard for lambda0 >= {estimate:.4}: {}",
            out.max_pairwise_distance,
            10.0 * tol,
            if guard { "triggered" } else { "missing" }
        ),
    )
}

fn c12_n2_cross_validation(fx: &[Fixture]) -> Result<Outcome> {
    let target = radial_n2_constant();
    let got = fx[3].cont.lambda1;
    let r = rel(got, target);
    outcome(
        r <= 0.10,
        format!("continuation {got:.5} vs radial {target:.5}: {:.2}% (<= 10%)", 100.0 * r),
    )
}

fn main() {
    let started = Instant::now();
    let fx = fixtures();
    let mut results: Vec<(&str, Result<Outcome>)> = vec![
        ("C1 ball lower bound", c1_ball_lower_bound()),
        ("C6 scaling law", c6_scaling_law()),
        ("C8 monotone-iteration structure", c8_monotone_structure()),
        ("C10 Gaveau identity", c10_gaveau()),
        ("C11 quasi-monotone uniqueness", c11_quasimonotone()),
    ];
    match &fx {
        Ok(fx) => {
            results.push(("C2 n=1 exact eigenvalue", c2_exact_eigenvalue(fx)));
            results.push(("C3 method agreement", c3_method_agreement(fx)));
            results.push(("C4 Rayleigh infimum", c4_rayleigh_infimum(fx)));
            results.push(("C5 lower-bound chain", c5_lower_bound_chain(fx)));
            results.push(("C7 domain monotonicity", c7_domain_monotonicity(fx)));
            results.push(("C9 inequality suites", c9_inequalities(fx)));
            results.push(("C12 n=2 cross-validation", c12_n2_cross_validation(fx)));
        }
        Err(e) => {
            for name in [
                "C2 n=1 exact eigenvalue",
                "C3 method agreement",
                "C4 Rayleigh infimum",
                "C5 lower-bound chain",
                "C7 domain monotonicity",
                "C9 inequality suites",
                "C12 n=2 cross-validation",
            ] {
                results.push((name, Err(e.clone())));
            }
        }
    }
    results.sort_by_key(|(name, _)| name[1..].split(' ').next().unwrap().parse::<u32>().unwrap());
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(o) => {
                failed += !o.pass as usize;
                println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            }
            Err(e) => {
                failed += 1;
                println!("[FAIL] {name}: error: {e}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
