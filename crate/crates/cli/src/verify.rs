//! The `verify` command: every invariant on small shipped fixtures, one row
//! per invariant with its worst margin (positive means satisfied).

use std::cell::OnceCell;
use std::io::{self, Write};
use std::sync::Arc;

use cma::dirichlet::{find_scaled_subsolution, monotone_iteration, solve_frozen, MonotoneOptions, RhsSpec};
use cma::domain::{build_grid, sample_density, DensitySpec, DomainSpec, GridDomain};
use cma::eigenpath::{continuation_from, EigenResult, SchedulePolicy};
use cma::hessian::{gaveau_value, gaveau_value_sampled, herm, CMatrix, DualMatrixSet};
use cma::variational::{self, InversePowerOptions};
use cma::{radial, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;

/// `j₀,₁² / 4` with `j₀,₁ = 2.404825557695773`.
pub const DISC_LAMBDA1: f64 = 1.445_796_490_736_696;

pub const INVARIANTS: &[&str] = &[
    "ball_lower_bound",
    "bessel_radial",
    "blocki_inequality",
    "branch_monotonicity",
    "comparison_principle",
    "eigen_normalization",
    "gaveau_upper_bound",
    "homogeneity",
    "lower_bound_chain",
    "method_agreement",
    "monotone_iteration",
    "rayleigh_lower_bound",
    "scaling_law",
    "sobolev_inequality",
];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub invariant: String,
    pub fixture: String,
    pub margin: f64,
    pub pass: bool,
}

const DISC_H: f64 = 1.0 / 32.0;
const TOL: f64 = 1e-8;

struct Fixtures {
    seed: u64,
    disc: OnceCell<Arc<GridDomain>>,
    bump: DensitySpec,
    cont: OnceCell<Result<EigenResult>>,
    cont_bump: OnceCell<Result<EigenResult>>,
    inv: OnceCell<Result<EigenResult>>,
}

impl Fixtures {
    fn disc(&self) -> &Arc<GridDomain> {
        self.disc
            .get_or_init(|| build_grid(DomainSpec::centered_ball(1, 1.0), DISC_H).expect("disc fixture"))
    }

    fn ones(&self) -> Vec<f64> {
        vec![1.0; self.disc().node_count()]
    }

    fn cont(&self) -> &Result<EigenResult> {
        self.cont.get_or_init(|| {
            let policy = SchedulePolicy {
                keep_fields: false,
                ..Default::default()
            };
            continuation_from(&self.ones(), self.disc(), TOL, policy)
        })
    }

    fn cont_bump(&self) -> &Result<EigenResult> {
        self.cont_bump.get_or_init(|| {
            let density = sample_density(&self.bump, self.disc())?;
            continuation_from(&density, self.disc(), TOL, SchedulePolicy::default())
        })
    }

    fn inv(&self) -> &Result<EigenResult> {
        self.inv
            .get_or_init(|| variational::inverse_power(&self.ones(), self.disc(), InversePowerOptions::new(TOL), None))
    }
}

fn row(invariant: &str, fixture: &str, margin: f64) -> VerifyRow {
    VerifyRow {
        invariant: invariant.to_string(),
        fixture: fixture.to_string(),
        margin,
        pass: margin >= 0.0,
    }
}

fn failed(invariant: &str, fixture: &str, e: impl std::fmt::Display) -> VerifyRow {
    VerifyRow {
        invariant: invariant.to_string(),
        fixture: format!("{fixture} ({e})"),
        margin: f64::NAN,
        pass: false,
    }
}

/// Rows sorted by invariant name; `config.filter` keeps one invariant.
pub fn verify_suite(config: &RunConfig) -> Vec<VerifyRow> {
    let fx = Fixtures {
        seed: config.seed,
        disc: OnceCell::new(),
        bump: DensitySpec::GaussianBump {
            center: vec![0.2, 0.0],
            amplitude: 1.0,
            width: 0.4,
        },
        cont: OnceCell::new(),
        cont_bump: OnceCell::new(),
        inv: OnceCell::new(),
    };
    INVARIANTS
        .iter()
        .filter(|name| config.filter.as_deref().is_none_or(|f| f == **name))
        .map(|name| evaluate(name, &fx).unwrap_or_else(|e| failed(name, "-", e)))
        .collect()
}

fn evaluate(name: &str, fx: &Fixtures) -> Result<VerifyRow> {
    let disc = "unit disc h=1/32";
    Ok(match name {
        "ball_lower_bound" => {
            let mut m = f64::INFINITY;
            for n in [1, 2] {
                for r in [0.5, 1.0, 2.0] {
                    m = m.min(radial::radial_lambda1(n, r, 1e-9)? * r * r - 1.0);
                }
            }
            row(name, "radial n=1,2 R=0.5,1,2", m)
        }
        "bessel_radial" => {
            let l = radial::radial_lambda1(1, 1.0, 1e-9)?;
            row(name, "radial n=1 R=1", 1e-5 - (l - DISC_LAMBDA1).abs())
        }
        "blocki_inequality" => {
            let grid = fx.disc();
            let mut m = f64::INFINITY;
            for k in 0..50 {
                let u = variational::random_psh_field(grid, fx.seed.wrapping_add(2 * k))?;
                let v = variational::random_psh_field(grid, fx.seed.wrapping_add(2 * k + 1))?;
                let c = variational::check_blocki(&u, &v, 1e-12)?;
                m = m.min(c.rhs + 1e-12 - c.lhs);
            }
            row(name, &format!("{disc}, 50 random pairs"), m)
        }
        "branch_monotonicity" => {
            let r = fx.cont().as_ref().map_err(Clone::clone)?;
            let m = r
                .branch
                .windows(2)
                .map(|w| w[1].sup_norm - w[0].sup_norm + 10.0 * TOL)
                .fold(f64::INFINITY, f64::min);
            row(name, disc, m)
        }
        "comparison_principle" => {
            let grid = fx.disc();
            let mut rng = ChaCha8Rng::seed_from_u64(fx.seed);
            let mut m = f64::INFINITY;
            for _ in 0..5 {
                let c: f64 = rng.random_range(0.5..2.0);
                let bump = DensitySpec::GaussianBump {
                    center: vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
                    amplitude: rng.random_range(0.0..3.0),
                    width: 0.3,
                };
                let b = sample_density(&bump, grid)?;
                let psi1 = vec![c; grid.node_count()];
                let psi2: Vec<f64> = b.iter().map(|v| c * v).collect();
                let (u1, _) = solve_frozen(&psi1, grid, TOL)?;
                let (u2, _) = solve_frozen(&psi2, grid, TOL)?;
                let gap = grid
                    .interior()
                    .iter()
                    .map(|&i| u1.value(i) - u2.value(i))
                    .fold(f64::INFINITY, f64::min);
                m = m.min(gap + 10.0 * TOL);
            }
            row(name, &format!("{disc}, 5 ordered pairs"), m)
        }
        "eigen_normalization" => {
            let mut m = f64::INFINITY;
            for r in [fx.cont(), fx.inv()] {
                let r = r.as_ref().map_err(Clone::clone)?;
                m = m.min(1e-9 - (r.eigenfunction.sup_norm() - 1.0).abs());
                m = m.min(-r.eigenfunction.max_interior());
            }
            row(name, disc, m)
        }
        "gaveau_upper_bound" => {
            let mut rng = ChaCha8Rng::seed_from_u64(fx.seed);
            let mut m = f64::INFINITY;
            for n in [2, 3] {
                let duals = DualMatrixSet::default_for(n);
                for _ in 0..100 {
                    let a = random_psd(n, &mut rng);
                    let root = herm::det(&a).max(0.0).powf(1.0 / n as f64);
                    m = m.min(1e-10 - (gaveau_value(&a, &duals)? - root).abs());
                    m = m.min(gaveau_value_sampled(&a, &duals)? - root + 1e-10);
                }
            }
            row(name, "100 random matrices, n=2,3", m)
        }
        "homogeneity" => {
            let grid = fx.disc();
            let g = fx.ones();
            let phi = variational::random_psh_field(grid, fx.seed)?;
            let (e, ms) = (variational::energy(&phi)?, variational::mass(&phi, &g));
            let mut m = f64::INFINITY;
            for theta in [0.5, 1.0, 2.0, 10.0] {
                let s = phi.scaled(theta);
                let t2: f64 = theta * theta;
                m = m.min(1e-12 - ((variational::energy(&s)? - t2 * e) / (t2 * e)).abs());
                m = m.min(1e-12 - ((variational::mass(&s, &g) - t2 * ms) / (t2 * ms)).abs());
            }
            row(name, disc, m)
        }
        "lower_bound_chain" => {
            let mut m = f64::INFINITY;
            for r in [fx.cont(), fx.cont_bump()] {
                let r = r.as_ref().map_err(Clone::clone)?;
                let lb = 1.0 / r.branch[0].sup_norm;
                m = m.min(r.lambda1 - lb + 1e-3);
            }
            row(name, &format!("{disc}, f=1 and gaussian bump"), m)
        }
        "method_agreement" => {
            let a = fx.cont().as_ref().map_err(Clone::clone)?;
            let b = fx.inv().as_ref().map_err(Clone::clone)?;
            let rel = (a.lambda1 - b.lambda1).abs() / b.lambda1;
            let dist = a.eigenfunction.sup_distance(&b.eigenfunction);
            row(name, disc, (0.03 - rel).min(0.05 - dist))
        }
        "monotone_iteration" => {
            let grid = fx.disc();
            let rhs = RhsSpec::branch(grid, 0.5, fx.ones())?;
            let sub = find_scaled_subsolution(&rhs, 1e-7)?;
            let mut opts = MonotoneOptions::new(1e-7, 200);
            opts.keep_iterates = true;
            let out = monotone_iteration(&sub, &rhs, opts)?;
            let m = out
                .history
                .iter()
                .map(|inc| inc.min_increase + 10.0 * opts.tol)
                .fold(f64::INFINITY, f64::min);
            row(name, &format!("{disc}, branch lambda=0.5"), m)
        }
        "rayleigh_lower_bound" => {
            let lambda1 = fx.cont().as_ref().map_err(Clone::clone)?.lambda1;
            let grid = fx.disc();
            let g = fx.ones();
            let mut best = f64::INFINITY;
            for k in 0..100 {
                let phi = variational::random_psh_field(grid, fx.seed.wrapping_add(k))?;
                best = best.min(variational::rayleigh(&phi, &g)?);
            }
            row(name, &format!("{disc}, 100 random fields"), best - lambda1 * 0.95)
        }
        "scaling_law" => {
            let vals = [0.5, 1.0, 2.0]
                .iter()
                .map(|&r| radial::radial_lambda1(1, r, 1e-9).map(|l| l * r * r))
                .collect::<Result<Vec<_>>>()?;
            let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            row(name, "radial n=1 R=0.5,1,2", 0.02 - (hi - lo) / lo)
        }
        "sobolev_inequality" => {
            let grid = fx.disc();
            let g = fx.ones();
            let a = variational::sobolev_constant(&g, grid, TOL)?;
            let mut m = f64::INFINITY;
            for k in 0..50 {
                let phi = variational::random_psh_field(grid, fx.seed.wrapping_add(1000 + k))?;
                let c = variational::check_sobolev(&phi, &g, a, 1e-12)?;
                m = m.min(c.rhs + 1e-12 - c.lhs);
            }
            row(name, &format!("{disc}, 50 random fields"), m)
        }
        other => failed(other, "-", "unknown invariant"),
    })
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let b = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let a = &b * b.adjoint();
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn write_table_csv(w: &mut dyn Write, rows: &[VerifyRow]) -> io::Result<()> {
    writeln!(w, "invariant,fixture,margin,pass")?;
    for r in rows {
        writeln!(w, "{},\"{}\",{},{}", r.invariant, r.fixture, cma::io::fmt_f64(r.margin), r.pass)?;
    }
    Ok(())
}
