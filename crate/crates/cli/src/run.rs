use std::sync::Arc;
use std::time::Instant;

use cma::dirichlet::{solve_frozen, SolveReport};
use cma::domain::{build_grid, sample_density, GridDomain};
use cma::eigenpath::{self, continuation_from, solve_branch_from, EigenResult, SchedulePolicy};
use cma::hessian::ScalarField;
use cma::variational::{self, InversePowerOptions};
use cma::{io as cio, radial};

use crate::config::{Command, Emit, RunConfig};
use crate::output::{write_atomic, Record};
use crate::verify::{verify_suite, write_table_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Record,
}

/// Run one command, writing the requested artifacts under `output_dir`.
pub fn run(config: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let mut summary = Record::default();
    summary.push("command", config.command.name());
    summary.push("config_hash", config.hash());
    summary.push("n", config.n as u64);
    summary.push("seed", config.seed);

    if let Err(e) = std::fs::create_dir_all(&config.output_dir) {
        summary.push("status", "error");
        summary.push("error", format!("cannot create output directory: {e}"));
        return RunOutcome {
            exit_code: EXIT_SOLVER,
            summary,
        };
    }
    let result = execute(config, &mut summary);
    let exit_code = match result {
        Ok(code) => {
            summary.push("status", if code == EXIT_OK { "ok" } else { "failed" });
            code
        }
        Err(e) => {
            summary.push("status", "error");
            summary.push("error", e);
            EXIT_SOLVER
        }
    };
    summary.push("wall_time_s", start.elapsed().as_secs_f64());
    if config.emits(Emit::Summary) {
        let dir = &config.output_dir;
        let text = summary.to_text();
        let json = serde_json::to_string_pretty(&summary.to_json()).unwrap();
        let written = write_atomic(dir, "summary.txt", |w| w.write_all(text.as_bytes()))
            .and_then(|_| write_atomic(dir, "summary.json", |w| w.write_all(json.as_bytes())));
        if let Err(e) = written {
            eprintln!("cannot write summary: {e}");
            return RunOutcome {
                exit_code: EXIT_SOLVER,
                summary,
            };
        }
    }
    RunOutcome { exit_code, summary }
}

fn execute(config: &RunConfig, summary: &mut Record) -> Result<i32, String> {
    match config.command {
        Command::Radial => run_radial(config, summary),
        Command::Verify => {
            let rows = verify_suite(config);
            let failed = rows.iter().filter(|r| !r.pass).count();
            for r in &rows {
                summary.push(&format!("verify.{}", r.invariant), if r.pass { "pass" } else { "fail" });
            }
            summary.push("verify_rows", rows.len() as u64);
            summary.push("verify_failed", failed as u64);
            if config.emits(Emit::Csv) {
                write_atomic(&config.output_dir, "verify.csv", |w| write_table_csv(w, &rows)).map_err(|e| e.to_string())?;
            }
            for r in &rows {
                println!("{:<28} {:<32} {:>14} {}", r.invariant, r.fixture, cio::fmt_f64(r.margin), if r.pass { "PASS" } else { "FAIL" });
            }
            Ok(if failed == 0 { EXIT_OK } else { EXIT_SOLVER })
        }
        _ => {
            let grid = build_grid(config.domain.clone(), config.h).map_err(|e| e.to_string())?;
            summary.push("h", config.h);
            summary.push("interior_nodes", grid.interior().len() as u64);
            match config.command {
                Command::Solve => run_solve(config, &grid, summary),
                Command::EigenContinuation | Command::EigenInversePower => run_eigen(config, &grid, summary),
                Command::Rayleigh => run_rayleigh(config, &grid, summary),
                Command::Radial | Command::Verify => unreachable!(),
            }
        }
    }
}

fn run_radial(config: &RunConfig, summary: &mut Record) -> Result<i32, String> {
    let r = config.radius().ok_or("radial command needs a ball domain")?;
    let eig = radial::radial_eigen(config.n, r, config.tol).map_err(|e| e.to_string())?;
    summary.push("radius", r);
    summary.push("lambda1", eig.lambda);
    summary.push("lambda1_r2", eig.lambda * r * r);
    summary.push("bisections", eig.bisections as u64);
    summary.push("shoot_residual", eig.profile.shoot_residual);
    if config.emits(Emit::Csv) {
        write_atomic(&config.output_dir, "profile.csv", |w| {
            cio::write_profile_csv(w, &eig.profile).map_err(to_io)
        })
        .map_err(|e| e.to_string())?;
    }
    Ok(EXIT_OK)
}

fn to_io(e: cma::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

fn emit_field(config: &RunConfig, u: &ScalarField) -> Result<(), String> {
    if config.emits(Emit::Binary) {
        write_atomic(&config.output_dir, "field.bin", |w| {
            cio::write_scalar_field(w, u).map_err(to_io)
        })
        .map_err(|e| e.to_string())?;
    }
    if config.emits(Emit::Csv) {
        write_atomic(&config.output_dir, "field.csv", |w| {
            cio::write_field_csv(w, u).map_err(to_io)
        })
        .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn push_report(summary: &mut Record, prefix: &str, r: &SolveReport) {
    summary.push(&format!("{prefix}iterations"), r.iterations as u64);
    summary.push(&format!("{prefix}residual"), r.residual);
    summary.push(&format!("{prefix}psh_margin"), r.psh_margin);
    summary.push(&format!("{prefix}sup_norm"), r.sup_norm);
    summary.push(&format!("{prefix}grad_sup"), r.grad_sup);
    summary.push(&format!("{prefix}laplacian_sup"), r.laplacian_sup);
    summary.push(&format!("{prefix}converged"), r.converged);
}

fn run_solve(config: &RunConfig, grid: &Arc<GridDomain>, summary: &mut Record) -> Result<i32, String> {
    let density = sample_density(&config.density, grid).map_err(|e| e.to_string())?;
    let n = config.n as i32;
    summary.push("lambda", config.solve_lambda);
    let (u, report) = if config.solve_lambda == 0.0 {
        let g: Vec<f64> = density.iter().map(|f| f.powi(n)).collect();
        solve_frozen(&g, grid, config.tol).map_err(|e| e.to_string())?
    } else {
        let p = solve_branch_from(config.solve_lambda, &density, grid, config.tol, None).map_err(|e| e.to_string())?;
        (p.u.unwrap(), p.report)
    };
    push_report(summary, "", &report);
    emit_field(config, &u)?;
    Ok(EXIT_OK)
}

fn run_eigen(config: &RunConfig, grid: &Arc<GridDomain>, summary: &mut Record) -> Result<i32, String> {
    let density = sample_density(&config.density, grid).map_err(|e| e.to_string())?;
    let n = config.n as i32;
    let result: EigenResult = if config.command == Command::EigenContinuation {
        continuation_from(&density, grid, config.tol, SchedulePolicy::default()).map_err(|e| e.to_string())?
    } else {
        let g: Vec<f64> = density.iter().map(|f| f.powi(n)).collect();
        let opts = InversePowerOptions {
            tol: config.tol,
            max_iters: config.max_iters,
        };
        variational::inverse_power(&g, grid, opts, None).map_err(|e| e.to_string())?
    };
    let check = eigenpath::verify_eigenpair_from(&result.eigenfunction, result.lambda1, &density, config.tol);
    summary.push("method", format!("{:?}", result.method));
    summary.push("lambda1", result.lambda1);
    summary.push("residual", result.residual);
    summary.push("rayleigh_value", result.rayleigh_value);
    summary.push("iterations", result.iterations as u64);
    if let Some(f) = result.fit_residual {
        summary.push("fit_residual", f);
    }
    if let Some(p) = result.branch.first() {
        summary.push("lower_bound", 1.0 / p.sup_norm);
    }
    summary.push("branch_points", result.branch.len() as u64);
    summary.push("eigenfunction_psh_margin", check.psh_margin);
    summary.push("eigenfunction_normalized", check.normalized);
    summary.push("eigenfunction_scale_invariant", check.scale_invariant);
    if config.emits(Emit::Csv) && !result.branch.is_empty() {
        write_atomic(&config.output_dir, "branch.csv", |w| {
            cio::write_branch_csv(w, &result.branch).map_err(to_io)
        })
        .map_err(|e| e.to_string())?;
    }
    emit_field(config, &result.eigenfunction)?;
    Ok(EXIT_OK)
}

fn run_rayleigh(config: &RunConfig, grid: &Arc<GridDomain>, summary: &mut Record) -> Result<i32, String> {
    let density = sample_density(&config.density, grid).map_err(|e| e.to_string())?;
    let n = config.n as i32;
    let g: Vec<f64> = density.iter().map(|f| f.powi(n)).collect();
    let phi = cma::dirichlet::rho_field(grid);
    let v = variational::functional_value(&phi, &g).map_err(|e| e.to_string())?;
    summary.push("energy", v.energy);
    summary.push("mass", v.mass);
    summary.push("rayleigh", v.rayleigh.unwrap_or(f64::NAN));
    let mut best = f64::INFINITY;
    for k in 0..20u64 {
        let f = variational::random_psh_field(grid, config.seed.wrapping_add(k)).map_err(|e| e.to_string())?;
        if let Ok(r) = variational::rayleigh(&f, &g) {
            best = best.min(r);
        }
    }
    summary.push("random_fields", 20u64);
    summary.push("min_random_rayleigh", best);
    emit_field(config, &phi)?;
    Ok(EXIT_OK)
}
