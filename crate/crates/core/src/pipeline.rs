//! Runs one configured mode end to end and writes its files.

use std::path::Path;

use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::continuation::run_continuation;
use crate::error::Result;
use crate::fuzz::{verify_lemmas, FuzzPlan};
use crate::grid::{ExponentField, Grid, ScalarField};
use crate::output::{ensure_dir, fields_csv, write_json, write_text, write_trajectory, Check, Report};
use crate::solver::{solve_regularized, ProblemSpec, Trajectory};
use crate::verification::{
    barenblatt_mass, barenblatt_residual, edge_tracking, estimate_integrals, support_nonexpansion_check,
    BarenblattParams,
};

pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;
pub const ENERGY_STEP_SLACK: f64 = 1e-6;
pub const BARENBLATT_ERROR_LIMIT: f64 = 5e-2;
pub const RESIDUAL_RATIO_LIMIT: f64 = 3.0;
pub const RESIDUAL_TIME_STEP: f64 = 1e-4;

/// Largest distance of any snapshot value outside `[eps, K + eps]`.
pub fn max_principle_violation(traj: &Trajectory) -> f64 {
    let (lo, hi) = (traj.epsilon, traj.k + traj.epsilon);
    traj.u
        .iter()
        .flat_map(|u| u.values().iter().map(move |&x| (lo - x).max(x - hi)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest energy increase over a single step.
pub fn max_energy_increase(traj: &Trajectory) -> f64 {
    traj.diagnostics.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max)
}

/// Maximum principle and energy checks for one run, names prefixed by `tag`.
pub fn solve_checks(tag: &str, traj: &Trajectory, spec: &ProblemSpec) -> Result<(Vec<Check>, serde_json::Value)> {
    let est = estimate_integrals(traj, spec)?;
    let e0 = est.initial_energy;
    let mut checks = vec![
        Check::at_most(format!("{tag}max_principle"), max_principle_violation(traj), MAX_PRINCIPLE_TOL),
        Check::at_most(format!("{tag}energy_nonincreasing"), max_energy_increase(traj), ENERGY_STEP_SLACK * (1.0 + e0)),
        Check::at_most(format!("{tag}energy_bound"), est.sup_energy, est.bound),
        Check::at_most(format!("{tag}dissipation_bound"), est.weighted_dissipation, est.bound),
        Check::at_most(format!("{tag}energy_balance"), est.weighted_dissipation + est.final_energy, est.bound),
    ];
    if traj.times.len() < 2 {
        checks.retain(|c| !c.name.ends_with("energy_nonincreasing"));
    }
    let total_picard: usize = traj.diagnostics.iter().map(|d| d.picard_iterations).sum();
    Ok((checks, json!({ "estimates": est, "picard_iterations": total_picard, "epsilon": traj.epsilon, "K": traj.k })))
}

fn solve(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let spec = cfg.problem_spec()?;
    let traj = solve_regularized(&spec, &cfg.solver_config()?)?;
    write_trajectory(out, "", &traj)?;
    let (checks, details) = solve_checks("", &traj, &spec)?;
    Ok(Report::new(cfg.clone(), checks, details))
}

fn continuation(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let spec = cfg.problem_spec()?;
    let result = run_continuation(&spec, &cfg.solver_config()?, &cfg.schedule())?;
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for (k, traj) in result.trajectories.iter().enumerate() {
        write_trajectory(out, &format!("eps{k}_"), traj)?;
        let level = spec.with_epsilon(traj.epsilon)?;
        let (c, d) = solve_checks(&format!("eps={}/", traj.epsilon), traj, &level)?;
        checks.extend(c);
        runs.push(d);
    }
    for f in &result.failures {
        checks.push(Check::flag(format!("eps={}/solved", f.epsilon), false));
    }
    for r in &result.monotonicity_report {
        checks.push(Check::at_most(format!("comparison/{}<={}", r.eps_small, r.eps_big), r.max_violation, r.tolerance));
    }
    if let (Some(last), Some(&eps_min)) = (result.limit_estimate.last(), result.epsilons.last()) {
        let grid = *last.grid();
        write_text(&out.join("limit.csv"), &fields_csv(&grid, result.times(), &result.limit_estimate, "u_limit"))?;
        let trace = result
            .limit_estimate
            .iter()
            .map(|f| f.values()[0].max(*f.values().last().expect("nonempty")))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_most("limit/boundary_trace", trace, eps_min + MAX_PRINCIPLE_TOL));
        let floor = result.limit_estimate.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least("limit/nonnegative", floor, 0.0));
    }
    let details = json!({
        "epsilons": result.epsilons,
        "cauchy_gaps": result.cauchy_gaps,
        "monotonicity_report": result.monotonicity_report,
        "failures": result.failures,
        "runs": runs,
    });
    Ok(Report::new(cfg.clone(), checks, details))
}

fn lemmas(cfg: &RunConfig) -> Result<Report> {
    let report = verify_lemmas(FuzzPlan::from_samples(cfg.samples()), cfg.seed());
    let checks = report
        .checks
        .iter()
        .map(|s| Check { name: s.name.clone(), ok: s.ok(), value: s.violations as f64, limit: 0.0, margin: s.worst_margin })
        .collect();
    Ok(Report::new(cfg.clone(), checks, serde_json::to_value(&report).expect("serializable")))
}

/// `(2n - 1)`-node version of `grid`: the spacing halves, old nodes stay.
pub fn refine(grid: Grid) -> Result<Grid> {
    Grid::new(grid.a(), grid.b(), 2 * grid.len() - 1)
}

fn barenblatt_run(cfg: &RunConfig, bp: &BarenblattParams, grid: Grid, dt: f64) -> Result<(ProblemSpec, Trajectory)> {
    let p = match cfg.p {
        Some(_) => cfg.exponent(grid)?,
        None => ExponentField::constant(grid, 2.0)?,
    };
    let spec = ProblemSpec::new(cfg.regime()?, p, bp.profile(grid, 0.0), cfg.t_final()?, cfg.epsilon.expect("validated"))?;
    let mut sc = cfg.solver_config()?;
    sc.dt = dt;
    let traj = solve_regularized(&spec, &sc)?;
    Ok((spec, traj))
}

fn max_error(u: &ScalarField, exact: &ScalarField) -> f64 {
    u.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn barenblatt(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let bp = cfg.barenblatt_params()?.expect("validated");
    let grid = cfg.grid()?;
    let fine = refine(grid)?;
    let times = cfg.times.clone().unwrap_or_else(|| vec![0.0, cfg.t_final.unwrap_or(0.0)]);
    let mut checks = Vec::new();
    let mut residuals = Vec::new();
    for &t in &times {
        let coarse = barenblatt_residual(&bp, grid, t, RESIDUAL_TIME_STEP)?;
        let refined = barenblatt_residual(&bp, fine, t, RESIDUAL_TIME_STEP)?;
        let ratio = if refined > 0.0 { coarse / refined } else { f64::INFINITY };
        if coarse > 0.0 {
            checks.push(Check::at_least(format!("residual_ratio@t={t}"), ratio, RESIDUAL_RATIO_LIMIT));
        }
        residuals.push(json!({ "t": t, "residual": coarse, "residual_refined": refined, "ratio": ratio, "mass": barenblatt_mass(&bp, grid, t) }));
    }
    let profiles: Vec<ScalarField> = times.iter().map(|&t| bp.profile(grid, t)).collect();
    write_text(&out.join("barenblatt.csv"), &fields_csv(&grid, &times, &profiles, "B"))?;

    let mut details = json!({ "gamma": bp.gamma(), "t0": bp.t0(), "residuals": residuals });
    if let Some(t_final) = cfg.t_final {
        let dt = cfg.solver_config()?.dt;
        let (spec, traj) = barenblatt_run(cfg, &bp, grid, dt)?;
        let (_, traj_fine) = barenblatt_run(cfg, &bp, fine, 0.5 * dt)?;
        write_trajectory(out, "", &traj)?;
        let err = max_error(traj.final_u(), &bp.profile(grid, t_final));
        let err_fine = max_error(traj_fine.final_u(), &bp.profile(fine, t_final));
        checks.push(Check::at_most("solution_error", err, BARENBLATT_ERROR_LIMIT));
        checks.push(Check::below("solution_error_refined", err_fine, err));
        let (solver_checks, solver_details) = solve_checks("solver/", &traj, &spec)?;
        checks.extend(solver_checks);
        let edges = edge_tracking(&traj, &bp, cfg.delta_s())?;
        checks.push(Check::at_least("edge_growth", edges.measured_growth, edges.spacing));
        checks.push(Check::at_most("edge_deviation_cells", edges.max_deviation_cells, 1.0));
        let support = support_nonexpansion_check(&traj, cfg.delta_s(), cfg.dilation_cells())?;
        checks.push(Check::flag("support_regime_consistent", support.regime_consistent));
        details["solution"] = json!({
            "error": err,
            "error_refined": err_fine,
            "edges": edges,
            "support": support,
            "solver": solver_details,
        });
    }
    Ok(Report::new(cfg.clone(), checks, details))
}

fn support_check(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let spec = cfg.problem_spec()?;
    let traj = solve_regularized(&spec, &cfg.solver_config()?)?;
    write_trajectory(out, "", &traj)?;
    let support = support_nonexpansion_check(&traj, cfg.delta_s(), cfg.dilation_cells())?;
    let mut checks = vec![Check::flag("support_regime_consistent", support.regime_consistent)];
    let mut details = json!({ "support": support });
    if let Some(bp) = cfg.barenblatt_params()? {
        let edges = edge_tracking(&traj, &bp, cfg.delta_s())?;
        checks.push(Check::at_least("edge_growth", edges.measured_growth, edges.spacing));
        checks.push(Check::at_most("edge_deviation_cells", edges.max_deviation_cells, 1.0));
        details["edges"] = serde_json::to_value(&edges).expect("serializable");
    }
    Ok(Report::new(cfg.clone(), checks, details))
}

/// Runs `cfg`, writes all files plus `report.json` into `out`, and returns
/// the report.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<Report> {
    ensure_dir(out)?;
    let report = match cfg.mode {
        Mode::Solve => solve(cfg, out)?,
        Mode::Continuation => continuation(cfg, out)?,
        Mode::VerifyLemmas => lemmas(cfg)?,
        Mode::Barenblatt => barenblatt(cfg, out)?,
        Mode::SupportCheck => support_check(cfg, out)?,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
