//! Continuation in the regularization level: solve for a decreasing list
//! of `eps`, check that the family is ordered, and estimate the limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::{solve_regularized, ProblemSpec, SolverConfig, Trajectory};

/// `eps0 * 2^-k` for `k = 0..levels`.
pub fn geometric_schedule(eps0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

pub const DEFAULT_EPS0: f64 = 0.1;
pub const DEFAULT_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub eps_small: f64,
    pub eps_big: f64,
    pub max_violation: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub epsilon: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    /// Levels that solved successfully, in schedule order.
    pub epsilons: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// One entry per adjacent pair of successful levels.
    pub monotonicity_report: Vec<PairReport>,
    /// Pointwise minimum over all levels, one field per snapshot time.
    pub limit_estimate: Vec<ScalarField>,
    /// `max |u_{eps_k} - u_{eps_{k+1}}|` over nodes and times.
    pub cauchy_gaps: Vec<f64>,
    pub failures: Vec<RunFailure>,
}

impl ContinuationResult {
    pub fn comparison_ok(&self) -> bool {
        self.monotonicity_report.iter().all(|r| r.ok)
    }

    pub fn times(&self) -> &[f64] {
        self.trajectories.first().map(|t| t.times.as_slice()).unwrap_or(&[])
    }
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::invalid("schedule", "empty schedule"));
    }
    if let Some(e) = schedule.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::invalid("schedule", format!("levels must lie in (0, 1], got {e}")));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("schedule", "levels must be strictly decreasing"));
    }
    Ok(())
}

/// `max (u_small - u_big)_+` over all nodes and times.
pub fn comparison_violation(small: &Trajectory, big: &Trajectory) -> Result<f64> {
    small.grid().ensure_same(big.grid(), "comparison_check")?;
    if small.times != big.times {
        return Err(Error::GridMismatch("comparison_check: time levels differ"));
    }
    let mut worst = 0.0f64;
    for (a, b) in small.u.iter().zip(&big.u) {
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max(x - y);
        }
    }
    Ok(worst)
}

/// Compares a run at smaller `eps` against one at larger `eps`; passes when
/// the violation is at most `1e-8 (1 + K)`.
pub fn comparison_check(small: &Trajectory, big: &Trajectory) -> Result<PairReport> {
    let max_violation = comparison_violation(small, big)?;
    let tolerance = 1e-8 * (1.0 + small.k.max(big.k));
    Ok(PairReport {
        eps_small: small.epsilon,
        eps_big: big.epsilon,
        max_violation,
        tolerance,
        ok: max_violation <= tolerance,
    })
}

fn max_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .flat_map(|(x, y)| x.values().iter().zip(y.values()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Solves every level of `schedule` (in parallel) with the data of `spec`.
/// Failed levels are recorded and skipped; the remaining levels are still
/// compared pairwise.
pub fn run_continuation(spec: &ProblemSpec, cfg: &SolverConfig, schedule: &[f64]) -> Result<ContinuationResult> {
    validate_schedule(schedule)?;
    cfg.validate()?;
    let outcomes: Vec<(f64, Result<Trajectory>)> = schedule
        .par_iter()
        .map(|&eps| (eps, spec.with_epsilon(eps).and_then(|s| solve_regularized(&s, cfg))))
        .collect();

    let mut epsilons = Vec::new();
    let mut trajectories = Vec::new();
    let mut failures = Vec::new();
    for (eps, out) in outcomes {
        match out {
            Ok(t) => {
                epsilons.push(eps);
                trajectories.push(t);
            }
            Err(e) => failures.push(RunFailure { epsilon: eps, message: e.to_string() }),
        }
    }

    let mut monotonicity_report = Vec::new();
    let mut cauchy_gaps = Vec::new();
    for w in trajectories.windows(2) {
        monotonicity_report.push(comparison_check(&w[1], &w[0])?);
        cauchy_gaps.push(max_gap(&w[0], &w[1]));
    }

    let limit_estimate = match trajectories.first() {
        None => Vec::new(),
        Some(first) => (0..first.times.len())
            .map(|k| {
                let mut vals = first.u[k].values().to_vec();
                for t in &trajectories[1..] {
                    for (a, b) in vals.iter_mut().zip(t.u[k].values()) {
                        *a = a.min(*b);
                    }
                }
                ScalarField::new(*first.grid(), vals).expect("finite")
            })
            .collect(),
    };

    Ok(ContinuationResult { epsilons, trajectories, monotonicity_report, limit_estimate, cauchy_gaps, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ExponentField, Grid};
    use crate::transforms::Regime;

    fn bump_spec(m: f64, n: usize) -> ProblemSpec {
        let g = Grid::new(0.0, 1.0, n).unwrap();
        let u0 = ScalarField::from_fn(g, |x| {
            let r = (x - 0.5) / 0.2;
            if r.abs() < 1.0 {
                (1.0 - r * r).powi(2)
            } else {
                0.0
            }
        })
        .unwrap();
        ProblemSpec::new(Regime::new(m).unwrap(), ExponentField::constant(g, 2.0).unwrap(), u0, 0.02, 0.1).unwrap()
    }

    fn zero_spec() -> ProblemSpec {
        let g = Grid::new(0.0, 1.0, 21).unwrap();
        ProblemSpec::new(
            Regime::new(2.0).unwrap(),
            ExponentField::constant(g, 1.5).unwrap(),
            ScalarField::constant(g, 0.0).unwrap(),
            0.01,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn default_schedule() {
        assert_eq!(geometric_schedule(DEFAULT_EPS0, DEFAULT_LEVELS), vec![0.1, 0.05, 0.025, 0.0125]);
    }

    #[test]
    fn schedule_validation() {
        let s = zero_spec();
        let cfg = SolverConfig::for_horizon(0.01);
        assert!(run_continuation(&s, &cfg, &[]).is_err());
        assert!(run_continuation(&s, &cfg, &[0.1, 0.1]).is_err());
        assert!(run_continuation(&s, &cfg, &[0.05, 0.1]).is_err());
        assert!(run_continuation(&s, &cfg, &[1.5, 0.1]).is_err());
    }

    #[test]
    fn zero_data_gives_constant_levels() {
        let s = zero_spec();
        let cfg = SolverConfig::for_horizon(0.01);
        let r = run_continuation(&s, &cfg, &[0.1, 0.05]).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.monotonicity_report.len(), 1);
        assert_eq!(r.monotonicity_report[0].max_violation, 0.0);
        assert!((r.cauchy_gaps[0] - 0.05).abs() < 1e-15);
        for f in &r.limit_estimate {
            assert!(f.values().iter().all(|&u| u == 0.05));
        }
    }

    #[test]
    fn single_level_equals_one_solve() {
        let s = bump_spec(1.0, 41);
        let cfg = SolverConfig::for_horizon(0.02);
        let r = run_continuation(&s, &cfg, &[0.05]).unwrap();
        let direct = solve_regularized(&s.with_epsilon(0.05).unwrap(), &cfg).unwrap();
        assert!(r.monotonicity_report.is_empty() && r.cauchy_gaps.is_empty());
        assert_eq!(r.trajectories[0], direct);
        assert_eq!(r.limit_estimate, direct.u);
    }

    #[test]
    fn comparison_identical_and_mismatch() {
        let s = bump_spec(1.0, 41);
        let cfg = SolverConfig::for_horizon(0.02);
        let a = solve_regularized(&s, &cfg).unwrap();
        assert_eq!(comparison_violation(&a, &a).unwrap(), 0.0);
        let other = solve_regularized(&bump_spec(1.0, 21), &cfg).unwrap();
        assert!(comparison_check(&a, &other).is_err());
        let mut shorter = SolverConfig::for_horizon(0.02);
        shorter.dt = 0.001;
        let b = solve_regularized(&s, &shorter).unwrap();
        assert!(comparison_check(&a, &b).is_err());
    }

    #[test]
    fn bump_family_is_ordered() {
        for m in [1.0, 2.0] {
            let s = bump_spec(m, 41);
            let cfg = SolverConfig::for_horizon(0.02);
            let r = run_continuation(&s, &cfg, &geometric_schedule(0.1, 4)).unwrap();
            assert!(r.comparison_ok(), "{:?}", r.monotonicity_report);
            let smallest = r.trajectories.last().unwrap();
            for (lim, u) in r.limit_estimate.iter().zip(&smallest.u) {
                assert_eq!(lim, u);
                let vals = lim.values();
                assert!(vals[0] <= 0.0125 + 1e-12 && vals[vals.len() - 1] <= 0.0125 + 1e-12);
            }
        }
    }
}
