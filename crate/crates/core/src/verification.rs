//! Behavioral checks on solver output: support non-expansion for `m >= 1`,
//! the Barenblatt profile for `0 < m < 1`, and the a priori estimate
//! integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, Grid, ScalarField};
use crate::solver::{energy, ProblemSpec, Trajectory};
use crate::transforms::phi;

/// Nodes where a field exceeds a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask {
    grid: Grid,
    mask: Vec<bool>,
    threshold: f64,
}

impl SupportMask {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Grows the mask by `cells` nodes on each side of every member.
    pub fn dilate(&self, cells: usize) -> SupportMask {
        let n = self.mask.len();
        let mut out = vec![false; n];
        for (i, _) in self.mask.iter().enumerate().filter(|(_, b)| **b) {
            let lo = i.saturating_sub(cells);
            let hi = (i + cells).min(n - 1);
            out[lo..=hi].iter_mut().for_each(|b| *b = true);
        }
        SupportMask { grid: self.grid, mask: out, threshold: self.threshold }
    }

    /// Nodes in `self` but not in `other`.
    pub fn excess_over(&self, other: &SupportMask) -> usize {
        self.mask.iter().zip(&other.mask).filter(|(a, b)| **a && !**b).count()
    }

    pub fn is_subset_of(&self, other: &SupportMask) -> bool {
        self.excess_over(other) == 0
    }

    /// Coordinates of the outermost members, if any.
    pub fn extent(&self) -> Option<(f64, f64)> {
        let first = self.mask.iter().position(|&b| b)?;
        let last = self.mask.iter().rposition(|&b| b)?;
        Some((self.grid.node(first), self.grid.node(last)))
    }
}

/// `u_i > delta_s` at every node.
pub fn support_mask(u: &ScalarField, delta_s: f64) -> Result<SupportMask> {
    if !(delta_s > 0.0) {
        return Err(Error::invalid("delta_s", format!("need delta_s > 0, got {delta_s}")));
    }
    Ok(threshold_mask(u, delta_s))
}

fn threshold_mask(u: &ScalarField, threshold: f64) -> SupportMask {
    SupportMask {
        grid: *u.grid(),
        mask: u.values().iter().map(|&v| v > threshold).collect(),
        threshold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub delta_s: f64,
    pub dilation_cells: usize,
    /// Every snapshot mask sits inside the dilated initial support.
    pub contained: bool,
    /// Whether the theory predicts containment (`m >= 1`).
    pub containment_expected: bool,
    /// `contained` when containment is expected, always true otherwise.
    pub regime_consistent: bool,
    /// Largest number of nodes outside the dilated initial support.
    pub worst_excess_nodes: usize,
    pub first_violation_time: Option<f64>,
    pub initial_support_nodes: usize,
}

/// Checks `mask(u(t), delta_s)` against the strict positivity set of `u0`
/// dilated by `dilation_cells`, for every snapshot of `traj`.
///
/// The initial data is recovered as `u(0) - eps`. The threshold must clear
/// the regularization floor: `delta_s > 2 eps`.
pub fn support_nonexpansion_check(traj: &Trajectory, delta_s: f64, dilation_cells: usize) -> Result<SupportReport> {
    if !(delta_s > 2.0 * traj.epsilon) {
        return Err(Error::invalid(
            "delta_s",
            format!("threshold {delta_s} must exceed twice the regularization level {}", traj.epsilon),
        ));
    }
    let eps = traj.epsilon;
    let u0 = traj.u[0].map(|u| u - eps)?;
    let initial = threshold_mask(&u0, 0.0);
    let allowed = initial.dilate(dilation_cells);
    let mut worst = 0;
    let mut first_violation_time = None;
    for (t, u) in traj.times.iter().zip(&traj.u) {
        let excess = support_mask(u, delta_s)?.excess_over(&allowed);
        if excess > 0 && first_violation_time.is_none() {
            first_violation_time = Some(*t);
        }
        worst = worst.max(excess);
    }
    let contained = worst == 0;
    let containment_expected = traj.regime.m() >= 1.0;
    Ok(SupportReport {
        delta_s,
        dilation_cells,
        contained,
        containment_expected,
        regime_consistent: contained || !containment_expected,
        worst_excess_nodes: worst,
        first_violation_time,
        initial_support_nodes: initial.count(),
    })
}

/// Parameters of the one-dimensional Barenblatt profile for `0 < m < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattParams {
    m: f64,
    t0: f64,
    gamma: f64,
}

impl BarenblattParams {
    pub const DIMENSION: f64 = 1.0;

    pub fn new(m: f64, t0: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::invalid("m", format!("Barenblatt profile needs 0 < m < 1, got {m}")));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::invalid("t0", format!("need t0 > 0, got {t0}")));
        }
        let n = Self::DIMENSION;
        let gamma = n / (m * n + 2.0 - 2.0 * m);
        Ok(Self { m, t0, gamma })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `|x|` where the profile vanishes at time `t`.
    pub fn edge(&self, t: f64) -> f64 {
        let mg = self.m * self.gamma;
        (2.0 * Self::DIMENSION * (t + self.t0).powf(1.0 - mg) / mg).sqrt()
    }

    pub fn profile(&self, grid: Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x| barenblatt_value(x, t, self)).expect("finite profile")
    }
}

/// `(t+t0)^{-gamma} (1 - (m gamma / 2N) x^2 / (t+t0)^{1 - m gamma})_+^{1/m}`.
pub fn barenblatt_value(x: f64, t: f64, bp: &BarenblattParams) -> f64 {
    let s = t + bp.t0;
    let mg = bp.m * bp.gamma;
    let inner = 1.0 - mg / (2.0 * BarenblattParams::DIMENSION) * x * x / s.powf(1.0 - mg);
    if inner <= 0.0 {
        0.0
    } else {
        s.powf(-bp.gamma) * inner.powf(1.0 / bp.m)
    }
}

/// `max |B^m (discrete Laplacian of B) - (centered time difference of B)|`
/// over nodes whose distance to the support edge is at least three cells.
pub fn barenblatt_residual(bp: &BarenblattParams, grid: Grid, t: f64, h_t: f64) -> Result<f64> {
    if !(h_t > 0.0 && h_t < t + bp.t0) {
        return Err(Error::invalid("h_t", format!("need 0 < h_t < t + t0, got {h_t}")));
    }
    let h = grid.spacing();
    let edge = bp.edge(t);
    let mut worst = 0.0f64;
    for i in 1..grid.len() - 1 {
        let x = grid.node(i);
        if (x.abs() - edge).abs() < 3.0 * h {
            continue;
        }
        let b = barenblatt_value(x, t, bp);
        let lap = (barenblatt_value(x - h, t, bp) - 2.0 * b + barenblatt_value(x + h, t, bp)) / (h * h);
        let dt = (barenblatt_value(x, t + h_t, bp) - barenblatt_value(x, t - h_t, bp)) / (2.0 * h_t);
        worst = worst.max((b.powf(bp.m) * lap - dt).abs());
    }
    Ok(worst)
}

/// Support edges located from the pressure `(u - floor)_+^m`, which is
/// locally linear at a Barenblatt front: the two outermost nodes above
/// `delta_s` on each side are extrapolated to the zero crossing.
pub fn pressure_edges(u: &ScalarField, m: f64, floor: f64, delta_s: f64) -> Option<(f64, f64)> {
    let grid = *u.grid();
    let h = grid.spacing();
    let vals = u.values();
    let pressure = |j: usize| (vals[j] - floor).max(0.0).powf(m);
    let first = vals.iter().position(|&v| v > delta_s)?;
    let last = vals.iter().rposition(|&v| v > delta_s)?;
    let right = if last > 0 {
        let (inner, outer) = (pressure(last - 1), pressure(last));
        if inner > outer {
            grid.node(last) + h * outer / (inner - outer)
        } else {
            grid.node(last)
        }
    } else {
        grid.node(last)
    };
    let left = if first + 1 < vals.len() {
        let (inner, outer) = (pressure(first + 1), pressure(first));
        if inner > outer {
            grid.node(first) - h * outer / (inner - outer)
        } else {
            grid.node(first)
        }
    } else {
        grid.node(first)
    };
    Some((left, right))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub times: Vec<f64>,
    pub measured_left: Vec<f64>,
    pub measured_right: Vec<f64>,
    pub exact: Vec<f64>,
    /// Largest `|measured - exact|` over both sides and all times, in cells.
    pub max_deviation_cells: f64,
    /// Growth of the mean half-width between the first and last snapshot.
    pub measured_growth: f64,
    pub exact_growth: f64,
    pub spacing: f64,
}

impl EdgeReport {
    pub fn within_one_cell(&self) -> bool {
        self.max_deviation_cells <= 1.0
    }

    /// The front moved by at least one cell.
    pub fn growth_measurable(&self) -> bool {
        self.measured_growth >= self.spacing
    }
}

/// Tracks both support edges of a Barenblatt run with [`pressure_edges`],
/// using the run's `eps` as the pressure floor, against [`BarenblattParams::edge`].
pub fn edge_tracking(traj: &Trajectory, bp: &BarenblattParams, delta_s: f64) -> Result<EdgeReport> {
    let h = traj.grid().spacing();
    let mut report = EdgeReport {
        times: Vec::new(),
        measured_left: Vec::new(),
        measured_right: Vec::new(),
        exact: Vec::new(),
        max_deviation_cells: 0.0,
        measured_growth: 0.0,
        exact_growth: 0.0,
        spacing: h,
    };
    for (t, u) in traj.times.iter().zip(&traj.u) {
        let (l, r) = pressure_edges(u, bp.m(), traj.epsilon, delta_s)
            .ok_or_else(|| Error::invalid("delta_s", format!("no node above {delta_s} at t = {t}")))?;
        let e = bp.edge(*t);
        report.max_deviation_cells = report.max_deviation_cells.max((r - e).abs() / h).max((l + e).abs() / h);
        report.times.push(*t);
        report.measured_left.push(l);
        report.measured_right.push(r);
        report.exact.push(e);
    }
    let last = report.times.len() - 1;
    let half = |k: usize| 0.5 * (report.measured_right[k] - report.measured_left[k]);
    report.measured_growth = half(last) - half(0);
    report.exact_growth = report.exact[last] - report.exact[0];
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// `∫∫ u^{-m} u_t^2`, with `u^{-m}` averaged over each step.
    pub weighted_dissipation: f64,
    /// `max_t ∫ (1/p) |Du|^p`.
    pub sup_energy: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// `C = E(0) (1 + slack)`.
    pub bound: f64,
    pub dissipation_ok: bool,
    pub energy_ok: bool,
    /// `weighted_dissipation + E(T) <= C`.
    pub balance_ok: bool,
    /// `eps - 1e-8 <= u <= K + eps + 1e-8` everywhere.
    pub bounds_ok: bool,
}

impl EstimateReport {
    pub fn all_ok(&self) -> bool {
        self.dissipation_ok && self.energy_ok && self.balance_ok && self.bounds_ok
    }
}

pub const ESTIMATE_SLACK: f64 = 1e-3;

/// Discrete versions of the three a priori estimates. The step weight is
/// `|Phi(u1) - Phi(u0)| / |u1 - u0|`, the mean of `u^{-m}` over the step,
/// falling back to `u^{-m}` where the value did not move.
pub fn estimate_integrals(traj: &Trajectory, spec: &ProblemSpec) -> Result<EstimateReport> {
    let p = spec.p();
    let r = spec.regime();
    let weights = spec.grid().trapezoid_weights();
    let energies: Vec<f64> = traj.u.iter().map(|u| energy(u, p)).collect();
    let initial_energy = energy(spec.u0(), p);
    let mut weighted_dissipation = 0.0;
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let (u1, u0) = (traj.u[k].values(), traj.u[k - 1].values());
        for j in 0..u1.len() {
            let du = u1[j] - u0[j];
            if du == 0.0 {
                continue;
            }
            let w = ((phi(u1[j], r)? - phi(u0[j], r)?) / du).abs();
            weighted_dissipation += weights[j] * w * du * du / dt;
        }
    }
    let sup_energy = energies.iter().copied().fold(0.0, f64::max);
    let final_energy = *energies.last().unwrap_or(&0.0);
    let bound = initial_energy * (1.0 + ESTIMATE_SLACK);
    let tol = 1e-8;
    let (lo, hi) = (spec.epsilon() - tol, spec.k() + spec.epsilon() + tol);
    let bounds_ok = traj.u.iter().all(|u| u.values().iter().all(|&x| x >= lo && x <= hi));
    Ok(EstimateReport {
        weighted_dissipation,
        sup_energy,
        initial_energy,
        final_energy,
        bound,
        dissipation_ok: weighted_dissipation <= bound,
        energy_ok: sup_energy <= bound,
        balance_ok: weighted_dissipation + final_energy <= bound,
        bounds_ok,
    })
}

/// `∫ B(., t) dx` by the trapezoid rule.
pub fn barenblatt_mass(bp: &BarenblattParams, grid: Grid, t: f64) -> f64 {
    crate::grid::integrate(&bp.profile(grid, t))
}

/// Largest nodal gradient magnitude; used to report front steepness.
pub fn max_gradient(u: &ScalarField) -> f64 {
    gradient(u).values().iter().fold(0.0, |a, g| a.max(g.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ExponentField;
    use crate::solver::{solve_regularized, SolverConfig};
    use crate::transforms::Regime;

    #[test]
    fn mask_examples() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let zero = ScalarField::constant(g, 0.0).unwrap();
        assert!(support_mask(&zero, 0.1).unwrap().is_empty());
        let ind = ScalarField::from_fn(g, |x| if (0.4..=0.6).contains(&x) { 1.0 } else { 0.0 }).unwrap();
        let m = support_mask(&ind, 0.5).unwrap();
        let expect: Vec<bool> = g.nodes().map(|x| (0.4..=0.6).contains(&x)).collect();
        assert_eq!(m.mask(), expect.as_slice());
        assert!(support_mask(&ind, 0.0).is_err());
    }

    #[test]
    fn mask_is_monotone_in_threshold() {
        let g = Grid::new(0.0, 1.0, 51).unwrap();
        let u = ScalarField::from_fn(g, |x| (7.0 * x).sin().abs()).unwrap();
        for (a, b) in [(0.1, 0.2), (0.2, 0.7), (0.05, 0.9)] {
            assert!(support_mask(&u, b).unwrap().is_subset_of(&support_mask(&u, a).unwrap()));
        }
    }

    #[test]
    fn dilation() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let u = ScalarField::from_fn(g, |x| if (x - 0.5).abs() < 1e-9 { 1.0 } else { 0.0 }).unwrap();
        let m = support_mask(&u, 0.5).unwrap();
        assert_eq!(m.count(), 1);
        assert_eq!(m.dilate(2).count(), 5);
        assert_eq!(m.dilate(20).count(), 11);
    }

    #[test]
    fn barenblatt_examples() {
        let bp = BarenblattParams::new(0.5, 1.0).unwrap();
        assert!((bp.gamma() - 2.0 / 3.0).abs() < 1e-15);
        assert!((barenblatt_value(0.0, 0.0, &bp) - 1.0).abs() < 1e-15);
        assert!((bp.edge(0.0) - 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(barenblatt_value(2.5, 0.0, &bp), 0.0);
        assert!(BarenblattParams::new(1.0, 1.0).is_err());
        assert!(BarenblattParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn barenblatt_continuous_at_edge() {
        let bp = BarenblattParams::new(0.4, 0.7).unwrap();
        for t in [0.0, 0.3, 2.0] {
            let e = bp.edge(t);
            assert!(barenblatt_value(e * (1.0 - 1e-9), t, &bp) < 1e-12);
            assert_eq!(barenblatt_value(e * (1.0 + 1e-9), t, &bp), 0.0);
        }
    }

    #[test]
    fn barenblatt_residual_second_order() {
        let bp = BarenblattParams::new(0.5, 1.0).unwrap();
        let coarse = barenblatt_residual(&bp, Grid::new(-4.0, 4.0, 101).unwrap(), 0.2, 1e-5).unwrap();
        let fine = barenblatt_residual(&bp, Grid::new(-4.0, 4.0, 201).unwrap(), 0.2, 1e-5).unwrap();
        assert!(coarse / fine > 3.0, "{coarse} / {fine}");
    }

    #[test]
    fn barenblatt_residual_vanishes_outside_support() {
        let bp = BarenblattParams::new(0.5, 1.0).unwrap();
        // The whole grid lies beyond the edge.
        let g = Grid::new(5.0, 6.0, 21).unwrap();
        assert_eq!(barenblatt_residual(&bp, g, 0.0, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn barenblatt_residual_shrinks_late() {
        let bp = BarenblattParams::new(0.5, 1.0).unwrap();
        let g = Grid::new(-8.0, 8.0, 201).unwrap();
        let early = barenblatt_residual(&bp, g, 0.0, 1e-5).unwrap();
        let late = barenblatt_residual(&bp, g, 5.0, 1e-5).unwrap();
        assert!(late < early);
    }

    #[test]
    fn pressure_edge_on_exact_profile() {
        let bp = BarenblattParams::new(0.5, 1.0).unwrap();
        let g = Grid::new(-4.0, 4.0, 201).unwrap();
        let u = bp.profile(g, 0.3);
        let (l, r) = pressure_edges(&u, 0.5, 0.0, 0.01).unwrap();
        let e = bp.edge(0.3);
        assert!((r - e).abs() < 0.25 * g.spacing(), "{r} vs {e}");
        assert!((l + e).abs() < 0.25 * g.spacing());
    }

    fn bump_spec(m: f64, eps: f64) -> ProblemSpec {
        let g = Grid::new(0.0, 1.0, 41).unwrap();
        let u0 = ScalarField::from_fn(g, |x| {
            let r = (x - 0.5) / 0.15;
            if r.abs() < 1.0 {
                (1.0 - r * r).powi(2)
            } else {
                0.0
            }
        })
        .unwrap();
        ProblemSpec::new(Regime::new(m).unwrap(), ExponentField::constant(g, 2.0).unwrap(), u0, 0.02, eps).unwrap()
    }

    #[test]
    fn support_check_rejects_low_threshold() {
        let spec = bump_spec(1.0, 0.01);
        let traj = solve_regularized(&spec, &SolverConfig::for_horizon(0.02)).unwrap();
        assert!(support_nonexpansion_check(&traj, 0.02, 1).is_err());
        assert!(support_nonexpansion_check(&traj, 0.021, 1).is_ok());
    }

    #[test]
    fn zero_run_has_empty_masks() {
        let g = Grid::new(0.0, 1.0, 21).unwrap();
        let spec = ProblemSpec::new(
            Regime::new(2.0).unwrap(),
            ExponentField::constant(g, 2.0).unwrap(),
            ScalarField::constant(g, 0.0).unwrap(),
            0.01,
            1e-3,
        )
        .unwrap();
        let traj = solve_regularized(&spec, &SolverConfig::for_horizon(0.01)).unwrap();
        let r = support_nonexpansion_check(&traj, 0.01, 1).unwrap();
        assert!(r.contained && r.regime_consistent);
        assert_eq!(r.initial_support_nodes, 0);
        let est = estimate_integrals(&traj, &spec).unwrap();
        assert_eq!(est.weighted_dissipation, 0.0);
        assert_eq!(est.sup_energy, 0.0);
        assert!(est.all_ok());
    }

    #[test]
    fn estimates_on_bump() {
        let spec = bump_spec(1.0, 1e-3);
        let traj = solve_regularized(&spec, &SolverConfig::for_horizon(0.02)).unwrap();
        let est = estimate_integrals(&traj, &spec).unwrap();
        assert!(est.sup_energy <= est.initial_energy * (1.0 + 1e-12));
        assert!(est.weighted_dissipation + est.final_energy <= est.initial_energy * 1.001);
        assert!(est.all_ok());
        // The accumulated solver diagnostics describe the same integral.
        let from_diag: f64 = traj.diagnostics.iter().map(|d| d.dissipation).sum();
        assert!((from_diag - est.weighted_dissipation).abs() < 1e-9 * (1.0 + from_diag));
    }
}
