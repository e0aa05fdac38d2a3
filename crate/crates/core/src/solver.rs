//! Backward-Euler / Picard solver for the regularized problem in divergence
//! form,
//!
//! ```text
//! v_t = div( A^{p(x)-1} |Dv|^{p(x)-2} Dv ),   v = Phi(eps) on the boundary,
//! v(x, 0) = Phi(u0 + eps),
//! ```
//!
//! with `u = Psi(v)` recovered after every step. Each Picard iterate freezes
//! the face coefficient and solves one symmetric M-matrix tridiagonal system,
//! so every iterate obeys the discrete maximum principle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, ExponentField, FaceField, Grid, ScalarField};
use crate::transforms::{clamp_band, cutoff_a, phi, psi_unchecked, CutoffParams, Regime};

/// One fully specified regularized run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    grid: Grid,
    regime: Regime,
    p: ExponentField,
    u0: ScalarField,
    t_final: f64,
    epsilon: f64,
    k: f64,
}

impl ProblemSpec {
    pub fn new(regime: Regime, p: ExponentField, u0: ScalarField, t_final: f64, epsilon: f64) -> Result<Self> {
        let grid = *u0.grid();
        grid.ensure_same(p.grid(), "problem")?;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::invalid("T", format!("need finite T > 0, got {t_final}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid("epsilon", format!("need 0 < epsilon <= 1, got {epsilon}")));
        }
        if let Some(i) = u0.values().iter().position(|&v| v < 0.0) {
            return Err(Error::invalid("u0", format!("negative initial value at node {i}")));
        }
        let vals = u0.values();
        if vals[0] != 0.0 || vals[vals.len() - 1] != 0.0 {
            return Err(Error::invalid("u0", "initial data must vanish at both boundary nodes"));
        }
        let k = u0.max();
        Ok(Self { grid, regime, p, u0, t_final, epsilon, k })
    }

    /// Same problem with a different regularization level.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.regime, self.p.clone(), self.u0.clone(), self.t_final, epsilon)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn p(&self) -> &ExponentField {
        &self.p
    }

    pub fn u0(&self) -> &ScalarField {
        &self.u0
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `K = max u0`.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn cutoff(&self) -> CutoffParams {
        CutoffParams { epsilon: self.epsilon, k: self.k }
    }

    /// Maximum-principle interval for `v`, lower end first.
    pub fn v_bounds(&self) -> (f64, f64) {
        let a = phi(self.epsilon, self.regime).expect("epsilon > 0");
        let b = phi(self.k + self.epsilon, self.regime).expect("K + epsilon > 0");
        (a.min(b), a.max(b))
    }

    fn boundary_v(&self) -> f64 {
        phi(self.epsilon, self.regime).expect("epsilon > 0")
    }
}

/// How the coefficient `A` is carried from nodes to faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceAverage {
    /// Divided difference `|Psi(v_r) - Psi(v_l)| / |v_r - v_l|`, clamped to
    /// the cutoff band. The face flux then equals the `u`-flux exactly.
    #[default]
    Secant,
    /// Mean of the nodal cutoff values.
    Arithmetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub delta_g: f64,
    pub face_average: FaceAverage,
    pub max_halvings: u32,
}

impl SolverConfig {
    /// Defaults for horizon `t_final`: `dt = T/200`, tolerance `1e-9`,
    /// 100 Picard sweeps, gradient smoothing `1e-8`, up to 6 halvings.
    pub fn for_horizon(t_final: f64) -> Self {
        Self {
            dt: t_final / 200.0,
            picard_tol: 1e-9,
            picard_max: 100,
            delta_g: 1e-8,
            face_average: FaceAverage::Secant,
            max_halvings: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("need dt > 0, got {}", self.dt)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::invalid("picard_tol", format!("need picard_tol > 0, got {}", self.picard_tol)));
        }
        if self.picard_max < 1 {
            return Err(Error::invalid("picard_max", "need at least one iteration"));
        }
        if !(self.delta_g >= 0.0 && self.delta_g.is_finite()) {
            return Err(Error::invalid("delta_g", format!("need delta_g >= 0, got {}", self.delta_g)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub time: f64,
    /// `∫ (1/p) |Du|^p` at this time.
    pub energy: f64,
    /// Weighted dissipation `∫∫ u^{-m} u_t^2` accumulated over the step ending here.
    pub dissipation: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub picard_iterations: usize,
}

/// Snapshots of `u = Psi(v)` and `v` at every time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub epsilon: f64,
    pub regime: Regime,
    pub k: f64,
    pub times: Vec<f64>,
    pub u: Vec<ScalarField>,
    pub v: Vec<ScalarField>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.u[0].grid()
    }

    pub fn final_u(&self) -> &ScalarField {
        self.u.last().expect("trajectory has at least the initial snapshot")
    }
}

/// Outcome of one backward-Euler step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub v: ScalarField,
    pub iterations: usize,
    /// Last relative change between Picard iterates.
    pub change: f64,
    pub converged: bool,
}

/// `Phi(u0 + eps)` at every node.
pub fn initial_v(spec: &ProblemSpec) -> ScalarField {
    let r = spec.regime;
    let eps = spec.epsilon;
    spec.u0
        .map(|u| phi(u + eps, r).expect("u0 + eps > 0"))
        .expect("transform of finite data is finite")
}

/// Discrete energy `sum_faces h |Du|^{p}/p` with the face exponent.
pub fn energy(u: &ScalarField, p: &ExponentField) -> f64 {
    let du = gradient(u);
    let h = u.grid().spacing();
    du.values()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let q = p.face_value(i);
            h * g.abs().powf(q) / q
        })
        .sum()
}

fn face_a(vl: f64, vr: f64, spec: &ProblemSpec, mode: FaceAverage) -> f64 {
    let r = spec.regime;
    let c = spec.cutoff();
    match mode {
        FaceAverage::Arithmetic => 0.5 * (cutoff_a(vl, r, c) + cutoff_a(vr, r, c)),
        FaceAverage::Secant => {
            if !(r.in_domain(vl) && r.in_domain(vr)) {
                return 0.5 * (cutoff_a(vl, r, c) + cutoff_a(vr, r, c));
            }
            let dv = vr - vl;
            let scale = 1.0 + vl.abs().max(vr.abs());
            if dv.abs() <= 1e-6 * scale {
                // Divided difference loses digits here; the midpoint slope agrees to O(dv^2).
                return cutoff_a(0.5 * (vl + vr), r, c);
            }
            let (lo, hi) = c.band(r);
            let slope = ((psi_unchecked(vr, r) - psi_unchecked(vl, r)) / dv).abs();
            clamp_band(slope, lo, hi)
        }
    }
}

/// Frozen coefficient `a_i = A_i^{p_i - 1} (g_i^2 + delta_g^2)^{(p_i - 2)/2}`
/// on every face.
pub fn face_coefficient(v: &ScalarField, spec: &ProblemSpec, cfg: &SolverConfig) -> FaceField {
    let g = gradient(v);
    let vals = v.values();
    let coeffs = (0..spec.grid.faces())
        .map(|i| {
            let pf = spec.p.face_value(i);
            let a = face_a(vals[i], vals[i + 1], spec, cfg.face_average);
            let gi = g.values()[i];
            let base = gi * gi + cfg.delta_g * cfg.delta_g;
            let grad_factor = if base == 0.0 {
                if pf == 2.0 {
                    1.0
                } else if pf > 2.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                base.powf(0.5 * (pf - 2.0))
            };
            a.powf(pf - 1.0) * grad_factor
        })
        .collect();
    FaceField::new(spec.grid, coeffs).expect("one coefficient per face")
}

/// Solve `(w - v_n)/dt = div(a grad w)` with `w = v_n` on the boundary,
/// written for the increment `w - v_n` so unchanged data stays bit-exact.
pub(crate) fn frozen_linear_step(v_n: &[f64], a: &[f64], dt: f64, h: f64) -> Vec<f64> {
    let n = v_n.len();
    let r = dt / (h * h);
    let m = n - 2;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let j = k + 1;
        let (al, ar) = (a[j - 1], a[j]);
        diag[k] = 1.0 + r * (al + ar);
        lower[k] = -r * al;
        upper[k] = -r * ar;
        rhs[k] = r * (ar * (v_n[j + 1] - v_n[j]) - al * (v_n[j] - v_n[j - 1]));
    }
    let delta = thomas(&lower, &diag, &upper, rhs);
    let mut out = v_n.to_vec();
    for k in 0..m {
        out[k + 1] += delta[k];
    }
    out
}

/// Thomas algorithm; `lower[0]` and `upper[m-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], mut rhs: Vec<f64>) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut b = diag[0];
    c[0] = upper[0] / b;
    rhs[0] /= b;
    for k in 1..m {
        b = diag[k] - lower[k] * c[k - 1];
        c[k] = upper[k] / b;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / b;
    }
    for k in (0..m - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
    rhs
}

/// Picard (frozen-coefficient) iteration for one step. Convergence is
/// declared once `max_j |w^{k+1}_j - w^k_j| / (1 + |w^k_j|) < tol`.
pub(crate) fn picard_solve(
    v_n: &[f64],
    dt: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
    coeff: impl Fn(&[f64]) -> Vec<f64>,
) -> (Vec<f64>, usize, f64, bool) {
    let mut w = v_n.to_vec();
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let a = coeff(&w);
        let next = frozen_linear_step(v_n, &a, dt, h);
        change = next
            .iter()
            .zip(&w)
            .map(|(x, y)| (x - y).abs() / (1.0 + y.abs()))
            .fold(0.0, f64::max);
        w = next;
        if !change.is_finite() {
            return (w, it, change, false);
        }
        if change < tol {
            return (w, it, change, true);
        }
    }
    (w, max_iter, change, false)
}

/// One backward-Euler step of size `dt` from `v_n`.
pub fn implicit_step(v_n: &ScalarField, spec: &ProblemSpec, cfg: &SolverConfig, dt: f64) -> StepOutcome {
    let h = spec.grid.spacing();
    let (w, iterations, change, converged) =
        picard_solve(v_n.values(), dt, h, cfg.picard_tol, cfg.picard_max, |w| {
            let field = ScalarField::new(spec.grid, w.to_vec()).expect("iterates stay finite");
            face_coefficient(&field, spec, cfg).values().to_vec()
        });
    let v = match ScalarField::new(spec.grid, w) {
        Ok(v) => v,
        Err(_) => {
            return StepOutcome { v: v_n.clone(), iterations, change: f64::INFINITY, converged: false };
        }
    };
    StepOutcome { v, iterations, change, converged }
}

fn u_from_v(v: &[f64], prev_v: &[f64], prev_u: &[f64], r: Regime) -> Vec<f64> {
    v.iter()
        .zip(prev_v)
        .zip(prev_u)
        .map(|((&x, &px), &pu)| if x == px { pu } else { psi_unchecked(x, r) })
        .collect()
}

fn step_dissipation(v1: &[f64], v0: &[f64], u1: &[f64], u0: &[f64], weights: &[f64], dt: f64) -> f64 {
    (0..v1.len())
        .map(|j| weights[j] * ((v1[j] - v0[j]) * (u1[j] - u0[j])).abs() / dt)
        .sum()
}

struct MacroStep {
    v: Vec<f64>,
    u: Vec<f64>,
    dissipation: f64,
    iterations: usize,
}

fn macro_step(
    v_n: &[f64],
    u_n: &[f64],
    t: f64,
    dt: f64,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<MacroStep> {
    let weights = spec.grid.trapezoid_weights();
    let mut last_change = f64::INFINITY;
    for halvings in 0..=cfg.max_halvings {
        let sub = 1usize << halvings;
        let sdt = dt / sub as f64;
        let mut v = v_n.to_vec();
        let mut u = u_n.to_vec();
        let mut dissipation = 0.0;
        let mut iterations = 0;
        let mut ok = true;
        for _ in 0..sub {
            let field = ScalarField::new(spec.grid, v.clone()).expect("finite state");
            let out = implicit_step(&field, spec, cfg, sdt);
            iterations += out.iterations;
            if !out.converged {
                last_change = out.change;
                ok = false;
                break;
            }
            let nv = out.v.into_values();
            let nu = u_from_v(&nv, &v, &u, spec.regime);
            dissipation += step_dissipation(&nv, &v, &nu, &u, &weights, sdt);
            v = nv;
            u = nu;
        }
        if ok {
            return Ok(MacroStep { v, u, dissipation, iterations });
        }
        if halvings == cfg.max_halvings {
            return Err(Error::NonConvergence { time: t, halvings, change: last_change });
        }
    }
    unreachable!("loop returns on the last halving")
}

/// Time levels `0, dt, ..., T`; `dt` is shrunk so it divides `T`.
pub fn time_levels(t_final: f64, dt: f64) -> Vec<f64> {
    let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    let step = t_final / steps as f64;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * step).collect();
    times[steps] = t_final;
    times
}

/// March from `0` to `T`, recording snapshots and diagnostics and enforcing
/// `Phi(eps) <= v <= Phi(K + eps)` (order reversed for `m > 1`) at every step.
pub fn solve_regularized(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.delta_g == 0.0 && spec.p.p_minus() < 2.0 {
        return Err(Error::invalid("delta_g", "gradient smoothing must be positive when p- < 2"));
    }
    let times = time_levels(spec.t_final, cfg.dt);
    let (lo, hi) = spec.v_bounds();
    let bound_tol = 1e-8 * (1.0 + phi(spec.k + spec.epsilon, spec.regime).expect("positive").abs());

    let v0 = initial_v(spec);
    let mut bv = v0.values().to_vec();
    let boundary = spec.boundary_v();
    let n = bv.len();
    bv[0] = boundary;
    bv[n - 1] = boundary;
    let v0 = ScalarField::new(spec.grid, bv).expect("finite");
    let u0 = spec.u0.map(|u| u + spec.epsilon).expect("finite");

    let mut diagnostics = vec![StepDiagnostics {
        time: 0.0,
        energy: energy(&u0, &spec.p),
        dissipation: 0.0,
        min_u: u0.min(),
        max_u: u0.max(),
        picard_iterations: 0,
    }];
    let mut us = vec![u0];
    let mut vs = vec![v0];

    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let step = macro_step(vs.last().unwrap().values(), us.last().unwrap().values(), t0, t1 - t0, spec, cfg)?;
        if let Some(&bad) = step.v.iter().find(|&&x| x < lo - bound_tol || x > hi + bound_tol) {
            return Err(Error::BoundViolation { time: t1, value: bad, low: lo, high: hi });
        }
        let u = ScalarField::new(spec.grid, step.u).expect("finite");
        diagnostics.push(StepDiagnostics {
            time: t1,
            energy: energy(&u, &spec.p),
            dissipation: step.dissipation,
            min_u: u.min(),
            max_u: u.max(),
            picard_iterations: step.iterations,
        });
        us.push(u);
        vs.push(ScalarField::new(spec.grid, step.v).expect("finite"));
    }

    Ok(Trajectory {
        epsilon: spec.epsilon,
        regime: spec.regime,
        k: spec.k,
        times,
        u: us,
        v: vs,
        diagnostics,
    })
}
