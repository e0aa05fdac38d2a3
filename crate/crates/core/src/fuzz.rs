//! Seeded random sweeps over the inequality reporters and transform
//! identities.
//!
//! Work is split into fixed-size chunks, each with its own ChaCha stream
//! derived from `(seed, check, chunk)`, so the summaries do not depend on
//! the number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{ExponentField, Grid, ScalarField};
use crate::lebesgue::{holder_check, modular_norm_bracket};
use crate::monotonicity::{field_monotonicity_gap, monotonicity_gap, VecPair};
use crate::transforms::{phi, psi, psi_prime_abs, Regime, RegimeKind};

const CHUNK: usize = 2048;
const FIELD_NODES: usize = 33;

pub const ROUND_TRIP_TOL: f64 = 1e-12;
pub const DERIVATIVE_TOL: f64 = 1e-5;

/// Outcome of one sweep. `worst_margin` is the smallest normalized slack
/// seen, before the reporter's own tolerance is applied; inequalities that
/// hold with equality (a constant exponent in the bracket) sit at roundoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl FuzzSummary {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzPlan {
    pub vector_samples: usize,
    pub field_trials: usize,
    pub transform_points: usize,
}

impl FuzzPlan {
    /// `samples` vector pairs, one field trial per hundred and one
    /// transform point per ten.
    pub fn from_samples(samples: usize) -> Self {
        Self {
            vector_samples: samples,
            field_trials: (samples / 100).max(1),
            transform_points: (samples / 10).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub seed: u64,
    pub plan: FuzzPlan,
    pub checks: Vec<FuzzSummary>,
}

impl LemmaReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(FuzzSummary::ok)
    }
}

/// Per-sample `(ok, margin)`.
type Outcome = (bool, f64);

fn sweep(name: &str, check_id: u64, samples: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> Outcome + Sync) -> FuzzSummary {
    let chunks = samples.div_ceil(CHUNK);
    let (violations, worst_margin) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((check_id << 40) | c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            (0..count).fold((0usize, f64::INFINITY), |(v, w), _| {
                let (ok, margin) = f(&mut rng);
                (v + usize::from(!ok), w.min(margin))
            })
        })
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)));
    FuzzSummary { name: name.to_string(), samples, violations, worst_margin }
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-10.0..=10.0)).collect()
}

/// A smooth random function: a few Fourier modes times a random scale.
fn random_field(rng: &mut ChaCha8Rng, grid: Grid) -> ScalarField {
    let modes: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| (rng.gen_range(-1.0..1.0), k as f64 * PI, rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let offset = rng.gen_range(-0.5..0.5);
    ScalarField::from_fn(grid, |x| scale * (offset + modes.iter().map(|(a, w, ph)| a * (w * x + ph).sin()).sum::<f64>()))
        .expect("finite")
}

/// A random exponent in `[lo, hi]`: constant, linear, or a smooth bump.
fn random_exponent(rng: &mut ChaCha8Rng, grid: Grid, lo: f64, hi: f64) -> ExponentField {
    let a = rng.gen_range(lo..=hi);
    let b = rng.gen_range(lo..=hi);
    match rng.gen_range(0..3) {
        0 => ExponentField::constant(grid, a),
        1 => ExponentField::linear(grid, a, b),
        _ => {
            let w = rng.gen_range(1.0..6.0);
            let vals = grid.nodes().map(|x| a + (b - a) * 0.5 * (1.0 + (w * x).sin())).collect();
            ExponentField::new(grid, vals)
        }
    }
    .expect("exponent in range")
}

fn field_grid() -> Grid {
    Grid::new(0.0, 1.0, FIELD_NODES).expect("valid grid")
}

pub fn fuzz_monotonicity(samples: usize, seed: u64) -> FuzzSummary {
    sweep("monotonicity_gap", 1, samples, seed, |rng| {
        let d = rng.gen_range(1..=3);
        let p = rng.gen_range(1.0..=10.0);
        let pair = VecPair::new(random_vector(rng, d), random_vector(rng, d), p).expect("valid pair");
        let r = monotonicity_gap(&pair);
        (r.ok, r.margin())
    })
}

pub fn fuzz_holder(trials: usize, seed: u64) -> FuzzSummary {
    let grid = field_grid();
    sweep("holder_check", 2, trials, seed, move |rng| {
        let f = random_field(rng, grid);
        let g = random_field(rng, grid);
        let q = random_exponent(rng, grid, 1.1, 8.0);
        let r = holder_check(&f, &g, &q).expect("valid inputs");
        (r.ok, (r.rhs - r.lhs) / (1.0 + r.rhs.abs()))
    })
}

pub fn fuzz_bracket(trials: usize, seed: u64) -> FuzzSummary {
    let grid = field_grid();
    sweep("modular_norm_bracket_check", 3, trials, seed, move |rng| {
        let f = random_field(rng, grid);
        let q = random_exponent(rng, grid, 1.05, 8.0);
        let r = modular_norm_bracket(&f, &q).expect("nonzero field");
        let margin = (r.modular - r.low).min(r.high - r.modular) / (1.0 + r.high);
        (r.ok, margin)
    })
}

/// Alternates between exponents in `[1.2, 1.8]` and in `[2, 6]`, so both
/// lower bounds are exercised.
pub fn fuzz_field_gap(trials: usize, seed: u64) -> FuzzSummary {
    let grid = field_grid();
    sweep("field_monotonicity_gap", 4, trials, seed, move |rng| {
        let u = random_field(rng, grid);
        let v = random_field(rng, grid);
        let p = if rng.gen_bool(0.5) {
            random_exponent(rng, grid, 1.2, 1.8)
        } else {
            random_exponent(rng, grid, 2.0, 6.0)
        };
        let r = field_monotonicity_gap(&u, &v, &p).expect("nonzero gradients");
        (r.ok, (r.lhs - r.rhs_lest.max(r.rhs_rest)) / (1.0 + r.lhs.abs()))
    })
}

fn random_regime(rng: &mut ChaCha8Rng) -> Regime {
    let m = match rng.gen_range(0..3) {
        0 => rng.gen_range(0.05..0.95),
        1 => 1.0,
        _ => rng.gen_range(1.05..5.0),
    };
    Regime::new(m).expect("positive m")
}

/// `Psi(Phi(u)) = u` to `1e-12` relative, `u` log-uniform in `[1e-3, 1e3]`.
pub fn fuzz_round_trip(points: usize, seed: u64) -> FuzzSummary {
    sweep("transform_round_trip", 5, points, seed, |rng| {
        let r = random_regime(rng);
        let u = 10f64.powf(rng.gen_range(-3.0..3.0));
        let back = psi(phi(u, r).expect("positive"), r).expect("in domain");
        let err = (back - u).abs() / u;
        (err <= ROUND_TRIP_TOL, (ROUND_TRIP_TOL - err) / ROUND_TRIP_TOL)
    })
}

/// `|Psi'(v)| = Psi(v)^m` against a central difference, to `1e-5` relative.
pub fn fuzz_derivative(points: usize, seed: u64) -> FuzzSummary {
    sweep("transform_derivative", 6, points, seed, |rng| {
        let r = random_regime(rng);
        let u = 10f64.powf(rng.gen_range(-3.0..3.0));
        let v = phi(u, r).expect("positive");
        let h = match r.kind() {
            RegimeKind::Log => 1e-6 * (1.0 + v.abs()),
            _ => 1e-6 * v.abs(),
        };
        let fd = ((psi(v + h, r).expect("in domain") - psi(v - h, r).expect("in domain")) / (2.0 * h)).abs();
        let exact = psi_prime_abs(v, r).expect("in domain");
        let err = (fd - exact).abs() / exact;
        (err <= DERIVATIVE_TOL, (DERIVATIVE_TOL - err) / DERIVATIVE_TOL)
    })
}

pub fn verify_lemmas(plan: FuzzPlan, seed: u64) -> LemmaReport {
    let checks = vec![
        fuzz_monotonicity(plan.vector_samples, seed),
        fuzz_holder(plan.field_trials, seed),
        fuzz_bracket(plan.field_trials, seed),
        fuzz_field_gap(plan.field_trials, seed),
        fuzz_round_trip(plan.transform_points, seed),
        fuzz_derivative(plan.transform_points, seed),
    ];
    LemmaReport { seed, plan, checks }
}
