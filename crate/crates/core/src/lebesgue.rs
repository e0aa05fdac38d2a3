//! Discrete variable-exponent Lebesgue spaces: modular, Luxemburg norm,
//! conjugate exponent, the `V` norm, and reporters for the Hölder and
//! modular/norm bracket inequalities.
//!
//! All integrals use a fixed quadrature (trapezoid on nodes, midpoint on
//! faces), and the checks reuse exactly that quadrature, so the discrete
//! inequalities hold for the same pointwise reasons as the continuous ones.
//! Exponents may be `+inf`, with `|t|^inf` read as `0`, `1`, `inf` for
//! `|t| < 1`, `= 1`, `> 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, integrate, ExponentField, ScalarField};

const RELATIVE_WIDTH: f64 = 1e-13;
const MAX_BRACKET_STEPS: usize = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub modular_value: f64,
    pub luxemburg_norm: f64,
    pub bisection_iterations: usize,
    pub bracket_low: f64,
    pub bracket_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

fn pow_abs(t: f64, q: f64) -> f64 {
    t.abs().powf(q)
}

/// `sum_i w_i |f_i|^{q_i}`.
pub(crate) fn weighted_modular(weights: &[f64], f: &[f64], q: &[f64]) -> f64 {
    weights
        .iter()
        .zip(f)
        .zip(q)
        .map(|((w, f), q)| if *f == 0.0 { 0.0 } else { w * pow_abs(*f, *q) })
        .sum()
}

/// Luxemburg norm for an arbitrary positive quadrature.
///
/// Works on `f / max|f|` so the bisection is scale free; the result is the
/// upper end of the final bracket, which keeps the unit-ball property
/// `modular(f / norm) <= 1`.
pub(crate) fn weighted_luxemburg(weights: &[f64], f: &[f64], q: &[f64]) -> NormReport {
    let modular_value = weighted_modular(weights, f, q);
    let scale = f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return NormReport {
            modular_value,
            luxemburg_norm: 0.0,
            bisection_iterations: 0,
            bracket_low: 0.0,
            bracket_high: 0.0,
        };
    }
    let g: Vec<f64> = f.iter().map(|v| v / scale).collect();
    let scaled = |alpha: f64| {
        weights
            .iter()
            .zip(&g)
            .zip(q)
            .map(|((w, g), q)| if *g == 0.0 { 0.0 } else { w * pow_abs(g / alpha, *q) })
            .sum::<f64>()
    };

    let (mut lo, mut hi) = if scaled(1.0) > 1.0 {
        let mut lo = 1.0;
        let mut hi = 2.0;
        for _ in 0..MAX_BRACKET_STEPS {
            if scaled(hi) <= 1.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        (lo, hi)
    } else {
        let mut hi = 1.0;
        let mut lo = 0.5;
        for _ in 0..MAX_BRACKET_STEPS {
            if scaled(lo) > 1.0 {
                break;
            }
            hi = lo;
            lo *= 0.5;
        }
        (lo, hi)
    };

    let mut iterations = 0;
    while hi - lo > RELATIVE_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if scaled(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    NormReport {
        modular_value,
        luxemburg_norm: scale * hi,
        bisection_iterations: iterations,
        bracket_low: scale * lo,
        bracket_high: scale * hi,
    }
}

/// Trapezoid value of `∫ |f|^{q(x)} dx`.
pub fn modular(f: &ScalarField, q: &ExponentField) -> Result<f64> {
    f.grid().ensure_same(q.grid(), "modular")?;
    Ok(weighted_modular(&f.grid().trapezoid_weights(), f.values(), q.values()))
}

/// `inf { alpha > 0 : modular(f / alpha) <= 1 }` by bracketing and bisection.
pub fn luxemburg_norm(f: &ScalarField, q: &ExponentField) -> Result<NormReport> {
    f.grid().ensure_same(q.grid(), "luxemburg_norm")?;
    Ok(weighted_luxemburg(&f.grid().trapezoid_weights(), f.values(), q.values()))
}

/// Nodewise `q / (q - 1)`.
pub fn conjugate(q: &ExponentField) -> Result<ExponentField> {
    if let Some(v) = q.values().iter().find(|&&v| v <= 1.0 + 1e-12) {
        return Err(Error::invalid("q", format!("conjugate undefined for exponent {v}")));
    }
    ExponentField::new(*q.grid(), q.values().iter().map(|&v| v / (v - 1.0)).collect())
}

/// `||u||_2 + ||Du||_{p(.)}` with the exponent sampled at faces.
pub fn v_norm(u: &ScalarField, p: &ExponentField) -> Result<f64> {
    u.grid().ensure_same(p.grid(), "v_norm")?;
    let sq = u.map(|v| v * v)?;
    let l2 = integrate(&sq).sqrt();
    let du = gradient(u);
    let grad = weighted_luxemburg(&u.grid().face_weights(), du.values(), &p.face_values());
    Ok(l2 + grad.luxemburg_norm)
}

/// `∫|fg| <= 2 ||f||_q ||g||_{q'}`.
pub fn holder_check(f: &ScalarField, g: &ScalarField, q: &ExponentField) -> Result<InequalityReport> {
    f.grid().ensure_same(g.grid(), "holder_check")?;
    f.grid().ensure_same(q.grid(), "holder_check")?;
    let qc = conjugate(q)?;
    let prod = ScalarField::new(*f.grid(), f.values().iter().zip(g.values()).map(|(a, b)| (a * b).abs()).collect())?;
    let lhs = integrate(&prod);
    let rhs = 2.0 * luxemburg_norm(f, q)?.luxemburg_norm * luxemburg_norm(g, &qc)?.luxemburg_norm;
    Ok(InequalityReport { lhs, rhs, ok: lhs <= rhs * (1.0 + 1e-8) })
}

/// Bracket of the modular by powers of the norm:
/// `min(|f|^{q-}, |f|^{q+}) <= modular(f) <= max(|f|^{q-}, |f|^{q+})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub modular: f64,
    pub norm: f64,
    pub low: f64,
    pub high: f64,
    pub ok: bool,
}

pub fn modular_norm_bracket(f: &ScalarField, q: &ExponentField) -> Result<BracketReport> {
    let report = luxemburg_norm(f, q)?;
    let norm = report.luxemburg_norm;
    if norm <= 0.0 {
        return Err(Error::invalid("f", "bracket requires a nonzero function"));
    }
    let a = norm.powf(q.p_minus());
    let b = norm.powf(q.p_plus());
    let (low, high) = (a.min(b), a.max(b));
    let rho = report.modular_value;
    let slack = 1e-8;
    let ok = rho >= low * (1.0 - slack) && rho <= high * (1.0 + slack);
    Ok(BracketReport { modular: rho, norm, low, high, ok })
}

pub fn modular_norm_bracket_check(f: &ScalarField, q: &ExponentField) -> Result<bool> {
    Ok(modular_norm_bracket(f, q)?.ok)
}
