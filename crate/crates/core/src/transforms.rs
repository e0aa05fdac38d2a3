//! Substitutions `v = Phi(u)`, `u = Psi(v)` turning the non-divergence
//! equation into a divergence-form one, plus the coefficient cutoff and the
//! smoothed Heaviside function.
//!
//! | regime      | `Phi(u)`              | `Psi(v)`                     |
//! |-------------|-----------------------|------------------------------|
//! | `0 < m < 1` | `u^{1-m} / (1-m)`     | `((1-m) v)^{1/(1-m)}`        |
//! | `m = 1`     | `ln u`                | `e^v`                        |
//! | `m > 1`     | `u^{1-m} / (m-1)`     | `((m-1) v)^{1/(1-m)}`        |
//!
//! In every regime `|Psi'(v)| = Psi(v)^m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    Sub,
    Log,
    Super,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    m: f64,
    kind: RegimeKind,
}

impl Regime {
    pub fn new(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid("m", format!("need finite m > 0, got {m}")));
        }
        let kind = if m < 1.0 {
            RegimeKind::Sub
        } else if m == 1.0 {
            RegimeKind::Log
        } else {
            RegimeKind::Super
        };
        Ok(Self { m, kind })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn kind(&self) -> RegimeKind {
        self.kind
    }

    /// `+1` when `Phi` is increasing, `-1` when decreasing.
    pub fn orientation(&self) -> f64 {
        match self.kind {
            RegimeKind::Super => -1.0,
            _ => 1.0,
        }
    }

    /// Whether `psi` is defined at `v`.
    pub fn in_domain(&self, v: f64) -> bool {
        match self.kind {
            RegimeKind::Log => v.is_finite(),
            _ => v.is_finite() && v > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub epsilon: f64,
    pub k: f64,
}

impl CutoffParams {
    pub fn new(epsilon: f64, k: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid("epsilon", format!("need 0 < epsilon <= 1, got {epsilon}")));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::invalid("K", format!("need finite K >= 0, got {k}")));
        }
        Ok(Self { epsilon, k })
    }

    /// `[eps^m, (K + eps)^m]`.
    pub fn band(&self, r: Regime) -> (f64, f64) {
        (self.epsilon.powf(r.m), (self.k + self.epsilon).powf(r.m))
    }
}

pub fn phi(u: f64, r: Regime) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::OutOfDomain(u, r.m));
    }
    Ok(match r.kind {
        RegimeKind::Sub => u.powf(1.0 - r.m) / (1.0 - r.m),
        RegimeKind::Log => u.ln(),
        RegimeKind::Super => u.powf(1.0 - r.m) / (r.m - 1.0),
    })
}

pub fn psi(v: f64, r: Regime) -> Result<f64> {
    if !r.in_domain(v) {
        return Err(Error::OutOfDomain(v, r.m));
    }
    Ok(psi_unchecked(v, r))
}

pub(crate) fn psi_unchecked(v: f64, r: Regime) -> f64 {
    match r.kind {
        RegimeKind::Sub => ((1.0 - r.m) * v).powf(1.0 / (1.0 - r.m)),
        RegimeKind::Log => v.exp(),
        RegimeKind::Super => ((r.m - 1.0) * v).powf(1.0 / (1.0 - r.m)),
    }
}

/// `|Psi'(v)|`, evaluated as `Psi(v)^m`.
pub fn psi_prime_abs(v: f64, r: Regime) -> Result<f64> {
    Ok(psi(v, r)?.powf(r.m))
}

/// `A = max(eps^m, min(|Psi'(v)|, (K + eps)^m))`.
///
/// Outside the transform domain `|Psi'|` is taken at the nearer end of the
/// band: `Psi -> 0` as `v -> 0+` in the sub regime, `Psi -> inf` in the
/// super regime.
pub fn cutoff_a(v: f64, r: Regime, c: CutoffParams) -> f64 {
    let (lo, hi) = c.band(r);
    if !r.in_domain(v) {
        return match r.kind {
            RegimeKind::Super => hi,
            _ => lo,
        };
    }
    clamp_band(psi_unchecked(v, r).powf(r.m), lo, hi)
}

pub(crate) fn clamp_band(a: f64, lo: f64, hi: f64) -> f64 {
    lo.max(a.min(hi))
}

/// `H_eps(t) = ∫_0^t (2/eps)(1 - |s|/eps)_+ ds` for `t > 0`, zero for `t <= 0`.
pub fn smoothed_heaviside(t: f64, eps: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= eps {
        1.0
    } else {
        let s = t / eps;
        2.0 * s - s * s
    }
}
