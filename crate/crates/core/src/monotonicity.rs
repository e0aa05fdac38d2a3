//! Monotonicity inequalities for the `p`-Laplace flux `|v|^{p-2} v`, both
//! pointwise on vectors and integrated over face gradients of two fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, ExponentField, ScalarField};
use crate::lebesgue::weighted_luxemburg;

/// Two vectors of equal dimension and an exponent `1 <= p < inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecPair {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: f64,
}

impl VecPair {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>, p: f64) -> Result<Self> {
        if xi.is_empty() || xi.len() != eta.len() {
            return Err(Error::invalid("pair", "vectors must share a dimension >= 1"));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::invalid("pair.p", format!("need 1 <= p < inf, got {p}")));
        }
        if xi.iter().chain(&eta).any(|v| !v.is_finite()) {
            return Err(Error::invalid("pair", "non-finite entry"));
        }
        Ok(Self { xi, eta, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

impl GapReport {
    /// `(lhs - rhs) / (1 + |lhs|)`; negative beyond roundoff means a violation.
    pub fn margin(&self) -> f64 {
        (self.lhs - self.rhs) / (1.0 + self.lhs.abs())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|v|^{p-2} v`, extended by zero at the origin.
pub fn flux(v: &[f64], p: f64) -> Vec<f64> {
    let r = norm(v);
    if r == 0.0 {
        return vec![0.0; v.len()];
    }
    let s = r.powf(p - 2.0);
    v.iter().map(|x| s * x).collect()
}

fn scalar_flux(g: f64, p: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        g.abs().powf(p - 2.0) * g
    }
}

/// `(flux(xi) - flux(eta)) . (xi - eta)` against
/// `2^{1-p} |xi - eta|^p` for `p >= 2`, or
/// `(p - 1)(|xi|^p + |eta|^p)^{(p-2)/p} |xi - eta|^2` for `1 <= p < 2`.
pub fn monotonicity_gap(pair: &VecPair) -> GapReport {
    let p = pair.p;
    let fx = flux(&pair.xi, p);
    let fe = flux(&pair.eta, p);
    let diff: Vec<f64> = pair.xi.iter().zip(&pair.eta).map(|(a, b)| a - b).collect();
    let dflux: Vec<f64> = fx.iter().zip(&fe).map(|(a, b)| a - b).collect();
    let lhs = dot(&dflux, &diff);
    let d = norm(&diff);
    let rhs = if p >= 2.0 {
        2f64.powf(1.0 - p) * d.powf(p)
    } else {
        let s = norm(&pair.xi).powf(p) + norm(&pair.eta).powf(p);
        if s == 0.0 || d == 0.0 {
            0.0
        } else {
            (p - 1.0) * s.powf((p - 2.0) / p) * d * d
        }
    };
    GapReport { lhs, rhs, ok: lhs >= rhs - 1e-12 * (1.0 + lhs.abs()) }
}

/// Integrated monotonicity of the flux over the face gradients of `u`, `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGapReport {
    pub lhs: f64,
    /// Lower bound for `p+ <= 2`, minimised over both admissible powers; zero otherwise.
    pub rhs_lest: f64,
    /// `2^{1-p+} ∫|Du - Dv|^p` for `p- >= 2`; zero otherwise.
    pub rhs_rest: f64,
    pub ok: bool,
}

pub fn field_monotonicity_gap(u: &ScalarField, v: &ScalarField, p: &ExponentField) -> Result<FieldGapReport> {
    u.grid().ensure_same(v.grid(), "field_monotonicity_gap")?;
    u.grid().ensure_same(p.grid(), "field_monotonicity_gap")?;
    let grid = *u.grid();
    let du = gradient(u);
    let dv = gradient(v);
    let pf = p.face_values();
    let weights = grid.face_weights();

    let du_norm = weighted_luxemburg(&weights, du.values(), &pf).luxemburg_norm;
    let dv_norm = weighted_luxemburg(&weights, dv.values(), &pf).luxemburg_norm;
    if du_norm + dv_norm == 0.0 {
        return Err(Error::invalid("u, v", "both gradients vanish identically"));
    }

    let h = grid.spacing();
    let mut lhs = 0.0;
    let mut diff_modular = 0.0;
    for ((&a, &b), &q) in du.values().iter().zip(dv.values()).zip(&pf) {
        lhs += h * (scalar_flux(a, q) - scalar_flux(b, q)) * (a - b);
        diff_modular += h * (a - b).abs().powf(q);
    }

    let (p_minus, p_plus) = (p.p_minus(), p.p_plus());
    let rhs_lest = if p_plus <= 2.0 {
        // w = (|Du|^p + |Dv|^p)^{(2-p)/2} measured in L^{2/(2-p)}.
        let (w, r): (Vec<f64>, Vec<f64>) = du
            .values()
            .iter()
            .zip(dv.values())
            .zip(&pf)
            .map(|((&a, &b), &q)| {
                let s = a.abs().powf(q) + b.abs().powf(q);
                if q >= 2.0 {
                    (1.0, f64::INFINITY)
                } else {
                    (s.powf((2.0 - q) / 2.0), 2.0 / (2.0 - q))
                }
            })
            .unzip();
        let w_norm = weighted_luxemburg(&weights, &w, &r).luxemburg_norm;
        if w_norm == 0.0 {
            0.0
        } else {
            let z = diff_modular / (2.0 * w_norm);
            let lambdas = [2.0 / p_minus, 2.0 / p_plus];
            (p_minus - 1.0) * lambdas.iter().map(|l| z.powf(*l)).fold(f64::INFINITY, f64::min)
        }
    } else {
        0.0
    };
    let rhs_rest = if p_minus >= 2.0 { 2f64.powf(1.0 - p_plus) * diff_modular } else { 0.0 };

    let tol = 1e-8 * (1.0 + lhs.abs());
    let ok = lhs >= -tol && lhs >= rhs_lest - tol && lhs >= rhs_rest - tol;
    Ok(FieldGapReport { lhs, rhs_lest, rhs_rest, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn pair(xi: &[f64], eta: &[f64], p: f64) -> VecPair {
        VecPair::new(xi.to_vec(), eta.to_vec(), p).unwrap()
    }

    #[test]
    fn flux_examples() {
        assert_eq!(flux(&[0.0, 0.0], 1.5), vec![0.0, 0.0]);
        let f = flux(&[2.0, 0.0], 3.0);
        assert!((f[0] - 4.0).abs() < 1e-14 && f[1] == 0.0);
        for p in [1.0, 1.7, 2.0, 6.5] {
            assert_eq!(flux(&[1.0, 0.0], p), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn gap_examples() {
        let r = monotonicity_gap(&pair(&[0.3, -1.0], &[0.3, -1.0], 1.4));
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.ok);
        let r = monotonicity_gap(&pair(&[1.0, 0.0], &[0.0, 0.0], 2.0));
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 0.5).abs() < 1e-15 && r.ok);
        let r = monotonicity_gap(&pair(&[1.0, 0.0], &[0.0, 0.0], 1.5));
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 0.5).abs() < 1e-15 && r.ok);
        let r = monotonicity_gap(&pair(&[0.0], &[0.0], 1.2));
        assert_eq!(r.rhs, 0.0);
        assert!(r.ok);
    }

    #[test]
    fn pair_validation() {
        assert!(VecPair::new(vec![1.0], vec![1.0, 2.0], 2.0).is_err());
        assert!(VecPair::new(vec![1.0], vec![1.0], 0.5).is_err());
        assert!(VecPair::new(vec![], vec![], 2.0).is_err());
    }

    #[test]
    fn field_gap_equal_fields() {
        let g = Grid::new(0.0, 1.0, 21).unwrap();
        let u = ScalarField::from_fn(g, |x| x * (1.0 - x)).unwrap();
        let p = ExponentField::constant(g, 1.6).unwrap();
        let r = field_monotonicity_gap(&u, &u, &p).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs_lest, 0.0);
        assert_eq!(r.rhs_rest, 0.0);
        assert!(r.ok);
    }

    #[test]
    fn field_gap_quadratic_exponent() {
        let g = Grid::new(0.0, 1.0, 31).unwrap();
        let u = ScalarField::from_fn(g, |x| (3.0 * x).sin()).unwrap();
        let v = ScalarField::from_fn(g, |x| x * x).unwrap();
        let p = ExponentField::constant(g, 2.0).unwrap();
        let r = field_monotonicity_gap(&u, &v, &p).unwrap();
        let d = gradient(&ScalarField::new(g, u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect()).unwrap());
        let half_sq: f64 = 0.5 * d.values().iter().map(|x| g.spacing() * x * x).sum::<f64>();
        assert!((r.rhs_rest - half_sq).abs() < 1e-12 * half_sq);
        // p = 2: lhs is the full squared gradient difference.
        assert!((r.lhs - 2.0 * half_sq).abs() < 1e-12 * half_sq);
        assert!(r.ok);
        assert!(r.rhs_lest > 0.0);
    }

    #[test]
    fn field_gap_rejects_flat_pair() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let c = ScalarField::constant(g, 1.0).unwrap();
        let p = ExponentField::constant(g, 1.5).unwrap();
        assert!(field_monotonicity_gap(&c, &c, &p).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
            (1usize..=3).prop_flat_map(|d| {
                (
                    proptest::collection::vec(-10.0f64..10.0, d),
                    proptest::collection::vec(-10.0f64..10.0, d),
                    1.0f64..10.0,
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]
            #[test]
            fn gap_holds_and_is_symmetric((xi, eta, p) in vectors()) {
                let a = monotonicity_gap(&VecPair::new(xi.clone(), eta.clone(), p).unwrap());
                let b = monotonicity_gap(&VecPair::new(eta, xi, p).unwrap());
                prop_assert!(a.ok);
                prop_assert!(a.lhs >= 0.0);
                prop_assert_eq!(a.lhs, b.lhs);
                prop_assert_eq!(a.rhs, b.rhs);
            }
        }
    }
}
