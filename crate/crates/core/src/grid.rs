//! Uniform 1D grids, nodal and face-centered fields, and the discrete
//! gradient/divergence pair every other module is built on.
//!
//! Gradients live on the `n - 1` faces between nodes. [`divergence`] is the
//! negative adjoint of [`gradient`] with respect to the face (midpoint) and
//! node quadratures, so summation by parts holds to roundoff for fields that
//! vanish on the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[a, b]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("grid.n", format!("need at least 3 nodes, got {n}")));
        }
        if !a.is_finite() || !b.is_finite() || b <= a {
            return Err(Error::invalid("grid", format!("need finite a < b, got [{a}, {b}]")));
        }
        let h = (b - a) / (n - 1) as f64;
        Ok(Self { a, b, n, h })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn faces(&self) -> usize {
        self.n - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Midpoint of face `i`, between nodes `i` and `i + 1`.
    pub fn face(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.h
    }

    /// Trapezoidal quadrature weights, one per node.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] = 0.5 * self.h;
        w[self.n - 1] = 0.5 * self.h;
        w
    }

    /// Midpoint weights, one per face.
    pub fn face_weights(&self) -> Vec<f64> {
        vec![self.h; self.n - 1]
    }

    pub(crate) fn ensure_same(&self, other: &Grid, what: &'static str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(what))
        }
    }
}

/// Nodal values of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "field",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("field", format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Nodewise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Values at the `n - 1` face midpoints of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: Grid,
    values: Vec<f64>,
}

impl FaceField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.faces() {
            return Err(Error::invalid(
                "face field",
                format!("expected {} values, got {}", grid.faces(), values.len()),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Midpoint rule over the faces.
    pub fn integrate(&self) -> f64 {
        self.grid.h * self.values.iter().sum::<f64>()
    }
}

/// Variable exponent `p(x)` sampled at the nodes, with cached extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    grid: Grid,
    p: Vec<f64>,
    p_minus: f64,
    p_plus: f64,
    log_holder_modulus: f64,
}

impl ExponentField {
    /// Requires `1 < p(x_i) < inf` at every node.
    pub fn new(grid: Grid, p: Vec<f64>) -> Result<Self> {
        if p.len() != grid.len() {
            return Err(Error::invalid(
                "p",
                format!("expected {} values, got {}", grid.len(), p.len()),
            ));
        }
        if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 1.0)) {
            return Err(Error::invalid("p", format!("exponent must satisfy 1 < p < inf, node {i} has {v}")));
        }
        let p_minus = p.iter().copied().fold(f64::INFINITY, f64::min);
        let p_plus = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_holder_modulus = log_holder_modulus(&grid, &p);
        Ok(Self { grid, p, p_minus, p_plus, log_holder_modulus })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Linear profile from `left` at `a` to `right` at `b`.
    pub fn linear(grid: Grid, left: f64, right: f64) -> Result<Self> {
        let p = (0..grid.len())
            .map(|i| left + (right - left) * i as f64 / (grid.len() - 1) as f64)
            .collect();
        Self::new(grid, p)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn log_holder_modulus(&self) -> f64 {
        self.log_holder_modulus
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Exponent at face `i`: mean of the two adjacent nodal values.
    pub fn face_value(&self, i: usize) -> f64 {
        0.5 * (self.p[i] + self.p[i + 1])
    }

    pub fn face_values(&self) -> Vec<f64> {
        (0..self.grid.faces()).map(|i| self.face_value(i)).collect()
    }
}

/// `(f_{i+1} - f_i) / h` on each face.
pub fn gradient(f: &ScalarField) -> FaceField {
    let h = f.grid.h;
    let values = f.values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    FaceField { grid: f.grid, values }
}

/// Adjoint stencil of [`gradient`]: `(g_i - g_{i-1}) / h` at interior nodes,
/// zero at the two boundary nodes.
pub fn divergence(g: &FaceField) -> ScalarField {
    let h = g.grid.h;
    let n = g.grid.len();
    let mut values = vec![0.0; n];
    for j in 1..n - 1 {
        values[j] = (g.values[j] - g.values[j - 1]) / h;
    }
    ScalarField { grid: g.grid, values }
}

/// Trapezoidal rule over the nodes.
pub fn integrate(f: &ScalarField) -> f64 {
    let v = &f.values;
    let n = v.len();
    let interior: f64 = v[1..n - 1].iter().sum();
    f.grid.h * (interior + 0.5 * (v[0] + v[n - 1]))
}

/// Discrete log-Hölder modulus of `p`.
pub fn log_holder_estimate(p: &ExponentField) -> f64 {
    p.log_holder_modulus
}

fn log_holder_modulus(grid: &Grid, p: &[f64]) -> f64 {
    let n = grid.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d = (j - i) as f64 * grid.h;
            if d > 0.5 {
                break;
            }
            best = best.max((p[i] - p[j]).abs() * (1.0 / d).ln());
        }
    }
    best
}
