//! Run configuration: a single flat JSON document.
//!
//! ```json
//! {"mode": "solve", "m": 1, "p": "constant:2", "u0": "bump:0.5,0.2,1",
//!  "grid": "0,1,101", "T": 0.1, "epsilon": 0.001}
//! ```
//!
//! `p` is `"constant:<v>"`, `"linear:<left>,<right>"` or a nodal list;
//! `u0` is `"zero"`, `"bump:<center>,<width>,<height>"`, `"barenblatt:<t0>"`
//! or a nodal list; `grid` is `"a,b,n"` or `[a, b, n]`. Unknown keys are
//! rejected. [`parse_config`] fills defaults so that the echoed document
//! parses back to the same value.

use serde::{Deserialize, Serialize};

use crate::continuation::{geometric_schedule, DEFAULT_EPS0, DEFAULT_LEVELS};
use crate::error::{Error, Result};
use crate::grid::{ExponentField, Grid, ScalarField};
use crate::solver::{FaceAverage, ProblemSpec, SolverConfig};
use crate::transforms::Regime;
use crate::verification::BarenblattParams;

pub const DEFAULT_DELTA_S: f64 = 0.01;
pub const DEFAULT_DILATION: usize = 1;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Continuation,
    VerifyLemmas,
    Barenblatt,
    SupportCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Named(String),
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Text(String),
    Triple(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    /// Evaluation times for the Barenblatt residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_average: Option<FaceAverage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn at(path: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Invalid { reason, .. } => Error::Config(format!("{path}: {reason}")),
        Error::Config(msg) => Error::Config(format!("{path}: {msg}")),
        other => Error::Config(format!("{path}: {other}")),
    }
}

fn missing(path: &str) -> Error {
    Error::Config(format!("{path}: required for this mode"))
}

fn numbers(path: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("{path}: cannot parse number '{s}'"))))
        .collect()
}

fn expect_len(path: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Config(format!("{path}: expected {n} values, got {}", v.len())));
    }
    Ok(())
}

/// `h (1 - r^2)^2` with `r = 2 (x - c) / w`, supported on
/// `[c - w/2, c + w/2]`. Points within roundoff of the ends get exactly zero.
pub fn bump(x: f64, center: f64, width: f64, height: f64) -> f64 {
    let r = (x - center) / (0.5 * width);
    if r.abs() < 1.0 - 1e-12 {
        height * (1.0 - r * r).powi(2)
    } else {
        0.0
    }
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            m: None,
            p: None,
            u0: None,
            grid: None,
            t_final: None,
            epsilon: None,
            schedule: None,
            times: None,
            dt: None,
            picard_tol: None,
            picard_max: None,
            delta_g: None,
            face_average: None,
            delta_s: None,
            dilation_cells: None,
            seed: None,
            samples: None,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let (a, b, n) = match self.grid.as_ref().ok_or_else(|| missing("grid"))? {
            GridSpec::Text(s) => {
                let v = numbers("grid", s)?;
                expect_len("grid", &v, 3)?;
                (v[0], v[1], v[2])
            }
            GridSpec::Triple(v) => {
                expect_len("grid", v, 3)?;
                (v[0], v[1], v[2])
            }
        };
        if !(n.fract() == 0.0 && n >= 0.0 && n <= 1e9) {
            return Err(Error::Config(format!("grid: node count must be a whole number, got {n}")));
        }
        Grid::new(a, b, n as usize).map_err(at("grid"))
    }

    pub fn regime(&self) -> Result<Regime> {
        Regime::new(self.m.ok_or_else(|| missing("m"))?).map_err(at("m"))
    }

    pub fn exponent(&self, grid: Grid) -> Result<ExponentField> {
        match self.p.as_ref().ok_or_else(|| missing("p"))? {
            FieldSpec::Nodal(v) => ExponentField::new(grid, v.clone()),
            FieldSpec::Named(s) => match s.split_once(':') {
                Some(("constant", rest)) => {
                    let v = numbers("p", rest)?;
                    expect_len("p", &v, 1)?;
                    ExponentField::constant(grid, v[0])
                }
                Some(("linear", rest)) => {
                    let v = numbers("p", rest)?;
                    expect_len("p", &v, 2)?;
                    ExponentField::linear(grid, v[0], v[1])
                }
                _ => return Err(Error::Config(format!("p: unknown exponent spec '{s}'"))),
            },
        }
        .map_err(at("p"))
    }

    /// `t0` when `u0` is a Barenblatt profile.
    pub fn barenblatt_t0(&self) -> Result<Option<f64>> {
        match &self.u0 {
            Some(FieldSpec::Named(s)) => match s.split_once(':') {
                Some(("barenblatt", rest)) => {
                    let v = numbers("u0", rest)?;
                    expect_len("u0", &v, 1)?;
                    Ok(Some(v[0]))
                }
                _ => Ok(None),
            },
            _ => Ok(None),
        }
    }

    pub fn barenblatt_params(&self) -> Result<Option<BarenblattParams>> {
        match self.barenblatt_t0()? {
            None => Ok(None),
            Some(t0) => {
                let m = self.m.ok_or_else(|| missing("m"))?;
                BarenblattParams::new(m, t0).map(Some).map_err(at("u0"))
            }
        }
    }

    pub fn initial_data(&self, grid: Grid) -> Result<ScalarField> {
        if let Some(bp) = self.barenblatt_params()? {
            return Ok(bp.profile(grid, 0.0));
        }
        match self.u0.as_ref().ok_or_else(|| missing("u0"))? {
            FieldSpec::Nodal(v) => {
                expect_len("u0", v, grid.len())?;
                ScalarField::new(grid, v.clone()).map_err(at("u0"))
            }
            FieldSpec::Named(s) if s == "zero" => ScalarField::constant(grid, 0.0).map_err(at("u0")),
            FieldSpec::Named(s) => match s.split_once(':') {
                Some(("bump", rest)) => {
                    let v = numbers("u0", rest)?;
                    expect_len("u0", &v, 3)?;
                    if !(v[1] > 0.0 && v[2] >= 0.0) {
                        return Err(Error::Config("u0: bump needs width > 0 and height >= 0".into()));
                    }
                    ScalarField::from_fn(grid, |x| bump(x, v[0], v[1], v[2])).map_err(at("u0"))
                }
                _ => Err(Error::Config(format!("u0: unknown initial data spec '{s}'"))),
            },
        }
    }

    pub fn t_final(&self) -> Result<f64> {
        self.t_final.ok_or_else(|| missing("T"))
    }

    /// The problem at `epsilon`, or at the first schedule level when no
    /// single `epsilon` is given.
    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let grid = self.grid()?;
        let eps = match (self.epsilon, &self.schedule) {
            (Some(e), _) => e,
            (None, Some(s)) if !s.is_empty() => s[0],
            _ => return Err(missing("epsilon")),
        };
        let t = self.t_final()?;
        ProblemSpec::new(self.regime()?, self.exponent(grid)?, self.initial_data(grid)?, t, eps).map_err(|e| match e {
            Error::Invalid { field, reason } => Error::Config(format!("{field}: {reason}")),
            other => Error::Config(other.to_string()),
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::for_horizon(self.t_final()?);
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.picard_tol {
            cfg.picard_tol = v;
        }
        if let Some(v) = self.picard_max {
            cfg.picard_max = v;
        }
        if let Some(v) = self.delta_g {
            cfg.delta_g = v;
        }
        if let Some(v) = self.face_average {
            cfg.face_average = v;
        }
        cfg.validate().map_err(|e| match e {
            Error::Invalid { field, reason } => Error::Config(format!("{field}: {reason}")),
            other => Error::Config(other.to_string()),
        })?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> Vec<f64> {
        self.schedule.clone().unwrap_or_else(|| geometric_schedule(DEFAULT_EPS0, DEFAULT_LEVELS))
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s.unwrap_or(DEFAULT_DELTA_S)
    }

    pub fn dilation_cells(&self) -> usize {
        self.dilation_cells.unwrap_or(DEFAULT_DILATION)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    fn fill_defaults(&mut self) {
        if self.mode == Mode::VerifyLemmas {
            self.seed.get_or_insert(DEFAULT_SEED);
            self.samples.get_or_insert(DEFAULT_SAMPLES);
            return;
        }
        if let Some(t) = self.t_final {
            let d = SolverConfig::for_horizon(t);
            self.dt.get_or_insert(d.dt);
            self.picard_tol.get_or_insert(d.picard_tol);
            self.picard_max.get_or_insert(d.picard_max);
            self.delta_g.get_or_insert(d.delta_g);
            self.face_average.get_or_insert(d.face_average);
        }
        if self.mode == Mode::Continuation {
            self.schedule.get_or_insert_with(|| geometric_schedule(DEFAULT_EPS0, DEFAULT_LEVELS));
        }
        if matches!(self.mode, Mode::SupportCheck | Mode::Barenblatt) {
            self.delta_s.get_or_insert(DEFAULT_DELTA_S);
            self.dilation_cells.get_or_insert(DEFAULT_DILATION);
        }
    }

    /// Checks everything the selected mode will use.
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::VerifyLemmas => {
                if self.samples() == 0 {
                    return Err(Error::Config("samples: need at least one sample".into()));
                }
            }
            Mode::Solve | Mode::SupportCheck => {
                if self.epsilon.is_none() {
                    return Err(missing("epsilon"));
                }
                self.problem_spec()?;
                self.solver_config()?;
            }
            Mode::Continuation => {
                self.problem_spec()?;
                self.solver_config()?;
                let s = self.schedule();
                if s.is_empty() || s.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::Config("schedule: need strictly decreasing levels in (0, 1]".into()));
                }
            }
            Mode::Barenblatt => {
                let grid = self.grid()?;
                if self.barenblatt_params()?.is_none() {
                    return Err(Error::Config("u0: barenblatt mode needs u0 = \"barenblatt:<t0>\"".into()));
                }
                match &self.times {
                    Some(ts) if !ts.is_empty() && ts.iter().all(|t| *t >= 0.0 && t.is_finite()) => {}
                    Some(_) => return Err(Error::Config("times: need a nonempty list of times >= 0".into())),
                    None if self.t_final.is_none() => return Err(missing("times")),
                    None => {}
                }
                if self.t_final.is_some() {
                    if self.p.is_some() {
                        let p = self.exponent(grid)?;
                        if !(p.is_constant() && p.p_minus() == 2.0) {
                            return Err(Error::Config("p: the Barenblatt profile solves the p = 2 equation".into()));
                        }
                    }
                    if self.epsilon.is_none() {
                        return Err(missing("epsilon"));
                    }
                    self.solver_config()?;
                }
            }
        }
        if matches!(self.mode, Mode::SupportCheck | Mode::Barenblatt) {
            if !(self.delta_s() > 0.0) {
                return Err(Error::Config("delta_s: need delta_s > 0".into()));
            }
            if let Some(e) = self.epsilon {
                if self.delta_s() <= 2.0 * e {
                    return Err(Error::Config(format!("delta_s: must exceed 2 epsilon = {}", 2.0 * e)));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses, fills defaults and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"mode": "solve", "m": 1, "p": "constant:2", "u0": "zero", "grid": "0,1,101", "T": 0.1, "epsilon": 0.1}"#;

    fn err_text(doc: &str) -> String {
        parse_config(doc).unwrap_err().to_string()
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.dt, Some(0.1 / 200.0));
        assert_eq!(c.picard_tol, Some(1e-9));
        assert_eq!(c.picard_max, Some(100));
        assert_eq!(c.delta_g, Some(1e-8));
        assert_eq!(c.face_average, Some(FaceAverage::Secant));
        let spec = c.problem_spec().unwrap();
        assert_eq!(spec.grid().len(), 101);
        assert_eq!(spec.epsilon(), 0.1);
    }

    #[test]
    fn echo_round_trips() {
        for doc in [
            MINIMAL,
            r#"{"mode": "continuation", "m": 2, "p": "linear:1.5,2.5", "u0": "bump:0.5,0.2,1", "grid": [0, 1, 41], "T": 0.01}"#,
            r#"{"mode": "verify-lemmas", "seed": 3}"#,
            r#"{"mode": "barenblatt", "m": 0.5, "u0": "barenblatt:1", "grid": "-4,4,201", "times": [0.1, 0.3]}"#,
            r#"{"mode": "support-check", "m": 1, "p": [2, 2, 2, 2, 2], "u0": [0, 0.5, 1, 0.5, 0], "grid": "0,1,5", "T": 0.3, "epsilon": 0.001, "dt": 0.007}"#,
        ] {
            let c = parse_config(doc).unwrap();
            assert_eq!(parse_config(&c.to_json()).unwrap(), c, "{doc}");
        }
    }

    #[test]
    fn continuation_default_schedule() {
        let c = parse_config(r#"{"mode": "continuation", "m": 1, "p": "constant:2", "u0": "zero", "grid": "0,1,11", "T": 0.1}"#)
            .unwrap();
        assert_eq!(c.schedule, Some(vec![0.1, 0.05, 0.025, 0.0125]));
    }

    #[test]
    fn rejections_name_the_field() {
        assert!(err_text(&MINIMAL.replace("constant:2", "constant:1.0")).contains("p:"));
        assert!(err_text(&MINIMAL.replace("\"epsilon\": 0.1", "\"epsilon\": 0")).contains("epsilon"));
        assert!(err_text(&MINIMAL.replace("\"m\": 1", "\"m\": 0")).contains("m:"));
        assert!(err_text(&MINIMAL.replace("\"T\"", "\"horizon\"")).contains("horizon"));
        assert!(err_text(&MINIMAL.replace("0,1,101", "0,1")).contains("grid"));
        assert!(err_text(&MINIMAL.replace("zero", "bump:0,0.2,1")).contains("u0"));
        assert!(err_text(&MINIMAL.replace("zero", "spike")).contains("u0"));
        assert!(err_text(&MINIMAL.replace(", \"epsilon\": 0.1", "")).contains("epsilon"));
    }

    #[test]
    fn support_threshold_must_clear_floor() {
        let doc = r#"{"mode": "support-check", "m": 1, "p": "constant:2", "u0": "bump:0.5,0.2,1", "grid": "0,1,101", "T": 0.1, "epsilon": 0.01}"#;
        assert!(err_text(doc).contains("delta_s"));
        assert!(parse_config(&doc.replace("0.01}", "0.001}")).is_ok());
    }

    #[test]
    fn bump_support() {
        assert_eq!(bump(0.4, 0.5, 0.2, 1.0), 0.0);
        assert_eq!(bump(0.6, 0.5, 0.2, 1.0), 0.0);
        assert_eq!(bump(0.5, 0.5, 0.2, 2.0), 2.0);
        assert!(bump(0.45, 0.5, 0.2, 1.0) > 0.0);
    }

    #[test]
    fn barenblatt_config() {
        let c = parse_config(r#"{"mode": "barenblatt", "m": 0.5, "u0": "barenblatt:1", "grid": "-4,4,201", "times": [0.5]}"#).unwrap();
        let bp = c.barenblatt_params().unwrap().unwrap();
        assert_eq!(bp.t0(), 1.0);
        let u0 = c.initial_data(c.grid().unwrap()).unwrap();
        assert!((u0.max() - 1.0).abs() < 1e-15);
        assert!(parse_config(r#"{"mode": "barenblatt", "m": 2, "u0": "barenblatt:1", "grid": "-4,4,201", "times": [0.5]}"#).is_err());
    }
}
