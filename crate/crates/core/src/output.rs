//! CSV and JSON writers. Floats in CSV files use 17 significant digits;
//! rows are time-major, node-minor. Reports carry no timestamps, so equal
//! inputs give byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::solver::Trajectory;

pub const TOOL: &str = "ddpx";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// `time,node_index,x,u,v` for every snapshot.
pub fn snapshots_csv(traj: &Trajectory) -> String {
    let grid = traj.grid();
    let mut out = String::from("time,node_index,x,u,v\n");
    for ((t, u), v) in traj.times.iter().zip(&traj.u).zip(&traj.v) {
        for (i, (a, b)) in u.values().iter().zip(v.values()).enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", num(*t), i, num(grid.node(i)), num(*a), num(*b)));
        }
    }
    out
}

/// `time,energy,dissipation,min_u,max_u,picard_iters` per time level.
pub fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,energy,dissipation,min_u,max_u,picard_iters\n");
    for d in &traj.diagnostics {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            num(d.time),
            num(d.energy),
            num(d.dissipation),
            num(d.min_u),
            num(d.max_u),
            d.picard_iterations
        ));
    }
    out
}

/// `time,node_index,x,<column>` for a sequence of fields on one grid.
pub fn fields_csv(grid: &Grid, times: &[f64], fields: &[ScalarField], column: &str) -> String {
    let mut out = format!("time,node_index,x,{column}\n");
    for (t, f) in times.iter().zip(fields) {
        for (i, a) in f.values().iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", num(*t), i, num(grid.node(i)), num(*a)));
        }
    }
    out
}

pub fn write_trajectory(dir: &Path, prefix: &str, traj: &Trajectory) -> Result<()> {
    write_text(&dir.join(format!("{prefix}snapshots.csv")), &snapshots_csv(traj))?;
    write_text(&dir.join(format!("{prefix}diagnostics.csv")), &diagnostics_csv(traj))
}

/// One verdict. `margin` is the signed distance to failure in the units of
/// `value`: positive passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub value: f64,
    pub limit: f64,
    pub margin: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), ok: value <= limit, value, limit, margin: limit - value }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), ok: value >= limit, value, limit, margin: value - limit }
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), ok: value < limit, value, limit, margin: limit - value }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), ok, value: v, limit: 1.0, margin: v - 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub config: RunConfig,
    pub details: serde_json::Value,
}

impl Report {
    pub fn new(config: RunConfig, checks: Vec<Check>, details: serde_json::Value) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            passed: checks.iter().all(|c| c.ok),
            checks,
            config,
            details,
        }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok)
    }
}
