use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ddpx_core::config::{parse_config, FieldSpec, GridSpec, Mode, RunConfig};
use ddpx_core::output::Report;
use ddpx_core::pipeline::execute;

/// Regularized solver and verification harness for
/// `u_t = u^m div(|Du|^{p(x)-2} Du)` on an interval.
#[derive(Parser)]
#[command(name = "ddpx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigRun {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one regularized problem.
    Solve(ConfigRun),
    /// Solve a decreasing schedule of regularization levels and compare them.
    Continuation(ConfigRun),
    /// Fuzz the functional inequalities and transform identities.
    VerifyLemmas {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the Barenblatt profile and, with --horizon, solve against it.
    Barenblatt {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        t0: f64,
        /// `a,b,n`
        #[arg(long)]
        grid: String,
        /// Comma-separated residual evaluation times.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Final time of the solver run; omit to skip solving.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        delta_s: Option<f64>,
    },
    /// Check support non-expansion on one regularized run.
    SupportCheck(ConfigRun),
}

fn mode_name(mode: Mode) -> String {
    serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

/// Reads a config file, filling in or checking `mode` against the subcommand.
fn load(path: &Path, mode: Mode) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut doc: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let obj = doc.as_object_mut().context("config must be a JSON object")?;
    let want = mode_name(mode);
    match obj.get("mode").and_then(|m| m.as_str()) {
        Some(m) if m != want => bail!("config mode '{m}' does not match subcommand '{want}'"),
        _ => {
            obj.insert("mode".into(), want.into());
        }
    }
    Ok(parse_config(&doc.to_string())?)
}

fn run(cli: Cli) -> Result<(Report, PathBuf)> {
    let (cfg, out) = match cli.command {
        Command::Solve(a) => (load(&a.config, Mode::Solve)?, a.out),
        Command::Continuation(a) => (load(&a.config, Mode::Continuation)?, a.out),
        Command::SupportCheck(a) => (load(&a.config, Mode::SupportCheck)?, a.out),
        Command::VerifyLemmas { samples, seed, out } => {
            let mut c = RunConfig::new(Mode::VerifyLemmas);
            c.samples = Some(samples);
            c.seed = Some(seed);
            (parse_config(&c.to_json())?, out)
        }
        Command::Barenblatt { m, t0, grid, times, out, horizon, epsilon, dt, delta_s } => {
            let mut c = RunConfig::new(Mode::Barenblatt);
            c.m = Some(m);
            c.u0 = Some(FieldSpec::Named(format!("barenblatt:{t0}")));
            c.grid = Some(GridSpec::Text(grid));
            c.times = (!times.is_empty()).then_some(times);
            c.t_final = horizon;
            if horizon.is_some() {
                c.epsilon = Some(epsilon);
                c.dt = dt;
            }
            c.delta_s = delta_s;
            (parse_config(&c.to_json())?, out)
        }
    };
    let report = execute(&cfg, &out)?;
    Ok((report, out))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, out)) => {
            for c in &report.checks {
                let tag = if c.ok { "PASS" } else { "FAIL" };
                println!("{tag} {} value={:e} limit={:e}", c.name, c.value, c.limit);
            }
            println!("report: {}", out.join("report.json").display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
