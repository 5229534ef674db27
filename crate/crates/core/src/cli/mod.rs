//! Command-line front end: `thresholds`, `solve`, `sweep` and `verify`.

pub mod config;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::allocator::{self, AllocationPlan};
use crate::baselines;
use crate::model::{watts_to_db, ChannelModel, PowerBudget};
use crate::oracle::{lp_oracle, two_atom_scan, OracleConfig};

use config::{GlobalFlags, KeyOverrides, RateUnits, Scenario, SchemeId};
use table::SweepRow;

/// Largest allocator/oracle gap `verify` accepts, in nats.
pub const VERIFY_TOL: f64 = 5e-4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Solver(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fdrelay", version, about = "Power allocation for full-duplex relay links")]
struct Cli {
    /// scenario file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV destination
    #[arg(long, global = true, alias = "path")]
    output: Option<PathBuf>,
    /// rate units for reports and CSV
    #[arg(long, global = true, alias = "rate_units", value_enum)]
    units: Option<RateUnits>,
    /// worker threads for sweeps and oracles
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(flatten)]
    keys: KeyOverrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the five budget thresholds
    Thresholds,
    /// Solve one budget (needs Pbar_dbw)
    Solve,
    /// Sweep the source budget and write one CSV row per point and scheme
    Sweep,
    /// Compare the allocator with the brute-force oracles
    Verify {
        /// sweep positions to check
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// relay power grid size for the oracles
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let flags = GlobalFlags {
        output: cli.output.clone(),
        units: cli.units,
    };
    let scenario = Scenario::load(cli.config.as_deref(), &cli.keys, &flags)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.workers {
            if n == 0 {
                return Err(CliError::Config("--workers must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Failed(e.to_string()))?
    };
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let w: &mut dyn Write = &mut buf;
        match cli.command {
            Command::Thresholds => cmd_thresholds(&scenario, w),
            Command::Solve => cmd_solve(&scenario, w),
            Command::Sweep => cmd_sweep(&scenario, w),
            Command::Verify { points, grid } => cmd_verify(&scenario, points, grid, w),
        }
    });
    out.write_all(&buf)?;
    result
}

fn dbw_or_dash(w: f64) -> String {
    if w > 0.0 && w.is_finite() {
        format!("{:.4} dBW", watts_to_db(w).unwrap_or(f64::NAN))
    } else {
        "-".into()
    }
}

fn cmd_thresholds(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    let (pb, pm) = s.relay_dbw()?;
    // the source average does not enter the thresholds
    let budget = s.budget_at(0.0)?;
    let t = allocator::thresholds(&s.model, &budget)?;
    let scale = s.model.watts_per_normalized();
    writeln!(out, "relay average {pb} dBW, relay peak {pm} dBW")?;
    writeln!(
        out,
        "v = {:.4} dB, beta0 = {:.4} dB",
        watts_to_db(s.model.v())?,
        watts_to_db(s.model.beta0())?
    )?;
    for (i, (x, dbw)) in t.values().iter().zip(t.dbw).enumerate() {
        let w = x * scale;
        match dbw {
            Some(d) => writeln!(out, "P{i} = {d:.4} dBW ({w:e} W)")?,
            None if x.is_infinite() => writeln!(out, "P{i} = +inf (not reached)")?,
            None if *x == 0.0 => writeln!(out, "P{i} = 0 W")?,
            None => writeln!(out, "P{i} = {w:e} W (negative / not applicable)")?,
        }
    }
    Ok(())
}

fn write_rows(s: &Scenario, rows: &[SweepRow], out: &mut dyn Write) -> Result<(), CliError> {
    match &s.output {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            table::write_csv(std::io::BufWriter::new(file), rows)?;
        }
        None => table::write_csv(&mut *out, rows)?,
    }
    Ok(())
}

fn render_plan(plan: &AllocationPlan, units: RateUnits, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "region {}", plan.regime)?;
    for (name, ph) in ["A", "B"].iter().zip(&plan.phases) {
        writeln!(
            out,
            "phase {name}: t = {:.6}, source {:e} W ({}), relay {:e} W ({}), {}",
            ph.duration,
            ph.source_power,
            dbw_or_dash(ph.source_power),
            ph.relay_power,
            dbw_or_dash(ph.relay_power),
            ph.mode
        )?;
    }
    writeln!(out, "rate {:.6} {}", units.from_nats(plan.rate), units.label())?;
    for w in &plan.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn cmd_solve(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    let src = s
        .source_avg_dbw
        .ok_or_else(|| CliError::Config("missing key `budget.Pbar_dbw`".into()))?;
    let (pb, _) = s.relay_dbw()?;
    let budget = s.budget_at(src)?;
    let plan = allocator::solve(&s.model, &budget)?;
    plan.validate(&s.model, &budget)?;
    render_plan(&plan, s.units, out)?;
    if s.output.is_some() {
        write_rows(s, &[SweepRow::from_plan(src, pb, &plan, s.units)], out)?;
    }
    Ok(())
}

fn scheme_row(
    model: &ChannelModel,
    budget: &PowerBudget,
    scheme: SchemeId,
    src: f64,
    pb: f64,
    units: RateUnits,
) -> SweepRow {
    let fail = |e: crate::Error| SweepRow::failed(src, pb, scheme, e.to_string());
    let base = |r: crate::Result<baselines::BaselineResult>| match r {
        Ok(r) => SweepRow::from_baseline(src, pb, scheme, &r, units),
        Err(e) => fail(e),
    };
    match scheme {
        SchemeId::Op => match allocator::solve(model, budget).and_then(|p| p.validate(model, budget).map(|_| p)) {
            Ok(plan) => SweepRow::from_plan(src, pb, &plan, units),
            Err(e) => fail(e),
        },
        SchemeId::FdIdeal => base(Ok(baselines::fd_ideal(model, budget))),
        SchemeId::FdIp => base(baselines::fd_ip(model, budget)),
        SchemeId::Hd => base(baselines::hd(model, budget)),
        SchemeId::FdHd => base(baselines::fd_hd(model, budget)),
    }
}

/// All rows of a sweep, point-major and in configured scheme order.
pub fn sweep_rows(s: &Scenario) -> Result<Vec<SweepRow>, CliError> {
    let spec = s.sweep_spec()?;
    let plan = s.relay_plan()?;
    let per_point: Vec<Vec<SweepRow>> = spec
        .values()
        .par_iter()
        .map(|&x| {
            let (pb, budget) = s.point_budget(plan, x);
            s.schemes
                .iter()
                .map(|&scheme| match &budget {
                    Ok(b) => scheme_row(&s.model, b, scheme, x, pb, s.units),
                    Err(e) => SweepRow::failed(x, pb, scheme, e.clone()),
                })
                .collect()
        })
        .collect();
    Ok(per_point.into_iter().flatten().collect())
}

fn cmd_sweep(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    let rows = sweep_rows(s)?;
    write_rows(s, &rows, out)?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} of {} rows failed", rows.len())));
    }
    Ok(())
}

struct Check {
    x: f64,
    outcome: Result<(f64, f64, f64), String>,
}

fn verify_point(model: &ChannelModel, budget: &PowerBudget, cfg: &OracleConfig) -> Result<(f64, f64, f64), String> {
    let plan = allocator::solve(model, budget).map_err(|e| e.to_string())?;
    plan.validate(model, budget).map_err(|e| e.to_string())?;
    let lp = lp_oracle(model, budget, cfg).map_err(|e| format!("LP oracle: {e}"))?;
    let scan = two_atom_scan(model, budget, cfg).map_err(|e| format!("two-level scan: {e}"))?;
    Ok((plan.rate, lp.rate, scan.rate))
}

fn cmd_verify(s: &Scenario, points: usize, grid: usize, out: &mut dyn Write) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Config(format!("--points must be at least 2, got {points}")));
    }
    let cfg = OracleConfig {
        grid_points: grid,
        ..OracleConfig::default()
    };
    cfg.check().map_err(|e| CliError::Config(format!("--grid: {e}")))?;
    let plan = s.relay_plan()?;
    let (lo, hi) = match s.sweep_spec() {
        Ok(spec) => (spec.start_dbw, spec.stop_dbw),
        Err(_) => (-40.0, 10.0),
    };
    let xs = crate::numerics::linspace(lo, hi, points);
    let checks: Vec<Check> = xs
        .par_iter()
        .map(|&x| {
            let (_, budget) = s.point_budget(plan, x);
            let outcome = budget.and_then(|b| verify_point(&s.model, &b, &cfg));
            Check { x, outcome }
        })
        .collect();

    let (mut worst_lp, mut worst_scan, mut failures) = (0.0f64, 0.0f64, 0);
    for c in &checks {
        match &c.outcome {
            Ok((op, lp, scan)) => {
                let (d_lp, d_scan) = ((op - lp).abs(), (op - scan).abs());
                worst_lp = worst_lp.max(d_lp);
                worst_scan = worst_scan.max(d_scan);
                writeln!(
                    out,
                    "P_bar {:>9.4} dBW  OP {op:.6}  LP {lp:.6}  scan {scan:.6}  |dLP| {d_lp:.2e}  |dscan| {d_scan:.2e}",
                    c.x
                )?;
            }
            Err(e) => {
                failures += 1;
                writeln!(out, "P_bar {:>9.4} dBW  error: {e}", c.x)?;
            }
        }
    }
    let pass = failures == 0 && worst_lp <= VERIFY_TOL && worst_scan <= VERIFY_TOL;
    writeln!(
        out,
        "max |OP - LP| = {worst_lp:.3e} nats, max |OP - scan| = {worst_scan:.3e} nats, tolerance {VERIFY_TOL:e}: {}",
        if pass { "PASS" } else { "FAIL" }
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed("verification failed".into()))
    }
}
