//! Scenario files and their command-line overrides.
//!
//! A scenario is a TOML file with these sections (all keys optional in the
//! file, since any of them may come from a flag of the same name):
//!
//! ```toml
//! [pathloss]            # or [direct], never both
//! distance_m = 500.0
//! carrier_hz = 2.4e9
//! alpha = 3.0
//! noise_dbw = -151.0
//! beta_db = -135.0
//!
//! # [direct]
//! # h1_db = -121.0
//! # h2_db = -121.0
//! # noise_dbw = -151.0
//! # beta_db = -135.0
//!
//! [budget]
//! pbar_dbw = -10.0      # relay average
//! pmax_dbw = -7.0       # relay peak
//! Pbar_dbw = 0.0        # source average (solve only)
//! Pmax_dbw = 10.0       # optional source peak, checked only
//!
//! [sweep]
//! start_dbw = -40.0
//! stop_dbw = 10.0
//! points = 101
//! mode = "source_only"  # or "joint"
//! pmax_offset_db = 3.0  # joint: pmax = p̄ + offset
//! pmax_fixed_dbw = 10.0 # joint: fixed pmax
//!
//! [output]
//! path = "sweep.csv"
//! rate_units = "bits"   # or "nats"
//! schemes = ["OP", "FD_IDEAL", "FD_IP", "HD", "FD_HD"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::model::{channel_from_pathloss, db_to_watts, ChannelModel, PowerBudget, DEFAULT_NOISE_DBW};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RateUnits {
    Bits,
    Nats,
}

impl RateUnits {
    pub fn from_nats(&self, nats: f64) -> f64 {
        match self {
            RateUnits::Bits => nats / std::f64::consts::LN_2,
            RateUnits::Nats => nats,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RateUnits::Bits => "bits",
            RateUnits::Nats => "nats",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// sweep the source average, relay budget fixed
    #[value(name = "source_only")]
    SourceOnly,
    /// sweep source and relay averages together
    #[value(name = "joint")]
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, ValueEnum)]
pub enum SchemeId {
    #[serde(rename = "OP")]
    #[value(name = "OP")]
    Op,
    #[serde(rename = "FD_IDEAL")]
    #[value(name = "FD_IDEAL")]
    FdIdeal,
    #[serde(rename = "FD_IP")]
    #[value(name = "FD_IP")]
    FdIp,
    #[serde(rename = "HD")]
    #[value(name = "HD")]
    Hd,
    #[serde(rename = "FD_HD")]
    #[value(name = "FD_HD")]
    FdHd,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Op,
        SchemeId::FdIdeal,
        SchemeId::FdIp,
        SchemeId::Hd,
        SchemeId::FdHd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeId::Op => "OP",
            SchemeId::FdIdeal => "FD_IDEAL",
            SchemeId::FdIp => "FD_IP",
            SchemeId::Hd => "HD",
            SchemeId::FdHd => "FD_HD",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathlossSection {
    distance_m: Option<f64>,
    carrier_hz: Option<f64>,
    alpha: Option<f64>,
    noise_dbw: Option<f64>,
    beta_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectSection {
    h1_db: Option<f64>,
    h2_db: Option<f64>,
    noise_dbw: Option<f64>,
    beta_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct BudgetSection {
    pbar_dbw: Option<f64>,
    pmax_dbw: Option<f64>,
    Pbar_dbw: Option<f64>,
    Pmax_dbw: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    start_dbw: Option<f64>,
    stop_dbw: Option<f64>,
    points: Option<usize>,
    mode: Option<SweepMode>,
    pmax_offset_db: Option<f64>,
    pmax_fixed_dbw: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    path: Option<PathBuf>,
    rate_units: Option<RateUnits>,
    schemes: Option<Vec<SchemeId>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    pathloss: Option<PathlossSection>,
    direct: Option<DirectSection>,
    budget: Option<BudgetSection>,
    sweep: Option<SweepSection>,
    output: Option<OutputSection>,
}

/// Flags named after the config keys; each one replaces the file value.
#[derive(Debug, Default, Clone, Args)]
#[allow(non_snake_case)]
pub struct KeyOverrides {
    #[arg(long = "distance_m", global = true, value_name = "M")]
    pub distance_m: Option<f64>,
    #[arg(long = "carrier_hz", global = true, value_name = "HZ")]
    pub carrier_hz: Option<f64>,
    #[arg(long = "alpha", global = true)]
    pub alpha: Option<f64>,
    #[arg(long = "noise_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub noise_dbw: Option<f64>,
    #[arg(long = "beta_db", global = true, allow_hyphen_values = true, value_name = "DB")]
    pub beta_db: Option<f64>,
    #[arg(long = "h1_db", global = true, allow_hyphen_values = true, value_name = "DB")]
    pub h1_db: Option<f64>,
    #[arg(long = "h2_db", global = true, allow_hyphen_values = true, value_name = "DB")]
    pub h2_db: Option<f64>,
    #[arg(long = "pbar_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub pbar_dbw: Option<f64>,
    #[arg(long = "pmax_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub pmax_dbw: Option<f64>,
    #[arg(long = "Pbar_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub Pbar_dbw: Option<f64>,
    #[arg(long = "Pmax_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub Pmax_dbw: Option<f64>,
    #[arg(long = "start_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub start_dbw: Option<f64>,
    #[arg(long = "stop_dbw", global = true, allow_hyphen_values = true, value_name = "DBW")]
    pub stop_dbw: Option<f64>,
    #[arg(long = "points", global = true)]
    pub points: Option<usize>,
    #[arg(long = "mode", global = true, value_enum)]
    pub mode: Option<SweepMode>,
    #[arg(
        long = "pmax_offset_db",
        global = true,
        allow_hyphen_values = true,
        value_name = "DB"
    )]
    pub pmax_offset_db: Option<f64>,
    #[arg(
        long = "pmax_fixed_dbw",
        global = true,
        allow_hyphen_values = true,
        value_name = "DBW"
    )]
    pub pmax_fixed_dbw: Option<f64>,
    #[arg(long = "schemes", global = true, value_enum, value_delimiter = ',')]
    pub schemes: Option<Vec<SchemeId>>,
}

/// Global flags that are not plain config keys.
#[derive(Debug, Default, Clone)]
pub struct GlobalFlags {
    pub output: Option<PathBuf>,
    pub units: Option<RateUnits>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayPlan {
    Fixed { pbar_dbw: f64, pmax_dbw: f64 },
    JointOffset { offset_db: f64 },
    JointFixedPeak { pmax_dbw: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub start_dbw: f64,
    pub stop_dbw: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        crate::numerics::linspace(self.start_dbw, self.stop_dbw, self.points)
    }
}

/// A fully resolved scenario. Budget parts that a command does not need
/// may be missing; the command reports that as a config error.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: ChannelModel,
    relay_avg_dbw: Option<f64>,
    relay_peak_dbw: Option<f64>,
    pub source_avg_dbw: Option<f64>,
    pub source_peak_dbw: Option<f64>,
    sweep: SweepPart,
    pub output: Option<PathBuf>,
    pub units: RateUnits,
    pub schemes: Vec<SchemeId>,
}

#[derive(Debug, Clone, Default)]
struct SweepPart {
    start_dbw: Option<f64>,
    stop_dbw: Option<f64>,
    points: Option<usize>,
    mode: Option<SweepMode>,
    offset_db: Option<f64>,
    fixed_dbw: Option<f64>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn required(v: Option<f64>, key: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| config_err(format!("missing key `{key}`")))
}

impl Scenario {
    pub fn load(path: Option<&Path>, keys: &KeyOverrides, flags: &GlobalFlags) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?;
                parse(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        Self::resolve(file, keys, flags)
    }

    pub fn from_toml(text: &str, keys: &KeyOverrides, flags: &GlobalFlags) -> Result<Self, CliError> {
        Self::resolve(parse(text).map_err(config_err)?, keys, flags)
    }

    fn resolve(mut f: FileConfig, k: &KeyOverrides, g: &GlobalFlags) -> Result<Self, CliError> {
        macro_rules! merge {
            ($section:ident, $field:ident, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    f.$section.get_or_insert_with(Default::default).$field = Some(v);
                }
            };
        }
        merge!(pathloss, distance_m, k.distance_m);
        merge!(pathloss, carrier_hz, k.carrier_hz);
        merge!(pathloss, alpha, k.alpha);
        merge!(direct, h1_db, k.h1_db);
        merge!(direct, h2_db, k.h2_db);
        // shared keys go to whichever channel block is in use
        if f.direct.is_some() && f.pathloss.is_none() {
            merge!(direct, noise_dbw, k.noise_dbw);
            merge!(direct, beta_db, k.beta_db);
        } else {
            merge!(pathloss, noise_dbw, k.noise_dbw);
            merge!(pathloss, beta_db, k.beta_db);
        }
        merge!(budget, pbar_dbw, k.pbar_dbw);
        merge!(budget, pmax_dbw, k.pmax_dbw);
        merge!(budget, Pbar_dbw, k.Pbar_dbw);
        merge!(budget, Pmax_dbw, k.Pmax_dbw);
        merge!(sweep, start_dbw, k.start_dbw);
        merge!(sweep, stop_dbw, k.stop_dbw);
        merge!(sweep, points, k.points);
        merge!(sweep, mode, k.mode);
        merge!(sweep, pmax_offset_db, k.pmax_offset_db);
        merge!(sweep, pmax_fixed_dbw, k.pmax_fixed_dbw);
        merge!(output, schemes, k.schemes);
        merge!(output, path, g.output);
        merge!(output, rate_units, g.units);

        let model = match (f.pathloss, f.direct) {
            (Some(_), Some(_)) => return Err(config_err("use either [pathloss] or [direct], not both")),
            (None, None) => return Err(config_err("missing channel: add a [pathloss] or [direct] section")),
            (Some(p), None) => channel_from_pathloss(
                required(p.distance_m, "pathloss.distance_m")?,
                required(p.carrier_hz, "pathloss.carrier_hz")?,
                required(p.alpha, "pathloss.alpha")?,
                db_to_watts(p.noise_dbw.unwrap_or(DEFAULT_NOISE_DBW)),
                required(p.beta_db, "pathloss.beta_db")?,
            )
            .map_err(|e| config_err(format!("[pathloss]: {e}")))?,
            (None, Some(d)) => ChannelModel::new(
                db_to_watts(required(d.h1_db, "direct.h1_db")?),
                db_to_watts(required(d.h2_db, "direct.h2_db")?),
                db_to_watts(d.noise_dbw.unwrap_or(DEFAULT_NOISE_DBW)),
                db_to_watts(required(d.beta_db, "direct.beta_db")?),
            )
            .map_err(|e| config_err(format!("[direct]: {e}")))?,
        };

        let b = f.budget.unwrap_or_default();
        let s = f.sweep.unwrap_or_default();
        let o = f.output.unwrap_or_default();
        let schemes = o.schemes.unwrap_or_else(|| SchemeId::ALL.to_vec());
        if schemes.is_empty() {
            return Err(config_err("output.schemes is empty"));
        }
        Ok(Scenario {
            model,
            relay_avg_dbw: b.pbar_dbw,
            relay_peak_dbw: b.pmax_dbw,
            source_avg_dbw: b.Pbar_dbw,
            source_peak_dbw: b.Pmax_dbw,
            sweep: SweepPart {
                start_dbw: s.start_dbw,
                stop_dbw: s.stop_dbw,
                points: s.points,
                mode: s.mode,
                offset_db: s.pmax_offset_db,
                fixed_dbw: s.pmax_fixed_dbw,
            },
            output: o.path,
            units: o.rate_units.unwrap_or(RateUnits::Bits),
            schemes,
        })
    }

    /// Relay average and peak from the budget block.
    pub fn relay_dbw(&self) -> Result<(f64, f64), CliError> {
        let pb = required(self.relay_avg_dbw, "budget.pbar_dbw")?;
        let pm = required(self.relay_peak_dbw, "budget.pmax_dbw")?;
        if pb > pm {
            return Err(config_err(format!(
                "budget.pbar_dbw = {pb} exceeds budget.pmax_dbw = {pm}"
            )));
        }
        Ok((pb, pm))
    }

    /// Budget at a given source average, using the fixed relay budget.
    pub fn budget_at(&self, source_dbw: f64) -> Result<PowerBudget, CliError> {
        let (pb, pm) = self.relay_dbw()?;
        self.make_budget(pb, pm, source_dbw).map_err(config_err)
    }

    fn make_budget(&self, pb_dbw: f64, pm_dbw: f64, src_dbw: f64) -> Result<PowerBudget, String> {
        let mut b = PowerBudget::new(db_to_watts(pb_dbw), db_to_watts(pm_dbw), db_to_watts(src_dbw))
            .map_err(|e| e.to_string())?;
        if let Some(peak) = self.source_peak_dbw {
            b = b.with_source_peak(db_to_watts(peak)).map_err(|e| e.to_string())?;
        }
        Ok(b)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let spec = SweepSpec {
            start_dbw: required(self.sweep.start_dbw, "sweep.start_dbw")?,
            stop_dbw: required(self.sweep.stop_dbw, "sweep.stop_dbw")?,
            points: self
                .sweep
                .points
                .ok_or_else(|| config_err("missing key `sweep.points`"))?,
        };
        if spec.points < 2 {
            return Err(config_err(format!(
                "sweep.points must be at least 2, got {}",
                spec.points
            )));
        }
        if !(spec.start_dbw < spec.stop_dbw) {
            return Err(config_err(format!(
                "sweep.start_dbw ({}) must be below sweep.stop_dbw ({})",
                spec.start_dbw, spec.stop_dbw
            )));
        }
        Ok(spec)
    }

    pub fn relay_plan(&self) -> Result<RelayPlan, CliError> {
        match self.sweep.mode.unwrap_or(SweepMode::SourceOnly) {
            SweepMode::SourceOnly => {
                let (pbar_dbw, pmax_dbw) = self.relay_dbw()?;
                Ok(RelayPlan::Fixed { pbar_dbw, pmax_dbw })
            }
            SweepMode::Joint => match (self.sweep.offset_db, self.sweep.fixed_dbw) {
                (Some(offset_db), None) if offset_db >= 0.0 => Ok(RelayPlan::JointOffset { offset_db }),
                (Some(o), None) => Err(config_err(format!("sweep.pmax_offset_db must be >= 0, got {o}"))),
                (None, Some(pmax_dbw)) => Ok(RelayPlan::JointFixedPeak { pmax_dbw }),
                _ => Err(config_err(
                    "joint sweeps need exactly one of sweep.pmax_offset_db and sweep.pmax_fixed_dbw",
                )),
            },
        }
    }

    /// Relay average (dBW) and budget at one sweep position. Budget errors
    /// are returned as text so they can go into a row.
    pub fn point_budget(&self, plan: RelayPlan, x_dbw: f64) -> (f64, Result<PowerBudget, String>) {
        let (pb, pm) = match plan {
            RelayPlan::Fixed { pbar_dbw, pmax_dbw } => (pbar_dbw, pmax_dbw),
            RelayPlan::JointOffset { offset_db } => (x_dbw, x_dbw + offset_db),
            RelayPlan::JointFixedPeak { pmax_dbw } => (x_dbw, pmax_dbw),
        };
        // a fixed peak reached by the sweep is compared in dB so the end point stays feasible
        let pm = if pb > pm && pb - pm < 1e-9 { pb } else { pm };
        (pb, self.make_budget(pb, pm, x_dbw))
    }
}

fn parse(text: &str) -> Result<FileConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}
