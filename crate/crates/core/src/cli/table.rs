//! Sweep rows and their CSV encoding.

use std::io::Write;

use crate::allocator::{AllocationPlan, Phase};
use crate::baselines::{BaselineDetail, BaselineResult};

use super::config::{RateUnits, SchemeId};

pub const SCHEMA_LINE: &str = "# schema=1";

pub const HEADER: [&str; 15] = [
    "P_bar_dbw",
    "p_bar_dbw",
    "scheme",
    "rate",
    "region_label",
    "t_A",
    "P_A_w",
    "p_A_w",
    "mode_A",
    "t_B",
    "P_B_w",
    "p_B_w",
    "mode_B",
    "detail",
    "error",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepRow {
    pub source_dbw: f64,
    pub relay_dbw: f64,
    pub scheme: String,
    pub rate: Option<f64>,
    pub region_label: String,
    pub phase_a: Option<Phase>,
    pub phase_b: Option<Phase>,
    /// HD keeps its relay time here, with no powers or mode
    pub t_a_only: Option<f64>,
    pub detail: String,
    pub error: String,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SweepRow {
    fn base(source_dbw: f64, relay_dbw: f64, scheme: SchemeId) -> Self {
        SweepRow {
            source_dbw,
            relay_dbw,
            scheme: scheme.to_string(),
            ..SweepRow::default()
        }
    }

    pub fn failed(source_dbw: f64, relay_dbw: f64, scheme: SchemeId, error: String) -> Self {
        SweepRow {
            error,
            ..Self::base(source_dbw, relay_dbw, scheme)
        }
    }

    pub fn from_plan(source_dbw: f64, relay_dbw: f64, plan: &AllocationPlan, units: RateUnits) -> Self {
        SweepRow {
            rate: Some(units.from_nats(plan.rate)),
            region_label: plan.regime.label().to_string(),
            phase_a: plan.phases.first().copied(),
            phase_b: plan.phases.get(1).copied(),
            detail: plan.warnings.join("; "),
            ..Self::base(source_dbw, relay_dbw, SchemeId::Op)
        }
    }

    pub fn from_baseline(
        source_dbw: f64,
        relay_dbw: f64,
        scheme: SchemeId,
        result: &BaselineResult,
        units: RateUnits,
    ) -> Self {
        let mut row = SweepRow {
            rate: Some(units.from_nats(result.rate)),
            ..Self::base(source_dbw, relay_dbw, scheme)
        };
        match result.detail {
            BaselineDetail::None => {}
            BaselineDetail::Hd { relay_time } => {
                row.t_a_only = Some(relay_time);
                row.detail = format!("t={relay_time}");
            }
            BaselineDetail::FdHd(s) => {
                row.detail = format!(
                    "t_A={};t_B={};t_C={};P_A_w={};P_C_w={};p_B_w={};p_C_w={}",
                    s.t_a, s.t_b, s.t_c, s.source_a, s.source_c, s.relay_b, s.relay_c
                );
            }
        }
        row
    }

    pub fn record(&self) -> [String; 15] {
        let phase = |p: Option<Phase>| match p {
            Some(p) => [
                num(p.duration),
                num(p.source_power),
                num(p.relay_power),
                p.mode.to_string(),
            ],
            None => Default::default(),
        };
        let [mut t_a, p_a, r_a, m_a] = phase(self.phase_a);
        if let Some(t) = self.t_a_only {
            t_a = num(t);
        }
        let [t_b, p_b, r_b, m_b] = phase(self.phase_b);
        [
            num(self.source_dbw),
            num(self.relay_dbw),
            self.scheme.clone(),
            opt(self.rate),
            self.region_label.clone(),
            t_a,
            p_a,
            r_a,
            m_a,
            t_b,
            p_b,
            r_b,
            m_b,
            self.detail.clone(),
            self.error.clone(),
        ]
    }
}

/// Writes the schema line, the header and `rows` in order.
pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}
