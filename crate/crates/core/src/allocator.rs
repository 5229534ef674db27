//! Rate-optimal time sharing between full-duplex and half-duplex phases.
//!
//! The source follows the water-filling law `P(p) = (β/|h1|²)[ω − p]⁺`
//! against the relay power `p`, so a plan is fixed by the relay power
//! distribution (at most two levels) and the water level ω. Budgets are
//! classified against five thresholds on the normalized source budget 𝒫̄;
//! each class has its own closed form or one-dimensional search.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{self, OmegaCtx, OmegaPoint};
use crate::model::{normalize_budget, watts_to_db, ChannelModel, PowerBudget};
use crate::numerics::{find_root, maximize_scalar, MAXIMIZE_TOL};

const RELAY_CLAMP: f64 = 1e-12;
const DURATION_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DuplexMode {
    /// source and relay both transmit
    Fd,
    /// relay transmits, source silent
    HdTx,
    /// source transmits, relay only receives
    HdRx,
}

impl DuplexMode {
    pub fn from_powers(source: f64, relay: f64) -> Self {
        match (source > 0.0, relay > 0.0) {
            (true, true) => DuplexMode::Fd,
            (false, true) => DuplexMode::HdTx,
            _ => DuplexMode::HdRx,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DuplexMode::Fd => "FD",
            DuplexMode::HdTx => "HD-TX",
            DuplexMode::HdRx => "HD-RX",
        }
    }
}

impl fmt::Display for DuplexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Operating regime of a solved budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// water level at or above the relay peak, relay alternating 0 / peak
    HighLow,
    /// water level at or above the peak, both hops balanced
    HighMid,
    /// water level at or above the peak, relay at its average power
    HighTop,
    /// water level below the peak, pure half-duplex with relay at peak
    LowA,
    /// water level below the peak, relay at its average power
    LowB,
    /// water level below the peak, best point on the balance curve
    LowBalanced,
    /// water level below the peak, relay alternating 0 / intermediate level
    LowTwoLevel,
    /// water level below the peak, half-duplex at the lower-edge crossing
    LowEdge,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::HighLow => "T1-low",
            Regime::HighMid => "T1-mid",
            Regime::HighTop => "T1-high",
            Regime::LowA => "T2-a",
            Regime::LowB => "T2-b",
            Regime::LowBalanced => "T2-cd-vge",
            Regime::LowTwoLevel => "T2-c-vlt",
            Regime::LowEdge => "T2-d-vlt",
        }
    }

    pub fn all() -> [Regime; 8] {
        [
            Regime::HighLow,
            Regime::HighMid,
            Regime::HighTop,
            Regime::LowA,
            Regime::LowB,
            Regime::LowBalanced,
            Regime::LowTwoLevel,
            Regime::LowEdge,
        ]
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub duration: f64,
    /// watts
    pub source_power: f64,
    /// watts
    pub relay_power: f64,
    pub mode: DuplexMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub phases: Vec<Phase>,
    /// nats per channel use
    pub rate: f64,
    pub regime: Regime,
    /// water level on the normalized scale, watts
    pub omega: f64,
    pub warnings: Vec<String>,
}

impl AllocationPlan {
    /// First- and second-hop rates recomputed from the phase list.
    pub fn hop_rates(&self, model: &ChannelModel) -> (f64, f64) {
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for ph in &self.phases {
            let sinr = ph.source_power * model.h1_gain() / (model.noise_power() + model.si_factor() * ph.relay_power);
            r1 += ph.duration * sinr.ln_1p();
            r2 += ph.duration * (model.v() * ph.relay_power).ln_1p();
        }
        (r1, r2)
    }

    pub fn total_duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn average_source_power(&self) -> f64 {
        self.phases.iter().map(|p| p.duration * p.source_power).sum()
    }

    pub fn average_relay_power(&self) -> f64 {
        self.phases.iter().map(|p| p.duration * p.relay_power).sum()
    }

    /// Checks the frame-level budget and rate identities.
    pub fn validate(&self, model: &ChannelModel, budget: &PowerBudget) -> Result<()> {
        let fail = |what: String| Err(Error::Internal(format!("plan check failed: {what}")));
        if self.phases.is_empty() || self.phases.len() > 2 {
            return fail(format!("{} phases", self.phases.len()));
        }
        let total = self.total_duration();
        if (total - 1.0).abs() > 1e-12 {
            return fail(format!("durations sum to {total}"));
        }
        let pr = self.average_relay_power();
        if (pr - budget.relay_avg()).abs() > 1e-9 * budget.relay_avg().max(1.0) {
            return fail(format!("average relay power {pr} vs {}", budget.relay_avg()));
        }
        let ps = self.average_source_power();
        if (ps - budget.source_avg()).abs() > 1e-9 * budget.source_avg().max(1.0) {
            return fail(format!("average source power {ps} vs {}", budget.source_avg()));
        }
        for ph in &self.phases {
            if ph.relay_power > budget.relay_peak() + RELAY_CLAMP {
                return fail(format!("relay power {} above peak", ph.relay_power));
            }
            if ph.mode != DuplexMode::from_powers(ph.source_power, ph.relay_power) {
                return fail(format!("mode {} inconsistent with powers", ph.mode));
            }
        }
        let (r1, r2) = self.hop_rates(model);
        if (r1.min(r2) - self.rate).abs() > 1e-9 {
            return fail(format!("rate {} but min(R1, R2) = {}", self.rate, r1.min(r2)));
        }
        Ok(())
    }
}

/// The five budget thresholds on the normalized scale, with source-power
/// dBW mirrors (`None` when the threshold is not positive or not finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// water level reaches the relay peak at `𝒫̄ = pmax − p̄`
    pub p0: f64,
    /// upper end of the 0 / peak alternation
    pub p1: f64,
    /// first hop no longer limiting
    pub p2: f64,
    /// lower-region limit of the pure half-duplex plan
    pub p3: f64,
    /// lower-region limit of the edge-crossing plan
    pub p4: f64,
    pub dbw: [Option<f64>; 5],
}

impl Thresholds {
    pub fn values(&self) -> [f64; 5] {
        [self.p0, self.p1, self.p2, self.p3, self.p4]
    }
}

#[derive(Debug, Clone, Copy)]
struct Link {
    pc: f64,
    pb: f64,
    pm: f64,
    beta0: f64,
    v: f64,
}

impl Link {
    fn new(model: &ChannelModel, budget: &PowerBudget) -> Self {
        Link {
            pc: normalize_budget(model, budget).pbar_cal,
            pb: budget.relay_avg(),
            pm: budget.relay_peak(),
            beta0: model.beta0(),
            v: model.v(),
        }
    }

    fn top(&self) -> f64 {
        self.pc + self.pb
    }
}

fn tail_threshold(pb: f64, beta0: f64, v: f64) -> Result<f64> {
    if pb == 0.0 {
        return Ok(0.0);
    }
    let h = |x: f64| pb * (v * (x + pb)).ln_1p() - x * ((x + pb) * beta0).ln_1p();
    let mut hi = pb.max(1e-300);
    let mut doublings = 0;
    while h(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Internal(
                "no upper bracket for the lower-region threshold".into(),
            ));
        }
    }
    Ok(find_root(h, 0.0, hi, 0.0)?.root)
}

fn thresholds_of(l: &Link) -> Result<Thresholds> {
    let Link { pb, pm, beta0, v, .. } = *l;
    let p0 = pm - pb;
    let k_log = (pm * beta0).ln_1p() + (pm * v).ln_1p();
    let p1 = ((pb / pm) * k_log).exp() / beta0 - (1.0 + pb * beta0) / beta0;
    let p2 = pb * v * (1.0 + pb * beta0) / beta0;
    let p3 = if pb >= pm {
        f64::INFINITY
    } else {
        let expo = pb / (pm - pb) * (pm * v).ln_1p();
        (pm - pb) / (pm * beta0) * expo.exp_m1()
    };
    let p4 = tail_threshold(pb, beta0, v)?;
    Ok(Thresholds {
        p0,
        p1,
        p2,
        p3,
        p4,
        dbw: [None; 5],
    })
}

/// The five thresholds for a channel and relay budget (the source average
/// in `budget` is ignored).
pub fn thresholds(model: &ChannelModel, budget: &PowerBudget) -> Result<Thresholds> {
    let mut t = thresholds_of(&Link::new(model, budget))?;
    let scale = model.watts_per_normalized();
    let vals = t.values();
    for (slot, x) in t.dbw.iter_mut().zip(vals) {
        *slot = if x > 0.0 && x.is_finite() {
            watts_to_db(x * scale).ok()
        } else {
            None
        };
    }
    Ok(t)
}

/// Source power `(β/|h1|²)[ω − p]⁺` in watts, capped at `peak` when given.
pub fn source_power_profile(omega: f64, relay_power: f64, model: &ChannelModel, peak: Option<f64>) -> f64 {
    let p = model.watts_per_normalized() * (omega - relay_power).max(0.0);
    match peak {
        Some(cap) => p.min(cap),
        None => p,
    }
}

fn root_or_nearest_end<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64) -> Result<f64> {
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::NonFinite {
            x: if g_lo.is_nan() { lo } else { hi },
        });
    }
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 || lo == hi {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        // only reachable through rounding right at a threshold
        return Ok(if g_lo.abs() <= g_hi.abs() { lo } else { hi });
    }
    Ok(find_root(g, lo, hi, 0.0)?.root)
}

/// Lower relay level of the balanced plan whose upper level is the peak,
/// used when the second hop is stronger than the self-interference.
fn peak_pair_low_level(l: &Link) -> Result<f64> {
    let Link { pb, pm, beta0, v, .. } = *l;
    let k_log = (pm * beta0).ln_1p() + (pm * v).ln_1p();
    let target = (beta0 * l.top()).ln_1p() - k_log;
    let g = |p1: f64| {
        let w1 = (pm - pb) / (pm - p1);
        w1 * ((p1 * beta0).ln_1p() + (p1 * v).ln_1p() - k_log) - target
    };
    root_or_nearest_end(g, 0.0, pb)
}

/// Upper relay level of the balanced plan whose lower level is zero, used
/// when self-interference dominates the second hop.
fn zero_pair_high_level(l: &Link, upper: f64) -> Result<f64> {
    let Link { pb, beta0, v, .. } = *l;
    let target = (beta0 * l.top()).ln_1p();
    let g = |p2: f64| pb / p2 * ((p2 * beta0).ln_1p() + (p2 * v).ln_1p()) - target;
    root_or_nearest_end(g, pb, upper.max(pb))
}

/// Phases as `(duration, normalized source power, relay power)`.
type RawPhases = Vec<(f64, f64, f64)>;

struct Raw {
    regime: Regime,
    phases: RawPhases,
    rate: f64,
    omega: f64,
}

fn solve_high(l: &Link, t: &Thresholds) -> Result<Raw> {
    let Link { pc, pb, pm, beta0, v } = *l;
    let w = l.top();
    if pc >= t.p2 {
        return Ok(Raw {
            regime: Regime::HighTop,
            phases: vec![(1.0, pc, pb)],
            rate: (pb * v).ln_1p(),
            omega: w,
        });
    }
    if pc <= t.p1 {
        let tx = pb / pm;
        return Ok(Raw {
            regime: Regime::HighLow,
            phases: vec![(tx, (w - pm).max(0.0), pm), (1.0 - tx, w, 0.0)],
            rate: (beta0 * w).ln_1p() - tx * (beta0 * pm).ln_1p(),
            omega: w,
        });
    }
    if v >= beta0 {
        let p1 = peak_pair_low_level(l)?;
        let t_peak = (pb - p1) / (pm - p1);
        let t_low = (pm - pb) / (pm - p1);
        Ok(Raw {
            regime: Regime::HighMid,
            phases: vec![(t_peak, (w - pm).max(0.0), pm), (t_low, w - p1, p1)],
            rate: (beta0 * w).ln_1p() - t_low * (p1 * beta0).ln_1p() - t_peak * (pm * beta0).ln_1p(),
            omega: w,
        })
    } else {
        let p2 = zero_pair_high_level(l, pm)?;
        Ok(two_level_plan(l, p2, Regime::HighMid))
    }
}

fn two_level_plan(l: &Link, p2: f64, regime: Regime) -> Raw {
    let w = l.top();
    let t = l.pb / p2;
    Raw {
        regime,
        phases: vec![(t, (w - p2).max(0.0), p2), (1.0 - t, w, 0.0)],
        rate: (l.beta0 * w).ln_1p() - t * (l.beta0 * p2).ln_1p(),
        omega: w,
    }
}

/// Maximizes the first-hop rate along `Q1 = 0` between its crossings of
/// the region boundary.
pub fn best_point_on_balance_curve(ctx: &OmegaCtx) -> Result<(OmegaPoint, f64)> {
    let b = geometry::point_b(ctx)?
        .ok_or_else(|| Error::Internal(format!("balance curve misses the upper edge: {ctx:?}")))?;
    let v3 = ctx.region.v3;
    let end = if geometry::q1(v3, ctx)? < 0.0 {
        geometry::point_a(ctx)?
            .ok_or_else(|| Error::Internal(format!("balance curve misses the lower edge: {ctx:?}")))?
            .omega
    } else {
        ctx.region.omega_max()
    };
    let (lo, hi) = if b.omega <= end { (b.omega, end) } else { (end, b.omega) };
    let on_curve = |w: f64| -> Option<OmegaPoint> {
        let f = geometry::q1_slice_root(ctx, w).ok()??;
        Some(OmegaPoint::new(w, f))
    };
    let objective = |w: f64| match on_curve(w) {
        Some(pt) => geometry::r1_min(pt, ctx).unwrap_or(-1.0),
        None => -1.0,
    };
    let (w_star, _) = maximize_scalar(objective, lo, hi, MAXIMIZE_TOL)?;
    let pt = on_curve(w_star).ok_or_else(|| Error::Internal(format!("no balance point at omega = {w_star}")))?;
    let rate = geometry::r1_min(pt, ctx)?;
    Ok((pt, rate))
}

fn solve_low(l: &Link, t: &Thresholds) -> Result<Raw> {
    let Link { pc, pb, pm, beta0, v } = *l;
    let w = l.top();
    if pc >= t.p2 {
        return Ok(Raw {
            regime: Regime::LowB,
            phases: vec![(1.0, pc, pb)],
            rate: (pb * v).ln_1p(),
            omega: w,
        });
    }
    if pc <= t.p3 {
        let tx = pb / pm;
        let rx_level = pm * pc / (pm - pb);
        return Ok(Raw {
            regime: Regime::LowA,
            phases: vec![(tx, 0.0, pm), (1.0 - tx, rx_level, 0.0)],
            rate: (1.0 - tx) * (pm * pc * beta0 / (pm - pb)).ln_1p(),
            omega: rx_level,
        });
    }
    let ctx = OmegaCtx::new(pc, pb, pm, beta0, v)?;
    if v >= beta0 {
        let (pt, rate) = best_point_on_balance_curve(&ctx)?;
        let (f, om) = (pt.f, pt.omega);
        let low_relay = (om - pc / f).max(0.0);
        let mut phases = Vec::with_capacity(2);
        if f < 1.0 {
            phases.push((1.0 - f, 0.0, ((w - f * om) / (1.0 - f)).max(0.0)));
        }
        phases.push((f, pc / f, low_relay));
        return Ok(Raw {
            regime: Regime::LowBalanced,
            phases,
            rate,
            omega: om,
        });
    }
    if pc > t.p4 {
        let p2 = zero_pair_high_level(l, pm.min(w))?;
        return Ok(two_level_plan(l, p2, Regime::LowTwoLevel));
    }
    let a = geometry::point_a(&ctx)?.ok_or_else(|| Error::Internal(format!("no lower-edge crossing for {l:?}")))?;
    let fa = a.f;
    Ok(Raw {
        regime: Regime::LowEdge,
        phases: vec![(1.0 - fa, 0.0, pb / (1.0 - fa)), (fa, pc / fa, 0.0)],
        rate: fa * (beta0 * a.omega).ln_1p(),
        omega: a.omega,
    })
}

/// Optimal plan for a budget.
pub fn solve(model: &ChannelModel, budget: &PowerBudget) -> Result<AllocationPlan> {
    let l = Link::new(model, budget);
    let t = thresholds_of(&l)?;
    let raw = if l.pc >= t.p0 {
        solve_high(&l, &t)?
    } else {
        solve_low(&l, &t)?
    };

    let scale = model.watts_per_normalized();
    let mut warnings = Vec::new();
    let mut phases = Vec::with_capacity(raw.phases.len());
    for (duration, source_norm, relay) in raw.phases {
        if !(duration > DURATION_FLOOR) {
            continue;
        }
        let mut relay = relay;
        if relay > l.pm {
            if relay - l.pm <= RELAY_CLAMP * l.pm.max(1.0) {
                relay = l.pm;
            } else {
                warnings.push(format!("relay power {relay} W exceeds the peak {} W", l.pm));
            }
        }
        let source = source_norm.max(0.0) * scale;
        if let Some(cap) = budget.source_peak() {
            if source > cap {
                warnings.push(format!("source power {source} W exceeds the source peak {cap} W"));
            }
        }
        phases.push(Phase {
            duration,
            source_power: source,
            relay_power: relay,
            mode: DuplexMode::from_powers(source, relay),
        });
    }
    let total: f64 = phases.iter().map(|p| p.duration).sum();
    if phases.is_empty() || !total.is_finite() {
        return Err(Error::Internal(format!("empty plan for {l:?} in {}", raw.regime)));
    }
    Ok(AllocationPlan {
        phases,
        rate: raw.rate,
        regime: raw.regime,
        omega: raw.omega,
        warnings,
    })
}
