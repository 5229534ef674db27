//! Reference schemes for comparison sweeps: an interference-free relay, a
//! full-duplex relay whose source tracks the instantaneous relay power, a
//! pure half-duplex relay, and a hybrid of the last two.

use std::fmt;

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{ChannelModel, PowerBudget};
use crate::numerics::{find_root, geomspace, golden_section, integrate, linspace, QUAD_REL_TOL};

/// Gaussian samples beyond this many standard deviations are ignored.
const GAUSS_SPAN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    FdIdeal,
    FdIp,
    Hd,
    FdHd,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::FdIdeal => "FD-Ideal",
            Scheme::FdIp => "FD-IP",
            Scheme::Hd => "HD",
            Scheme::FdHd => "FD-HD",
        }
    }

    pub fn all() -> [Scheme; 4] {
        [Scheme::FdIdeal, Scheme::FdIp, Scheme::Hd, Scheme::FdHd]
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hybrid schedule: source alone for `t_a`, relay alone for `t_b`, both for
/// `t_c`. Powers in watts; a power is 0 when its phase is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSchedule {
    pub t_a: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub source_a: f64,
    pub source_c: f64,
    pub relay_b: f64,
    pub relay_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineDetail {
    None,
    /// fraction of time the relay transmits
    Hd {
        relay_time: f64,
    },
    FdHd(HybridSchedule),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineResult {
    pub scheme: Scheme,
    /// nats per channel use
    pub rate: f64,
    pub detail: BaselineDetail,
}

/// `t·log(1 + k·e/t)`, extended by 0 at `t = 0`.
fn spread(k: f64, energy: f64, t: f64) -> f64 {
    if t > 0.0 {
        t * (k * energy / t).ln_1p()
    } else {
        0.0
    }
}

/// First-hop rate with source power `source` (W) against a relay whose
/// signal is zero-mean Gaussian with power `relay` (W).
pub fn gaussian_interference_rate(model: &ChannelModel, source: f64, relay: f64) -> Result<f64> {
    let snr = source * model.first_hop_snr_per_watt();
    let k = model.beta0() * relay;
    if snr == 0.0 {
        return Ok(0.0);
    }
    if k == 0.0 {
        return Ok(snr.ln_1p());
    }
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let g = |z: f64| (-0.5 * z * z).exp() / norm * (snr / (1.0 + k * z * z)).ln_1p();
    Ok(2.0 * integrate(g, 0.0, GAUSS_SPAN, QUAD_REL_TOL)?)
}

pub fn fd_ideal(model: &ChannelModel, budget: &PowerBudget) -> BaselineResult {
    let first = (budget.source_avg() * model.first_hop_snr_per_watt()).ln_1p();
    let second = (budget.relay_avg() * model.v()).ln_1p();
    BaselineResult {
        scheme: Scheme::FdIdeal,
        rate: first.min(second),
        detail: BaselineDetail::None,
    }
}

pub fn fd_ip(model: &ChannelModel, budget: &PowerBudget) -> Result<BaselineResult> {
    let second = (budget.relay_avg() * model.v()).ln_1p();
    let first = gaussian_interference_rate(model, budget.source_avg(), budget.relay_avg())?;
    Ok(BaselineResult {
        scheme: Scheme::FdIp,
        rate: first.min(second),
        detail: BaselineDetail::None,
    })
}

/// Half duplex with the relay active for a fraction `t ≥ p̄/pmax` of the
/// frame. The first-hop term falls and the second-hop term rises with `t`,
/// so the optimum is their crossing or the lower end of the range.
pub fn hd(model: &ChannelModel, budget: &PowerBudget) -> Result<BaselineResult> {
    let snr = model.first_hop_snr_per_watt();
    let (src, pb, v) = (budget.source_avg(), budget.relay_avg(), model.v());
    let first = |t: f64| spread(snr, src, 1.0 - t);
    let second = |t: f64| spread(v, pb, t);
    let t_min = pb / budget.relay_peak();
    let t = if pb == 0.0 || src == 0.0 || first(t_min) <= second(t_min) {
        t_min
    } else {
        find_root(|t| first(t) - second(t), t_min, 1.0, 0.0)?.root
    };
    Ok(BaselineResult {
        scheme: Scheme::Hd,
        rate: first(t).min(second(t)),
        detail: BaselineDetail::Hd { relay_time: t },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridOptions {
    /// points per grid axis
    pub grid_points: usize,
    /// best grid cells refined by coordinate search
    pub refine_starts: usize,
    /// stop refining when a sweep improves the rate by less than this
    pub rel_tol: f64,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            grid_points: 17,
            refine_starts: 4,
            rel_tol: 1e-6,
        }
    }
}

/// Log-spaced fractions start here.
const FRACTION_FLOOR_LOG10: f64 = -3.0;

struct Hybrid<'a> {
    model: &'a ChannelModel,
    src: f64,
    pb: f64,
    pm: f64,
}

impl Hybrid<'_> {
    /// Rate and schedule for a full-duplex share `t_c`, relay level fraction
    /// `u` of `min(pmax, p̄/t_c)`, and source energy fraction `s`. The
    /// source-only time is set to balance the hops.
    fn evaluate(&self, t_c: f64, u: f64, s: f64) -> Result<Option<(f64, HybridSchedule)>> {
        let snr = self.model.first_hop_snr_per_watt();
        let v = self.model.v();
        let (relay_c, mut source_c) = if t_c > 0.0 {
            (u * self.pm.min(self.pb / t_c), s * self.src / t_c)
        } else {
            (0.0, 0.0)
        };
        let fd_second = t_c * (v * relay_c).ln_1p();
        let relay_left = (self.pb - t_c * relay_c).max(0.0);
        let mut source_left = (self.src - t_c * source_c).max(0.0);
        let ta_max = 1.0 - t_c - relay_left / self.pm;
        if ta_max < -1e-12 {
            return Ok(None);
        }
        let ta_max = ta_max.max(0.0);
        let mut fd_first = t_c * gaussian_interference_rate(self.model, source_c, relay_c)?;

        let r1 = |fd: f64, e: f64, ta: f64| fd + spread(snr, e, ta);
        let r2 = |ta: f64| fd_second + spread(v, relay_left, 1.0 - t_c - ta);
        let t_a = if r1(fd_first, source_left, ta_max) <= r2(ta_max) {
            ta_max
        } else if r1(fd_first, source_left, 0.0) >= r2(0.0) {
            0.0
        } else {
            let (fd, e) = (fd_first, source_left);
            find_root(|ta| r1(fd, e, ta) - r2(ta), 0.0, ta_max, 0.0)?.root
        };
        if t_a == 0.0 && source_left > 0.0 {
            if t_c == 0.0 {
                // no source phase at all: only a silent relay link remains
                return Ok(None);
            }
            // the source energy would be stranded; spend it in the shared phase
            source_c = self.src / t_c;
            source_left = 0.0;
            fd_first = t_c * gaussian_interference_rate(self.model, source_c, relay_c)?;
        }
        let t_b = (1.0 - t_c - t_a).max(0.0);
        let rate = r1(fd_first, source_left, t_a).min(r2(t_a));
        let sched = HybridSchedule {
            t_a,
            t_b,
            t_c,
            source_a: if t_a > 0.0 { source_left / t_a } else { 0.0 },
            source_c,
            // t_b >= relay_left/pmax holds exactly; the ratio only drifts by rounding
            relay_b: if t_b > 0.0 {
                (relay_left / t_b).min(self.pm)
            } else {
                0.0
            },
            relay_c,
        };
        Ok(Some((rate, sched)))
    }

    fn at(&self, x: [f64; 3]) -> Result<Option<(f64, HybridSchedule)>> {
        self.evaluate(x[0], 10f64.powf(x[1]).min(1.0), 10f64.powf(x[2]).min(1.0))
    }
}

pub fn fd_hd(model: &ChannelModel, budget: &PowerBudget) -> Result<BaselineResult> {
    fd_hd_with(model, budget, &HybridOptions::default())
}

/// Grid search over `(t_c, u, s)` followed by coordinate-wise golden
/// section from the best cells. Only grid-level optimality is certified.
pub fn fd_hd_with(model: &ChannelModel, budget: &PowerBudget, opts: &HybridOptions) -> Result<BaselineResult> {
    let h = Hybrid {
        model,
        src: budget.source_avg(),
        pb: budget.relay_avg(),
        pm: budget.relay_peak(),
    };
    let n = opts.grid_points.max(2);
    if h.pb == 0.0 || h.src == 0.0 {
        let sched = HybridSchedule {
            t_a: 1.0 - h.pb / h.pm,
            t_b: h.pb / h.pm,
            t_c: 0.0,
            source_a: h.src / (1.0 - h.pb / h.pm),
            source_c: 0.0,
            relay_b: if h.pb > 0.0 { h.pm } else { 0.0 },
            relay_c: 0.0,
        };
        return Ok(BaselineResult {
            scheme: Scheme::FdHd,
            rate: 0.0,
            detail: BaselineDetail::FdHd(sched),
        });
    }

    let tcs = linspace(0.0, 1.0, n);
    let logs: Vec<f64> = geomspace(10f64.powf(FRACTION_FLOOR_LOG10), 1.0, n)
        .into_iter()
        .map(|x| x.log10())
        .collect();
    let mut cells = Vec::with_capacity(n * n * n);
    for &tc in &tcs {
        for &lu in &logs {
            for &ls in &logs {
                cells.push([tc, lu, ls]);
            }
        }
    }
    let values = cells
        .par_iter()
        .map(|&x| Ok(h.at(x)?.map(|(r, _)| r)))
        .collect::<Result<Vec<Option<f64>>>>()?;

    let mut ranked: Vec<usize> = (0..cells.len()).filter(|&i| values[i].is_some()).collect();
    // stable sort keeps grid order among ties
    ranked.sort_by(|&a, &b| values[b].unwrap().total_cmp(&values[a].unwrap()));
    ranked.truncate(opts.refine_starts.max(1));

    let steps = [
        1.0 / (n - 1) as f64,
        -FRACTION_FLOOR_LOG10 / (n - 1) as f64,
        -FRACTION_FLOOR_LOG10 / (n - 1) as f64,
    ];
    let bounds = [(0.0, 1.0), (FRACTION_FLOOR_LOG10, 0.0), (FRACTION_FLOOR_LOG10, 0.0)];
    let refined = ranked
        .par_iter()
        .map(|&i| refine(&h, cells[i], values[i].unwrap(), &steps, &bounds, opts.rel_tol))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(f64, [f64; 3])> = None;
    for (rate, x) in refined {
        if best.is_none_or(|(r, _)| rate > r) {
            best = Some((rate, x));
        }
    }
    let (_, x) = best.expect("the pure half-duplex corner is always feasible");
    let (rate, sched) = h.at(x)?.expect("refined point is feasible");
    Ok(BaselineResult {
        scheme: Scheme::FdHd,
        rate,
        detail: BaselineDetail::FdHd(sched),
    })
}

fn refine(
    h: &Hybrid,
    mut x: [f64; 3],
    mut rate: f64,
    steps: &[f64; 3],
    bounds: &[(f64, f64); 3],
    rel_tol: f64,
) -> Result<(f64, [f64; 3])> {
    for _ in 0..100 {
        let before = rate;
        for k in 0..3 {
            let lo = (x[k] - steps[k]).max(bounds[k].0);
            let hi = (x[k] + steps[k]).min(bounds[k].1);
            let mut err = None;
            let f = |y: f64| {
                let mut z = x;
                z[k] = y;
                match h.at(z) {
                    Ok(Some((r, _))) => r,
                    Ok(None) => -1.0,
                    Err(e) => {
                        err.get_or_insert(e);
                        -1.0
                    }
                }
            };
            let (y, r) = golden_section(f, lo, hi, 1e-9 * (hi - lo).max(1e-300))?;
            if let Some(e) = err {
                return Err(e);
            }
            if r > rate {
                rate = r;
                x[k] = y;
            }
        }
        if rate - before <= rel_tol * rate.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((rate, x))
}

/// Every scheme at one budget, in the order of [`Scheme::all`].
pub fn all_schemes(model: &ChannelModel, budget: &PowerBudget) -> Result<Vec<BaselineResult>> {
    Ok(vec![
        fd_ideal(model, budget),
        fd_ip(model, budget)?,
        hd(model, budget)?,
        fd_hd(model, budget)?,
    ])
}
