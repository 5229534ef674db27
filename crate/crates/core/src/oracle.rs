//! Brute-force checks for the allocator.
//!
//! Both oracles keep the source on the water-filling law and search over
//! the relay power distribution directly: [`lp_oracle`] solves an epigraph
//! LP on a power grid for each water level, [`two_atom_scan`] enumerates
//! every pair of grid levels. Neither uses the threshold classification.

use rayon::prelude::*;

use crate::allocator::{DuplexMode, Phase};
use crate::error::{Error, Result};
use crate::model::{normalize_budget, ChannelModel, PowerBudget};
use crate::numerics::{golden_section, linspace, maximize_scalar, solve_lp, LpProblem, MAXIMIZE_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// cells of the uniform relay power grid on `[0, pmax]`
    pub grid_points: usize,
    /// water levels tried before refinement
    pub omega_points: usize,
    /// overrides the water-level search range
    pub omega_range: Option<(f64, f64)>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_points: 400,
            omega_points: 200,
            omega_range: None,
        }
    }
}

impl OracleConfig {
    pub fn check(&self) -> Result<()> {
        if self.grid_points < 50 {
            return Err(Error::invalid(
                "grid_points",
                format!("need at least 50, got {}", self.grid_points),
            ));
        }
        if self.omega_points < 50 {
            return Err(Error::invalid(
                "omega_points",
                format!("need at least 50, got {}", self.omega_points),
            ));
        }
        if let Some((lo, hi)) = self.omega_range {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::invalid(
                    "omega_range",
                    format!("[{lo}, {hi}] is not a valid range"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// nats
    pub rate: f64,
    /// `(relay power, probability)` for every grid level
    pub weights: Vec<(f64, f64)>,
    /// normalized water level
    pub omega: f64,
}

impl OracleResult {
    /// Grid levels carrying more than `floor` probability.
    pub fn support(&self, floor: f64) -> Vec<(f64, f64)> {
        self.weights.iter().copied().filter(|&(_, w)| w > floor).collect()
    }
}

/// Multiples of `pmax/n` from 0 to `pmax`, plus `p̄` when it falls between
/// them. Doubling `n` gives a superset.
pub fn relay_grid(pbar: f64, pmax: f64, n: usize) -> Vec<f64> {
    let step = pmax / n as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
    grid.push(pmax);
    let k = grid.partition_point(|&p| p < pbar);
    if grid.get(k) != Some(&pbar) {
        grid.insert(k, pbar);
    }
    grid
}

struct Setup {
    pc: f64,
    pb: f64,
    pm: f64,
    beta0: f64,
    v: f64,
    grid: Vec<f64>,
}

impl Setup {
    fn new(model: &ChannelModel, budget: &PowerBudget, n: usize) -> Self {
        Setup {
            pc: normalize_budget(model, budget).pbar_cal,
            pb: budget.relay_avg(),
            pm: budget.relay_peak(),
            beta0: model.beta0(),
            v: model.v(),
            grid: relay_grid(budget.relay_avg(), budget.relay_peak(), n),
        }
    }

    fn first_hop(&self, omega: f64, p: f64) -> f64 {
        (self.beta0 * (omega - p).max(0.0) / (1.0 + self.beta0 * p)).ln_1p()
    }

    fn second_hop(&self, p: f64) -> f64 {
        (self.v * p).ln_1p()
    }

    /// Best max-min rate at a fixed water level; `None` if infeasible.
    fn lp_at(&self, omega: f64) -> Result<Option<(f64, Vec<f64>)>> {
        let n = self.grid.len();
        // variables: f_0..f_{n-1}, rate (free)
        let mut obj = vec![0.0; n + 1];
        obj[n] = 1.0;
        let mut lp = LpProblem::new(obj);
        lp.set_lower(n, None);
        let row = |coef: &dyn Fn(f64) -> f64, rate: f64| {
            let mut r: Vec<f64> = self.grid.iter().map(|&p| coef(p)).collect();
            r.push(rate);
            r
        };
        let r1 = row(&|p| self.first_hop(omega, p), -1.0);
        let r2 = row(&|p| self.second_hop(p), -1.0);
        let energy = row(&|p| (omega - p).max(0.0), 0.0);
        let mean = row(&|p| p, 0.0);
        let mass = row(&|_| 1.0, 0.0);
        lp.add_ge(r1, 0.0)?;
        lp.add_ge(r2, 0.0)?;
        lp.add_eq(energy, self.pc)?;
        lp.add_eq(mean, self.pb)?;
        lp.add_eq(mass, 1.0)?;
        match solve_lp(&lp) {
            Ok(sol) => Ok(Some((sol.value, sol.x[..n].to_vec()))),
            Err(Error::Infeasible(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn rate_at(&self, omega: f64) -> Result<f64> {
        Ok(self.lp_at(omega)?.map_or(-1.0, |(r, _)| r))
    }
}

/// Epigraph LP over a discretized relay power distribution, maximized
/// over the water level.
pub fn lp_oracle(model: &ChannelModel, budget: &PowerBudget, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.check()?;
    let s = Setup::new(model, budget, cfg.grid_points);
    let top = s.pc + s.pb;

    let omegas = match cfg.omega_range {
        Some((lo, hi)) => linspace(lo, hi, cfg.omega_points),
        None if top >= s.pm || s.pb >= s.pm => vec![top],
        None => {
            let lo = s.pc.max(s.pm * s.pc / (s.pm - s.pb)).min(top);
            linspace(lo, top, cfg.omega_points)
        }
    };
    let rates = omegas.par_iter().map(|&w| s.rate_at(w)).collect::<Result<Vec<f64>>>()?;

    // ties go to the larger water level
    let mut k = 0;
    for i in 1..rates.len() {
        if rates[i] >= rates[k] {
            k = i;
        }
    }
    if rates[k] < 0.0 {
        return Err(Error::Infeasible(format!(
            "no feasible water level in [{}, {}]",
            omegas[0],
            omegas[omegas.len() - 1]
        )));
    }
    let mut best = (omegas[k], rates[k]);
    if omegas.len() > 1 {
        let lo = omegas[k.saturating_sub(1)];
        let hi = omegas[(k + 1).min(omegas.len() - 1)];
        let mut err = None;
        let f = |w: f64| {
            s.rate_at(w).unwrap_or_else(|e| {
                err.get_or_insert(e);
                -1.0
            })
        };
        let (w, r) = golden_section(f, lo, hi, 1e-12 * top.max(f64::MIN_POSITIVE))?;
        if let Some(e) = err {
            return Err(e);
        }
        if r > best.1 {
            best = (w, r);
        }
    }
    let (rate, f) = s
        .lp_at(best.0)?
        .ok_or_else(|| Error::Internal(format!("water level {} became infeasible", best.0)))?;
    Ok(OracleResult {
        rate,
        weights: s.grid.iter().copied().zip(f).collect(),
        omega: best.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// nats
    pub rate: f64,
    /// normalized water level
    pub omega: f64,
    /// `(relay power, probability)`, one or two levels
    pub atoms: Vec<(f64, f64)>,
    /// the matching time-sharing schedule in watts
    pub phases: Vec<Phase>,
}

/// Exhaustive search over two-level relay distributions on the grid,
/// followed by a continuous search around the best pair.
pub fn two_atom_scan(model: &ChannelModel, budget: &PowerBudget, cfg: &OracleConfig) -> Result<ScanResult> {
    cfg.check()?;
    let s = Setup::new(model, budget, cfg.grid_points);
    let top = s.pc + s.pb;
    let lows: Vec<f64> = s.grid.iter().copied().filter(|&p| p <= s.pb).collect();
    let highs: Vec<f64> = s.grid.iter().copied().filter(|&p| p >= s.pb).collect();

    let eval = |lo: f64, hi: f64| -> (f64, f64, f64) {
        let w = if hi > lo { (hi - s.pb) / (hi - lo) } else { 1.0 };
        let omega = if w > 0.0 && s.pc < w * (hi - lo) {
            lo + s.pc / w
        } else {
            top
        };
        let r1 = w * s.first_hop(omega, lo) + (1.0 - w) * s.first_hop(omega, hi);
        let r2 = w * s.second_hop(lo) + (1.0 - w) * s.second_hop(hi);
        (r1.min(r2), omega, w)
    };
    let per_low: Vec<(f64, f64, f64, f64, f64)> = lows
        .par_iter()
        .map(|&lo| {
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0, lo, lo);
            for &hi in &highs {
                let (r, om, w) = eval(lo, hi);
                if r > best.0 {
                    best = (r, om, w, lo, hi);
                }
            }
            best
        })
        .collect();
    let mut best = per_low[0];
    for &b in &per_low[1..] {
        if b.0 > best.0 {
            best = b;
        }
    }
    let (mut rate, mut omega, mut w, mut lo, mut hi) = best;

    // nested continuous refinement, near the best pair and over the whole low range
    let h = s.pm / cfg.grid_points as f64;
    let best_hi = |a: f64| maximize_scalar(|b| eval(a, b).0, s.pb, s.pm, MAXIMIZE_TOL).map(|(b, _)| b);
    let outer = |a: f64| best_hi(a).map(|b| eval(a, b).0).unwrap_or(f64::MIN);
    for (from, to) in [((lo - h).max(0.0), (lo + h).min(s.pb)), (0.0, s.pb)] {
        let (lo_ref, _) = maximize_scalar(outer, from, to, MAXIMIZE_TOL)?;
        let hi_ref = best_hi(lo_ref)?;
        let (r, om, wt) = eval(lo_ref, hi_ref);
        if r > rate {
            (rate, omega, w, lo, hi) = (r, om, wt, lo_ref, hi_ref);
        }
    }

    let scale = model.watts_per_normalized();
    let mut atoms = Vec::new();
    let mut phases = Vec::new();
    for (p, t) in [(hi, 1.0 - w), (lo, w)] {
        if t > 0.0 && !(atoms.len() == 1 && p == lo && lo == hi) {
            atoms.push((p, t));
            let source = scale * (omega - p).max(0.0);
            phases.push(Phase {
                duration: t,
                source_power: source,
                relay_power: p,
                mode: DuplexMode::from_powers(source, p),
            });
        }
    }
    Ok(ScanResult {
        rate,
        omega,
        atoms,
        phases,
    })
}

/// Minimum of `E[log(1+γ1·p)]` over distributions on `grid` with mean `m`
/// and `E[log(1+γ1·p) + log(1+γ2·p)] = c`.
pub fn moment_lp_minimum(gamma1: f64, gamma2: f64, m: f64, c: f64, grid: &[f64]) -> Result<f64> {
    let phi = |p: f64| (gamma1 * p).ln_1p();
    let psi = |p: f64| (gamma1 * p).ln_1p() + (gamma2 * p).ln_1p();
    let mut lp = LpProblem::new(grid.iter().map(|&p| -phi(p)).collect());
    lp.add_eq(grid.iter().map(|&p| psi(p)).collect(), c)?;
    lp.add_eq(grid.to_vec(), m)?;
    lp.add_eq(vec![1.0; grid.len()], 1.0)?;
    Ok(-solve_lp(&lp)?.value)
}
