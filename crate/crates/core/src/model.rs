//! Physical parameters of the two-hop link and the normalized quantities
//! every rate expression is written in.
//!
//! Powers are in watts, gains are linear. The solver works on the relay
//! power scale: the source budget is mapped onto it through `|h1|²/β`, and
//! the two link qualities enter only through `v = |h2|²/N0` and
//! `β0 = β/N0`.

use crate::error::{Error, Result};

/// Propagation speed used by the free-space path-loss model, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Default receiver noise power, dBW.
pub const DEFAULT_NOISE_DBW: f64 = -151.0;

pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn watts_to_db(watts: f64) -> Result<f64> {
    if !(watts > 0.0) || !watts.is_finite() {
        return Err(Error::Domain {
            what: "watts_to_db",
            value: watts,
        });
    }
    Ok(10.0 * watts.log10())
}

fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
    }
}

/// Channel gains, noise power and self-interference attenuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    h1_gain: f64,
    h2_gain: f64,
    noise_power: f64,
    si_factor: f64,
}

impl ChannelModel {
    pub fn new(h1_gain: f64, h2_gain: f64, noise_power: f64, si_factor: f64) -> Result<Self> {
        require_positive("h1_gain", h1_gain)?;
        require_positive("h2_gain", h2_gain)?;
        require_positive("noise_power", noise_power)?;
        require_positive("si_factor", si_factor)?;
        Ok(Self {
            h1_gain,
            h2_gain,
            noise_power,
            si_factor,
        })
    }

    pub fn h1_gain(&self) -> f64 {
        self.h1_gain
    }

    pub fn h2_gain(&self) -> f64 {
        self.h2_gain
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn si_factor(&self) -> f64 {
        self.si_factor
    }

    /// Second-hop gain-to-noise ratio `|h2|²/N0`.
    pub fn v(&self) -> f64 {
        self.h2_gain / self.noise_power
    }

    /// Self-interference-to-noise ratio `β/N0`.
    pub fn beta0(&self) -> f64 {
        self.si_factor / self.noise_power
    }

    /// First-hop gain-to-noise ratio `|h1|²/N0`.
    pub fn first_hop_snr_per_watt(&self) -> f64 {
        self.h1_gain / self.noise_power
    }

    /// `|h1|²/β`: multiply source watts by this to get the normalized scale.
    pub fn src_scale(&self) -> f64 {
        self.h1_gain / self.si_factor
    }

    /// `β/|h1|²`: multiply normalized source power by this to get watts.
    pub fn watts_per_normalized(&self) -> f64 {
        self.si_factor / self.h1_gain
    }
}

/// Builds a symmetric channel from the free-space path-loss law
/// `|h|² = (c / 4πf)² d^-α`.
pub fn channel_from_pathloss(
    distance: f64,
    carrier_freq: f64,
    pathloss_exp: f64,
    noise_power: f64,
    si_factor_db: f64,
) -> Result<ChannelModel> {
    require_positive("distance", distance)?;
    require_positive("carrier_freq", carrier_freq)?;
    require_positive("noise_power", noise_power)?;
    if !(pathloss_exp >= 1.0) || !pathloss_exp.is_finite() {
        return Err(Error::invalid(
            "pathloss_exp",
            format!("must be at least 1, got {pathloss_exp}"),
        ));
    }
    if !si_factor_db.is_finite() {
        return Err(Error::invalid("si_factor_db", "must be finite"));
    }
    let wavelength_term = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * carrier_freq);
    let gain = wavelength_term * wavelength_term * distance.powf(-pathloss_exp);
    ChannelModel::new(gain, gain, noise_power, db_to_watts(si_factor_db))
}

/// Average and peak power targets at the relay (`p̄`, `pmax`) and source
/// (`P̄`, optional `Pmax`), all in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    relay_avg: f64,
    relay_peak: f64,
    source_avg: f64,
    source_peak: Option<f64>,
}

impl PowerBudget {
    pub fn new(relay_avg: f64, relay_peak: f64, source_avg: f64) -> Result<Self> {
        require_positive("p_max", relay_peak)?;
        if !(relay_avg >= 0.0) || relay_avg > relay_peak {
            return Err(Error::invalid(
                "p_bar",
                format!("must lie in [0, p_max = {relay_peak}], got {relay_avg}"),
            ));
        }
        if !(source_avg >= 0.0) || !source_avg.is_finite() {
            return Err(Error::invalid(
                "P_bar",
                format!("must be non-negative and finite, got {source_avg}"),
            ));
        }
        Ok(Self {
            relay_avg,
            relay_peak,
            source_avg,
            source_peak: None,
        })
    }

    pub fn with_source_peak(mut self, peak: f64) -> Result<Self> {
        require_positive("P_max", peak)?;
        self.source_peak = Some(peak);
        Ok(self)
    }

    /// Same relay constraints, different source average.
    pub fn with_source_avg(self, source_avg: f64) -> Result<Self> {
        let mut b = Self::new(self.relay_avg, self.relay_peak, source_avg)?;
        b.source_peak = self.source_peak;
        Ok(b)
    }

    pub fn relay_avg(&self) -> f64 {
        self.relay_avg
    }

    pub fn relay_peak(&self) -> f64 {
        self.relay_peak
    }

    pub fn source_avg(&self) -> f64 {
        self.source_avg
    }

    pub fn source_peak(&self) -> Option<f64> {
        self.source_peak
    }
}

/// Source budget expressed on the relay power scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedBudget {
    /// `𝒫̄ = P̄·|h1|²/β`
    pub pbar_cal: f64,
    /// `𝒫max = Pmax·|h1|²/β`, when a source peak is set.
    pub pcmax_cal: Option<f64>,
}

pub fn normalize_budget(model: &ChannelModel, budget: &PowerBudget) -> NormalizedBudget {
    let scale = model.src_scale();
    NormalizedBudget {
        pbar_cal: budget.source_avg() * scale,
        pcmax_cal: budget.source_peak().map(|p| p * scale),
    }
}
