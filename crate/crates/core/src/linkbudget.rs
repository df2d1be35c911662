//! Deterministic link budget for the direct (gNB -> UE) and relayed
//! (gNB -> NCR -> UE) downlink.
//!
//! Everything here is linear scale: powers in mW, gains and SNRs as plain
//! ratios. Path loss follows a single-slope power law anchored at 1 m.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::units::{db_to_linear, dbm_to_mw};

/// Default reference path loss at 1 m: free space at 28 GHz.
pub const DEFAULT_REF_PATHLOSS_DB: f64 = 61.4;
pub const DEFAULT_THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
pub const DEFAULT_NF_UE_DB: f64 = 10.0;
pub const DEFAULT_NF_NCR_DB: f64 = 7.0;
pub const DEFAULT_UE_N_RX: u32 = 4;
/// Maximum NCR amplification gain, 90 dB.
pub const DEFAULT_NCR_MAX_GAIN_DB: f64 = 90.0;
pub const BACKHAUL_PATHLOSS_EXPONENT: f64 = 2.0;
pub const ACCESS_PATHLOSS_EXPONENT: f64 = 3.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub pathloss_exponent: f64,
    pub ref_pathloss_db: f64,
}

impl LinkGeometry {
    pub fn new(distance_m: f64, pathloss_exponent: f64, ref_pathloss_db: f64) -> Self {
        Self {
            distance_m,
            pathloss_exponent,
            ref_pathloss_db,
        }
    }

    pub fn access(distance_m: f64) -> Self {
        Self::new(distance_m, ACCESS_PATHLOSS_EXPONENT, DEFAULT_REF_PATHLOSS_DB)
    }

    pub fn backhaul(distance_m: f64) -> Self {
        Self::new(distance_m, BACKHAUL_PATHLOSS_EXPONENT, DEFAULT_REF_PATHLOSS_DB)
    }

    /// Same exponent and intercept, different distance.
    pub fn at(&self, distance_m: f64) -> Self {
        Self {
            distance_m,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) || !self.distance_m.is_finite() {
            return domain(format!("distance must be > 0 m, got {}", self.distance_m));
        }
        if !(self.pathloss_exponent > 0.0) || !self.pathloss_exponent.is_finite() {
            return domain(format!(
                "path-loss exponent must be > 0, got {}",
                self.pathloss_exponent
            ));
        }
        if !self.ref_pathloss_db.is_finite() {
            return domain("reference path loss must be finite");
        }
        Ok(())
    }

    pub fn path_loss_db(&self) -> f64 {
        self.ref_pathloss_db + 10.0 * self.pathloss_exponent * self.distance_m.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub noise_figure_linear: f64,
    pub thermal_noise_density_mw_per_hz: f64,
}

impl NoiseModel {
    pub fn from_db(noise_figure_db: f64, thermal_noise_dbm_per_hz: f64) -> Self {
        Self {
            noise_figure_linear: db_to_linear(noise_figure_db),
            thermal_noise_density_mw_per_hz: dbm_to_mw(thermal_noise_dbm_per_hz),
        }
    }

    pub fn ue_default() -> Self {
        Self::from_db(DEFAULT_NF_UE_DB, DEFAULT_THERMAL_NOISE_DBM_PER_HZ)
    }

    pub fn ncr_default() -> Self {
        Self::from_db(DEFAULT_NF_NCR_DB, DEFAULT_THERMAL_NOISE_DBM_PER_HZ)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_figure_linear >= 1.0) || !self.noise_figure_linear.is_finite() {
            return domain(format!(
                "noise figure must be >= 1 (0 dB), got {}",
                self.noise_figure_linear
            ));
        }
        if !(self.thermal_noise_density_mw_per_hz > 0.0) {
            return domain("thermal noise density must be > 0");
        }
        Ok(())
    }

    /// `NF · N0 · BW` in mW.
    #[inline]
    pub fn noise_power_mw(&self, bandwidth_hz: f64) -> f64 {
        self.noise_figure_linear * self.thermal_noise_density_mw_per_hz * bandwidth_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnbConfig {
    pub n_tx: u32,
    pub paout_mw: f64,
    pub bandwidth_hz: f64,
}

impl GnbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return domain("gNB must have at least one active transmit element");
        }
        if !(self.paout_mw >= 0.0) || !self.paout_mw.is_finite() {
            return domain(format!("gNB PA output must be >= 0 mW, got {}", self.paout_mw));
        }
        validate_bandwidth(self.bandwidth_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcrConfig {
    pub n_tx: u32,
    pub n_rx: u32,
    pub paout_max_mw: f64,
    pub max_gain_linear: f64,
}

impl NcrConfig {
    pub fn new(n_tx: u32, n_rx: u32, paout_max_mw: f64) -> Self {
        Self {
            n_tx,
            n_rx,
            paout_max_mw,
            max_gain_linear: db_to_linear(DEFAULT_NCR_MAX_GAIN_DB),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return domain("NCR antenna counts must be >= 1");
        }
        if !(self.paout_max_mw >= 0.0) || !self.paout_max_mw.is_finite() {
            return domain(format!(
                "NCR maximum PA output must be >= 0 mW, got {}",
                self.paout_max_mw
            ));
        }
        if !(self.max_gain_linear > 0.0) {
            return domain("NCR maximum gain must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeConfig {
    pub n_rx: u32,
}

impl Default for UeConfig {
    fn default() -> Self {
        Self {
            n_rx: DEFAULT_UE_N_RX,
        }
    }
}

impl UeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 {
            return domain("UE must have at least one receive element");
        }
        Ok(())
    }
}

fn validate_bandwidth(bandwidth_hz: f64) -> Result<()> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return domain(format!("bandwidth must be > 0 Hz, got {bandwidth_hz}"));
    }
    Ok(())
}

/// Linear path loss `10^(PL_dB/10)` with `PL_dB = PL(1 m) + 10·n·log10(d)`.
pub fn path_loss_linear(geom: &LinkGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(db_to_linear(geom.path_loss_db()))
}

/// Beamformed single-hop SNR: `paout · n_tx² · n_rx / (PL · NF · N0 · BW)`.
///
/// Shared by every hop so that all callers (including the grid search)
/// produce bit-identical values for identical inputs.
#[inline]
pub(crate) fn hop_snr(paout_mw: f64, n_tx: u32, n_rx: u32, path_loss: f64, noise_mw: f64) -> f64 {
    let n_tx = n_tx as f64;
    paout_mw * (n_tx * n_tx) * n_rx as f64 / (path_loss * noise_mw)
}

/// Gain-limited NCR output per element, clamped to the configured maximum.
#[inline]
pub(crate) fn ncr_output_mw(
    paout_max_mw: f64,
    max_gain_linear: f64,
    snr_bh: f64,
    noise_mw: f64,
    n_tx: u32,
) -> f64 {
    let gain_limited = max_gain_linear * (1.0 + snr_bh) * noise_mw / n_tx as f64;
    paout_max_mw.min(gain_limited)
}

/// SNR of the gNB -> UE link.
pub fn snr_direct(
    gnb: &GnbConfig,
    ue: &UeConfig,
    geom: &LinkGeometry,
    noise: &NoiseModel,
) -> Result<f64> {
    gnb.validate()?;
    ue.validate()?;
    noise.validate()?;
    let pl = path_loss_linear(geom)?;
    Ok(hop_snr(
        gnb.paout_mw,
        gnb.n_tx,
        ue.n_rx,
        pl,
        noise.noise_power_mw(gnb.bandwidth_hz),
    ))
}

/// SNR of the gNB -> NCR backhaul hop. `noise` is the NCR receiver's.
pub fn snr_backhaul(
    gnb: &GnbConfig,
    ncr: &NcrConfig,
    geom: &LinkGeometry,
    noise: &NoiseModel,
) -> Result<f64> {
    gnb.validate()?;
    ncr.validate()?;
    noise.validate()?;
    let pl = path_loss_linear(geom)?;
    Ok(hop_snr(
        gnb.paout_mw,
        gnb.n_tx,
        ncr.n_rx,
        pl,
        noise.noise_power_mw(gnb.bandwidth_hz),
    ))
}

/// Actual per-element NCR PA output: the smaller of its configured maximum
/// and what the maximum gain allows given the received signal plus noise.
pub fn ncr_pa_output(
    ncr: &NcrConfig,
    snr_bh: f64,
    noise: &NoiseModel,
    bandwidth_hz: f64,
) -> Result<f64> {
    ncr.validate()?;
    noise.validate()?;
    validate_bandwidth(bandwidth_hz)?;
    if !(snr_bh >= 0.0) {
        return domain(format!("backhaul SNR must be >= 0, got {snr_bh}"));
    }
    Ok(ncr_output_mw(
        ncr.paout_max_mw,
        ncr.max_gain_linear,
        snr_bh,
        noise.noise_power_mw(bandwidth_hz),
        ncr.n_tx,
    ))
}

/// SNR of the NCR -> UE access hop given the NCR's actual PA output.
pub fn snr_access(
    ncr: &NcrConfig,
    ue: &UeConfig,
    geom: &LinkGeometry,
    noise: &NoiseModel,
    paout_actual_mw: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    ncr.validate()?;
    ue.validate()?;
    noise.validate()?;
    validate_bandwidth(bandwidth_hz)?;
    if !(paout_actual_mw >= 0.0) {
        return domain("NCR PA output must be >= 0 mW");
    }
    let pl = path_loss_linear(geom)?;
    Ok(hop_snr(
        paout_actual_mw,
        ncr.n_tx,
        ue.n_rx,
        pl,
        noise.noise_power_mw(bandwidth_hz),
    ))
}

/// End-to-end SNR of the amplify-and-forward chain,
/// `1 / (1/SNR_BH + (1/SNR_AC)·(1 + SNR_BH)/SNR_BH)`.
///
/// A zero (or negative) SNR on either hop yields 0, the limit value. An
/// infinite hop SNR reduces to the other hop.
#[inline]
pub fn effective_snr(snr_bh: f64, snr_ac: f64) -> f64 {
    if !(snr_bh > 0.0) || !(snr_ac > 0.0) {
        return 0.0;
    }
    if snr_bh.is_infinite() {
        return snr_ac;
    }
    1.0 / (1.0 / snr_bh + (1.0 / snr_ac) * ((1.0 + snr_bh) / snr_bh))
}

/// The same quantity written as `SNR_AC / (1 + (1 + SNR_AC)/SNR_BH)`, which
/// makes the access-hop bottleneck explicit.
#[inline]
pub fn effective_snr_bottleneck_form(snr_bh: f64, snr_ac: f64) -> f64 {
    if !(snr_bh > 0.0) || !(snr_ac > 0.0) {
        return 0.0;
    }
    if snr_ac.is_infinite() {
        return snr_bh;
    }
    snr_ac / (1.0 + (1.0 + snr_ac) / snr_bh)
}
