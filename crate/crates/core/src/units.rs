//! dB / linear conversions. Model code works in linear units (mW and
//! dimensionless ratios); these helpers are for configuration and reporting.

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Array gain expressed in dB for `n` coherently combined elements (`20·log10(n)`
/// when counted twice, as in the EIRP of a beamformed array).
#[inline]
pub fn eirp_dbm(paout_mw: f64, n_tx: u32) -> f64 {
    mw_to_dbm(paout_mw) + 20.0 * (n_tx as f64).log10()
}

/// Free-space path loss at 1 m for a carrier frequency in Hz.
pub fn free_space_ref_loss_db(freq_hz: f64) -> f64 {
    const C: f64 = 299_792_458.0;
    20.0 * (4.0 * std::f64::consts::PI * freq_hz / C).log10()
}
