//! gNB and NCR downlink power consumption in abstract Unit Power.
//!
//! gNB: `P = P_ms + α·P_nonPA + β·P_PA` with
//! `P_PA = (N_tx·PAout / RefTxPower)·(1/η)·(P_active,DL − P_ms)`.
//!
//! NCR: `P = P_const + P_rx + P_tx` with
//! `P_rx = (N_rx / RefN_rx)·γ·P_active,UL` and
//! `P_tx = (N_tx·PAout / RefTxPower)·(1/η)·ξ·P_active,DL`.
//!
//! `η` is the PA efficiency normalized to a reference output power; it is 1
//! for bias-adjusted (fixed efficiency) PAs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linkbudget::{GnbConfig, NcrConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaKind {
    Fixed,
    Varying,
}

/// Absolute PA efficiency as a function of output power (mW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum EfficiencyCurve {
    /// `eff_max · (x / x_ref)^exponent`, clamped to `[floor, eff_max]`.
    PowerLaw {
        eff_max: f64,
        exponent: f64,
        floor: f64,
    },
    /// Piecewise-linear `(paout_mw, efficiency)` table, sorted by output
    /// power. Outside the table the end values are held.
    Table { points: Vec<(f64, f64)> },
}

impl EfficiencyCurve {
    /// Default legacy-PA curve. Efficiency grows faster than the square root
    /// of output power, so `PAout/η` keeps rising only slowly with `PAout`.
    pub fn legacy() -> Self {
        EfficiencyCurve::PowerLaw {
            eff_max: 0.3,
            exponent: 0.8,
            floor: 1e-4,
        }
    }

    /// Ideal class-B behaviour, efficiency proportional to output amplitude.
    pub fn square_root() -> Self {
        EfficiencyCurve::PowerLaw {
            eff_max: 0.3,
            exponent: 0.5,
            floor: 1e-4,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EfficiencyCurve::PowerLaw {
                eff_max,
                exponent,
                floor,
            } => {
                if !(*eff_max > 0.0 && *eff_max <= 1.0) {
                    return domain("PA efficiency maximum must lie in (0, 1]");
                }
                if !(*floor > 0.0 && floor <= eff_max) {
                    return domain("PA efficiency floor must lie in (0, eff_max]");
                }
                if !(*exponent >= 0.0) || !exponent.is_finite() {
                    return domain("PA efficiency exponent must be >= 0");
                }
            }
            EfficiencyCurve::Table { points } => {
                if points.is_empty() {
                    return domain("PA efficiency table is empty");
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return domain("PA efficiency table must be strictly increasing in output power");
                    }
                    if w[1].1 < w[0].1 {
                        return domain("PA efficiency table must be nondecreasing in efficiency");
                    }
                }
                if points.iter().any(|&(_, e)| !(e > 0.0 && e <= 1.0)) {
                    return domain("PA efficiency table values must lie in (0, 1]");
                }
            }
        }
        Ok(())
    }

    fn efficiency(&self, paout_mw: f64, paout_ref_mw: f64) -> f64 {
        match self {
            EfficiencyCurve::PowerLaw {
                eff_max,
                exponent,
                floor,
            } => {
                let x = (paout_mw / paout_ref_mw).max(0.0);
                (eff_max * x.powf(*exponent)).clamp(*floor, *eff_max)
            }
            EfficiencyCurve::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if paout_mw <= first.0 {
                    return first.1;
                }
                if paout_mw >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|&(x, _)| x <= paout_mw);
                let (x0, e0) = points[i - 1];
                let (x1, e1) = points[i];
                e0 + (e1 - e0) * (paout_mw - x0) / (x1 - x0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaEfficiencyModel {
    pub kind: PaKind,
    pub curve: EfficiencyCurve,
    pub paout_ref_mw: f64,
}

impl PaEfficiencyModel {
    pub fn fixed() -> Self {
        Self {
            kind: PaKind::Fixed,
            curve: EfficiencyCurve::legacy(),
            paout_ref_mw: 10.0,
        }
    }

    pub fn varying() -> Self {
        Self {
            kind: PaKind::Varying,
            curve: EfficiencyCurve::legacy(),
            paout_ref_mw: 10.0,
        }
    }

    pub fn of_kind(kind: PaKind) -> Self {
        match kind {
            PaKind::Fixed => Self::fixed(),
            PaKind::Varying => Self::varying(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.paout_ref_mw > 0.0) {
            return domain("PA reference output must be > 0 mW");
        }
        self.curve.validate()
    }
}

/// Normalized PA efficiency `η`. Always 1 for the fixed model; otherwise
/// `PAeff(paout) / PAeff(paout_ref)`.
#[inline]
pub fn pa_efficiency_norm(model: &PaEfficiencyModel, paout_mw: f64) -> f64 {
    match model.kind {
        PaKind::Fixed => 1.0,
        PaKind::Varying => {
            model.curve.efficiency(paout_mw, model.paout_ref_mw)
                / model.curve.efficiency(model.paout_ref_mw, model.paout_ref_mw)
        }
    }
}

/// Reference constants of the power model.
///
/// None of the shipped values are normative; they are chosen so the model
/// is self-consistent at desk scale and every field can be overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConstants {
    pub p_ms_gnb: f64,
    pub p_non_pa: f64,
    pub p_active_dl: f64,
    pub p_active_ul: f64,
    pub ref_tx_power_per_ru_mw: f64,
    pub ref_n_rx: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub xi: f64,
    pub p_const_ncr: f64,
    pub ncr_ref_tx_power_mw: f64,
    pub ncr_sleep_power: f64,
}

impl Default for PowerConstants {
    fn default() -> Self {
        Self {
            p_ms_gnb: 20.0,
            p_non_pa: 25.0,
            p_active_dl: 45.0,
            p_active_ul: 15.0,
            ref_tx_power_per_ru_mw: 1920.0,
            ref_n_rx: 192,
            alpha: 0.4,
            beta: 0.6,
            gamma: 0.4,
            xi: 0.6,
            p_const_ncr: 2.0,
            ncr_ref_tx_power_mw: 1920.0,
            ncr_sleep_power: 0.0,
        }
    }
}

impl PowerConstants {
    /// Small round numbers that make hand substitution easy; used by the
    /// unit tests.
    pub fn toy() -> Self {
        Self {
            p_ms_gnb: 10.0,
            p_non_pa: 20.0,
            p_active_dl: 40.0,
            p_active_ul: 20.0,
            ref_tx_power_per_ru_mw: 1920.0,
            ref_n_rx: 32,
            alpha: 0.4,
            beta: 0.6,
            gamma: 0.4,
            xi: 0.6,
            p_const_ncr: 5.0,
            ncr_ref_tx_power_mw: 320.0,
            ncr_sleep_power: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_ms_gnb", self.p_ms_gnb),
            ("p_non_pa", self.p_non_pa),
            ("p_active_dl", self.p_active_dl),
            ("p_active_ul", self.p_active_ul),
            ("ref_tx_power_per_ru_mw", self.ref_tx_power_per_ru_mw),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("xi", self.xi),
            ("p_const_ncr", self.p_const_ncr),
            ("ncr_ref_tx_power_mw", self.ncr_ref_tx_power_mw),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.ref_n_rx == 0 {
            return domain("ref_n_rx must be >= 1");
        }
        if !(self.ncr_sleep_power >= 0.0) {
            return domain("ncr_sleep_power must be >= 0");
        }
        if !(self.p_active_dl > self.p_ms_gnb) {
            return domain("p_active_dl must exceed p_ms_gnb");
        }
        Ok(())
    }
}

/// Additive decomposition of a node's power. For a gNB the parts are
/// `P_ms`, `α·P_nonPA` and `β·P_PA`; for an NCR they are `P_const`,
/// `P_rx` and `P_tx`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub total: f64,
    pub static_part: f64,
    pub non_pa_part: f64,
    pub pa_part: f64,
}

impl PowerBreakdown {
    fn from_parts(static_part: f64, non_pa_part: f64, pa_part: f64) -> Self {
        Self {
            total: static_part + non_pa_part + pa_part,
            static_part,
            non_pa_part,
            pa_part,
        }
    }
}

/// Unweighted PA-related gNB power `P_PA`.
#[inline]
pub(crate) fn gnb_pa_raw(n_tx: u32, paout_mw: f64, eta: f64, k: &PowerConstants) -> f64 {
    n_tx as f64 * paout_mw / k.ref_tx_power_per_ru_mw * (1.0 / eta) * (k.p_active_dl - k.p_ms_gnb)
}

#[inline]
pub(crate) fn gnb_breakdown(n_tx: u32, paout_mw: f64, eta: f64, k: &PowerConstants) -> PowerBreakdown {
    PowerBreakdown::from_parts(
        k.p_ms_gnb,
        k.alpha * k.p_non_pa,
        k.beta * gnb_pa_raw(n_tx, paout_mw, eta, k),
    )
}

#[inline]
pub(crate) fn ncr_rx_part(n_rx: u32, k: &PowerConstants) -> f64 {
    n_rx as f64 / k.ref_n_rx as f64 * (k.gamma * k.p_active_ul)
}

#[inline]
pub(crate) fn ncr_tx_part(n_tx: u32, paout_mw: f64, eta: f64, k: &PowerConstants) -> f64 {
    n_tx as f64 * paout_mw / k.ncr_ref_tx_power_mw * (1.0 / eta) * (k.xi * k.p_active_dl)
}

#[inline]
pub(crate) fn ncr_breakdown_active(rx_part: f64, tx_part: f64, k: &PowerConstants) -> PowerBreakdown {
    PowerBreakdown::from_parts(k.p_const_ncr, rx_part, tx_part)
}

pub(crate) fn ncr_breakdown_sleep(k: &PowerConstants) -> PowerBreakdown {
    PowerBreakdown::from_parts(k.ncr_sleep_power, 0.0, 0.0)
}

/// `P_PA` before the `β` weighting.
pub fn gnb_pa_power(cfg: &GnbConfig, model: &PaEfficiencyModel, k: &PowerConstants) -> Result<f64> {
    cfg.validate()?;
    model.validate()?;
    k.validate()?;
    Ok(gnb_pa_raw(cfg.n_tx, cfg.paout_mw, pa_efficiency_norm(model, cfg.paout_mw), k))
}

pub fn gnb_power(cfg: &GnbConfig, model: &PaEfficiencyModel, k: &PowerConstants) -> Result<PowerBreakdown> {
    cfg.validate()?;
    model.validate()?;
    k.validate()?;
    Ok(gnb_breakdown(cfg.n_tx, cfg.paout_mw, pa_efficiency_norm(model, cfg.paout_mw), k))
}

/// NCR power for a given actual PA output. An inactive (switched-off)
/// repeater draws `ncr_sleep_power` only.
pub fn ncr_power(
    cfg: &NcrConfig,
    paout_actual_mw: f64,
    model: &PaEfficiencyModel,
    k: &PowerConstants,
    active: bool,
) -> Result<PowerBreakdown> {
    cfg.validate()?;
    model.validate()?;
    k.validate()?;
    if !(paout_actual_mw >= 0.0) {
        return domain("NCR PA output must be >= 0 mW");
    }
    if !active {
        return Ok(ncr_breakdown_sleep(k));
    }
    let eta = pa_efficiency_norm(model, paout_actual_mw);
    Ok(ncr_breakdown_active(
        ncr_rx_part(cfg.n_rx, k),
        ncr_tx_part(cfg.n_tx, paout_actual_mw, eta, k),
        k,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gnb(n_tx: u32, paout_mw: f64) -> GnbConfig {
        GnbConfig {
            n_tx,
            paout_mw,
            bandwidth_hz: 4e8,
        }
    }

    #[test]
    fn fixed_efficiency_is_one() {
        let m = PaEfficiencyModel::fixed();
        for p in [0.0, 0.5, 1.0, 10.0, 1e3] {
            assert_eq!(pa_efficiency_norm(&m, p), 1.0);
        }
    }

    #[test]
    fn varying_efficiency_normalization() {
        let m = PaEfficiencyModel::varying();
        assert_eq!(pa_efficiency_norm(&m, m.paout_ref_mw), 1.0);
        let sqrt = PaEfficiencyModel {
            curve: EfficiencyCurve::square_root(),
            ..PaEfficiencyModel::varying()
        };
        assert!((pa_efficiency_norm(&sqrt, 2.5) - 0.5).abs() < 1e-15);
        // Beyond the reference the curve saturates.
        assert_eq!(pa_efficiency_norm(&m, 100.0), 1.0);
        let eta0 = pa_efficiency_norm(&m, 0.0);
        assert!(eta0 > 0.0 && eta0 < 1e-3);
    }

    #[test]
    fn table_curve_interpolates_and_clamps() {
        let m = PaEfficiencyModel {
            kind: PaKind::Varying,
            curve: EfficiencyCurve::Table {
                points: vec![(1.0, 0.1), (5.0, 0.2), (10.0, 0.4)],
            },
            paout_ref_mw: 10.0,
        };
        m.validate().unwrap();
        assert_eq!(pa_efficiency_norm(&m, 10.0), 1.0);
        assert!((pa_efficiency_norm(&m, 3.0) - 0.15 / 0.4).abs() < 1e-15);
        assert_eq!(pa_efficiency_norm(&m, 0.0), 0.25);
        assert_eq!(pa_efficiency_norm(&m, 50.0), 1.0);
        let bad = PaEfficiencyModel {
            curve: EfficiencyCurve::Table {
                points: vec![(1.0, 0.3), (5.0, 0.2)],
            },
            ..m
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gnb_toy_examples() {
        let k = PowerConstants::toy();
        let m = PaEfficiencyModel::fixed();
        assert_eq!(gnb_pa_power(&gnb(192, 10.0), &m, &k).unwrap(), 30.0);
        assert_eq!(gnb_power(&gnb(192, 10.0), &m, &k).unwrap().total, 36.0);
        assert_eq!(gnb_pa_power(&gnb(96, 10.0), &m, &k).unwrap(), 15.0);
        assert_eq!(gnb_power(&gnb(96, 10.0), &m, &k).unwrap().total, 27.0);
        let idle = gnb_power(&gnb(192, 0.0), &m, &k).unwrap();
        assert_eq!(idle.pa_part, 0.0);
        assert_eq!(idle.total, 18.0);
    }

    #[test]
    fn ncr_toy_examples() {
        let k = PowerConstants::toy();
        let m = PaEfficiencyModel::fixed();
        let on = ncr_power(&NcrConfig::new(32, 32, 10.0), 10.0, &m, &k, true).unwrap();
        assert_eq!((on.non_pa_part, on.pa_part, on.total), (8.0, 24.0, 37.0));
        let off = ncr_power(&NcrConfig::new(32, 32, 10.0), 10.0, &m, &k, false).unwrap();
        assert_eq!(off.total, 0.0);
        let half_rx = ncr_power(&NcrConfig::new(32, 16, 10.0), 10.0, &m, &k, true).unwrap();
        assert_eq!((half_rx.non_pa_part, half_rx.total), (4.0, 33.0));
    }

    #[test]
    fn constants_validation() {
        PowerConstants::default().validate().unwrap();
        PowerConstants::toy().validate().unwrap();
        let bad = PowerConstants {
            p_active_dl: 5.0,
            ..PowerConstants::toy()
        };
        assert!(bad.validate().is_err());
        let bad = PowerConstants {
            ncr_sleep_power: -1.0,
            ..PowerConstants::toy()
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn parts_sum_to_total(n in 1u32..193, p in 0.0f64..20.0, varying in any::<bool>()) {
                let m = if varying { PaEfficiencyModel::varying() } else { PaEfficiencyModel::fixed() };
                let k = PowerConstants::default();
                let b = gnb_power(&gnb(n, p), &m, &k).unwrap();
                prop_assert_eq!(b.total, b.static_part + b.non_pa_part + b.pa_part);
                prop_assert!(b.static_part >= 0.0 && b.non_pa_part >= 0.0 && b.pa_part >= 0.0);
                let r = ncr_power(&NcrConfig::new(n.min(32), 7, 10.0), p, &m, &k, true).unwrap();
                prop_assert_eq!(r.total, r.static_part + r.non_pa_part + r.pa_part);
            }

            #[test]
            fn fixed_pa_part_is_bilinear(n in 1u32..97, p in 0.01f64..10.0) {
                let m = PaEfficiencyModel::fixed();
                let k = PowerConstants::default();
                let full = gnb_pa_power(&gnb(2 * n, p), &m, &k).unwrap();
                let half_n = gnb_pa_power(&gnb(n, p), &m, &k).unwrap();
                let half_p = gnb_pa_power(&gnb(2 * n, p / 2.0), &m, &k).unwrap();
                prop_assert!((half_n * 2.0 - full).abs() <= 1e-12 * full);
                prop_assert!((half_p * 2.0 - full).abs() <= 1e-12 * full);
            }

            #[test]
            fn varying_pa_part_is_sublinear(n in 1u32..193, p in 0.05f64..10.0) {
                let k = PowerConstants::default();
                for curve in [EfficiencyCurve::legacy(), EfficiencyCurve::square_root()] {
                    let m = PaEfficiencyModel { curve, ..PaEfficiencyModel::varying() };
                    let at_p = gnb_pa_power(&gnb(n, p), &m, &k).unwrap();
                    let at_quarter = gnb_pa_power(&gnb(n, p / 4.0), &m, &k).unwrap();
                    prop_assert!(at_quarter > at_p / 4.0);
                }
            }

            #[test]
            fn ncr_rx_and_tx_parts_separate(nrx in 1u32..33, ntx in 1u32..33, p in 0.0f64..10.0) {
                let m = PaEfficiencyModel::fixed();
                let k = PowerConstants::default();
                let a = ncr_power(&NcrConfig::new(ntx, nrx, 10.0), p, &m, &k, true).unwrap();
                let b = ncr_power(&NcrConfig::new(ntx, nrx, 10.0), p * 0.5, &m, &k, true).unwrap();
                prop_assert_eq!(a.non_pa_part, b.non_pa_part);
                let c = ncr_power(&NcrConfig::new(ntx, 32, 10.0), p, &m, &k, true).unwrap();
                prop_assert_eq!(a.pa_part, c.pa_part);
                let expect_rx = c.non_pa_part * nrx as f64 / 32.0;
                prop_assert!((a.non_pa_part - expect_rx).abs() <= 1e-12 * c.non_pa_part);
            }
        }
    }
}
