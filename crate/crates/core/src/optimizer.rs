//! Energy-efficiency metrics and the exhaustive EE-maximizing search over
//! transmit configurations.
//!
//! EE is the Shannon rate divided by the total downlink power, in bps per
//! Unit Power. The search enumerates every grid member; grid evaluation runs
//! on the rayon pool and is reduced with a total order (EE, then lower power,
//! then lower PA output, then fewer elements, then the remaining fields), so
//! the winner does not depend on evaluation order.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linkbudget::{
    effective_snr, hop_snr, ncr_output_mw, ncr_pa_output, path_loss_linear, snr_access,
    snr_backhaul, snr_direct, GnbConfig, LinkGeometry, NcrConfig, NoiseModel, UeConfig,
    DEFAULT_NCR_MAX_GAIN_DB,
};
use crate::powermodel::{
    gnb_breakdown, gnb_power, ncr_breakdown_active, ncr_power, ncr_rx_part, ncr_tx_part,
    pa_efficiency_norm, PaEfficiencyModel, PowerBreakdown, PowerConstants,
};
use crate::units::{db_to_linear, dbm_to_mw, eirp_dbm, mw_to_dbm};

/// `BW · log2(1 + SNR)` in bps.
#[inline]
pub fn shannon_rate(bandwidth_hz: f64, snr_linear: f64) -> f64 {
    bandwidth_hz * (1.0 + snr_linear).log2()
}

/// PA efficiency model plus power-model constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub pa: PaEfficiencyModel,
    pub consts: PowerConstants,
}

impl EnergyModel {
    pub fn new(pa: PaEfficiencyModel, consts: PowerConstants) -> Self {
        Self { pa, consts }
    }

    pub fn validate(&self) -> Result<()> {
        self.pa.validate()?;
        self.consts.validate()
    }
}

/// Everything about a gNB -> UE link that the search does not tune.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectLink {
    pub geom: LinkGeometry,
    pub ue: UeConfig,
    pub noise_ue: NoiseModel,
}

impl DirectLink {
    pub fn at_distance(distance_m: f64) -> Self {
        Self {
            geom: LinkGeometry::access(distance_m),
            ue: UeConfig::default(),
            noise_ue: NoiseModel::ue_default(),
        }
    }
}

/// Fixed part of a gNB -> NCR -> UE link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayLink {
    pub backhaul: LinkGeometry,
    pub access: LinkGeometry,
    pub ue: UeConfig,
    pub noise_ue: NoiseModel,
    pub noise_ncr: NoiseModel,
    pub ncr_max_gain_linear: f64,
}

impl RelayLink {
    pub fn new(backhaul_m: f64, access_m: f64) -> Self {
        Self {
            backhaul: LinkGeometry::backhaul(backhaul_m),
            access: LinkGeometry::access(access_m),
            ue: UeConfig::default(),
            noise_ue: NoiseModel::ue_default(),
            noise_ncr: NoiseModel::ncr_default(),
            ncr_max_gain_linear: db_to_linear(DEFAULT_NCR_MAX_GAIN_DB),
        }
    }

    pub fn ncr(&self, n_tx: u32, n_rx: u32, paout_max_mw: f64) -> NcrConfig {
        NcrConfig {
            n_tx,
            n_rx,
            paout_max_mw,
            max_gain_linear: self.ncr_max_gain_linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    /// SNR that determines the rate (end-to-end for a relayed link).
    pub effective: f64,
    /// SNR of the hop that reaches the UE.
    pub access: f64,
    pub backhaul: Option<f64>,
    pub ncr_paout_actual_mw: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub total: f64,
    pub gnb: PowerBreakdown,
    pub ncr: Option<PowerBreakdown>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub ee: f64,
    pub rate_bps: f64,
    pub snr: SnrReport,
    pub power: PowerReport,
}

/// Direct-topology EE: rate at the gNB -> UE SNR over gNB power.
pub fn ee_direct(gnb: &GnbConfig, link: &DirectLink, energy: &EnergyModel) -> Result<Evaluation> {
    let snr = snr_direct(gnb, &link.ue, &link.geom, &link.noise_ue)?;
    let power = gnb_power(gnb, &energy.pa, &energy.consts)?;
    let rate = shannon_rate(gnb.bandwidth_hz, snr);
    Ok(Evaluation {
        ee: rate / power.total,
        rate_bps: rate,
        snr: SnrReport {
            effective: snr,
            access: snr,
            backhaul: None,
            ncr_paout_actual_mw: None,
        },
        power: PowerReport {
            total: power.total,
            gnb: power,
            ncr: None,
        },
    })
}

/// Relayed-topology EE: rate at the end-to-end SNR over gNB + NCR power.
/// The NCR radiates the gain-limited output, never more than its maximum.
pub fn ee_indirect(
    gnb: &GnbConfig,
    ncr: &NcrConfig,
    link: &RelayLink,
    energy: &EnergyModel,
) -> Result<Evaluation> {
    let bw = gnb.bandwidth_hz;
    let snr_bh = snr_backhaul(gnb, ncr, &link.backhaul, &link.noise_ncr)?;
    let paout_ncr = ncr_pa_output(ncr, snr_bh, &link.noise_ncr, bw)?;
    let snr_ac = snr_access(ncr, &link.ue, &link.access, &link.noise_ue, paout_ncr, bw)?;
    let eff = effective_snr(snr_bh, snr_ac);
    let rate = shannon_rate(bw, eff);
    let p_gnb = gnb_power(gnb, &energy.pa, &energy.consts)?;
    let p_ncr = ncr_power(ncr, paout_ncr, &energy.pa, &energy.consts, true)?;
    let total = p_gnb.total + p_ncr.total;
    Ok(Evaluation {
        ee: rate / total,
        rate_bps: rate,
        snr: SnrReport {
            effective: eff,
            access: snr_ac,
            backhaul: Some(snr_bh),
            ncr_paout_actual_mw: Some(paout_ncr),
        },
        power: PowerReport {
            total,
            gnb: p_gnb,
            ncr: Some(p_ncr),
        },
    })
}

/// Upper bounds of the search space.
pub const MAX_BANDWIDTH_HZ: f64 = 400e6;
pub const MIN_BANDWIDTH_HZ: f64 = 1e6;
pub const PAOUT_MIN_DBM: f64 = 0.0;
pub const PAOUT_MAX_DBM: f64 = 10.0;
pub const GNB_MAX_NTX: u32 = 192;
pub const NCR_MAX_ELEMENTS: u32 = 32;

/// Candidate values of every tunable parameter. Power values in mW,
/// bandwidth in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub bw_values: Vec<f64>,
    pub gnb_paout_values: Vec<f64>,
    pub gnb_ntx_values: Vec<u32>,
    pub ncr_paout_values: Vec<f64>,
    pub ncr_ntx_values: Vec<u32>,
    pub ncr_nrx_values: Vec<u32>,
    /// Optional EIRP caps in dBm (`PAout_dBm + 20·log10(N_tx) <= cap`).
    #[serde(default)]
    pub gnb_eirp_cap_dbm: Option<f64>,
    #[serde(default)]
    pub ncr_eirp_cap_dbm: Option<f64>,
}

/// `lo, lo+step, ...` up to and including `hi` (within rounding).
pub fn paout_steps_mw(lo_dbm: f64, hi_dbm: f64, step_db: f64) -> Vec<f64> {
    let n = ((hi_dbm - lo_dbm) / step_db + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| dbm_to_mw(lo_dbm + i as f64 * step_db)).collect();
    if (lo_dbm + n as f64 * step_db - hi_dbm).abs() > 1e-9 {
        v.push(dbm_to_mw(hi_dbm));
    }
    v
}

/// `{1} ∪ {step, 2·step, ...}` up to `max`, with `max` always included.
pub fn element_steps(max: u32, step: u32) -> Vec<u32> {
    let mut v = vec![1];
    let mut n = step.max(1);
    while n < max {
        if n > 1 {
            v.push(n);
        }
        n += step.max(1);
    }
    if *v.last().unwrap() != max {
        v.push(max);
    }
    v
}

impl Default for ParameterGrid {
    fn default() -> Self {
        Self {
            bw_values: [1.0, 50.0, 100.0, 200.0, 400.0].iter().map(|m| m * 1e6).collect(),
            gnb_paout_values: paout_steps_mw(PAOUT_MIN_DBM, PAOUT_MAX_DBM, 0.5),
            gnb_ntx_values: element_steps(GNB_MAX_NTX, 4),
            ncr_paout_values: paout_steps_mw(PAOUT_MIN_DBM, PAOUT_MAX_DBM, 0.5),
            ncr_ntx_values: (1..=NCR_MAX_ELEMENTS).collect(),
            ncr_nrx_values: (1..=NCR_MAX_ELEMENTS).collect(),
            gnb_eirp_cap_dbm: None,
            ncr_eirp_cap_dbm: None,
        }
    }
}

impl ParameterGrid {
    /// Coarser grid for per-sector optimization in the system-level study.
    pub fn system_default() -> Self {
        Self {
            bw_values: vec![100e6, 200e6, 400e6],
            gnb_paout_values: paout_steps_mw(PAOUT_MIN_DBM, PAOUT_MAX_DBM, 1.0),
            gnb_ntx_values: element_steps(GNB_MAX_NTX, 8),
            ncr_paout_values: paout_steps_mw(PAOUT_MIN_DBM, PAOUT_MAX_DBM, 1.0),
            ncr_ntx_values: (1..=8).map(|i| 4 * i).collect(),
            ncr_nrx_values: (1..=8).map(|i| 4 * i).collect(),
            gnb_eirp_cap_dbm: None,
            ncr_eirp_cap_dbm: None,
        }
    }

    pub fn with_paout_step_db(mut self, step_db: f64) -> Self {
        self.gnb_paout_values = paout_steps_mw(PAOUT_MIN_DBM, PAOUT_MAX_DBM, step_db);
        self.ncr_paout_values = paout_steps_mw(PAOUT_MIN_DBM, PAOUT_MAX_DBM, step_db);
        self
    }

    /// A grid with exactly one member.
    pub fn singleton(gnb: &GnbConfig, ncr: Option<&NcrConfig>) -> Self {
        let ncr = ncr.copied().unwrap_or_else(|| NcrConfig::new(1, 1, 1.0));
        Self {
            bw_values: vec![gnb.bandwidth_hz],
            gnb_paout_values: vec![gnb.paout_mw],
            gnb_ntx_values: vec![gnb.n_tx],
            ncr_paout_values: vec![ncr.paout_max_mw],
            ncr_ntx_values: vec![ncr.n_tx],
            ncr_nrx_values: vec![ncr.n_rx],
            gnb_eirp_cap_dbm: None,
            ncr_eirp_cap_dbm: None,
        }
    }

    fn check_dim<T: PartialOrd + Copy>(name: &'static str, v: &[T], positive: impl Fn(T) -> bool) -> Result<()> {
        if v.is_empty() {
            return Err(Error::EmptyGrid(name));
        }
        if !v.windows(2).all(|w| w[0] < w[1]) {
            return domain(format!("grid dimension `{name}` must be strictly ascending"));
        }
        if !v.iter().all(|&x| positive(x)) {
            return domain(format!("grid dimension `{name}` has an invalid value"));
        }
        Ok(())
    }

    fn validate_gnb(&self) -> Result<()> {
        Self::check_dim("bw_values", &self.bw_values, |x| x > 0.0 && x.is_finite())?;
        Self::check_dim("gnb_paout_values", &self.gnb_paout_values, |x| x >= 0.0 && x.is_finite())?;
        Self::check_dim("gnb_ntx_values", &self.gnb_ntx_values, |x| x >= 1)
    }

    fn validate_ncr(&self) -> Result<()> {
        Self::check_dim("ncr_paout_values", &self.ncr_paout_values, |x| x >= 0.0 && x.is_finite())?;
        Self::check_dim("ncr_ntx_values", &self.ncr_ntx_values, |x| x >= 1)?;
        Self::check_dim("ncr_nrx_values", &self.ncr_nrx_values, |x| x >= 1)
    }

    pub fn validate_direct(&self) -> Result<()> {
        self.validate_gnb()
    }

    pub fn validate_indirect(&self) -> Result<()> {
        self.validate_gnb()?;
        self.validate_ncr()
    }

    /// Checks every value against the bounds of the optimization problems:
    /// BW in [1, 400] MHz, PA outputs in [0, 10] dBm, up to 192 gNB and 32
    /// NCR elements. Returns the offending dimension on failure.
    pub fn check_problem_bounds(&self) -> std::result::Result<(), (&'static str, f64)> {
        const TOL: f64 = 1e-9;
        for &b in &self.bw_values {
            if b < MIN_BANDWIDTH_HZ * (1.0 - TOL) || b > MAX_BANDWIDTH_HZ * (1.0 + TOL) {
                return Err(("bw_values", b));
            }
        }
        for (name, values) in [
            ("gnb_paout_values", &self.gnb_paout_values),
            ("ncr_paout_values", &self.ncr_paout_values),
        ] {
            for &p in values {
                let dbm = mw_to_dbm(p);
                if !(dbm >= PAOUT_MIN_DBM - TOL && dbm <= PAOUT_MAX_DBM + TOL) {
                    return Err((name, p));
                }
            }
        }
        for &n in &self.gnb_ntx_values {
            if n > GNB_MAX_NTX {
                return Err(("gnb_ntx_values", n as f64));
            }
        }
        for (name, values) in [
            ("ncr_ntx_values", &self.ncr_ntx_values),
            ("ncr_nrx_values", &self.ncr_nrx_values),
        ] {
            for &n in values {
                if n > NCR_MAX_ELEMENTS {
                    return Err((name, n as f64));
                }
            }
        }
        Ok(())
    }

    pub fn direct_len(&self) -> u64 {
        (self.bw_values.len() * self.gnb_paout_values.len() * self.gnb_ntx_values.len()) as u64
    }

    pub fn indirect_len(&self) -> u64 {
        self.direct_len()
            * (self.ncr_paout_values.len() * self.ncr_ntx_values.len() * self.ncr_nrx_values.len()) as u64
    }

    /// Most spectrally efficient direct configuration: every dimension at
    /// its maximum.
    pub fn max_direct(&self) -> DirectConfig {
        DirectConfig {
            bandwidth_hz: *self.bw_values.last().unwrap(),
            gnb_paout_mw: *self.gnb_paout_values.last().unwrap(),
            gnb_ntx: *self.gnb_ntx_values.last().unwrap(),
        }
    }

    pub fn max_indirect(&self) -> IndirectConfig {
        IndirectConfig {
            gnb: self.max_direct(),
            ncr_paout_max_mw: *self.ncr_paout_values.last().unwrap(),
            ncr_ntx: *self.ncr_ntx_values.last().unwrap(),
            ncr_nrx: *self.ncr_nrx_values.last().unwrap(),
        }
    }

    fn gnb_allowed(&self, paout_mw: f64, n_tx: u32) -> bool {
        self.gnb_eirp_cap_dbm
            .map_or(true, |cap| eirp_dbm(paout_mw, n_tx) <= cap + 1e-9)
    }

    fn ncr_allowed(&self, paout_mw: f64, n_tx: u32) -> bool {
        self.ncr_eirp_cap_dbm
            .map_or(true, |cap| eirp_dbm(paout_mw, n_tx) <= cap + 1e-9)
    }
}

/// A named, reportable parameter of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub value: f64,
}

/// A point of the search space.
pub trait TunableConfig: Copy + std::fmt::Debug + Send + Sync {
    /// Parameters in reporting units (Hz, dBm, element counts).
    fn parameters(&self) -> Vec<Param>;
    /// Tie-break key, compared lexicographically, smaller preferred.
    fn tie_key(&self) -> [f64; 6];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectConfig {
    pub bandwidth_hz: f64,
    pub gnb_paout_mw: f64,
    pub gnb_ntx: u32,
}

impl DirectConfig {
    pub fn gnb(&self) -> GnbConfig {
        GnbConfig {
            n_tx: self.gnb_ntx,
            paout_mw: self.gnb_paout_mw,
            bandwidth_hz: self.bandwidth_hz,
        }
    }
}

impl TunableConfig for DirectConfig {
    fn parameters(&self) -> Vec<Param> {
        vec![
            Param { name: "bw_hz", value: self.bandwidth_hz },
            Param { name: "gnb_paout_dbm", value: mw_to_dbm(self.gnb_paout_mw) },
            Param { name: "gnb_ntx", value: self.gnb_ntx as f64 },
        ]
    }

    fn tie_key(&self) -> [f64; 6] {
        [self.gnb_paout_mw, self.gnb_ntx as f64, self.bandwidth_hz, 0.0, 0.0, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndirectConfig {
    pub gnb: DirectConfig,
    /// Maximum NCR PA output; the actual output may be lower (gain limit).
    pub ncr_paout_max_mw: f64,
    pub ncr_ntx: u32,
    pub ncr_nrx: u32,
}

impl IndirectConfig {
    pub fn ncr(&self, link: &RelayLink) -> NcrConfig {
        link.ncr(self.ncr_ntx, self.ncr_nrx, self.ncr_paout_max_mw)
    }
}

impl TunableConfig for IndirectConfig {
    fn parameters(&self) -> Vec<Param> {
        let mut p = self.gnb.parameters();
        p.extend([
            Param { name: "ncr_nrx", value: self.ncr_nrx as f64 },
            Param { name: "ncr_paout_dbm", value: mw_to_dbm(self.ncr_paout_max_mw) },
            Param { name: "ncr_ntx", value: self.ncr_ntx as f64 },
        ]);
        p
    }

    fn tie_key(&self) -> [f64; 6] {
        [
            self.gnb.gnb_paout_mw,
            self.gnb.gnb_ntx as f64,
            self.gnb.bandwidth_hz,
            self.ncr_paout_max_mw,
            self.ncr_ntx as f64,
            self.ncr_nrx as f64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptResult<C> {
    pub config: C,
    pub eval: Evaluation,
    /// Number of grid members evaluated.
    pub evaluations: u64,
}

/// Ranking used by every search: higher EE first, then lower total power,
/// then the configuration's tie-break key.
pub fn rank(ee_a: f64, power_a: f64, key_a: &[f64; 6], ee_b: f64, power_b: f64, key_b: &[f64; 6]) -> Ordering {
    ee_b.total_cmp(&ee_a)
        .then(power_a.total_cmp(&power_b))
        .then_with(|| {
            key_a
                .iter()
                .zip(key_b)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

#[derive(Debug, Clone, Copy)]
struct Candidate<C> {
    ee: f64,
    power: f64,
    config: C,
}

impl<C: TunableConfig> Candidate<C> {
    fn pick(a: Option<Self>, b: Option<Self>) -> Option<Self> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                let ord = rank(a.ee, a.power, &a.config.tie_key(), b.ee, b.power, &b.config.tie_key());
                Some(if ord == Ordering::Greater { b } else { a })
            }
        }
    }
}

/// Full evaluation of one direct configuration, packaged as an `OptResult`
/// with a single evaluation. Used for baselines.
pub fn evaluate_direct(cfg: &DirectConfig, link: &DirectLink, energy: &EnergyModel) -> Result<OptResult<DirectConfig>> {
    Ok(OptResult {
        config: *cfg,
        eval: ee_direct(&cfg.gnb(), link, energy)?,
        evaluations: 1,
    })
}

pub fn evaluate_indirect(
    cfg: &IndirectConfig,
    link: &RelayLink,
    energy: &EnergyModel,
) -> Result<OptResult<IndirectConfig>> {
    Ok(OptResult {
        config: *cfg,
        eval: ee_indirect(&cfg.gnb.gnb(), &cfg.ncr(link), link, energy)?,
        evaluations: 1,
    })
}

/// Exhaustive search of the direct topology (BW, gNB PA output, gNB active
/// elements).
pub fn optimize_direct(grid: &ParameterGrid, link: &DirectLink, energy: &EnergyModel) -> Result<OptResult<DirectConfig>> {
    grid.validate_direct()?;
    link.ue.validate()?;
    link.noise_ue.validate()?;
    energy.validate()?;
    let pl = path_loss_linear(&link.geom)?;
    let k = &energy.consts;

    let outer: Vec<(usize, usize)> = (0..grid.bw_values.len())
        .flat_map(|b| (0..grid.gnb_paout_values.len()).map(move |p| (b, p)))
        .collect();

    let (best, count) = outer
        .par_iter()
        .map(|&(bi, pi)| {
            let bw = grid.bw_values[bi];
            let paout = grid.gnb_paout_values[pi];
            let noise = link.noise_ue.noise_power_mw(bw);
            let eta = pa_efficiency_norm(&energy.pa, paout);
            let mut best = None;
            let mut count = 0u64;
            for &n_tx in &grid.gnb_ntx_values {
                if !grid.gnb_allowed(paout, n_tx) {
                    continue;
                }
                count += 1;
                let snr = hop_snr(paout, n_tx, link.ue.n_rx, pl, noise);
                let rate = shannon_rate(bw, snr);
                let power = gnb_breakdown(n_tx, paout, eta, k).total;
                let cand = Candidate {
                    ee: rate / power,
                    power,
                    config: DirectConfig {
                        bandwidth_hz: bw,
                        gnb_paout_mw: paout,
                        gnb_ntx: n_tx,
                    },
                };
                best = Candidate::pick(best, Some(cand));
            }
            (best, count)
        })
        .reduce(|| (None, 0), |a, b| (Candidate::pick(a.0, b.0), a.1 + b.1));

    let best = best.ok_or_else(|| Error::Infeasible("no grid member satisfies the EIRP cap".into()))?;
    let mut result = evaluate_direct(&best.config, link, energy)?;
    result.evaluations = count;
    Ok(result)
}

/// Slack applied to EE upper bounds so rounding can never prune a candidate
/// that ties the incumbent.
const BOUND_SLACK: f64 = 1.0 + 1e-9;

/// Exhaustive search of the relayed topology over (BW, gNB PA output, gNB
/// elements, NCR maximum PA output, NCR transmit and receive elements). The
/// objective uses the gain-limited NCR output for each candidate maximum.
///
/// Whole blocks of the grid are skipped when an upper bound on their EE is
/// strictly below an EE already achieved; the returned optimum is the same
/// as that of a plain scan. `evaluations` counts every member covered,
/// skipped or not.
pub fn optimize_indirect(
    grid: &ParameterGrid,
    link: &RelayLink,
    energy: &EnergyModel,
) -> Result<OptResult<IndirectConfig>> {
    grid.validate_indirect()?;
    link.ue.validate()?;
    link.noise_ue.validate()?;
    link.noise_ncr.validate()?;
    energy.validate()?;
    if !(link.ncr_max_gain_linear > 0.0) {
        return domain("NCR maximum gain must be > 0");
    }
    let search = IndirectSearch::new(grid, link, energy)?;

    // Most promising cells first so the incumbent rises quickly.
    let mut cells: Vec<(usize, usize, usize, f64)> = Vec::new();
    for bi in 0..grid.bw_values.len() {
        for pi in 0..grid.gnb_paout_values.len() {
            for ni in 0..grid.gnb_ntx_values.len() {
                cells.push((bi, pi, ni, search.cell_bound(bi, pi, ni)));
            }
        }
    }
    cells.sort_by(|a, b| b.3.total_cmp(&a.3).then((a.0, a.1, a.2).cmp(&(b.0, b.1, b.2))));

    let batch = (rayon::current_num_threads() * 4).max(8);
    let mut best: Option<Candidate<IndirectConfig>> = None;
    let mut count = 0u64;
    for chunk in cells.chunks(batch) {
        let floor = best.map_or(f64::NEG_INFINITY, |b| b.ee);
        let (b, c) = chunk
            .par_iter()
            .map(|&(bi, pi, ni, bound)| search.cell(bi, pi, ni, bound, floor))
            .reduce(|| (None, 0), |a, b| (Candidate::pick(a.0, b.0), a.1 + b.1));
        best = Candidate::pick(best, b);
        count += c;
    }

    let best = best.ok_or_else(|| Error::Infeasible("no grid member satisfies the EIRP caps".into()))?;
    let mut result = evaluate_indirect(&best.config, link, energy)?;
    result.evaluations = count;
    Ok(result)
}

/// Precomputed state shared by every cell of an indirect search. A cell is
/// one (BW, gNB PA output, gNB elements) triple.
struct IndirectSearch<'a> {
    grid: &'a ParameterGrid,
    link: &'a RelayLink,
    energy: &'a EnergyModel,
    pl_bh: f64,
    pl_ac: f64,
    ncr_eta: Vec<f64>,
    rx_parts: Vec<f64>,
    /// Allowed NCR transmit element counts per NCR PA output index.
    allowed_nx: Vec<u64>,
    nx_max: u32,
    nr_max: u32,
}

impl<'a> IndirectSearch<'a> {
    fn new(grid: &'a ParameterGrid, link: &'a RelayLink, energy: &'a EnergyModel) -> Result<Self> {
        let k = &energy.consts;
        Ok(Self {
            grid,
            link,
            energy,
            pl_bh: path_loss_linear(&link.backhaul)?,
            pl_ac: path_loss_linear(&link.access)?,
            ncr_eta: grid
                .ncr_paout_values
                .iter()
                .map(|&p| pa_efficiency_norm(&energy.pa, p))
                .collect(),
            rx_parts: grid.ncr_nrx_values.iter().map(|&n| ncr_rx_part(n, k)).collect(),
            allowed_nx: grid
                .ncr_paout_values
                .iter()
                .map(|&p| grid.ncr_ntx_values.iter().filter(|&&n| grid.ncr_allowed(p, n)).count() as u64)
                .collect(),
            nx_max: *grid.ncr_ntx_values.last().unwrap(),
            nr_max: *grid.ncr_nrx_values.last().unwrap(),
        })
    }

    fn gnb_power(&self, pi: usize, ni: usize) -> f64 {
        let pg = self.grid.gnb_paout_values[pi];
        let eta = pa_efficiency_norm(&self.energy.pa, pg);
        gnb_breakdown(self.grid.gnb_ntx_values[ni], pg, eta, &self.energy.consts).total
    }

    /// EE bound from `eff < min(bh, ac)` and NCR power of at least its
    /// constant and receive parts.
    fn bound(&self, bw: f64, snr_bh: f64, snr_ac_max: f64, power_floor: f64) -> f64 {
        shannon_rate(bw, snr_bh.min(snr_ac_max)) / power_floor * BOUND_SLACK
    }

    fn access_max(&self, paout_mw: f64, noise_ue: f64) -> f64 {
        hop_snr(paout_mw, self.nx_max, self.link.ue.n_rx, self.pl_ac, noise_ue)
    }

    fn cell_bound(&self, bi: usize, pi: usize, ni: usize) -> f64 {
        let g = self.grid;
        let bw = g.bw_values[bi];
        let noise_ncr = self.link.noise_ncr.noise_power_mw(bw);
        let noise_ue = self.link.noise_ue.noise_power_mw(bw);
        let bh = hop_snr(g.gnb_paout_values[pi], g.gnb_ntx_values[ni], self.nr_max, self.pl_bh, noise_ncr);
        let ac = self.access_max(*g.ncr_paout_values.last().unwrap(), noise_ue);
        let floor = self.gnb_power(pi, ni) + self.energy.consts.p_const_ncr + self.rx_parts[0];
        self.bound(bw, bh, ac, floor)
    }

    fn cell(&self, bi: usize, pi: usize, ni: usize, cell_bound: f64, floor: f64) -> (Option<Candidate<IndirectConfig>>, u64) {
        let g = self.grid;
        let k = &self.energy.consts;
        let link = self.link;
        let bw = g.bw_values[bi];
        let pg = g.gnb_paout_values[pi];
        let nt = g.gnb_ntx_values[ni];
        if !g.gnb_allowed(pg, nt) {
            return (None, 0);
        }
        let per_nr: u64 = self.allowed_nx.iter().sum();
        let total_count = per_nr * g.ncr_nrx_values.len() as u64;
        if cell_bound < floor {
            return (None, total_count);
        }
        let gain = link.ncr_max_gain_linear;
        let noise_ncr = link.noise_ncr.noise_power_mw(bw);
        let noise_ue = link.noise_ue.noise_power_mw(bw);
        let p_gnb = self.gnb_power(pi, ni);
        let gnb_cfg = DirectConfig {
            bandwidth_hz: bw,
            gnb_paout_mw: pg,
            gnb_ntx: nt,
        };
        let ac_max: Vec<f64> = g.ncr_paout_values.iter().map(|&p| self.access_max(p, noise_ue)).collect();

        // Best within this cell, tracked as raw fields to keep the inner
        // loop tight.
        let mut best_ee = f64::NEG_INFINITY;
        let mut best_pw = f64::INFINITY;
        let mut best_key = [f64::INFINITY; 6];
        let mut best_cfg = None;
        for (ri, &nr) in g.ncr_nrx_values.iter().enumerate().rev() {
            let snr_bh = hop_snr(pg, nt, nr, self.pl_bh, noise_ncr);
            let rx = self.rx_parts[ri];
            let power_floor = p_gnb + k.p_const_ncr + rx;
            if self.bound(bw, snr_bh, *ac_max.last().unwrap(), power_floor) < floor.max(best_ee) {
                continue;
            }
            for (qi, &pn) in g.ncr_paout_values.iter().enumerate() {
                if self.bound(bw, snr_bh, ac_max[qi], power_floor) < floor.max(best_ee) {
                    continue;
                }
                for &nx in &g.ncr_ntx_values {
                    if !g.ncr_allowed(pn, nx) {
                        continue;
                    }
                    let pact = ncr_output_mw(pn, gain, snr_bh, noise_ncr, nx);
                    let snr_ac = hop_snr(pact, nx, link.ue.n_rx, self.pl_ac, noise_ue);
                    let eff = effective_snr(snr_bh, snr_ac);
                    let rate = shannon_rate(bw, eff);
                    let eta_n = if pact == pn {
                        self.ncr_eta[qi]
                    } else {
                        pa_efficiency_norm(&self.energy.pa, pact)
                    };
                    let p_ncr = ncr_breakdown_active(rx, ncr_tx_part(nx, pact, eta_n, k), k).total;
                    let total = p_gnb + p_ncr;
                    let ee = rate / total;
                    if ee < best_ee {
                        continue;
                    }
                    let key = [pg, nt as f64, bw, pn, nx as f64, nr as f64];
                    if rank(ee, total, &key, best_ee, best_pw, &best_key) == Ordering::Less {
                        best_ee = ee;
                        best_pw = total;
                        best_key = key;
                        best_cfg = Some(IndirectConfig {
                            gnb: gnb_cfg,
                            ncr_paout_max_mw: pn,
                            ncr_ntx: nx,
                            ncr_nrx: nr,
                        });
                    }
                }
            }
        }
        let best = best_cfg.map(|config| Candidate {
            ee: best_ee,
            power: best_pw,
            config,
        });
        (best, total_count)
    }
}

/// `(opt.ee / baseline.ee, opt.rate / baseline.rate)`.
pub fn relative_metrics<C>(opt: &OptResult<C>, baseline: &OptResult<C>) -> (f64, f64) {
    (
        opt.eval.ee / baseline.eval.ee,
        opt.eval.rate_bps / baseline.eval.rate_bps,
    )
}
