//! Run configuration: a strict JSON schema in dB units, resolved against
//! defaults and command-line overrides into linear-unit study inputs.
//!
//! Resolution order is flags, then file, then defaults. Unknown keys are
//! rejected and range errors name the offending key path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::linkbudget::{LinkGeometry, NoiseModel, UeConfig};
use crate::optimizer::{
    element_steps, EnergyModel, ParameterGrid, RelayLink, GNB_MAX_NTX, MAX_BANDWIDTH_HZ, MIN_BANDWIDTH_HZ,
    NCR_MAX_ELEMENTS, PAOUT_MAX_DBM, PAOUT_MIN_DBM,
};
use crate::powermodel::{EfficiencyCurve, PaEfficiencyModel, PaKind, PowerConstants};
use crate::scenarios::{log_spaced, BaselineOverrides, ScMcSpec, SweepSpec, DEFAULT_BACKHAUL_M};
use crate::syslevel::{DeploymentParams, Regime, SystemSpec};
use crate::units::{db_to_linear, dbm_to_mw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    DirectSweep,
    IndirectSweep,
    CompareMc,
    System,
}

/// Candidate values per dimension. Unset lists take the study's defaults;
/// PA output lists default to `[0, 10]` dBm in `paout_step_db` steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub bw_mhz: Option<Vec<f64>>,
    pub gnb_paout_dbm: Option<Vec<f64>>,
    pub gnb_ntx: Option<Vec<u32>>,
    pub ncr_paout_dbm: Option<Vec<f64>>,
    pub ncr_ntx: Option<Vec<u32>>,
    pub ncr_nrx: Option<Vec<u32>>,
    pub paout_step_db: Option<f64>,
    pub gnb_eirp_cap_dbm: Option<f64>,
    pub ncr_eirp_cap_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub ref_pathloss_db: f64,
    pub thermal_noise_dbm_per_hz: f64,
    pub nf_ue_db: f64,
    pub nf_ncr_db: f64,
    pub ue_n_rx: u32,
    pub ncr_max_gain_db: f64,
    pub backhaul_exponent: f64,
    pub access_exponent: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        use crate::linkbudget::*;
        Self {
            ref_pathloss_db: DEFAULT_REF_PATHLOSS_DB,
            thermal_noise_dbm_per_hz: DEFAULT_THERMAL_NOISE_DBM_PER_HZ,
            nf_ue_db: DEFAULT_NF_UE_DB,
            nf_ncr_db: DEFAULT_NF_NCR_DB,
            ue_n_rx: DEFAULT_UE_N_RX,
            ncr_max_gain_db: DEFAULT_NCR_MAX_GAIN_DB,
            backhaul_exponent: BACKHAUL_PATHLOSS_EXPONENT,
            access_exponent: ACCESS_PATHLOSS_EXPONENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaConfig {
    pub curve: EfficiencyCurve,
    pub paout_ref_dbm: f64,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self {
            curve: EfficiencyCurve::legacy(),
            paout_ref_dbm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Explicit distances; when unset, `points` log-spaced values over
    /// `[min_m, max_m]`.
    pub distances_m: Option<Vec<f64>>,
    pub min_m: f64,
    pub max_m: f64,
    pub points: usize,
    /// Fixed gNB-NCR distance of the relayed sweep.
    pub backhaul_m: f64,
    pub baseline_gnb_paout_dbm: Option<f64>,
    pub baseline_ncr_paout_dbm: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            distances_m: None,
            min_m: 5.0,
            max_m: 150.0,
            points: 40,
            backhaul_m: DEFAULT_BACKHAUL_M,
            baseline_gnb_paout_dbm: None,
            baseline_ncr_paout_dbm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub target_snr_db: f64,
    pub bw_mhz: f64,
    pub sc_ntx: u32,
    pub sc_paout_dbm: f64,
    pub ncr_ntx: u32,
    pub ncr_nrx: u32,
    pub ncr_paout_dbm: f64,
    pub mc_ntx: Vec<u32>,
    pub mc_paout_min_dbm: f64,
    pub mc_paout_max_dbm: f64,
    pub min_distance_m: f64,
    pub direct_samples: usize,
    pub ncr_samples: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            target_snr_db: 0.0,
            bw_mhz: 400.0,
            sc_ntx: 192,
            sc_paout_dbm: 10.0,
            ncr_ntx: 32,
            ncr_nrx: 32,
            ncr_paout_dbm: 10.0,
            mc_ntx: vec![192, 256, 384, 512, 768, 1024],
            mc_paout_min_dbm: 0.0,
            mc_paout_max_dbm: 13.0,
            min_distance_m: 5.0,
            direct_samples: 20,
            ncr_samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Deployment JSON to load instead of generating one.
    pub deployment_file: Option<PathBuf>,
    pub deployment: DeploymentParams,
    pub coverage_threshold_db: f64,
    pub grid: GridConfig,
    /// Regime names such as `smart_ee_optimal`.
    pub regimes: Vec<String>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            deployment_file: None,
            deployment: DeploymentParams::default(),
            coverage_threshold_db: -3.0,
            grid: GridConfig::default(),
            regimes: Regime::ALL.iter().map(Regime::name).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub study: Option<Study>,
    pub pa_model: PaKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub constants: PowerConstants,
    pub pa: PaConfig,
    pub link: LinkConfig,
    pub sweep: SweepConfig,
    pub compare: CompareConfig,
    pub system: SystemConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            study: None,
            pa_model: PaKind::Fixed,
            seed: 1,
            output_dir: PathBuf::from("out"),
            grid: GridConfig::default(),
            constants: PowerConstants::default(),
            pa: PaConfig::default(),
            link: LinkConfig::default(),
            sweep: SweepConfig::default(),
            compare: CompareConfig::default(),
            system: SystemConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub study: Option<Study>,
    pub output_dir: Option<PathBuf>,
    pub pa_model: Option<PaKind>,
    pub seed: Option<u64>,
    pub paout_step_db: Option<f64>,
}

/// Parses a config document. An empty or whitespace-only document is the
/// empty object.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse {
            path: if path == "." { origin.to_string() } else { format!("{origin}:{path}") },
            msg: e.inner().to_string(),
        }
    })
}

/// Loads `file` (if any), applies `overrides`, fills every default and
/// validates the result.
pub fn parse_config(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Parse {
                path: p.display().to_string(),
                msg: e.to_string(),
            })?;
            parse_config_str(&text, &p.display().to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = overrides.study {
        cfg.study = Some(s);
    }
    if let Some(o) = &overrides.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(m) = overrides.pa_model {
        cfg.pa_model = m;
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(step) = overrides.paout_step_db {
        for g in [&mut cfg.grid, &mut cfg.system.grid] {
            g.paout_step_db = Some(step);
            g.gnb_paout_dbm = None;
            g.ncr_paout_dbm = None;
        }
    }
    cfg.resolve_defaults()?;
    cfg.validate()?;
    Ok(cfg)
}

fn paout_steps_dbm(step: f64) -> Vec<f64> {
    let n = ((PAOUT_MAX_DBM - PAOUT_MIN_DBM) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| PAOUT_MIN_DBM + i as f64 * step).collect();
    if (v[n] - PAOUT_MAX_DBM).abs() > 1e-9 {
        v.push(PAOUT_MAX_DBM);
    }
    v
}

impl GridConfig {
    fn fill(&mut self, path: &str, system: bool) -> Result<()> {
        let step = self.paout_step_db.unwrap_or(if system { 1.0 } else { 0.5 });
        if !(step > 0.0 && step.is_finite()) {
            return config_err(format!("{path}.paout_step_db"), format!("must be > 0, got {step}"));
        }
        self.paout_step_db = Some(step);
        let (bw, ntx_step, ncr_el): (Vec<f64>, u32, Vec<u32>) = if system {
            (vec![100.0, 200.0, 400.0], 8, (1..=8).map(|i| 4 * i).collect())
        } else {
            (vec![1.0, 50.0, 100.0, 200.0, 400.0], 4, (1..=NCR_MAX_ELEMENTS).collect())
        };
        self.bw_mhz.get_or_insert(bw);
        self.gnb_paout_dbm.get_or_insert_with(|| paout_steps_dbm(step));
        self.ncr_paout_dbm.get_or_insert_with(|| paout_steps_dbm(step));
        self.gnb_ntx.get_or_insert_with(|| element_steps(GNB_MAX_NTX, ntx_step));
        self.ncr_ntx.get_or_insert(ncr_el.clone());
        self.ncr_nrx.get_or_insert(ncr_el);
        Ok(())
    }

    fn validate(&self, path: &str) -> Result<()> {
        fn ascending<T: PartialOrd + Copy + std::fmt::Display>(path: String, v: &[T]) -> Result<()> {
            if v.is_empty() {
                return config_err(path, "must not be empty");
            }
            for (i, w) in v.windows(2).enumerate() {
                if !(w[0] < w[1]) {
                    return config_err(format!("{path}[{}]", i + 1), format!("must be strictly ascending ({} after {})", w[1], w[0]));
                }
            }
            Ok(())
        }
        fn within<T: PartialOrd + Copy + std::fmt::Display>(path: &str, v: &[T], lo: T, hi: T, unit: &str) -> Result<()> {
            for (i, x) in v.iter().enumerate() {
                if !(*x >= lo && *x <= hi) {
                    return config_err(format!("{path}[{i}]"), format!("{x} is outside [{lo}, {hi}] {unit}"));
                }
            }
            Ok(())
        }
        let bw = self.bw_mhz.as_deref().unwrap_or_default();
        let f = |k: &str| format!("{path}.{k}");
        ascending(f("bw_mhz"), bw)?;
        within(&f("bw_mhz"), bw, MIN_BANDWIDTH_HZ / 1e6, MAX_BANDWIDTH_HZ / 1e6, "MHz")?;
        for (k, v) in [("gnb_paout_dbm", &self.gnb_paout_dbm), ("ncr_paout_dbm", &self.ncr_paout_dbm)] {
            let v = v.as_deref().unwrap_or_default();
            ascending(f(k), v)?;
            within(&f(k), v, PAOUT_MIN_DBM, PAOUT_MAX_DBM, "dBm")?;
        }
        let g = self.gnb_ntx.as_deref().unwrap_or_default();
        ascending(f("gnb_ntx"), g)?;
        within(&f("gnb_ntx"), g, 1, GNB_MAX_NTX, "elements")?;
        for (k, v) in [("ncr_ntx", &self.ncr_ntx), ("ncr_nrx", &self.ncr_nrx)] {
            let v = v.as_deref().unwrap_or_default();
            ascending(f(k), v)?;
            within(&f(k), v, 1, NCR_MAX_ELEMENTS, "elements")?;
        }
        for (k, v) in [("gnb_eirp_cap_dbm", self.gnb_eirp_cap_dbm), ("ncr_eirp_cap_dbm", self.ncr_eirp_cap_dbm)] {
            if v.is_some_and(|c| !c.is_finite()) {
                return config_err(f(k), "must be finite");
            }
        }
        Ok(())
    }

    /// Linear-unit grid. Call after `fill`.
    pub fn to_grid(&self) -> ParameterGrid {
        let mw = |v: &Option<Vec<f64>>| v.as_deref().unwrap_or_default().iter().map(|&d| dbm_to_mw(d)).collect();
        ParameterGrid {
            bw_values: self.bw_mhz.as_deref().unwrap_or_default().iter().map(|m| m * 1e6).collect(),
            gnb_paout_values: mw(&self.gnb_paout_dbm),
            gnb_ntx_values: self.gnb_ntx.clone().unwrap_or_default(),
            ncr_paout_values: mw(&self.ncr_paout_dbm),
            ncr_ntx_values: self.ncr_ntx.clone().unwrap_or_default(),
            ncr_nrx_values: self.ncr_nrx.clone().unwrap_or_default(),
            gnb_eirp_cap_dbm: self.gnb_eirp_cap_dbm,
            ncr_eirp_cap_dbm: self.ncr_eirp_cap_dbm,
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config_err(path, format!("must be > 0, got {v}"))
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        config_err(path, format!("must be finite, got {v}"))
    }
}

fn paout_in_range(path: &str, v: f64) -> Result<()> {
    if (PAOUT_MIN_DBM..=PAOUT_MAX_DBM).contains(&v) {
        Ok(())
    } else {
        config_err(path, format!("{v} is outside [{PAOUT_MIN_DBM}, {PAOUT_MAX_DBM}] dBm"))
    }
}

impl RunConfig {
    /// Replaces every unset optional value by its default so the config
    /// echoes every effective parameter.
    pub fn resolve_defaults(&mut self) -> Result<()> {
        self.grid.fill("grid", false)?;
        self.system.grid.fill("system.grid", true)?;
        if self.sweep.distances_m.is_none() {
            positive("sweep.min_m", self.sweep.min_m)?;
            positive("sweep.max_m", self.sweep.max_m)?;
            if self.sweep.points == 0 {
                return config_err("sweep.points", "must be >= 1");
            }
            if !(self.sweep.max_m >= self.sweep.min_m) {
                return config_err("sweep.max_m", "must be >= sweep.min_m");
            }
            self.sweep.distances_m = Some(log_spaced(self.sweep.min_m, self.sweep.max_m, self.sweep.points));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate("grid")?;
        self.system.grid.validate("system.grid")?;

        let l = &self.link;
        finite("link.ref_pathloss_db", l.ref_pathloss_db)?;
        finite("link.thermal_noise_dbm_per_hz", l.thermal_noise_dbm_per_hz)?;
        for (k, v) in [("link.nf_ue_db", l.nf_ue_db), ("link.nf_ncr_db", l.nf_ncr_db)] {
            if !(v >= 0.0 && v.is_finite()) {
                return config_err(k, format!("noise figure must be >= 0 dB, got {v}"));
            }
        }
        if l.ue_n_rx == 0 {
            return config_err("link.ue_n_rx", "must be >= 1");
        }
        finite("link.ncr_max_gain_db", l.ncr_max_gain_db)?;
        positive("link.backhaul_exponent", l.backhaul_exponent)?;
        positive("link.access_exponent", l.access_exponent)?;

        self.constants.validate().map_err(|e| Error::Config {
            path: "constants".into(),
            msg: e.to_string(),
        })?;
        finite("pa.paout_ref_dbm", self.pa.paout_ref_dbm)?;
        self.pa_model().validate().map_err(|e| Error::Config {
            path: "pa.curve".into(),
            msg: e.to_string(),
        })?;

        let s = &self.sweep;
        let d = s.distances_m.as_deref().unwrap_or_default();
        if d.is_empty() {
            return config_err("sweep.distances_m", "must not be empty");
        }
        for (i, x) in d.iter().enumerate() {
            positive(&format!("sweep.distances_m[{i}]"), *x)?;
            if i > 0 && !(d[i - 1] < *x) {
                return config_err(format!("sweep.distances_m[{i}]"), "must be strictly ascending");
            }
        }
        positive("sweep.backhaul_m", s.backhaul_m)?;
        if let Some(p) = s.baseline_gnb_paout_dbm {
            finite("sweep.baseline_gnb_paout_dbm", p)?;
        }
        if let Some(p) = s.baseline_ncr_paout_dbm {
            finite("sweep.baseline_ncr_paout_dbm", p)?;
        }

        let c = &self.compare;
        finite("compare.target_snr_db", c.target_snr_db)?;
        if !(c.bw_mhz * 1e6 >= MIN_BANDWIDTH_HZ && c.bw_mhz * 1e6 <= MAX_BANDWIDTH_HZ) {
            return config_err("compare.bw_mhz", format!("{} is outside [1, 400] MHz", c.bw_mhz));
        }
        if !(1..=GNB_MAX_NTX).contains(&c.sc_ntx) {
            return config_err("compare.sc_ntx", format!("{} is outside [1, {GNB_MAX_NTX}]", c.sc_ntx));
        }
        paout_in_range("compare.sc_paout_dbm", c.sc_paout_dbm)?;
        paout_in_range("compare.ncr_paout_dbm", c.ncr_paout_dbm)?;
        for (k, v) in [("compare.ncr_ntx", c.ncr_ntx), ("compare.ncr_nrx", c.ncr_nrx)] {
            if !(1..=NCR_MAX_ELEMENTS).contains(&v) {
                return config_err(k, format!("{v} is outside [1, {NCR_MAX_ELEMENTS}]"));
            }
        }
        if c.mc_ntx.is_empty() || c.mc_ntx.contains(&0) {
            return config_err("compare.mc_ntx", "must be a nonempty list of positive element counts");
        }
        finite("compare.mc_paout_min_dbm", c.mc_paout_min_dbm)?;
        finite("compare.mc_paout_max_dbm", c.mc_paout_max_dbm)?;
        if !(c.mc_paout_max_dbm >= c.mc_paout_min_dbm) {
            return config_err("compare.mc_paout_max_dbm", "must be >= compare.mc_paout_min_dbm");
        }
        positive("compare.min_distance_m", c.min_distance_m)?;
        if c.direct_samples == 0 || c.ncr_samples == 0 {
            return config_err("compare.direct_samples", "sample counts must be >= 1");
        }

        finite("system.coverage_threshold_db", self.system.coverage_threshold_db)?;
        let dp = &self.system.deployment;
        positive("system.deployment.area_m[0]", dp.area_m[0])?;
        positive("system.deployment.area_m[1]", dp.area_m[1])?;
        if dp.n_sites == 0 {
            return config_err("system.deployment.n_sites", "must be >= 1");
        }
        positive("system.deployment.ncr_radius_m", dp.ncr_radius_m)?;
        if !(0.0..1.0).contains(&dp.ncr_radius_spread) {
            return config_err("system.deployment.ncr_radius_spread", "must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&dp.site_jitter) {
            return config_err("system.deployment.site_jitter", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&dp.ncr_host_fraction) {
            return config_err("system.deployment.ncr_host_fraction", "must lie in [0, 1]");
        }
        if dp.max_ncrs_per_sector == 0 && dp.n_ncrs > 0 {
            return config_err("system.deployment.max_ncrs_per_sector", "must be >= 1 when NCRs are requested");
        }
        self.regimes()?;
        Ok(())
    }

    pub fn regimes(&self) -> Result<Vec<Regime>> {
        if self.system.regimes.is_empty() {
            return config_err("system.regimes", "must not be empty");
        }
        self.system
            .regimes
            .iter()
            .enumerate()
            .map(|(i, n)| match Regime::from_name(n) {
                Some(r) => Ok(r),
                None => config_err(format!("system.regimes[{i}]"), format!("unknown regime `{n}`")),
            })
            .collect()
    }

    pub fn pa_model(&self) -> PaEfficiencyModel {
        PaEfficiencyModel {
            kind: self.pa_model,
            curve: self.pa.curve.clone(),
            paout_ref_mw: dbm_to_mw(self.pa.paout_ref_dbm),
        }
    }

    pub fn energy(&self) -> EnergyModel {
        EnergyModel::new(self.pa_model(), self.constants.clone())
    }

    /// Link template with placeholder distances.
    pub fn relay_template(&self, backhaul_m: f64) -> RelayLink {
        let l = &self.link;
        RelayLink {
            backhaul: LinkGeometry::new(backhaul_m, l.backhaul_exponent, l.ref_pathloss_db),
            access: LinkGeometry::new(1.0, l.access_exponent, l.ref_pathloss_db),
            ue: UeConfig { n_rx: l.ue_n_rx },
            noise_ue: NoiseModel::from_db(l.nf_ue_db, l.thermal_noise_dbm_per_hz),
            noise_ncr: NoiseModel::from_db(l.nf_ncr_db, l.thermal_noise_dbm_per_hz),
            ncr_max_gain_linear: db_to_linear(l.ncr_max_gain_db),
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            distances_m: self.sweep.distances_m.clone().unwrap_or_default(),
            template: self.relay_template(self.sweep.backhaul_m),
            energy: self.energy(),
            grid: self.grid.to_grid(),
            baseline: BaselineOverrides {
                gnb_paout_mw: self.sweep.baseline_gnb_paout_dbm.map(dbm_to_mw),
                ncr_paout_mw: self.sweep.baseline_ncr_paout_dbm.map(dbm_to_mw),
            },
        }
    }

    pub fn compare_spec(&self) -> ScMcSpec {
        let c = &self.compare;
        ScMcSpec {
            target_snr_linear: db_to_linear(c.target_snr_db),
            sc: crate::linkbudget::GnbConfig {
                n_tx: c.sc_ntx,
                paout_mw: dbm_to_mw(c.sc_paout_dbm),
                bandwidth_hz: c.bw_mhz * 1e6,
            },
            ncr_n_tx: c.ncr_ntx,
            ncr_n_rx: c.ncr_nrx,
            ncr_paout_max_mw: dbm_to_mw(c.ncr_paout_dbm),
            mc_ntx_candidates: c.mc_ntx.clone(),
            mc_paout_min_mw: dbm_to_mw(c.mc_paout_min_dbm),
            mc_paout_max_mw: dbm_to_mw(c.mc_paout_max_dbm),
            template: self.relay_template(1.0),
            energy: self.energy(),
            min_distance_m: c.min_distance_m,
            direct_samples: c.direct_samples,
            ncr_samples: c.ncr_samples,
        }
    }

    pub fn system_spec(&self) -> SystemSpec {
        SystemSpec {
            template: self.relay_template(1.0),
            energy: self.energy(),
            grid: self.system.grid.to_grid(),
            coverage_threshold_snr_linear: db_to_linear(self.system.coverage_threshold_db),
        }
    }
}
