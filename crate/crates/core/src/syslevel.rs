//! Multi-sector system-level study.
//!
//! A deployment is a set of three-sector small-cell sites, NCRs attached to
//! sectors, and static UE drops. UEs are associated once, using the
//! most spectrally efficient configurations; each sector then serves its UEs
//! with equal time shares (full buffer). Sectors are evaluated with or
//! without repeaters, with NCRs always on or switched off when idle, and at
//! the baseline or at an EE-optimal sector configuration.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkbudget::{effective_snr, hop_snr, ncr_output_mw, path_loss_linear};
use crate::optimizer::{
    rank, shannon_rate, DirectConfig, EnergyModel, ParameterGrid, RelayLink, TunableConfig,
};
use crate::powermodel::{
    gnb_breakdown, ncr_breakdown_active, ncr_rx_part, ncr_tx_part, pa_efficiency_norm, PowerConstants,
};
use crate::units::db_to_linear;

pub const SECTORS_PER_SITE: u32 = 3;
/// Distances are clamped to the 1 m anchor of the path-loss law.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcrSite {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub sector_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeDrop {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub area_m: [f64; 2],
    pub sites: Vec<Site>,
    pub ncrs: Vec<NcrSite>,
    pub ues: Vec<UeDrop>,
    pub seed: u64,
}

pub fn sector_id(site_id: u32, wedge: u32) -> u32 {
    site_id * SECTORS_PER_SITE + wedge
}

/// Wedge (0, 1, 2) of `(x, y)` seen from `(sx, sy)`: azimuth measured
/// counterclockwise from +x, wedges `[0, 120)`, `[120, 240)`, `[240, 360)`
/// degrees.
pub fn wedge_of(sx: f64, sy: f64, x: f64, y: f64) -> u32 {
    let az = (y - sy).atan2(x - sx).to_degrees().rem_euclid(360.0);
    ((az / 120.0) as u32).min(SECTORS_PER_SITE - 1)
}

fn distance(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    (ax - bx).hypot(ay - by).max(MIN_LINK_DISTANCE_M)
}

impl Deployment {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Deployment(m));
        let [w, h] = self.area_m;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return bad(format!("area must be positive, got {w} x {h}"));
        }
        let mut site_ids = HashSet::new();
        for s in &self.sites {
            if !site_ids.insert(s.id) {
                return bad(format!("duplicate site id {}", s.id));
            }
            if !(s.x.is_finite() && s.y.is_finite()) {
                return bad(format!("site {} has a non-finite position", s.id));
            }
        }
        let mut ncr_ids = HashSet::new();
        for n in &self.ncrs {
            if !ncr_ids.insert(n.id) {
                return bad(format!("duplicate NCR id {}", n.id));
            }
            if !site_ids.contains(&(n.sector_id / SECTORS_PER_SITE)) {
                return bad(format!("NCR {} references missing sector {}", n.id, n.sector_id));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return bad(format!("NCR {} has a non-finite position", n.id));
            }
        }
        let mut ue_ids = HashSet::new();
        for u in &self.ues {
            if !ue_ids.insert(u.id) {
                return bad(format!("duplicate UE id {}", u.id));
            }
            if !(u.x.is_finite() && u.y.is_finite()) {
                return bad(format!("UE {} has a non-finite position", u.id));
            }
        }
        Ok(())
    }

    /// All sector ids, ascending.
    pub fn sector_ids(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .sites
            .iter()
            .flat_map(|s| (0..SECTORS_PER_SITE).map(move |w| sector_id(s.id, w)))
            .collect();
        v.sort_unstable();
        v
    }

    fn site(&self, sector_id: u32) -> &Site {
        let id = sector_id / SECTORS_PER_SITE;
        self.sites.iter().find(|s| s.id == id).expect("validated sector")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeploymentParams {
    pub area_m: [f64; 2],
    pub n_sites: usize,
    pub n_ncrs: usize,
    pub n_ues: usize,
    /// Site jitter as a fraction of the grid cell size.
    pub site_jitter: f64,
    /// Nominal site-NCR distance and its relative spread.
    pub ncr_radius_m: f64,
    pub ncr_radius_spread: f64,
    /// Fraction of sectors that host NCRs.
    pub ncr_host_fraction: f64,
    pub max_ncrs_per_sector: usize,
}

impl Default for DeploymentParams {
    fn default() -> Self {
        Self {
            area_m: [1000.0, 1000.0],
            n_sites: 20,
            n_ncrs: 62,
            n_ues: 600,
            site_jitter: 0.3,
            ncr_radius_m: 150.0,
            ncr_radius_spread: 0.25,
            ncr_host_fraction: 0.4,
            max_ncrs_per_sector: 4,
        }
    }
}

/// Synthetic deployment: sites on a jittered grid, NCRs near the edge of a
/// random subset of sectors, UEs uniform over the area.
pub fn generate_deployment(params: &DeploymentParams, seed: u64) -> Result<Deployment> {
    let [w, h] = params.area_m;
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::Deployment("area must be positive".into()));
    }
    if params.n_sites == 0 {
        return Err(Error::Deployment("need at least one site".into()));
    }
    let n_sectors = params.n_sites * SECTORS_PER_SITE as usize;
    if params.n_ncrs > n_sectors * params.max_ncrs_per_sector {
        return Err(Error::Deployment(format!(
            "{} NCRs do not fit in {} sectors with at most {} per sector",
            params.n_ncrs, n_sectors, params.max_ncrs_per_sector
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cols = ((params.n_sites as f64 * w / h).sqrt().ceil() as usize).max(1);
    let rows = params.n_sites.div_ceil(cols);
    let (cw, ch) = (w / cols as f64, h / rows as f64);
    let sites: Vec<Site> = (0..params.n_sites)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let jx = rng.gen_range(-0.5..=0.5) * params.site_jitter * cw;
            let jy = rng.gen_range(-0.5..=0.5) * params.site_jitter * ch;
            Site {
                id: i as u32,
                x: ((c as f64 + 0.5) * cw + jx).clamp(0.0, w),
                y: ((r as f64 + 0.5) * ch + jy).clamp(0.0, h),
            }
        })
        .collect();

    let mut ncrs = Vec::with_capacity(params.n_ncrs);
    if params.n_ncrs > 0 {
        let n_hosts = ((params.ncr_host_fraction * n_sectors as f64).ceil() as usize)
            .max(params.n_ncrs.div_ceil(params.max_ncrs_per_sector.max(1)))
            .clamp(1, n_sectors);
        let mut hosts: Vec<u32> = sites
            .iter()
            .flat_map(|s| (0..SECTORS_PER_SITE).map(move |k| sector_id(s.id, k)))
            .collect();
        hosts.shuffle(&mut rng);
        hosts.truncate(n_hosts);
        hosts.sort_unstable();
        const MARGIN_DEG: f64 = 10.0;
        for i in 0..params.n_ncrs {
            let sector = hosts[i % n_hosts];
            let site = sites[(sector / SECTORS_PER_SITE) as usize];
            let wedge = (sector % SECTORS_PER_SITE) as f64;
            let mut pos = (site.x, site.y);
            for _ in 0..32 {
                let az = rng.gen_range(wedge * 120.0 + MARGIN_DEG..(wedge + 1.0) * 120.0 - MARGIN_DEG).to_radians();
                let s = params.ncr_radius_spread;
                let r = params.ncr_radius_m * (1.0 + rng.gen_range(-s..=s));
                pos = (site.x + r * az.cos(), site.y + r * az.sin());
                if (0.0..=w).contains(&pos.0) && (0.0..=h).contains(&pos.1) {
                    break;
                }
            }
            ncrs.push(NcrSite {
                id: i as u32,
                x: pos.0.clamp(0.0, w),
                y: pos.1.clamp(0.0, h),
                sector_id: sector,
            });
        }
    }

    let ues = (0..params.n_ues)
        .map(|i| UeDrop {
            id: i as u32,
            x: rng.gen_range(0.0..w),
            y: rng.gen_range(0.0..h),
        })
        .collect();

    Ok(Deployment {
        area_m: params.area_m,
        sites,
        ncrs,
        ues,
        seed,
    })
}

/// Parses and validates a deployment. `origin` names the source in errors.
pub fn parse_deployment(text: &str, origin: &str) -> Result<Deployment> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let dep: Deployment = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: format!("{origin}:{}", e.path()),
        msg: e.inner().to_string(),
    })?;
    dep.validate()?;
    Ok(dep)
}

pub fn load_deployment(path: &Path) -> Result<Deployment> {
    let text = std::fs::read_to_string(path)?;
    parse_deployment(&text, &path.display().to_string())
}

pub fn save_deployment(dep: &Deployment, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(dep).expect("deployment serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ServingPath {
    Direct,
    ViaNcr { ncr_id: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Serving {
    pub sector_id: u32,
    pub path: ServingPath,
    pub snr_effective: f64,
}

/// Serving entry per UE, aligned with `Deployment::ues`; `None` marks an
/// uncovered UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub serving: Vec<Option<Serving>>,
}

impl Association {
    pub fn covered(&self) -> usize {
        self.serving.iter().flatten().count()
    }
}

/// Radio configuration used for association: one gNB setting for every
/// sector and one NCR setting for every repeater.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationConfig {
    pub gnb: DirectConfig,
    pub ncr_paout_max_mw: f64,
    pub ncr_ntx: u32,
    pub ncr_nrx: u32,
}

/// Serves each UE from the sector with the strongest direct link (the
/// site-sector whose wedge holds the UE), on whichever of that sector's
/// paths is best: direct, or through one of the sector's NCRs. NCRs extend
/// their parent sector, so a UE only falls back to another sector's NCR
/// when nothing in its own sector reaches `threshold_snr_linear`. An NCR
/// is a candidate only if the UE lies in its parent sector's wedge. Ties
/// keep the earlier candidate (sites first, then NCRs, in deployment
/// order). UEs below the threshold everywhere are uncovered.
pub fn associate_ues(
    dep: &Deployment,
    link: &RelayLink,
    cfg: &AssociationConfig,
    use_ncrs: bool,
    threshold_snr_linear: f64,
) -> Result<Association> {
    dep.validate()?;
    let bw = cfg.gnb.bandwidth_hz;
    let noise_ue = link.noise_ue.noise_power_mw(bw);
    let noise_ncr = link.noise_ncr.noise_power_mw(bw);
    let g = &cfg.gnb;

    // Backhaul SNR and NCR output per repeater do not depend on the UE.
    let mut relays = Vec::new();
    if use_ncrs {
        for n in &dep.ncrs {
            let site = dep.site(n.sector_id);
            let pl = path_loss_linear(&link.backhaul.at(distance(site.x, site.y, n.x, n.y)))?;
            let bh = hop_snr(g.gnb_paout_mw, g.gnb_ntx, cfg.ncr_nrx, pl, noise_ncr);
            let pact = ncr_output_mw(cfg.ncr_paout_max_mw, link.ncr_max_gain_linear, bh, noise_ncr, cfg.ncr_ntx);
            relays.push((n, site, bh, pact));
        }
    }

    let mut serving = Vec::with_capacity(dep.ues.len());
    for u in &dep.ues {
        let better = |s: &Serving, b: &Option<Serving>| b.map_or(true, |b| s.snr_effective > b.snr_effective);
        let mut anchor: Option<Serving> = None;
        for site in &dep.sites {
            let pl = path_loss_linear(&link.access.at(distance(site.x, site.y, u.x, u.y)))?;
            let s = Serving {
                sector_id: sector_id(site.id, wedge_of(site.x, site.y, u.x, u.y)),
                path: ServingPath::Direct,
                snr_effective: hop_snr(g.gnb_paout_mw, g.gnb_ntx, link.ue.n_rx, pl, noise_ue),
            };
            if better(&s, &anchor) {
                anchor = Some(s);
            }
        }
        let mut own = anchor;
        let mut any = anchor;
        for &(n, site, bh, pact) in &relays {
            if wedge_of(site.x, site.y, u.x, u.y) != n.sector_id % SECTORS_PER_SITE {
                continue;
            }
            let pl = path_loss_linear(&link.access.at(distance(n.x, n.y, u.x, u.y)))?;
            let ac = hop_snr(pact, cfg.ncr_ntx, link.ue.n_rx, pl, noise_ue);
            let s = Serving {
                sector_id: n.sector_id,
                path: ServingPath::ViaNcr { ncr_id: n.id },
                snr_effective: effective_snr(bh, ac),
            };
            if anchor.is_some_and(|a| a.sector_id == n.sector_id) && better(&s, &own) {
                own = Some(s);
            }
            if better(&s, &any) {
                any = Some(s);
            }
        }
        let pick = own
            .filter(|b| b.snr_effective >= threshold_snr_linear)
            .or(any.filter(|b| b.snr_effective >= threshold_snr_linear));
        serving.push(pick);
    }
    Ok(Association { serving })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NcrMode {
    NoRepeaters,
    AlwaysOn,
    /// NCRs without indirect UEs sleep.
    Smart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMode {
    Baseline,
    EeOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Regime {
    pub mode: NcrMode,
    pub opt: OptMode,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime { mode: NcrMode::NoRepeaters, opt: OptMode::Baseline },
        Regime { mode: NcrMode::NoRepeaters, opt: OptMode::EeOptimal },
        Regime { mode: NcrMode::AlwaysOn, opt: OptMode::Baseline },
        Regime { mode: NcrMode::AlwaysOn, opt: OptMode::EeOptimal },
        Regime { mode: NcrMode::Smart, opt: OptMode::Baseline },
        Regime { mode: NcrMode::Smart, opt: OptMode::EeOptimal },
    ];

    pub fn name(&self) -> String {
        let m = match self.mode {
            NcrMode::NoRepeaters => "no_repeaters",
            NcrMode::AlwaysOn => "always_on",
            NcrMode::Smart => "smart",
        };
        let o = match self.opt {
            OptMode::Baseline => "baseline",
            OptMode::EeOptimal => "ee_optimal",
        };
        format!("{m}_{o}")
    }

    pub fn from_name(name: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    /// Exponents, intercepts, receivers, noise and NCR gain. Distances come
    /// from the deployment.
    pub template: RelayLink,
    pub energy: EnergyModel,
    /// Candidate sector configurations for the EE-optimal regimes. Its
    /// maximum is the baseline.
    pub grid: ParameterGrid,
    pub coverage_threshold_snr_linear: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            template: RelayLink::new(1.0, 1.0),
            energy: EnergyModel::new(crate::powermodel::PaEfficiencyModel::fixed(), PowerConstants::default()),
            grid: ParameterGrid::system_default(),
            coverage_threshold_snr_linear: db_to_linear(-3.0),
        }
    }
}

impl SystemSpec {
    pub fn baseline(&self) -> AssociationConfig {
        let m = self.grid.max_indirect();
        AssociationConfig {
            gnb: m.gnb,
            ncr_paout_max_mw: m.ncr_paout_max_mw,
            ncr_ntx: m.ncr_ntx,
            ncr_nrx: m.ncr_nrx,
        }
    }
}

/// NCR setting inside a sector configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcrSetting {
    pub paout_max_mw: f64,
    pub n_tx: u32,
    pub n_rx: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub sector_id: u32,
    pub throughput_bps: f64,
    pub power: f64,
    pub ee: f64,
    pub n_ues_direct: usize,
    pub n_ues_indirect: usize,
    pub active_ncrs: usize,
    pub gnb: DirectConfig,
    /// Settings of the NCRs attached to the sector, by NCR id.
    pub ncrs: Vec<(u32, NcrSetting)>,
}

/// Everything needed to evaluate one sector for a given regime family
/// (with or without repeaters).
#[derive(Debug, Clone)]
struct SectorProblem {
    sector_id: u32,
    /// Ids and path losses of the directly served UEs.
    direct: Vec<(u32, f64)>,
    relays: Vec<RelayGroup>,
}

#[derive(Debug, Clone)]
struct RelayGroup {
    ncr_id: u32,
    pl_backhaul: f64,
    /// Ids and access path losses of the UEs served through this NCR.
    ues: Vec<(u32, f64)>,
}

impl SectorProblem {
    fn n_ues(&self) -> usize {
        self.direct.len() + self.relays.iter().map(|r| r.ues.len()).sum::<usize>()
    }
}

/// Per-sector outcome with per-UE equal-share rates.
struct SectorOutcome {
    report: SectorReport,
    ue_rates: Vec<(u32, f64)>,
}

struct Evaluator<'a> {
    link: &'a RelayLink,
    energy: &'a EnergyModel,
}

impl Evaluator<'_> {
    fn k(&self) -> &PowerConstants {
        &self.energy.consts
    }

    fn gnb_power(&self, g: &DirectConfig) -> f64 {
        let eta = pa_efficiency_norm(&self.energy.pa, g.gnb_paout_mw);
        gnb_breakdown(g.gnb_ntx, g.gnb_paout_mw, eta, self.k()).total
    }

    fn direct_rate(&self, g: &DirectConfig, pl: f64) -> f64 {
        let noise = self.link.noise_ue.noise_power_mw(g.bandwidth_hz);
        shannon_rate(g.bandwidth_hz, hop_snr(g.gnb_paout_mw, g.gnb_ntx, self.link.ue.n_rx, pl, noise))
    }

    /// Backhaul SNR and actual NCR output for one repeater.
    fn relay_state(&self, g: &DirectConfig, c: &NcrSetting, pl_bh: f64) -> (f64, f64) {
        let noise_ncr = self.link.noise_ncr.noise_power_mw(g.bandwidth_hz);
        let bh = hop_snr(g.gnb_paout_mw, g.gnb_ntx, c.n_rx, pl_bh, noise_ncr);
        let pact = ncr_output_mw(c.paout_max_mw, self.link.ncr_max_gain_linear, bh, noise_ncr, c.n_tx);
        (bh, pact)
    }

    fn relay_rate(&self, g: &DirectConfig, c: &NcrSetting, bh: f64, pact: f64, pl_ac: f64) -> f64 {
        let noise_ue = self.link.noise_ue.noise_power_mw(g.bandwidth_hz);
        let ac = hop_snr(pact, c.n_tx, self.link.ue.n_rx, pl_ac, noise_ue);
        shannon_rate(g.bandwidth_hz, effective_snr(bh, ac))
    }

    fn ncr_active_power(&self, c: &NcrSetting, pact: f64) -> f64 {
        let eta = pa_efficiency_norm(&self.energy.pa, pact);
        ncr_breakdown_active(ncr_rx_part(c.n_rx, self.k()), ncr_tx_part(c.n_tx, pact, eta, self.k()), self.k()).total
    }

    fn ncr_power(&self, mode: NcrMode, idle: bool, c: &NcrSetting, pact: f64) -> f64 {
        if mode == NcrMode::Smart && idle {
            self.k().ncr_sleep_power
        } else {
            self.ncr_active_power(c, pact)
        }
    }

    /// Sector throughput, power and EE for one configuration. The only
    /// place where sector metrics are computed.
    fn evaluate(&self, p: &SectorProblem, mode: NcrMode, g: &DirectConfig, ncrs: &[NcrSetting]) -> SectorOutcome {
        let n = p.n_ues();
        let mut rates: Vec<(u32, f64)> = Vec::with_capacity(n);
        for &(id, pl) in &p.direct {
            rates.push((id, self.direct_rate(g, pl)));
        }
        let mut power = self.gnb_power(g);
        let mut active = 0;
        for (grp, c) in p.relays.iter().zip(ncrs) {
            let (bh, pact) = self.relay_state(g, c, grp.pl_backhaul);
            for &(id, pl) in &grp.ues {
                rates.push((id, self.relay_rate(g, c, bh, pact, pl)));
            }
            let idle = grp.ues.is_empty();
            power += self.ncr_power(mode, idle, c, pact);
            if !(mode == NcrMode::Smart && idle) {
                active += 1;
            }
        }
        let sum: f64 = rates.iter().map(|r| r.1).sum();
        let throughput = if n > 0 { sum / n as f64 } else { 0.0 };
        let share = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        SectorOutcome {
            report: SectorReport {
                sector_id: p.sector_id,
                throughput_bps: throughput,
                power,
                ee: throughput / power,
                n_ues_direct: p.direct.len(),
                n_ues_indirect: n - p.direct.len(),
                active_ncrs: active,
                gnb: *g,
                ncrs: p.relays.iter().map(|r| r.ncr_id).zip(ncrs.iter().copied()).collect(),
            },
            ue_rates: rates.into_iter().map(|(id, r)| (id, r * share)).collect(),
        }
    }
}

fn ncr_settings(grid: &ParameterGrid) -> Vec<NcrSetting> {
    let mut v = Vec::new();
    for &p in &grid.ncr_paout_values {
        for &nx in &grid.ncr_ntx_values {
            for &nr in &grid.ncr_nrx_values {
                v.push(NcrSetting {
                    paout_max_mw: p,
                    n_tx: nx,
                    n_rx: nr,
                });
            }
        }
    }
    v
}

fn gnb_settings(grid: &ParameterGrid) -> Vec<DirectConfig> {
    let mut v = Vec::new();
    for &bw in &grid.bw_values {
        for &p in &grid.gnb_paout_values {
            for &n in &grid.gnb_ntx_values {
                v.push(DirectConfig {
                    bandwidth_hz: bw,
                    gnb_paout_mw: p,
                    gnb_ntx: n,
                });
            }
        }
    }
    v
}

/// Best NCR settings for a fixed gNB configuration, by Dinkelbach
/// iteration on the sector sum-rate/power ratio starting from the baseline
/// settings. Returns the best evaluated outcome.
fn optimize_ncrs(
    ev: &Evaluator,
    p: &SectorProblem,
    mode: NcrMode,
    g: &DirectConfig,
    settings: &[NcrSetting],
    start: &[NcrSetting],
) -> (Vec<NcrSetting>, SectorOutcome) {
    let mut best_cfg = start.to_vec();
    let mut best = ev.evaluate(p, mode, g, &best_cfg);
    if p.relays.is_empty() || p.n_ues() == 0 {
        return (best_cfg, best);
    }
    // Rate sum and power of every setting, per NCR.
    let tables: Vec<Vec<(f64, f64)>> = p
        .relays
        .iter()
        .map(|grp| {
            settings
                .iter()
                .map(|c| {
                    let (bh, pact) = ev.relay_state(g, c, grp.pl_backhaul);
                    let a: f64 = grp.ues.iter().map(|&(_, pl)| ev.relay_rate(g, c, bh, pact, pl)).sum();
                    (a, ev.ncr_power(mode, grp.ues.is_empty(), c, pact))
                })
                .collect()
        })
        .collect();
    let n = p.n_ues() as f64;
    for _ in 0..64 {
        // Ratio in sum-rate units.
        let lambda = best.report.ee * n;
        let cfg: Vec<NcrSetting> = tables
            .iter()
            .map(|t| {
                let mut bi = 0;
                for (i, &(a, pw)) in t.iter().enumerate() {
                    let (ba, bp) = t[bi];
                    let (v, bv) = (a - lambda * pw, ba - lambda * bp);
                    if v > bv || (v == bv && pw < bp) {
                        bi = i;
                    }
                }
                settings[bi]
            })
            .collect();
        let out = ev.evaluate(p, mode, g, &cfg);
        if out.report.ee > best.report.ee {
            best = out;
            best_cfg = cfg;
        } else {
            break;
        }
    }
    (best_cfg, best)
}

/// Evaluates one sector in one regime. `problem` must come from the
/// association that matches the regime (with or without repeaters).
fn evaluate_problem(spec: &SystemSpec, p: &SectorProblem, regime: Regime) -> SectorOutcome {
    let ev = Evaluator {
        link: &spec.template,
        energy: &spec.energy,
    };
    let base = spec.baseline();
    let base_ncrs = vec![
        NcrSetting {
            paout_max_mw: base.ncr_paout_max_mw,
            n_tx: base.ncr_ntx,
            n_rx: base.ncr_nrx,
        };
        p.relays.len()
    ];
    match regime.opt {
        OptMode::Baseline => ev.evaluate(p, regime.mode, &base.gnb, &base_ncrs),
        OptMode::EeOptimal => {
            let settings = ncr_settings(&spec.grid);
            let mut best: Option<SectorOutcome> = None;
            for g in gnb_settings(&spec.grid) {
                let (_, out) = optimize_ncrs(&ev, p, regime.mode, &g, &settings, &base_ncrs);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        rank(
                            out.report.ee,
                            out.report.power,
                            &g.tie_key(),
                            b.report.ee,
                            b.report.power,
                            &b.report.gnb.tie_key(),
                        ) == std::cmp::Ordering::Less
                    }
                };
                if better {
                    best = Some(out);
                }
            }
            best.expect("grid validated nonempty")
        }
    }
}

/// Associations and per-sector problems shared by every regime.
#[derive(Debug, Clone)]
pub struct SystemContext {
    pub with_repeaters: Association,
    pub without_repeaters: Association,
    /// UEs covered without repeaters; every regime is evaluated on them.
    pub fairness_set: Vec<u32>,
    sectors_with: Vec<SectorProblem>,
    sectors_without: Vec<SectorProblem>,
}

fn build_problems(dep: &Deployment, spec: &SystemSpec, assoc: &Association, keep: &HashSet<u32>, attach: bool) -> Result<Vec<SectorProblem>> {
    let link = &spec.template;
    let mut map: BTreeMap<u32, SectorProblem> = dep
        .sector_ids()
        .into_iter()
        .map(|s| {
            (s, SectorProblem {
                sector_id: s,
                direct: vec![],
                relays: vec![],
            })
        })
        .collect();
    let mut ncr_slot = BTreeMap::new();
    if attach {
        for n in &dep.ncrs {
            let site = dep.site(n.sector_id);
            let pl = path_loss_linear(&link.backhaul.at(distance(site.x, site.y, n.x, n.y)))?;
            let p = map.get_mut(&n.sector_id).expect("validated sector");
            ncr_slot.insert(n.id, (n.sector_id, p.relays.len()));
            p.relays.push(RelayGroup {
                ncr_id: n.id,
                pl_backhaul: pl,
                ues: vec![],
            });
        }
    }
    for (u, s) in dep.ues.iter().zip(&assoc.serving) {
        let Some(s) = s else { continue };
        if !keep.contains(&u.id) {
            continue;
        }
        match s.path {
            ServingPath::Direct => {
                let site = dep.site(s.sector_id);
                let pl = path_loss_linear(&link.access.at(distance(site.x, site.y, u.x, u.y)))?;
                map.get_mut(&s.sector_id).unwrap().direct.push((u.id, pl));
            }
            ServingPath::ViaNcr { ncr_id } => {
                let n = dep.ncrs.iter().find(|n| n.id == ncr_id).expect("associated NCR exists");
                let pl = path_loss_linear(&link.access.at(distance(n.x, n.y, u.x, u.y)))?;
                let (sec, slot) = ncr_slot[&ncr_id];
                map.get_mut(&sec).unwrap().relays[slot].ues.push((u.id, pl));
            }
        }
    }
    Ok(map.into_values().collect())
}

pub fn prepare_system(dep: &Deployment, spec: &SystemSpec) -> Result<SystemContext> {
    dep.validate()?;
    spec.energy.validate()?;
    spec.grid.validate_indirect()?;
    let base = spec.baseline();
    let t = spec.coverage_threshold_snr_linear;
    let with_repeaters = associate_ues(dep, &spec.template, &base, true, t)?;
    let without_repeaters = associate_ues(dep, &spec.template, &base, false, t)?;
    let fairness_set: Vec<u32> = dep
        .ues
        .iter()
        .zip(&without_repeaters.serving)
        .filter(|(_, s)| s.is_some())
        .map(|(u, _)| u.id)
        .collect();
    let keep: HashSet<u32> = fairness_set.iter().copied().collect();
    Ok(SystemContext {
        sectors_with: build_problems(dep, spec, &with_repeaters, &keep, true)?,
        sectors_without: build_problems(dep, spec, &without_repeaters, &keep, false)?,
        with_repeaters,
        without_repeaters,
        fairness_set,
    })
}

/// Report of one sector in one regime.
pub fn evaluate_sector(ctx: &SystemContext, spec: &SystemSpec, sector_id: u32, regime: Regime) -> Option<SectorReport> {
    let problems = match regime.mode {
        NcrMode::NoRepeaters => &ctx.sectors_without,
        _ => &ctx.sectors_with,
    };
    problems
        .iter()
        .find(|p| p.sector_id == sector_id)
        .map(|p| evaluate_problem(spec, p, regime).report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// By ascending sector id.
    pub sectors: Vec<SectorReport>,
    /// Equal-share rate per UE of the fairness set, by ascending UE id.
    pub ue_rates: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SectorThroughput,
    SectorPower,
    SectorEe,
    UeRate,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::SectorThroughput, Metric::SectorPower, Metric::SectorEe, Metric::UeRate];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::SectorThroughput => "sector_throughput",
            Metric::SectorPower => "sector_power",
            Metric::SectorEe => "sector_ee",
            Metric::UeRate => "ue_rate",
        }
    }
}

impl RegimeReport {
    /// `(entity id, value)` pairs sorted by value, then id: the support of
    /// the empirical CDF.
    pub fn cdf(&self, metric: Metric) -> Vec<(u32, f64)> {
        let mut v: Vec<(u32, f64)> = match metric {
            Metric::SectorThroughput => self.sectors.iter().map(|s| (s.sector_id, s.throughput_bps)).collect(),
            Metric::SectorPower => self.sectors.iter().map(|s| (s.sector_id, s.power)).collect(),
            Metric::SectorEe => self.sectors.iter().map(|s| (s.sector_id, s.ee)).collect(),
            Metric::UeRate => self.ue_rates.clone(),
        };
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub n_ues: usize,
    pub covered_without_repeaters: usize,
    pub covered_with_repeaters: usize,
    pub regimes: Vec<RegimeReport>,
}

impl SystemReport {
    pub fn regime(&self, regime: Regime) -> Option<&RegimeReport> {
        self.regimes.iter().find(|r| r.regime == regime)
    }
}

/// Evaluates every sector in every requested regime.
pub fn run_system(dep: &Deployment, spec: &SystemSpec, regimes: &[Regime]) -> Result<SystemReport> {
    let ctx = prepare_system(dep, spec)?;
    let mut out = Vec::with_capacity(regimes.len());
    for &regime in regimes {
        let problems = match regime.mode {
            NcrMode::NoRepeaters => &ctx.sectors_without,
            _ => &ctx.sectors_with,
        };
        let outcomes: Vec<SectorOutcome> = problems
            .par_iter()
            .map(|p| evaluate_problem(spec, p, regime))
            .collect();
        let mut ue_rates: Vec<(u32, f64)> = outcomes.iter().flat_map(|o| o.ue_rates.iter().copied()).collect();
        ue_rates.sort_by_key(|r| r.0);
        out.push(RegimeReport {
            regime,
            sectors: outcomes.into_iter().map(|o| o.report).collect(),
            ue_rates,
        });
    }
    Ok(SystemReport {
        n_ues: dep.ues.len(),
        covered_without_repeaters: ctx.without_repeaters.covered(),
        covered_with_repeaters: ctx.with_repeaters.covered(),
        regimes: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::{snr_access, snr_backhaul, snr_direct, GnbConfig, LinkGeometry};

    fn fixture() -> Deployment {
        Deployment {
            area_m: [2000.0, 1000.0],
            sites: vec![Site { id: 0, x: 500.0, y: 500.0 }, Site { id: 1, x: 1500.0, y: 500.0 }],
            ncrs: vec![
                NcrSite { id: 0, x: 650.0, y: 510.0, sector_id: 0 },
                NcrSite { id: 1, x: 1650.0, y: 510.0, sector_id: 3 },
            ],
            ues: vec![
                UeDrop { id: 0, x: 600.0, y: 500.0 },
                UeDrop { id: 1, x: 800.0, y: 520.0 },
                UeDrop { id: 2, x: 300.0, y: 600.0 },
                UeDrop { id: 3, x: 1400.0, y: 300.0 },
            ],
            seed: 0,
        }
    }

    fn small_spec() -> SystemSpec {
        SystemSpec {
            grid: ParameterGrid {
                bw_values: vec![200e6, 400e6],
                gnb_paout_values: crate::optimizer::paout_steps_mw(0.0, 10.0, 2.5),
                gnb_ntx_values: vec![1, 32, 96, 192],
                ncr_paout_values: crate::optimizer::paout_steps_mw(0.0, 10.0, 5.0),
                ncr_ntx_values: vec![8, 16, 32],
                ncr_nrx_values: vec![8, 16, 32],
                gnb_eirp_cap_dbm: None,
                ncr_eirp_cap_dbm: None,
            },
            ..SystemSpec::default()
        }
    }

    #[test]
    fn wedges_and_sector_ids() {
        assert_eq!(wedge_of(0.0, 0.0, 1.0, 0.0), 0);
        assert_eq!(wedge_of(0.0, 0.0, -1.0, 0.1), 1);
        assert_eq!(wedge_of(0.0, 0.0, 0.0, -1.0), 2);
        assert_eq!(wedge_of(0.0, 0.0, 1.0, -1e-9), 2);
        assert_eq!(sector_id(4, 2), 14);
        assert_eq!(fixture().sector_ids(), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = DeploymentParams::default();
        let a = generate_deployment(&p, 7).unwrap();
        assert_eq!(a, generate_deployment(&p, 7).unwrap());
        assert_ne!(a, generate_deployment(&p, 8).unwrap());
        assert_eq!((a.sites.len(), a.ncrs.len(), a.ues.len()), (20, 62, 600));
        a.validate().unwrap();
        let mut per_sector = BTreeMap::new();
        for n in &a.ncrs {
            let s = a.site(n.sector_id);
            assert_eq!(wedge_of(s.x, s.y, n.x, n.y), n.sector_id % SECTORS_PER_SITE);
            *per_sector.entry(n.sector_id).or_insert(0) += 1;
        }
        assert!(per_sector.values().all(|&c| c <= p.max_ncrs_per_sector));
        for u in &a.ues {
            assert!((0.0..=1000.0).contains(&u.x) && (0.0..=1000.0).contains(&u.y));
        }
    }

    #[test]
    fn too_many_ncrs_is_an_error() {
        let p = DeploymentParams { n_sites: 2, n_ncrs: 25, ..DeploymentParams::default() };
        assert!(matches!(generate_deployment(&p, 1), Err(Error::Deployment(_))));
    }

    #[test]
    fn parse_errors_name_the_path() {
        let text = r#"{"area_m":[10,10],"sites":[{"id":0,"x":1,"y":"a"}],"ncrs":[],"ues":[],"seed":0}"#;
        match parse_deployment(text, "dep.json").unwrap_err() {
            Error::Parse { path, .. } => assert_eq!(path, "dep.json:sites[0].y"),
            e => panic!("unexpected {e}"),
        }
        let text = r#"{"area_m":[10,10],"sites":[],"ncrs":[],"ues":[],"seed":0,"extra":1}"#;
        assert!(matches!(parse_deployment(text, "d"), Err(Error::Parse { .. })));
    }

    #[test]
    fn ncr_needs_an_existing_sector() {
        let mut d = fixture();
        d.ncrs[0].sector_id = 7;
        assert!(matches!(d.validate(), Err(Error::Deployment(_))));
        let mut d = fixture();
        d.ues[1].id = 0;
        assert!(matches!(d.validate(), Err(Error::Deployment(_))));
    }

    #[test]
    fn deployment_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        let d = generate_deployment(&DeploymentParams { n_ues: 30, ..DeploymentParams::default() }, 3).unwrap();
        save_deployment(&d, &p).unwrap();
        assert_eq!(load_deployment(&p).unwrap(), d);
    }

    #[test]
    fn association_picks_the_best_path_in_the_anchor_sector() {
        let dep = fixture();
        let spec = SystemSpec::default();
        let link = &spec.template;
        let cfg = spec.baseline();
        let gnb = cfg.gnb.gnb();
        let ncr = link.ncr(cfg.ncr_ntx, cfg.ncr_nrx, cfg.ncr_paout_max_mw);
        let direct = |sx: f64, sy: f64, u: &UeDrop| {
            let d = (sx - u.x).hypot(sy - u.y);
            snr_direct(&gnb, &link.ue, &link.access.at(d), &link.noise_ue).unwrap()
        };
        let via = |n: &NcrSite, s: &Site, u: &UeDrop| {
            let bh = snr_backhaul(&gnb, &ncr, &LinkGeometry { distance_m: (s.x - n.x).hypot(s.y - n.y), ..link.backhaul }, &link.noise_ncr).unwrap();
            let pact = crate::linkbudget::ncr_pa_output(&ncr, bh, &link.noise_ncr, gnb.bandwidth_hz).unwrap();
            let ac = snr_access(&ncr, &link.ue, &link.access.at((n.x - u.x).hypot(n.y - u.y)), &link.noise_ue, pact, gnb.bandwidth_hz).unwrap();
            effective_snr(bh, ac)
        };

        let a = associate_ues(&dep, link, &cfg, true, spec.coverage_threshold_snr_linear).unwrap();
        let s = &dep.sites[0];
        let u1 = &dep.ues[1];
        let (d1, r1) = (direct(s.x, s.y, u1), via(&dep.ncrs[0], s, u1));
        let s1 = a.serving[1].unwrap();
        assert_eq!(s1.sector_id, 0);
        if r1 > d1 {
            assert_eq!(s1.path, ServingPath::ViaNcr { ncr_id: 0 });
            assert_eq!(s1.snr_effective, r1);
        } else {
            assert_eq!(s1.path, ServingPath::Direct);
        }
        // Sector 1 has no NCR, and NCR 0 is outside the UE's wedge.
        let s2 = a.serving[2].unwrap();
        assert_eq!((s2.sector_id, s2.path), (1, ServingPath::Direct));
        assert!((s2.snr_effective - direct(s.x, s.y, &dep.ues[2])).abs() <= 1e-12 * s2.snr_effective);
        assert_eq!(a.serving[3].unwrap().sector_id, 5);

        let b = associate_ues(&dep, link, &cfg, false, spec.coverage_threshold_snr_linear).unwrap();
        assert!(b.serving.iter().flatten().all(|s| s.path == ServingPath::Direct));
        let none = associate_ues(&dep, link, &cfg, true, f64::INFINITY).unwrap();
        assert_eq!(none.covered(), 0);
    }

    #[test]
    fn far_ue_is_uncovered() {
        let mut dep = fixture();
        dep.sites.truncate(1);
        dep.ncrs.truncate(1);
        dep.ues = vec![UeDrop { id: 0, x: 500.0, y: 1e6 }];
        let spec = SystemSpec::default();
        let a = associate_ues(&dep, &spec.template, &spec.baseline(), true, spec.coverage_threshold_snr_linear).unwrap();
        assert_eq!(a.serving, vec![None]);
    }

    #[test]
    fn sector_metrics_are_consistent() {
        let dep = fixture();
        let spec = small_spec();
        let rep = run_system(&dep, &spec, &Regime::ALL).unwrap();
        let get = |m, o| rep.regime(Regime { mode: m, opt: o }).unwrap();
        for r in &rep.regimes {
            assert_eq!(r.sectors.len(), 6);
            for s in &r.sectors {
                assert_eq!(s.ee, s.throughput_bps / s.power);
            }
            let total: f64 = r.ue_rates.iter().map(|u| u.1).sum();
            let n: usize = r.sectors.iter().map(|s| s.n_ues_direct + s.n_ues_indirect).sum();
            assert_eq!(n, r.ue_rates.len());
            let tp: f64 = r.sectors.iter().map(|s| s.throughput_bps).sum();
            assert!((total - tp).abs() <= 1e-9 * tp);
        }
        let k = &spec.energy.consts;
        let gnb_base = gnb_breakdown(192, 10.0, 1.0, k).total;
        for opt in [OptMode::Baseline, OptMode::EeOptimal] {
            let off = get(NcrMode::NoRepeaters, opt);
            let on = get(NcrMode::AlwaysOn, opt);
            let smart = get(NcrMode::Smart, opt);
            // Sectors 1, 2 and 5 have no NCR: identical in every mode.
            for i in [1, 2, 5] {
                assert_eq!(on.sectors[i].throughput_bps, off.sectors[i].throughput_bps);
                assert_eq!(on.sectors[i].power, off.sectors[i].power);
                assert_eq!(smart.sectors[i], on.sectors[i]);
            }
            // Sector 3 hosts an idle NCR.
            assert_eq!(smart.sectors[3].active_ncrs, 0);
            assert_eq!(on.sectors[3].active_ncrs, 1);
            if opt == OptMode::Baseline {
                assert_eq!(smart.sectors[3].power, gnb_base + k.ncr_sleep_power);
                assert!(on.sectors[3].power > smart.sectors[3].power);
            }
        }
        for mode in [NcrMode::NoRepeaters, NcrMode::AlwaysOn, NcrMode::Smart] {
            let b = get(mode, OptMode::Baseline);
            let e = get(mode, OptMode::EeOptimal);
            for (x, y) in e.sectors.iter().zip(&b.sectors) {
                assert!(x.ee >= y.ee, "sector {}: {} < {}", x.sector_id, x.ee, y.ee);
            }
        }
    }

    #[test]
    fn evaluate_sector_matches_run() {
        let dep = fixture();
        let spec = small_spec();
        let ctx = prepare_system(&dep, &spec).unwrap();
        let rep = run_system(&dep, &spec, &Regime::ALL).unwrap();
        for r in &rep.regimes {
            for s in &r.sectors {
                assert_eq!(evaluate_sector(&ctx, &spec, s.sector_id, r.regime).as_ref(), Some(s));
            }
        }
        assert!(evaluate_sector(&ctx, &spec, 99, Regime::ALL[0]).is_none());
        assert_eq!(ctx.fairness_set, vec![0, 1, 2, 3]);
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(Regime::from_name(&r.name()), Some(r));
        }
        assert_eq!(Regime::from_name("sometimes"), None);
    }

    #[test]
    fn baseline_sector_matches_link_level_power() {
        let dep = fixture();
        let spec = small_spec();
        let rep = run_system(&dep, &spec, &[Regime { mode: NcrMode::NoRepeaters, opt: OptMode::Baseline }]).unwrap();
        let base = spec.baseline().gnb.gnb();
        let p = crate::powermodel::gnb_power(&base, &spec.energy.pa, &spec.energy.consts).unwrap().total;
        let _: GnbConfig = base;
        for s in &rep.regimes[0].sectors {
            assert_eq!(s.power, p);
        }
    }
}
