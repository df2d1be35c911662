//! Link-level studies: EE-optimal configuration versus distance for the
//! direct and relayed topologies, the back-off order read off those sweeps,
//! coverage ranges, and the small cell + NCR versus macro cell comparison.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linkbudget::{
    hop_snr, ncr_output_mw, path_loss_linear, GnbConfig, LinkGeometry, NcrConfig, NoiseModel,
};
use crate::optimizer::{
    ee_direct, ee_indirect, evaluate_direct, evaluate_indirect, optimize_direct, optimize_indirect,
    relative_metrics, DirectConfig, DirectLink, EnergyModel, IndirectConfig, OptResult,
    ParameterGrid, RelayLink, TunableConfig,
};
use crate::powermodel::{gnb_power, PowerConstants};
use crate::units::dbm_to_mw;

/// `n` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Overrides of the baseline ("most spectrally efficient") configuration.
/// Unset fields take the maximum grid value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineOverrides {
    pub gnb_paout_mw: Option<f64>,
    pub ncr_paout_mw: Option<f64>,
}

impl BaselineOverrides {
    pub fn direct(&self, grid: &ParameterGrid) -> DirectConfig {
        let mut c = grid.max_direct();
        if let Some(p) = self.gnb_paout_mw {
            c.gnb_paout_mw = p;
        }
        c
    }

    pub fn indirect(&self, grid: &ParameterGrid) -> IndirectConfig {
        let mut c = grid.max_indirect();
        c.gnb = self.direct(grid);
        if let Some(p) = self.ncr_paout_mw {
            c.ncr_paout_max_mw = p;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Swept distance: gNB-UE for the direct topology, NCR-UE for the
    /// relayed one.
    pub distances_m: Vec<f64>,
    /// Geometry, receivers and noise. The access distance is replaced by
    /// each swept distance; the backhaul distance stays fixed.
    pub template: RelayLink,
    pub energy: EnergyModel,
    pub grid: ParameterGrid,
    pub baseline: BaselineOverrides,
}

pub const DEFAULT_BACKHAUL_M: f64 = 94.0;

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            distances_m: log_spaced(5.0, 150.0, 40),
            template: RelayLink::new(DEFAULT_BACKHAUL_M, 1.0),
            energy: EnergyModel::new(crate::powermodel::PaEfficiencyModel::fixed(), PowerConstants::default()),
            grid: ParameterGrid::default(),
            baseline: BaselineOverrides::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.distances_m.is_empty() {
            return domain("sweep needs at least one distance");
        }
        if !self.distances_m.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return domain("sweep distances must be positive");
        }
        if !self.distances_m.windows(2).all(|w| w[0] < w[1]) {
            return domain("sweep distances must be strictly ascending");
        }
        self.template.backhaul.validate()?;
        self.energy.validate()
    }

    pub fn direct_link(&self, distance_m: f64) -> DirectLink {
        DirectLink {
            geom: self.template.access.at(distance_m),
            ue: self.template.ue,
            noise_ue: self.template.noise_ue,
        }
    }

    pub fn relay_link(&self, access_m: f64) -> RelayLink {
        RelayLink {
            access: self.template.access.at(access_m),
            ..self.template
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<C> {
    pub distance_m: f64,
    pub opt: OptResult<C>,
    pub baseline: OptResult<C>,
    pub rel_ee: f64,
    pub rel_rate: f64,
}

fn row<C: Copy>(distance_m: f64, opt: OptResult<C>, baseline: OptResult<C>) -> SweepRow<C> {
    let (rel_ee, rel_rate) = relative_metrics(&opt, &baseline);
    SweepRow {
        distance_m,
        opt,
        baseline,
        rel_ee,
        rel_rate,
    }
}

/// One row per distance, in input order.
pub fn direct_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow<DirectConfig>>> {
    spec.validate()?;
    let base = spec.baseline.direct(&spec.grid);
    spec.distances_m
        .iter()
        .map(|&d| {
            let link = spec.direct_link(d);
            let opt = optimize_direct(&spec.grid, &link, &spec.energy)?;
            let baseline = evaluate_direct(&base, &link, &spec.energy)?;
            Ok(row(d, opt, baseline))
        })
        .collect()
}

pub fn indirect_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow<IndirectConfig>>> {
    spec.validate()?;
    let base = spec.baseline.indirect(&spec.grid);
    spec.distances_m
        .iter()
        .map(|&d| {
            let link = spec.relay_link(d);
            let opt = optimize_indirect(&spec.grid, &link, &spec.energy)?;
            let baseline = evaluate_indirect(&base, &link, &spec.energy)?;
            Ok(row(d, opt, baseline))
        })
        .collect()
}

/// First row at which a parameter of the optimum leaves its baseline value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEvent {
    pub parameter: String,
    pub row_index: usize,
    pub distance_m: f64,
    pub baseline_value: f64,
    pub optimal_value: f64,
}

/// Back-off events of a sweep whose rows are ordered from the least to the
/// most room for back-off. Events come out in that order; departures in the
/// same row keep the parameter order of the configuration.
pub fn extract_strategy<C: TunableConfig>(rows: &[SweepRow<C>]) -> Vec<StrategyEvent> {
    let Some(first) = rows.first() else {
        return vec![];
    };
    let names: Vec<&'static str> = first.opt.config.parameters().iter().map(|p| p.name).collect();
    let mut events = Vec::new();
    for (pi, name) in names.iter().enumerate() {
        for (ri, r) in rows.iter().enumerate() {
            let o = r.opt.config.parameters()[pi].value;
            let b = r.baseline.config.parameters()[pi].value;
            if o != b {
                events.push((
                    pi,
                    StrategyEvent {
                        parameter: name.to_string(),
                        row_index: ri,
                        distance_m: r.distance_m,
                        baseline_value: b,
                        optimal_value: o,
                    },
                ));
                break;
            }
        }
    }
    events.sort_by_key(|(pi, e)| (e.row_index, *pi));
    events.into_iter().map(|(_, e)| e).collect()
}

/// Direct topology: back-off room grows as the UE gets closer, so rows are
/// read by decreasing distance.
pub fn direct_strategy(rows: &[SweepRow<DirectConfig>]) -> Vec<StrategyEvent> {
    let mut ordered = rows.to_vec();
    ordered.sort_by(|a, b| b.distance_m.total_cmp(&a.distance_m));
    extract_strategy(&ordered)
}

/// Relayed topology: the backhaul is fixed and the access link is the
/// bottleneck, so the gNB side gains room as the NCR-UE distance grows.
/// Rows are read by increasing distance.
pub fn indirect_strategy(rows: &[SweepRow<IndirectConfig>]) -> Vec<StrategyEvent> {
    let mut ordered = rows.to_vec();
    ordered.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m));
    extract_strategy(&ordered)
}

/// Position of `parameter` in an event list, if it departs at all.
pub fn event_row(events: &[StrategyEvent], parameter: &str) -> Option<usize> {
    events.iter().find(|e| e.parameter == parameter).map(|e| e.row_index)
}

/// SNR of a single hop at 1 m.
fn snr_at_one_meter(paout_mw: f64, n_tx: u32, n_rx: u32, geom: &LinkGeometry, noise_mw: f64) -> Result<f64> {
    let pl_1m = path_loss_linear(&geom.at(1.0))?;
    Ok(hop_snr(paout_mw, n_tx, n_rx, pl_1m, noise_mw))
}

fn invert_power_law(snr_1m: f64, exponent: f64, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return domain("target SNR must be > 0");
    }
    if snr_1m < target {
        return domain(format!(
            "target SNR {target} is unreachable even at 1 m (SNR there is {snr_1m})"
        ));
    }
    Ok((snr_1m / target).powf(1.0 / exponent))
}

/// Distance at which a single hop from `tx` drops to `target_snr_linear`.
/// The geometry's exponent and intercept are used, its distance ignored.
pub fn coverage_range(
    tx: &GnbConfig,
    n_rx: u32,
    geom: &LinkGeometry,
    noise: &NoiseModel,
    target_snr_linear: f64,
) -> Result<f64> {
    tx.validate()?;
    noise.validate()?;
    let s1 = snr_at_one_meter(tx.paout_mw, tx.n_tx, n_rx, geom, noise.noise_power_mw(tx.bandwidth_hz))?;
    invert_power_law(s1, geom.pathloss_exponent, target_snr_linear)
}

/// NCR-UE distance at which the end-to-end SNR drops to the target, with
/// the backhaul of `link` held fixed.
pub fn ncr_coverage_range(gnb: &GnbConfig, ncr: &NcrConfig, link: &RelayLink, target_snr_linear: f64) -> Result<f64> {
    gnb.validate()?;
    ncr.validate()?;
    let bw = gnb.bandwidth_hz;
    let noise_ncr = link.noise_ncr.noise_power_mw(bw);
    let bh = hop_snr(gnb.paout_mw, gnb.n_tx, ncr.n_rx, path_loss_linear(&link.backhaul)?, noise_ncr);
    if !(bh > target_snr_linear) {
        return domain(format!(
            "backhaul SNR {bh} does not exceed the target {target_snr_linear}"
        ));
    }
    // bh·ac/(bh + ac + 1) = target, solved for ac.
    let ac_needed = target_snr_linear * (bh + 1.0) / (bh - target_snr_linear);
    let pact = ncr_output_mw(ncr.paout_max_mw, ncr.max_gain_linear, bh, noise_ncr, ncr.n_tx);
    let s1 = snr_at_one_meter(pact, ncr.n_tx, link.ue.n_rx, &link.access, link.noise_ue.noise_power_mw(bw))?;
    invert_power_law(s1, link.access.pathloss_exponent, ac_needed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScMcSpec {
    pub target_snr_linear: f64,
    pub sc: GnbConfig,
    pub ncr_n_tx: u32,
    pub ncr_n_rx: u32,
    pub ncr_paout_max_mw: f64,
    /// Candidate macro-cell array sizes; the smallest that covers the whole
    /// range is used.
    pub mc_ntx_candidates: Vec<u32>,
    pub mc_paout_min_mw: f64,
    pub mc_paout_max_mw: f64,
    /// Exponents, intercepts, receivers and noise. Distances are derived.
    pub template: RelayLink,
    pub energy: EnergyModel,
    pub min_distance_m: f64,
    pub direct_samples: usize,
    pub ncr_samples: usize,
}

impl Default for ScMcSpec {
    fn default() -> Self {
        Self {
            target_snr_linear: 1.0,
            sc: GnbConfig {
                n_tx: 192,
                paout_mw: 10.0,
                bandwidth_hz: 400e6,
            },
            ncr_n_tx: 32,
            ncr_n_rx: 32,
            ncr_paout_max_mw: 10.0,
            mc_ntx_candidates: vec![192, 256, 384, 512, 768, 1024],
            mc_paout_min_mw: dbm_to_mw(0.0),
            mc_paout_max_mw: dbm_to_mw(13.0),
            template: RelayLink::new(1.0, 1.0),
            energy: EnergyModel::new(crate::powermodel::PaEfficiencyModel::fixed(), PowerConstants::default()),
            min_distance_m: 5.0,
            direct_samples: 20,
            ncr_samples: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceRegion {
    /// Served directly by the small cell.
    Direct,
    /// Served by the small cell through the NCR.
    Ncr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScMcRow {
    pub distance_m: f64,
    pub region: ServiceRegion,
    pub rate_sc_path: f64,
    pub rate_mc: f64,
    pub ee_sc_path: f64,
    pub ee_mc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScMcComparison {
    pub backhaul_m: f64,
    pub ncr_access_m: f64,
    pub mc: GnbConfig,
    pub rows: Vec<ScMcRow>,
}

/// Small cell plus an NCR at the edge of its coverage, versus the smallest
/// macro cell that covers the same total range at the same target SNR.
///
/// The macro cell transmits the lowest PA output in its allowed range that
/// still meets the target at full range.
pub fn compare_sc_mc(spec: &ScMcSpec) -> Result<ScMcComparison> {
    let t = spec.target_snr_linear;
    let tpl = &spec.template;
    let energy = &spec.energy;
    energy.validate()?;
    let d_bh = coverage_range(&spec.sc, tpl.ue.n_rx, &tpl.access, &tpl.noise_ue, t)?;
    let link = RelayLink {
        backhaul: tpl.backhaul.at(d_bh),
        ..*tpl
    };
    let ncr = link.ncr(spec.ncr_n_tx, spec.ncr_n_rx, spec.ncr_paout_max_mw);
    let d_ac = ncr_coverage_range(&spec.sc, &ncr, &link, t)?;
    let total = d_bh + d_ac;

    let bw = spec.sc.bandwidth_hz;
    let noise_ue = tpl.noise_ue.noise_power_mw(bw);
    let pl_total = path_loss_linear(&tpl.access.at(total))?;
    let mut candidates = spec.mc_ntx_candidates.clone();
    candidates.sort_unstable();
    let mut chosen = None;
    let mut best_reach = (0u32, 0.0f64);
    for &n in &candidates {
        let top = GnbConfig {
            n_tx: n,
            paout_mw: spec.mc_paout_max_mw,
            bandwidth_hz: bw,
        };
        let reach = coverage_range(&top, tpl.ue.n_rx, &tpl.access, &tpl.noise_ue, t).unwrap_or(0.0);
        if reach > best_reach.1 {
            best_reach = (n, reach);
        }
        if reach >= total {
            // Lowest output meeting the target at full range.
            let needed = t * pl_total * noise_ue / ((n as f64).powi(2) * tpl.ue.n_rx as f64);
            let paout = needed.clamp(spec.mc_paout_min_mw, spec.mc_paout_max_mw);
            chosen = Some(GnbConfig {
                n_tx: n,
                paout_mw: paout,
                bandwidth_hz: bw,
            });
            break;
        }
    }
    let mc = chosen.ok_or_else(|| {
        Error::Infeasible(format!(
            "no macro-cell candidate covers {total:.1} m; the longest reach is {:.1} m with {} elements",
            best_reach.1, best_reach.0
        ))
    })?;

    let sc_power = gnb_power(&spec.sc, &energy.pa, &energy.consts)?.total;
    let sleeping_ncr = energy.consts.ncr_sleep_power;

    let mut distances: Vec<(f64, ServiceRegion)> = Vec::new();
    let nd = spec.direct_samples;
    for i in 0..nd {
        let d = if nd == 1 {
            d_bh
        } else {
            spec.min_distance_m + (d_bh - spec.min_distance_m) * i as f64 / (nd - 1) as f64
        };
        distances.push((d, ServiceRegion::Direct));
    }
    for i in 0..spec.ncr_samples {
        let x = d_ac * (i as f64 + 0.5) / spec.ncr_samples as f64;
        distances.push((d_bh + x, ServiceRegion::Ncr));
    }

    let mut rows = Vec::with_capacity(distances.len());
    for (d, region) in distances {
        let mc_eval = ee_direct(&mc, &DirectLink {
            geom: tpl.access.at(d),
            ue: tpl.ue,
            noise_ue: tpl.noise_ue,
        }, energy)?;
        let (rate_sc, ee_sc) = match region {
            ServiceRegion::Direct => {
                let e = ee_direct(&spec.sc, &DirectLink {
                    geom: tpl.access.at(d),
                    ue: tpl.ue,
                    noise_ue: tpl.noise_ue,
                }, energy)?;
                (e.rate_bps, e.rate_bps / (sc_power + sleeping_ncr))
            }
            ServiceRegion::Ncr => {
                let l = RelayLink {
                    access: tpl.access.at(d - d_bh),
                    ..link
                };
                let e = ee_indirect(&spec.sc, &ncr, &l, energy)?;
                (e.rate_bps, e.ee)
            }
        };
        rows.push(ScMcRow {
            distance_m: d,
            region,
            rate_sc_path: rate_sc,
            rate_mc: mc_eval.rate_bps,
            ee_sc_path: ee_sc,
            ee_mc: mc_eval.ee,
        });
    }
    Ok(ScMcComparison {
        backhaul_m: d_bh,
        ncr_access_m: d_ac,
        mc,
        rows,
    })
}
