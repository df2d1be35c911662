//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::cmp::Ordering;

use ncrsim::linkbudget::{GnbConfig, NcrConfig};
use ncrsim::optimizer::{
    ee_direct, ee_indirect, DirectConfig, DirectLink, EnergyModel, Evaluation, IndirectConfig, ParameterGrid,
    RelayLink,
};
use ncrsim::powermodel::PaEfficiencyModel;
use ncrsim::units::{dbm_to_mw, eirp_dbm};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Higher EE, then lower power, then the lexicographically smaller key.
fn better(a: (f64, f64, [f64; 6]), b: (f64, f64, [f64; 6])) -> bool {
    match a.0.partial_cmp(&b.0).unwrap() {
        Ordering::Greater => return true,
        Ordering::Less => return false,
        Ordering::Equal => {}
    }
    match a.1.partial_cmp(&b.1).unwrap() {
        Ordering::Less => return true,
        Ordering::Greater => return false,
        Ordering::Equal => {}
    }
    for i in 0..6 {
        if a.2[i] != b.2[i] {
            return a.2[i] < b.2[i];
        }
    }
    false
}

fn cap_ok(cap: Option<f64>, p: f64, n: u32) -> bool {
    cap.map_or(true, |c| eirp_dbm(p, n) <= c + 1e-9)
}

/// Single-threaded scan of every direct grid member.
pub fn direct_oracle(grid: &ParameterGrid, link: &DirectLink, energy: &EnergyModel) -> Option<(DirectConfig, Evaluation)> {
    let mut best: Option<(DirectConfig, Evaluation)> = None;
    for &bw in &grid.bw_values {
        for &p in &grid.gnb_paout_values {
            for &n in &grid.gnb_ntx_values {
                if !cap_ok(grid.gnb_eirp_cap_dbm, p, n) {
                    continue;
                }
                let g = GnbConfig { n_tx: n, paout_mw: p, bandwidth_hz: bw };
                let e = ee_direct(&g, link, energy).unwrap();
                let key = [p, n as f64, bw, 0.0, 0.0, 0.0];
                let take = match &best {
                    None => true,
                    Some((c, b)) => better(
                        (e.ee, e.power.total, key),
                        (b.ee, b.power.total, [c.gnb_paout_mw, c.gnb_ntx as f64, c.bandwidth_hz, 0.0, 0.0, 0.0]),
                    ),
                };
                if take {
                    best = Some((DirectConfig { bandwidth_hz: bw, gnb_paout_mw: p, gnb_ntx: n }, e));
                }
            }
        }
    }
    best
}

fn ikey(c: &IndirectConfig) -> [f64; 6] {
    [
        c.gnb.gnb_paout_mw,
        c.gnb.gnb_ntx as f64,
        c.gnb.bandwidth_hz,
        c.ncr_paout_max_mw,
        c.ncr_ntx as f64,
        c.ncr_nrx as f64,
    ]
}

/// Single-threaded scan of every relayed grid member.
pub fn indirect_oracle(
    grid: &ParameterGrid,
    link: &RelayLink,
    energy: &EnergyModel,
) -> Option<(IndirectConfig, Evaluation)> {
    let mut best: Option<(IndirectConfig, Evaluation)> = None;
    for &bw in &grid.bw_values {
        for &p in &grid.gnb_paout_values {
            for &n in &grid.gnb_ntx_values {
                if !cap_ok(grid.gnb_eirp_cap_dbm, p, n) {
                    continue;
                }
                for &q in &grid.ncr_paout_values {
                    for &nx in &grid.ncr_ntx_values {
                        if !cap_ok(grid.ncr_eirp_cap_dbm, q, nx) {
                            continue;
                        }
                        for &nr in &grid.ncr_nrx_values {
                            let g = GnbConfig { n_tx: n, paout_mw: p, bandwidth_hz: bw };
                            let ncr = NcrConfig {
                                n_tx: nx,
                                n_rx: nr,
                                paout_max_mw: q,
                                max_gain_linear: link.ncr_max_gain_linear,
                            };
                            let e = ee_indirect(&g, &ncr, link, energy).unwrap();
                            let cfg = IndirectConfig {
                                gnb: DirectConfig { bandwidth_hz: bw, gnb_paout_mw: p, gnb_ntx: n },
                                ncr_paout_max_mw: q,
                                ncr_ntx: nx,
                                ncr_nrx: nr,
                            };
                            let take = match &best {
                                None => true,
                                Some((c, b)) => better((e.ee, e.power.total, ikey(&cfg)), (b.ee, b.power.total, ikey(c))),
                            };
                            if take {
                                best = Some((cfg, e));
                            }
                        }
                    }
                }
            }
        }
    }
    best
}

fn sorted_subset<T: Copy + PartialOrd>(rng: &mut ChaCha8Rng, pool: &[T], max_len: usize) -> Vec<T> {
    let k = rng.gen_range(1..=max_len.min(pool.len()));
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        idx.swap(i, j);
    }
    let mut v: Vec<T> = idx[..k].iter().map(|&i| pool[i]).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Random grid within the problem bounds. Small enough for an exhaustive
/// oracle in the relayed topology.
pub fn random_grid(rng: &mut ChaCha8Rng, with_caps: bool) -> ParameterGrid {
    let bws: Vec<f64> = [1.0, 10.0, 50.0, 100.0, 200.0, 300.0, 400.0].iter().map(|m| m * 1e6).collect();
    let paouts: Vec<f64> = (0..=20).map(|i| dbm_to_mw(i as f64 * 0.5)).collect();
    let ntx: Vec<u32> = (1..=192).collect();
    let ncr_el: Vec<u32> = (1..=32).collect();
    let gnb_paout_values = sorted_subset(rng, &paouts, 5);
    let gnb_ntx_values = sorted_subset(rng, &ntx, 6);
    let ncr_paout_values = sorted_subset(rng, &paouts, 4);
    let ncr_ntx_values = sorted_subset(rng, &ncr_el, 5);
    let (gcap, ncap) = if with_caps && rng.gen_bool(0.5) {
        // Caps that keep the smallest members feasible.
        let g = eirp_dbm(gnb_paout_values[0], gnb_ntx_values[0]) + rng.gen_range(0.0..30.0);
        let n = eirp_dbm(ncr_paout_values[0], ncr_ntx_values[0]) + rng.gen_range(0.0..20.0);
        (Some(g), Some(n))
    } else {
        (None, None)
    };
    ParameterGrid {
        bw_values: sorted_subset(rng, &bws, 3),
        gnb_paout_values,
        gnb_ntx_values,
        ncr_paout_values,
        ncr_ntx_values,
        ncr_nrx_values: sorted_subset(rng, &ncr_el, 5),
        gnb_eirp_cap_dbm: gcap,
        ncr_eirp_cap_dbm: ncap,
    }
}

pub fn random_energy(rng: &mut ChaCha8Rng) -> EnergyModel {
    let pa = if rng.gen_bool(0.5) {
        PaEfficiencyModel::fixed()
    } else {
        PaEfficiencyModel::varying()
    };
    EnergyModel::new(pa, Default::default())
}

pub fn random_relay(rng: &mut ChaCha8Rng) -> RelayLink {
    RelayLink::new(rng.gen_range(20.0..300.0), rng.gen_range(3.0..200.0))
}
