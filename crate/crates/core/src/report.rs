//! CSV and JSON report writers.
//!
//! CSVs use `,` separators, LF line endings and a header row. Floats are
//! written in shortest round-trip form, so identical results give identical
//! bytes.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimizer::{OptResult, TunableConfig};
use crate::scenarios::{ScMcComparison, ServiceRegion, StrategyEvent, SweepRow};
use crate::syslevel::{Metric, SystemReport};
use crate::units::linear_to_db;

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Output {
        path: path.display().to_string(),
        source,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

// `{}` on f64 is the shortest string that round-trips.
fn fmt(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

fn result_columns<C: TunableConfig>(prefix: &str, r: &OptResult<C>) -> (Vec<String>, Vec<String>) {
    let mut head = vec![
        format!("{prefix}_ee"),
        format!("{prefix}_rate_bps"),
        format!("{prefix}_power"),
        format!("{prefix}_snr_db"),
    ];
    let mut vals = vec![
        fmt(r.eval.ee),
        fmt(r.eval.rate_bps),
        fmt(r.eval.power.total),
        fmt(linear_to_db(r.eval.snr.effective)),
    ];
    for p in r.config.parameters() {
        head.push(format!("{prefix}_{}", p.name));
        vals.push(fmt(p.value));
    }
    (head, vals)
}

/// One row per distance: relative metrics, then the optimal and baseline
/// results with their configurations.
pub fn write_sweep<C: TunableConfig>(path: &Path, rows: &[SweepRow<C>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (i, r) in rows.iter().enumerate() {
        let (oh, ov) = result_columns("opt", &r.opt);
        let (bh, bv) = result_columns("baseline", &r.baseline);
        if i == 0 {
            let mut head = vec!["distance_m".to_string(), "rel_ee".into(), "rel_rate".into()];
            head.extend(oh);
            head.extend(bh);
            w.write_record(&head)?;
        }
        let mut rec = vec![fmt(r.distance_m), fmt(r.rel_ee), fmt(r.rel_rate)];
        rec.extend(ov);
        rec.extend(bv);
        w.write_record(&rec)?;
    }
    if rows.is_empty() {
        w.write_record(["distance_m", "rel_ee", "rel_rate"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_strategy(path: &Path, events: &[StrategyEvent]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["order", "parameter", "row_index", "distance_m", "baseline_value", "optimal_value"])?;
    for (i, e) in events.iter().enumerate() {
        w.write_record([
            i.to_string(),
            e.parameter.clone(),
            e.row_index.to_string(),
            fmt(e.distance_m),
            fmt(e.baseline_value),
            fmt(e.optimal_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_compare(path: &Path, cmp: &ScMcComparison) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "distance_m",
        "region",
        "rate_sc_path_bps",
        "rate_mc_bps",
        "ee_sc_path",
        "ee_mc",
        "rate_ratio",
        "ee_ratio",
    ])?;
    for r in &cmp.rows {
        let region = match r.region {
            ServiceRegion::Direct => "direct",
            ServiceRegion::Ncr => "ncr",
        };
        w.write_record([
            fmt(r.distance_m),
            region.into(),
            fmt(r.rate_sc_path),
            fmt(r.rate_mc),
            fmt(r.ee_sc_path),
            fmt(r.ee_mc),
            fmt(r.rate_sc_path / r.rate_mc),
            fmt(r.ee_sc_path / r.ee_mc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One CSV per metric, `regime,entity_id,value`, values ascending within
/// each regime. Returns the written paths.
pub fn write_system(dir: &Path, report: &SystemReport) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for m in Metric::ALL {
        let path = dir.join(format!("{}.csv", m.name()));
        let mut w = csv_writer(&path)?;
        w.write_record(["regime", "entity_id", "value"])?;
        for r in &report.regimes {
            let name = r.regime.name();
            for (id, v) in r.cdf(m) {
                w.write_record([name.clone(), id.to_string(), fmt(v)])?;
            }
        }
        w.flush()?;
        out.push(path);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Output {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub program: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub config: &'a C,
}
