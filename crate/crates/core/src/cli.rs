//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{parse_config, Overrides, RunConfig, Study};
use crate::error::{Error, Result};
use crate::powermodel::PaKind;
use crate::report::{write_compare, write_json, write_strategy, write_sweep, write_system, Manifest};
use crate::scenarios::{compare_sc_mc, direct_strategy, direct_sweep, indirect_strategy, indirect_sweep};
use crate::syslevel::{generate_deployment, load_deployment, run_system};
use crate::units::mw_to_dbm;

#[derive(Debug, Parser)]
#[command(name = "ncrsim", version, about = "Energy-efficiency studies for gNB and NCR-assisted mmWave links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_parser = parse_pa_kind, value_name = "fixed|varying")]
    pub pa_model: Option<PaKind>,

    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// PA output grid step for both the gNB and the NCR.
    #[arg(long, global = true, value_name = "F")]
    pub paout_step_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// EE-optimal gNB configuration over UE distance.
    DirectSweep,
    /// EE-optimal gNB and NCR configuration over UE-NCR distance.
    IndirectSweep,
    /// Small cell with NCR versus an equal-range macro cell.
    CompareMc,
    /// Multi-sector deployment with and without repeaters.
    System,
}

fn parse_pa_kind(s: &str) -> std::result::Result<PaKind, String> {
    match s {
        "fixed" => Ok(PaKind::Fixed),
        "varying" => Ok(PaKind::Varying),
        _ => Err(format!("expected `fixed` or `varying`, got `{s}`")),
    }
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            study: Some(match self.command {
                Command::DirectSweep => Study::DirectSweep,
                Command::IndirectSweep => Study::IndirectSweep,
                Command::CompareMc => Study::CompareMc,
                Command::System => Study::System,
            }),
            output_dir: self.out.clone(),
            pa_model: self.pa_model,
            seed: self.seed,
            paout_step_db: self.paout_step_db,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        parse_config(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn rel(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).display().to_string()
}

/// Runs the configured study, writing its CSVs and `manifest.json` into the
/// output directory.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    let study = cfg.study.ok_or_else(|| Error::Config {
        path: "study".into(),
        msg: "no study selected".into(),
    })?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Output {
        path: dir.display().to_string(),
        source,
    })?;
    let mut s = RunSummary::default();
    match study {
        Study::DirectSweep => {
            let rows = direct_sweep(&cfg.sweep_spec())?;
            let events = direct_strategy(&rows);
            let (a, b) = (dir.join("direct_sweep.csv"), dir.join("direct_strategy.csv"));
            write_sweep(&a, &rows)?;
            write_strategy(&b, &events)?;
            s.outputs.extend([a, b]);
            let best = rows.iter().map(|r| r.rel_ee).fold(f64::NAN, f64::max);
            s.lines.push(format!("{} distances, max EE gain {best:.3}x", rows.len()));
            for e in &events {
                s.lines.push(format!("  {} leaves baseline at {:.1} m", e.parameter, e.distance_m));
            }
        }
        Study::IndirectSweep => {
            let rows = indirect_sweep(&cfg.sweep_spec())?;
            let events = indirect_strategy(&rows);
            let (a, b) = (dir.join("indirect_sweep.csv"), dir.join("indirect_strategy.csv"));
            write_sweep(&a, &rows)?;
            write_strategy(&b, &events)?;
            s.outputs.extend([a, b]);
            let best = rows.iter().map(|r| r.rel_ee).fold(f64::NAN, f64::max);
            s.lines.push(format!("{} distances, max EE gain {best:.3}x", rows.len()));
            for e in &events {
                s.lines.push(format!("  {} leaves baseline at {:.1} m", e.parameter, e.distance_m));
            }
        }
        Study::CompareMc => {
            let cmp = compare_sc_mc(&cfg.compare_spec())?;
            let p = dir.join("compare_mc.csv");
            write_compare(&p, &cmp)?;
            s.outputs.push(p);
            s.lines.push(format!(
                "NCR at {:.1} m covering {:.1} m more; macro cell {} elements at {:.2} dBm",
                cmp.backhaul_m,
                cmp.ncr_access_m,
                cmp.mc.n_tx,
                mw_to_dbm(cmp.mc.paout_mw)
            ));
        }
        Study::System => {
            let dep = match &cfg.system.deployment_file {
                Some(p) => load_deployment(p)?,
                None => generate_deployment(&cfg.system.deployment, cfg.seed)?,
            };
            let dp = dir.join("deployment.json");
            write_json(&dp, &dep)?;
            s.outputs.push(dp);
            let report = run_system(&dep, &cfg.system_spec(), &cfg.regimes()?)?;
            s.outputs.extend(write_system(dir, &report)?);
            s.lines.push(format!(
                "{} UEs, {} covered without repeaters, {} with",
                report.n_ues, report.covered_without_repeaters, report.covered_with_repeaters
            ));
            for r in &report.regimes {
                let n = r.sectors.len().max(1) as f64;
                let tp: f64 = r.sectors.iter().map(|x| x.throughput_bps).sum();
                let pw: f64 = r.sectors.iter().map(|x| x.power).sum();
                s.lines.push(format!(
                    "  {:<24} mean sector power {:.2}, network EE {:.4e}",
                    r.regime.name(),
                    pw / n,
                    tp / pw
                ));
            }
        }
    }
    let mp = dir.join("manifest.json");
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: s.outputs.iter().map(|p| rel(dir, p)).collect(),
        config: cfg,
    };
    write_json(&mp, &manifest)?;
    s.outputs.push(mp);
    Ok(s)
}

/// Parses arguments, runs, prints a summary. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.resolve().and_then(|cfg| run(&cfg)) {
        Ok(s) => {
            // A closed stdout (e.g. piped into `head`) is not a run failure.
            let mut out = std::io::stdout().lock();
            for l in &s.lines {
                let _ = writeln!(out, "{l}");
            }
            for p in &s.outputs {
                let _ = writeln!(out, "wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "ncrsim",
            "direct-sweep",
            "--pa-model",
            "varying",
            "--seed",
            "4",
            "--paout-step-db",
            "2",
        ])
        .unwrap();
        let o = cli.overrides();
        assert_eq!(o.study, Some(Study::DirectSweep));
        assert_eq!(o.pa_model, Some(PaKind::Varying));
        assert_eq!(o.seed, Some(4));
        assert_eq!(o.paout_step_db, Some(2.0));
    }

    #[test]
    fn bad_pa_model_is_rejected() {
        assert!(Cli::try_parse_from(["ncrsim", "system", "--pa-model", "linear"]).is_err());
    }

    #[test]
    fn unwritable_output_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let mut cfg = parse_config(None, &Overrides::default()).unwrap();
        cfg.study = Some(Study::CompareMc);
        cfg.output_dir = blocker.join("sub");
        match run(&cfg).unwrap_err() {
            Error::Output { path, .. } => assert!(path.ends_with("sub")),
            e => panic!("unexpected {e}"),
        }
    }
}
