use std::path::Path;
use std::process::Command;

fn ncrsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ncrsim")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = ncrsim(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

const SMALL_SYSTEM: &str = r#"{
  "system": {
    "deployment": {"area_m": [400, 400], "n_sites": 3, "n_ncrs": 5, "n_ues": 40}
  }
}"#;

#[test]
fn direct_sweep_writes_one_row_per_distance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["direct-sweep", "--out", out.to_str().unwrap()]);
    let csv = read(&out.join("direct_sweep.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 41);
    assert!(lines[0].starts_with("distance_m,rel_ee,rel_rate,opt_"));
    assert!(lines[0].contains(",baseline_gnb_ntx"));
    assert!(!csv.contains('\r'));
    let ncol = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == ncol));
    let strategy = read(&out.join("direct_strategy.csv"));
    assert!(strategy.starts_with("order,parameter,"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, SMALL_SYSTEM).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for study in ["indirect-sweep", "compare-mc", "system"] {
        for o in [&a, &b] {
            run_ok(&[study, "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap(), "--seed", "9", "--paout-step-db", "2"]);
        }
    }
    let mut n = 0;
    for e in std::fs::read_dir(&a).unwrap() {
        let name = e.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
        n += 1;
    }
    assert_eq!(n, 2 + 1 + 5);
}

#[test]
fn system_writes_four_cdfs_for_every_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, SMALL_SYSTEM).unwrap();
    let out = dir.path().join("o");
    run_ok(&["system", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let dep: serde_json::Value = serde_json::from_str(&read(&out.join("deployment.json"))).unwrap();
    let n_sectors = 3 * dep["sites"].as_array().unwrap().len();
    for m in ["sector_throughput", "sector_power", "sector_ee", "ue_rate"] {
        let text = read(&out.join(format!("{m}.csv")));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("regime,entity_id,value"));
        let mut per_regime = std::collections::BTreeMap::<String, Vec<f64>>::new();
        for l in lines {
            let f: Vec<&str> = l.split(',').collect();
            per_regime.entry(f[0].to_string()).or_default().push(f[2].parse().unwrap());
        }
        assert_eq!(per_regime.len(), 6, "{m}");
        for v in per_regime.values() {
            assert!(v.windows(2).all(|w| w[0] <= w[1]));
            if m != "ue_rate" {
                assert_eq!(v.len(), n_sectors);
            }
        }
    }
}

#[test]
fn manifest_echoes_every_effective_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["compare-mc", "--out", out.to_str().unwrap(), "--pa-model", "varying"]);
    let m: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    let mut expected = ncrsim::config::parse_config(
        None,
        &ncrsim::config::Overrides {
            study: Some(ncrsim::config::Study::CompareMc),
            output_dir: Some(out.clone()),
            pa_model: Some(ncrsim::powermodel::PaKind::Varying),
            ..Default::default()
        },
    )
    .unwrap();
    expected.resolve_defaults().unwrap();
    assert_eq!(m["config"], serde_json::to_value(&expected).unwrap());
    assert_eq!(m["config"]["pa_model"], "varying");
    assert!(m["config"]["grid"]["gnb_ntx"].is_array());
    assert!(m["config"]["sweep"]["distances_m"].is_array());
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["seed"], 1);
}

#[test]
fn bad_inputs_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("f");
    std::fs::write(&blocker, "x").unwrap();
    let out = ncrsim(&["compare-mc", "--out", blocker.join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));

    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"grid": {"gnb_paout_dbm": [0, 11]}}"#).unwrap();
    let out = ncrsim(&["direct-sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.gnb_paout_dbm[1]"));

    std::fs::write(&cfg, r#"{"sweeps": {}}"#).unwrap();
    let out = ncrsim(&["direct-sweep", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweeps"));

    let out = ncrsim(&["direct-sweep", "--pa-model", "linear"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"pa_model": "varying", "sweep": {"points": 3}, "grid": {"paout_step_db": 5}}"#).unwrap();
    let out = dir.path().join("o");
    run_ok(&["direct-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--pa-model", "fixed", "--paout-step-db", "2.5"]);
    let m: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(m["config"]["pa_model"], "fixed");
    assert_eq!(m["config"]["grid"]["gnb_paout_dbm"], serde_json::json!([0.0, 2.5, 5.0, 7.5, 10.0]));
    assert_eq!(read(&out.join("direct_sweep.csv")).lines().count(), 4);
}
