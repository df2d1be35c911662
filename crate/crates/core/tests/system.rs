use ncrsim::syslevel::{
    generate_deployment, prepare_system, run_system, DeploymentParams, Metric, NcrMode, OptMode, Regime, SystemSpec,
};
use proptest::prelude::*;

fn small_params() -> DeploymentParams {
    DeploymentParams {
        area_m: [500.0, 400.0],
        n_sites: 4,
        n_ncrs: 9,
        n_ues: 90,
        ..DeploymentParams::default()
    }
}

fn reg(mode: NcrMode, opt: OptMode) -> Regime {
    Regime { mode, opt }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sector_invariants_hold(seed in 0u64..10_000) {
        let dep = generate_deployment(&small_params(), seed).unwrap();
        let spec = SystemSpec::default();
        let rep = run_system(&dep, &spec, &Regime::ALL).unwrap();
        let ctx = prepare_system(&dep, &spec).unwrap();
        for r in &rep.regimes {
            for s in &r.sectors {
                prop_assert!((s.ee * s.power - s.throughput_bps).abs() <= 1e-12 * s.throughput_bps.max(1e-300));
            }
            let ids: Vec<u32> = r.ue_rates.iter().map(|u| u.0).collect();
            prop_assert_eq!(&ids, &ctx.fairness_set);
        }
        let on = rep.regime(reg(NcrMode::AlwaysOn, OptMode::Baseline)).unwrap();
        let smart = rep.regime(reg(NcrMode::Smart, OptMode::Baseline)).unwrap();
        let off = rep.regime(reg(NcrMode::NoRepeaters, OptMode::Baseline)).unwrap();
        for ((a, s), o) in on.sectors.iter().zip(&smart.sectors).zip(&off.sectors) {
            prop_assert!(a.power >= s.power && s.power >= o.power, "sector {}", a.sector_id);
        }
        for mode in [NcrMode::NoRepeaters, NcrMode::AlwaysOn, NcrMode::Smart] {
            let b = rep.regime(reg(mode, OptMode::Baseline)).unwrap();
            let e = rep.regime(reg(mode, OptMode::EeOptimal)).unwrap();
            for (x, y) in e.sectors.iter().zip(&b.sectors) {
                prop_assert!(x.ee >= y.ee);
            }
        }
    }
}

#[test]
fn reruns_are_identical() {
    let dep = generate_deployment(&small_params(), 42).unwrap();
    let spec = SystemSpec::default();
    let a = run_system(&dep, &spec, &Regime::ALL).unwrap();
    let b = run_system(&generate_deployment(&small_params(), 42).unwrap(), &spec, &Regime::ALL).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn cdfs_are_sorted_and_complete() {
    let dep = generate_deployment(&small_params(), 3).unwrap();
    let rep = run_system(&dep, &SystemSpec::default(), &Regime::ALL).unwrap();
    for r in &rep.regimes {
        for m in Metric::ALL {
            let c = r.cdf(m);
            assert!(c.windows(2).all(|w| w[0].1 <= w[1].1));
            let n = if m == Metric::UeRate { r.ue_rates.len() } else { r.sectors.len() };
            assert_eq!(c.len(), n);
        }
    }
    assert_eq!(rep.regimes.len(), 6);
    assert_eq!(rep.regimes[0].sectors.len(), 12);
}
