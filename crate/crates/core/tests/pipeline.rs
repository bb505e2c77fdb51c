use biloc_core::config::{ExperimentConfig, StreamFormat};
use biloc_core::io::{has_references, load_references, load_streams, save_run};
use biloc_core::pipeline::{analyze, AnalysisParams};
use biloc_core::quantum::{biloc_functional, born_behavior, Convention};
use biloc_core::sim::{simulate_run, Node};
use biloc_core::Error;

fn params(cfg: &ExperimentConfig, n_blocks: usize) -> AnalysisParams {
    let mut p = AnalysisParams::from_config(cfg);
    p.n_blocks = n_blocks;
    p
}

fn analytic_b(cfg: &ExperimentConfig) -> f64 {
    let n = &cfg.network;
    let beh = born_behavior(
        &n.source1.state.build().unwrap(),
        &n.source2.state.build().unwrap(),
        &n.plan.build().unwrap(),
    );
    biloc_functional(&beh, Convention::Peripheral).b
}

#[test]
fn simulated_campus_run_matches_prediction() {
    let cfg = ExperimentConfig::calibrated();
    let out = simulate_run(&cfg.network, &cfg.schedule, 300.0, 21).unwrap();
    let a = analyze(out.streams, &out.references, &params(&cfg, 5)).unwrap();
    let sync = a.sync.as_ref().unwrap();
    // both drift maps start at the reference edge of true time zero, so the
    // corrected bases differ only by the clock offsets
    let truth_ab = out.truth.pair_offset_ticks(Node::A, Node::BArmA);
    let truth_bc = out.truth.pair_offset_ticks(Node::C, Node::BArmC);
    assert!(
        (sync.ab.fine.offset_refined - truth_ab).abs() < 1.0,
        "{:?} vs {truth_ab}",
        sync.ab.fine.offset_refined
    );
    assert!((sync.bc.fine.offset_refined - truth_bc).abs() < 1.0);
    assert!((sync.drift[0] - 0.5e-6).abs() < 1e-8);
    assert!((sync.drift[1] + 0.3e-6).abs() < 1e-8);

    let s = &a.summary;
    let expect = analytic_b(&cfg);
    assert!(s.B > 1.0);
    assert!(
        (s.B - expect).abs() < 4.0 * s.B_std_error,
        "{} ± {} vs {expect}",
        s.B,
        s.B_std_error
    );
    let (s_ab, e_ab) = (s.S_AB.unwrap(), s.S_AB_std_error.unwrap());
    let (s_bc, e_bc) = (s.S_BC.unwrap(), s.S_BC_std_error.unwrap());
    assert!((s_ab - 2.484).abs() < 4.0 * e_ab + 0.02, "{s_ab} ± {e_ab}");
    assert!((s_bc - 2.699).abs() < 4.0 * e_bc + 0.02, "{s_bc} ± {e_bc}");
    assert!(a
        .sweep
        .windows(2)
        .all(|w| w[0].n_fourfolds <= w[1].n_fourfolds));
    assert!(a.sweep[a.optimal].sigma_distance().unwrap() >= a.sweep[0].sigma_distance().unwrap());
}

#[test]
fn ideal_network_reaches_root_two() {
    let cfg = ExperimentConfig::ideal();
    let out = simulate_run(&cfg.network, &cfg.schedule, 16.0, 22).unwrap();
    let a = analyze(out.streams, &out.references, &params(&cfg, 2)).unwrap();
    let s = &a.summary;
    assert!((analytic_b(&cfg) - 2f64.sqrt()).abs() < 1e-12);
    assert!(
        (s.B - 2f64.sqrt()).abs() < 4.0 * s.B_std_error + 1e-3,
        "{} ± {}",
        s.B,
        s.B_std_error
    );
}

#[test]
fn background_dilutes_with_wide_twofold_window() {
    let mut cfg = ExperimentConfig::calibrated();
    for d in [
        &mut cfg.network.detectors.b_arm_a,
        &mut cfg.network.detectors.b_arm_c,
    ] {
        d.dark_rate_hz = 2e5;
    }
    let out = simulate_run(&cfg.network, &cfg.schedule, 120.0, 23).unwrap();
    let mut narrow = params(&cfg, 2);
    narrow.fourfold_windows = vec![50_000];
    let mut wide = narrow.clone();
    wide.twofold_window = 25_000;
    let bn = analyze(out.streams.clone(), &out.references, &narrow)
        .unwrap()
        .summary;
    let bw = analyze(out.streams, &out.references, &wide)
        .unwrap()
        .summary;
    assert!(
        bw.B < bn.B - 3.0 * bn.B_std_error.hypot(bw.B_std_error),
        "{} vs {}",
        bw.B,
        bn.B
    );
}

#[test]
fn dark_counts_alone_fail_to_synchronize() {
    let mut cfg = ExperimentConfig::calibrated();
    cfg.network.source1.pair_rate_hz = 0.0;
    cfg.network.source2.pair_rate_hz = 0.0;
    let out = simulate_run(&cfg.network, &cfg.schedule, 16.0, 24).unwrap();
    let err = analyze(out.streams, &out.references, &params(&cfg, 2)).unwrap_err();
    assert!(matches!(err, Error::Sync(_)), "{err}");
}

#[test]
fn runs_survive_a_disk_round_trip() {
    let cfg = ExperimentConfig::calibrated();
    let out = simulate_run(&cfg.network, &cfg.schedule, 2.0, 25).unwrap();
    for format in [StreamFormat::Binary, StreamFormat::Csv] {
        let dir = std::env::temp_dir().join(format!("biloc-io-{}-{format:?}", std::process::id()));
        let written = save_run(&dir, &out.streams, &out.references, format).unwrap();
        assert_eq!(written.len(), 10);
        assert!(has_references(&dir));
        assert_eq!(load_streams(&dir).unwrap(), out.streams);
        assert_eq!(load_references(&dir).unwrap(), out.references);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
