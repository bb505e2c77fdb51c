use biloc_core::config::ExperimentConfig;
use biloc_core::quantum::{
    born_arm_behavior, singlet_state, ArmBehavior, Behavior, MeasurementPlan,
};
use biloc_core::sim::*;
use biloc_core::sync::{fine_offset, ReferenceKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quiet(mut cfg: ExperimentConfig) -> ExperimentConfig {
    for d in [
        &mut cfg.network.detectors.a,
        &mut cfg.network.detectors.b_arm_a,
        &mut cfg.network.detectors.b_arm_c,
        &mut cfg.network.detectors.c,
    ] {
        d.dark_rate_hz = 0.0;
    }
    cfg
}

fn within_sigma(observed: f64, expected: f64, k: f64) -> bool {
    (observed - expected).abs() <= k * expected.sqrt().max(1.0)
}

#[test]
fn zero_pair_rate_leaves_only_dark_counts() {
    let mut cfg = ExperimentConfig::calibrated();
    cfg.network.source1.pair_rate_hz = 0.0;
    cfg.network.source2.pair_rate_hz = 0.0;
    let out = simulate_run(&cfg.network, &cfg.schedule, 20.0, 1).unwrap();
    let expected = 8.0 * 200.0 * 20.0;
    assert!(within_sigma(out.streams.total_len() as f64, expected, 4.0));

    let silent = quiet(cfg);
    let out = simulate_run(&silent.network, &silent.schedule, 20.0, 1).unwrap();
    assert_eq!(out.streams.total_len(), 0);
}

#[test]
fn central_arm_rate_follows_loss_budget() {
    let cfg = quiet(ExperimentConfig::calibrated());
    let dur = 60.0;
    let out = simulate_run(&cfg.network, &cfg.schedule, dur, 3).unwrap();
    let t: f64 = 0.85 * 0.85 * 0.80 * 0.50;
    assert!((t - 0.289).abs() < 1e-12);
    let expected = 13.7e3 * t * 0.6;
    let rate = out.streams.get(Node::BArmA).len() as f64 / dur;
    assert!(
        (rate / expected - 1.0).abs() < 0.01,
        "rate {rate} vs {expected}"
    );
    let a_rate = out.streams.get(Node::A).len() as f64 / dur;
    assert!((a_rate / (13.7e3 * 0.6) - 1.0).abs() < 0.01);
}

#[test]
fn free_space_delay_sets_pair_separation() {
    let mut cfg = quiet(ExperimentConfig::calibrated());
    cfg.network.clocks = Clocks {
        a: ClockModel::default(),
        b: ClockModel::default(),
        c: None,
    };
    let out = simulate_run(&cfg.network, &cfg.schedule, 10.0, 5).unwrap();
    let tick = 81e-12;
    let delay_s = 270.0 / SPEED_OF_LIGHT_M_PER_S;
    assert!((delay_s * 1e9 - 900.7).abs() < 0.1);
    let expect = (delay_s / tick).round() as i64;
    let sol = fine_offset(
        out.streams.get(Node::A),
        out.streams.get(Node::BArmA),
        expect,
        494,
        1,
    )
    .unwrap();
    // jitter σ ≈ 141 ps on the difference
    assert!(
        (sol.offset_refined * tick - delay_s).abs() < 50e-12,
        "{}",
        sol.offset_refined
    );
}

fn random_network(rng: &mut impl Rng) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::calibrated();
    let n = &mut cfg.network;
    n.source1.pair_rate_hz = rng.random_range(1e3..2e4);
    n.source2.pair_rate_hz = rng.random_range(1e3..2e4);
    n.channels.source1_to_b.transmission = rng.random_range(0.1..1.0);
    n.channels.source2_to_b.transmission = rng.random_range(0.1..1.0);
    for d in [
        &mut n.detectors.a,
        &mut n.detectors.b_arm_a,
        &mut n.detectors.b_arm_c,
        &mut n.detectors.c,
    ] {
        d.efficiency = rng.random_range(0.2..1.0);
        d.dark_rate_hz = rng.random_range(0.0..2000.0);
    }
    n.clocks.a.drift_ppm = rng.random_range(-10.0..10.0);
    n.clocks.b.drift_ppm = rng.random_range(-10.0..10.0);
    cfg
}

#[test]
fn click_rates_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dur = 2.0;
    for k in 0..20 {
        let cfg = random_network(&mut rng);
        let n = &cfg.network;
        let out = simulate_run(n, &cfg.schedule, dur, k).unwrap();
        let expect = [
            n.source1.pair_rate_hz
                * n.channels.source1_to_a.transmission
                * n.detectors.a.efficiency
                + 2.0 * n.detectors.a.dark_rate_hz,
            n.source1.pair_rate_hz
                * n.channels.source1_to_b.transmission
                * n.detectors.b_arm_a.efficiency
                + 2.0 * n.detectors.b_arm_a.dark_rate_hz,
            n.source2.pair_rate_hz
                * n.channels.source2_to_b.transmission
                * n.detectors.b_arm_c.efficiency
                + 2.0 * n.detectors.b_arm_c.dark_rate_hz,
            n.source2.pair_rate_hz
                * n.channels.source2_to_c.transmission
                * n.detectors.c.efficiency
                + 2.0 * n.detectors.c.dark_rate_hz,
        ];
        // per-config total at 3σ; individual streams at 4σ across the 80 draws
        let total: f64 = expect.iter().sum::<f64>() * dur;
        assert!(
            within_sigma(out.streams.total_len() as f64, total, 3.0),
            "config {k}"
        );
        for (node, e) in Node::ALL.iter().zip(expect) {
            let got = out.streams.get(*node).len() as f64;
            assert!(
                within_sigma(got, e * dur, 4.0),
                "config {k} {node}: {got} vs {}",
                e * dur
            );
        }
    }
}

#[test]
fn werner_marginals_are_balanced() {
    let cfg = quiet(ExperimentConfig::calibrated());
    let out = simulate_run(&cfg.network, &cfg.schedule, 30.0, 8).unwrap();
    for node in Node::ALL {
        let s = out.streams.get(node);
        for x in 0..2u8 {
            let sel: Vec<_> = s.iter().filter(|r| r.setting == x).collect();
            let n = sel.len() as f64;
            let plus = sel.iter().filter(|r| r.detector == 0).count() as f64;
            assert!(
                (plus - n / 2.0).abs() <= 3.0 * (n / 4.0).sqrt(),
                "{node} x={x}"
            );
        }
    }
}

#[test]
fn inverse_clock_recovers_true_times() {
    let mut cfg = quiet(ExperimentConfig::calibrated());
    cfg.network.detectors.a.jitter_ps = 0.0;
    cfg.network.clocks.a = ClockModel {
        offset_ns: -7_000.0,
        drift_ppm: 8.0,
        gps_coarse_sigma_ns: 0.0,
    };
    let out = simulate_run(&cfg.network, &cfg.schedule, 5.0, 4).unwrap();
    let tick = out.truth.tick_s;
    let clock = out.truth.clock(Site::A);
    // A sits beside the pulsed source: every click is on the pulse grid
    let rep = 320e6;
    for r in out.streams.get(Node::A).iter().step_by(101) {
        let t = clock.to_true_s(r.tick as f64 * tick);
        let pulse = (t * rep).round() / rep;
        assert!((t - pulse).abs() <= tick, "{t} vs {pulse}");
    }
    let sq = &out.references[Site::A as usize].square;
    assert_eq!(sq.kind(), ReferenceKind::Square10kHz);
    for (k, &e) in sq.edges().iter().enumerate().step_by(997) {
        let t = clock.to_true_s(e as f64 * tick);
        assert!((t - k as f64 * SQUARE_PERIOD_S).abs() <= tick);
    }
}

#[test]
fn equal_seeds_give_identical_streams() {
    let cfg = ExperimentConfig::calibrated();
    let a = simulate_run(&cfg.network, &cfg.schedule, 3.0, 42).unwrap();
    let b = simulate_run(&cfg.network, &cfg.schedule, 3.0, 42).unwrap();
    let c = simulate_run(&cfg.network, &cfg.schedule, 3.0, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.streams.total_len(), c.streams.total_len());
}

#[test]
fn streams_are_sorted_and_stamped_with_schedule() {
    let cfg = ExperimentConfig::calibrated();
    let out = simulate_run(&cfg.network, &cfg.schedule, 17.0, 2).unwrap();
    for node in Node::ALL {
        let s = out.streams.get(node);
        assert!(s.windows(2).all(|w| w[0].tick <= w[1].tick));
        for r in s.iter().step_by(53) {
            let triple = cfg.schedule.triple(r.block_index);
            let x = match node {
                Node::A => triple[0],
                Node::BArmA | Node::BArmC => triple[1],
                Node::C => triple[2],
            };
            assert_eq!(r.setting, x);
        }
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let mut cfg = ExperimentConfig::calibrated();
    assert!(simulate_run(&cfg.network, &cfg.schedule, -1.0, 0).is_err());
    cfg.schedule.order.clear();
    assert!(simulate_run(&cfg.network, &cfg.schedule, 1.0, 0).is_err());
    let mut cfg = ExperimentConfig::calibrated();
    cfg.network.source1.rep_rate_hz = Some(1e3);
    assert!(simulate_run(&cfg.network, &cfg.schedule, 1.0, 0).is_err());
}

#[test]
fn zero_duration_yields_empty_streams() {
    let cfg = ExperimentConfig::calibrated();
    let out = simulate_run(&cfg.network, &cfg.schedule, 0.0, 0).unwrap();
    assert_eq!(out.streams.total_len(), 0);
}

#[test]
fn ideal_fixture_examples() {
    let zeros = ArmBehavior::from_parity(&Behavior::deterministic(0, 0, 0));
    let s = ideal_streams(&zeros, 100, 0).unwrap();
    assert!(s.get(Node::A).iter().all(|r| r.detector == 0));
    assert!(s.get(Node::C).iter().all(|r| r.detector == 0));
    // even central parity: the two arms agree
    for (x, y) in s.get(Node::BArmA).iter().zip(s.get(Node::BArmC)) {
        assert_eq!(x.detector, y.detector);
    }
    let one = ideal_streams(&zeros, 1, 0).unwrap();
    for node in Node::ALL {
        assert_eq!(one.get(node).len(), 1);
    }
    assert!(ideal_streams(&zeros, 0, 0).is_err());

    let beh = born_arm_behavior(
        &singlet_state(),
        &singlet_state(),
        &MeasurementPlan::optimal(),
    );
    let s = ideal_streams(&beh, 800, 1).unwrap();
    // every event carries one click per station on a shared tick
    for i in 0..800 {
        let t = s.get(Node::A)[i].tick;
        for node in Node::ALL {
            assert_eq!(s.get(node)[i].tick, t);
        }
    }
}
