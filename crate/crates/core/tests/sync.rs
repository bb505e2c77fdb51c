use std::sync::Mutex;
use std::time::Instant;

use biloc_core::config::ExperimentConfig;
use biloc_core::sim::*;
use biloc_core::sync::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static WARNINGS: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct Capture;

impl log::Log for Capture {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }
    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            WARNINGS.lock().unwrap().push(r.args().to_string());
        }
    }
    fn flush(&self) {}
}

static LOGGER: Capture = Capture;

fn capture_warnings() {
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(log::LevelFilter::Warn);
}

const TICK: f64 = 81e-12;

fn rec(tick: u64, node: Node) -> DetectionRecord {
    DetectionRecord {
        tick,
        block_index: 0,
        node,
        detector: 0,
        setting: 0,
    }
}

fn references_only(clock_a: ClockModel, dur: f64, seed: u64) -> SimOutput {
    let mut cfg = ExperimentConfig::calibrated();
    cfg.network.source1.pair_rate_hz = 0.0;
    cfg.network.source2.pair_rate_hz = 0.0;
    for d in [
        &mut cfg.network.detectors.a,
        &mut cfg.network.detectors.b_arm_a,
        &mut cfg.network.detectors.b_arm_c,
        &mut cfg.network.detectors.c,
    ] {
        d.dark_rate_hz = 0.0;
    }
    cfg.network.clocks.a = clock_a;
    cfg.network.clocks.b = ClockModel::default();
    simulate_run(&cfg.network, &cfg.schedule, dur, seed).unwrap()
}

/// Worst error of corrected elapsed time against true elapsed time.
fn worst_elapsed_error(out: &SimOutput, map: &DriftMap, span_s: f64) -> f64 {
    let t0 = 1e-3;
    let l0 = out.truth.local_ticks(Site::A, t0);
    let m0 = map.map(l0);
    let mut worst = 0.0f64;
    let mut t = t0;
    while t < span_s {
        let l = out.truth.local_ticks(Site::A, t);
        let err = (map.map(l) - m0) - (t - t0) / TICK;
        worst = worst.max(err.abs());
        t += 0.7371;
    }
    worst
}

#[test]
fn one_ppm_drift_removed_over_25_minutes() {
    let clock = ClockModel {
        offset_ns: 250.0,
        drift_ppm: 1.0,
        gps_coarse_sigma_ns: 0.0,
    };
    let out = references_only(clock, 1500.0, 1);
    let map = DriftMap::fit(&out.references[0].square, TICK).unwrap();
    assert!((map.drift() - 1e-6).abs() < 1e-9, "{}", map.drift());
    let worst = worst_elapsed_error(&out, &map, 1500.0);
    assert!(worst < 1.0, "worst {worst} ticks");
}

#[test]
fn large_drift_is_corrected_with_a_warning() {
    capture_warnings();
    let clock = ClockModel {
        offset_ns: 0.0,
        drift_ppm: 500.0,
        gps_coarse_sigma_ns: 0.0,
    };
    let out = references_only(clock, 60.0, 2);
    let map = DriftMap::fit(&out.references[0].square, TICK).unwrap();
    let worst = worst_elapsed_error(&out, &map, 60.0);
    assert!(worst < 2.0, "worst {worst} ticks");
    assert!(WARNINGS.lock().unwrap().iter().any(|w| w.contains("drift")));
}

#[test]
fn dropouts_are_excluded_not_bridged() {
    let clock = ClockModel {
        offset_ns: 0.0,
        drift_ppm: 3.0,
        gps_coarse_sigma_ns: 0.0,
    };
    let out = references_only(clock, 10.0, 3);
    let edges = out.references[0].square.edges();
    // lose 2 ms of reference around t = 5 s
    let kept: Vec<u64> = edges
        .iter()
        .enumerate()
        .filter(|(k, _)| !(50_000..50_020).contains(k))
        .map(|(_, &e)| e)
        .collect();
    let lost = (edges[50_000] + edges[50_010]) / 2;
    let r = ReferenceSignal::new(ReferenceKind::Square10kHz, kept).unwrap();
    let map = DriftMap::fit(&r, TICK).unwrap();
    assert_eq!(map.gaps().len(), 1);
    assert!(!map.covers(lost));
    assert!(map.covers(edges[10_000]));
    let worst = worst_elapsed_error(&out, &map, 10.0);
    assert!(worst < 1.0, "worst {worst}");
}

#[test]
fn coarse_offset_from_noisy_pulses() {
    let clock = ClockModel {
        offset_ns: 13.0,
        drift_ppm: 0.0,
        gps_coarse_sigma_ns: 5.0,
    };
    // pulses at 0..=24 s of true time
    let out = references_only(clock, 24.5, 4);
    let pa = &out.references[Site::A as usize].pulses;
    let pb = &out.references[Site::B as usize].pulses;
    assert_eq!(pa.edges().len(), 25);
    let c = coarse_offset(pb, pa, 5.0e-9 / TICK).unwrap();
    let ns = c.offset_ticks as f64 * TICK * 1e9;
    assert!((ns - 13.0).abs() <= 3.0, "{ns} ns");
    assert_eq!(c.n_pairs, 25);
}

fn pair_streams(
    rng: &mut impl Rng,
    n: usize,
    offset: i64,
    noise: usize,
) -> (Vec<DetectionRecord>, Vec<DetectionRecord>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut t = 10_000_000u64;
    for _ in 0..n {
        t += rng.random_range(1_000..2_000_000);
        if rng.random_bool(0.7) {
            x.push(rec(t, Node::A));
            y.push(rec(
                (t as i64 + offset + rng.random_range(-2..=2)) as u64,
                Node::BArmA,
            ));
        }
    }
    let end = t;
    for _ in 0..noise {
        x.push(rec(rng.random_range(10_000_000..end), Node::A));
        y.push(rec(rng.random_range(10_000_000..end), Node::BArmA));
    }
    x.sort_by_key(|r| r.tick);
    y.sort_by_key(|r| r.tick);
    (x, y)
}

#[test]
fn fine_offset_recovers_known_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for offset in [-3_000i64, -17, 0, 11_119, 250_000] {
        let (x, y) = pair_streams(&mut rng, 20_000, offset, 5_000);
        let sol = fine_offset(&x, &y, offset + 200, 494, 1).unwrap();
        assert!(sol.is_confident());
        assert!(
            (sol.offset_refined - offset as f64).abs() < 1.0,
            "{offset}: {}",
            sol.offset_refined
        );
        assert!(sol.residual_ticks <= 3.0);
    }
}

#[test]
fn uncorrelated_streams_are_low_confidence() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut noise = |node| {
        let mut v: Vec<_> = (0..20_000)
            .map(|_| rec(rng.random_range(0..10_000_000_000u64), node))
            .collect();
        v.sort_by_key(|r| r.tick);
        v
    };
    let (x, y) = (noise(Node::A), noise(Node::BArmA));
    assert!(!fine_offset(&x, &y, 0, 494, 1).unwrap().is_confident());
    let mut cfg = ExperimentConfig::calibrated();
    cfg.network.source1.pair_rate_hz = 0.0;
    cfg.network.source2.pair_rate_hz = 0.0;
    cfg.network.detectors.a.dark_rate_hz = 5e4;
    cfg.network.detectors.b_arm_a.dark_rate_hz = 5e4;
    let out = simulate_run(&cfg.network, &cfg.schedule, 20.0, 6).unwrap();
    let sol = fine_offset(
        out.streams.get(Node::A),
        out.streams.get(Node::BArmA),
        0,
        494,
        1,
    )
    .unwrap();
    assert_eq!(
        sol.confidence,
        Confidence::Low,
        "{}",
        sol.peak_to_background
    );
}

#[test]
fn histogram_is_independent_of_chunking() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (x, y) = pair_streams(&mut rng, 30_000, 4_000, 10_000);
    let mut whole = DiffHistogram::centered(4_100, 494, 1).unwrap();
    whole.accumulate(&x, &y);

    // split on a boundary in x; y keeps the search margin on both sides
    let margin = 4_100 + 494 + 1;
    let mut merged = DiffHistogram::centered(4_100, 494, 1).unwrap();
    let cuts = [0usize, 777, 9_000, 9_001, 15_500, x.len()];
    for c in cuts.windows(2).rev() {
        let xs = &x[c[0]..c[1]];
        if xs.is_empty() {
            continue;
        }
        let lo = xs[0].tick.saturating_sub(margin);
        let hi = xs[xs.len() - 1].tick + margin;
        let a = y.partition_point(|r| r.tick < lo);
        let b = y.partition_point(|r| r.tick <= hi);
        let mut part = DiffHistogram::centered(4_100, 494, 1).unwrap();
        part.accumulate(xs, &y[a..b]);
        merged.merge(&part).unwrap();
    }
    assert_eq!(merged, whole);
}

#[test]
fn one_second_chunk_is_processed_in_real_time() {
    let cfg = ExperimentConfig::calibrated();
    let out = simulate_run(&cfg.network, &cfg.schedule, 3.0, 8).unwrap();
    let t0 = cfg.network.clocks.a.to_local_s(1.0);
    let t1 = cfg.network.clocks.a.to_local_s(2.0);
    let (lo, hi) = ((t0 / TICK) as u64, (t1 / TICK) as u64);
    let chunk = |s: &[DetectionRecord]| -> Vec<DetectionRecord> {
        s.iter()
            .filter(|r| r.tick >= lo && r.tick < hi)
            .copied()
            .collect()
    };
    let a = chunk(out.streams.get(Node::A));
    let b = chunk(out.streams.get(Node::BArmA));
    assert!(a.len() > 5_000);
    let start = Instant::now();
    let ca = drift_correct(&a, &out.references[0].square, TICK).unwrap();
    let cb = drift_correct(&b, &out.references[1].square, TICK).unwrap();
    let sol = fine_offset(&ca.records, &cb.records, 11_280, 494, 1).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(sol.is_confident());
    assert!(elapsed < 1.0, "{elapsed} s");
}

#[test]
fn drift_and_offset_recovered_for_random_clocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..5 {
        let mut cfg = ExperimentConfig::calibrated();
        cfg.network.clocks.a = ClockModel {
            offset_ns: rng.random_range(-20.0..20.0),
            drift_ppm: rng.random_range(-10.0..10.0),
            gps_coarse_sigma_ns: 5.0,
        };
        cfg.network.clocks.b = ClockModel {
            offset_ns: 0.0,
            drift_ppm: rng.random_range(-10.0..10.0),
            gps_coarse_sigma_ns: 5.0,
        };
        let out = simulate_run(&cfg.network, &cfg.schedule, 60.0, 100 + k).unwrap();
        let ma = DriftMap::fit(&out.references[0].square, TICK).unwrap();
        let mb = DriftMap::fit(&out.references[1].square, TICK).unwrap();
        let est = mb.drift() - ma.drift();
        let truth = (cfg.network.clocks.b.drift_ppm - cfg.network.clocks.a.drift_ppm) * 1e-6;
        assert!((est - truth).abs() < 1e-8, "config {k}: {est} vs {truth}");

        let (a, _) = apply_drift_map(out.streams.get(Node::A), &ma);
        let (b, _) = apply_drift_map(out.streams.get(Node::BArmA), &mb);
        let pa = correct_reference(&out.references[0].pulses, &ma).unwrap();
        let pb = correct_reference(&out.references[1].pulses, &mb).unwrap();
        let coarse = coarse_offset(&pa, &pb, 7.1e-9 / TICK).unwrap();
        let nominal = (270.0 / SPEED_OF_LIGHT_M_PER_S / TICK).round() as i64;
        let sol = fine_offset(&a, &b, coarse.offset_ticks + nominal, 494, 1).unwrap();
        // the corrected bases keep each clock's origin: compare against the
        // offset between the two maps at the start of the run
        let t = 1.0;
        let expect = (mb.map(out.truth.local_ticks(Site::B, t))
            - ma.map(out.truth.local_ticks(Site::A, t)))
            + 270.0 / SPEED_OF_LIGHT_M_PER_S / TICK;
        assert!(
            (sol.offset_refined - expect).abs() < 1.0,
            "config {k}: {} vs {expect}",
            sol.offset_refined
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn offset_shifts_with_the_stream(shift in -5_000i64..5_000, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = pair_streams(&mut rng, 3_000, 1_000, 1_000);
        let base = fine_offset(&x, &y, 1_000, 300, 1).unwrap();
        let moved: Vec<_> = y.iter().map(|r| rec((r.tick as i64 + shift) as u64, r.node)).collect();
        let sol = fine_offset(&x, &moved, 1_000 + shift, 300, 1).unwrap();
        prop_assert_eq!(sol.offset_ticks, base.offset_ticks + shift);
        prop_assert!((sol.offset_refined - base.offset_refined - shift as f64).abs() < 1e-6);
        prop_assert_eq!(sol.histogram.counts(), base.histogram.counts());
    }
}
