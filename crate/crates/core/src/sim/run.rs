use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, Normal};
use serde::Serialize;

use super::models::{
    ChannelModel, ClockModel, DetectorModel, NetworkConfig, SourceKind, SourceModel,
};
use super::records::{DetectionRecord, Node, Site, Streams};
use super::schedule::SettingsSchedule;
use crate::error::{Error, Result};
use crate::quantum::{pair_distribution, ArmBehavior, DichotomicObservable, TwoQubitState};
use crate::sync::{ReferenceKind, ReferenceSignal};

pub const SQUARE_PERIOD_S: f64 = 1e-4;
pub const PULSE_PERIOD_S: f64 = 1.0;

/// Spacing of the noise-free fixture events.
pub const IDEAL_SPACING_TICKS: u64 = 10_000;

const STREAM_SOURCE1: u64 = 1;
const STREAM_SOURCE2: u64 = 2;
const STREAM_DARK: u64 = 16;
const STREAM_REFERENCE: u64 = 32;
const STREAM_IDEAL: u64 = 64;

fn substream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteReferences {
    pub square: ReferenceSignal,
    pub pulses: ReferenceSignal,
}

/// Parameters the analysis is supposed to recover.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub tick_s: f64,
    pub clocks: [ClockModel; 3],
    /// Channel delay per station, seconds.
    pub delays_s: [f64; 4],
}

impl GroundTruth {
    pub fn clock(&self, site: Site) -> &ClockModel {
        &self.clocks[site as usize]
    }

    /// Continuous local time of `t_true_s` at `site`, in ticks.
    pub fn local_ticks(&self, site: Site, t_true_s: f64) -> f64 {
        self.clock(site).to_local_s(t_true_s) / self.tick_s
    }

    /// Where the y − x difference histogram of photons from one pair should
    /// peak once both clocks run at the nominal rate: clock offset plus
    /// path-delay difference, in ticks.
    pub fn pair_offset_ticks(&self, x: Node, y: Node) -> f64 {
        let off = self.clock(y.site()).offset_s() - self.clock(x.site()).offset_s();
        let delay = self.delays_s[y as usize] - self.delays_s[x as usize];
        (off + delay) / self.tick_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub streams: Streams,
    pub references: [SiteReferences; 3],
    pub truth: GroundTruth,
    pub duration_s: f64,
}

struct Path<'a> {
    node: Node,
    channel: &'a ChannelModel,
    detector: &'a DetectorModel,
    clock: &'a ClockModel,
}

impl Path<'_> {
    fn setting(&self, triple: [u8; 3]) -> u8 {
        match self.node {
            Node::A => triple[0],
            Node::BArmA | Node::BArmC => triple[1],
            Node::C => triple[2],
        }
    }

    fn survival(&self) -> f64 {
        self.channel.transmission * self.detector.efficiency
    }
}

fn local_tick(clock: &ClockModel, t_true_s: f64, tick_s: f64) -> u64 {
    (clock.to_local_s(t_true_s) / tick_s).floor() as u64
}

struct Emission<'a> {
    source: &'a SourceModel,
    rho: TwoQubitState,
    obs: [&'a [DichotomicObservable; 2]; 2],
    paths: [Path<'a>; 2],
}

fn emit_pairs(
    em: &Emission,
    schedule: &SettingsSchedule,
    duration_s: f64,
    tick_s: f64,
    rng: &mut ChaCha8Rng,
    out: [&mut Vec<DetectionRecord>; 2],
) -> Result<()> {
    let rate = em.source.pair_rate_hz;
    if rate <= 0.0 || duration_s <= 0.0 {
        return Ok(());
    }
    let mut dist = [[[0.0; 4]; 2]; 2];
    for (x1, row) in dist.iter_mut().enumerate() {
        for (x2, d) in row.iter_mut().enumerate() {
            *d = pair_distribution(&em.rho, &em.obs[0][x1], &em.obs[1][x2]);
        }
    }
    let survive = [em.paths[0].survival(), em.paths[1].survival()];
    let jitter = [
        Normal::new(0.0, em.paths[0].detector.jitter_s())
            .map_err(|e| Error::InvalidModel(e.to_string()))?,
        Normal::new(0.0, em.paths[1].detector.jitter_s())
            .map_err(|e| Error::InvalidModel(e.to_string()))?,
    ];
    let delay = [em.paths[0].channel.delay_s(), em.paths[1].channel.delay_s()];
    let [out0, out1] = out;

    // Pulsed: pulse n at n / rep_rate, each carrying a pair with probability
    // rate / rep_rate; skip empty pulses geometrically. Cw: Poisson process.
    let mut next: Box<dyn FnMut(&mut ChaCha8Rng) -> f64> = match em.source.kind {
        SourceKind::Pulsed => {
            let rep = em.source.rep_rate_hz.expect("validated pulsed source");
            let q = rate / rep;
            let geo = Geometric::new(q).map_err(|e| Error::InvalidModel(e.to_string()))?;
            let mut pulse: u64 = 0;
            let mut first = true;
            Box::new(move |rng| {
                let skip = geo.sample(rng);
                pulse = if first { skip } else { pulse + 1 + skip };
                first = false;
                pulse as f64 / rep
            })
        }
        SourceKind::Cw => {
            let exp = Exp::new(rate).map_err(|e| Error::InvalidModel(e.to_string()))?;
            let mut t = 0.0;
            Box::new(move |rng| {
                t += exp.sample(rng);
                t
            })
        }
    };

    loop {
        let t = next(rng);
        if t >= duration_s {
            break;
        }
        let alive = [
            rng.random::<f64>() < survive[0],
            rng.random::<f64>() < survive[1],
        ];
        let arrival = [t + delay[0], t + delay[1]];
        let blocks = [
            schedule.block_index(arrival[0]),
            schedule.block_index(arrival[1]),
        ];
        let x = [
            em.paths[0].setting(schedule.triple(blocks[0])),
            em.paths[1].setting(schedule.triple(blocks[1])),
        ];
        // outcomes follow the settings in force when each photon lands
        let p = &dist[x[0] as usize][x[1] as usize];
        let u: f64 = rng.random();
        let mut outcome = 3;
        let mut acc = 0.0;
        for (k, pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                outcome = k;
                break;
            }
        }
        let bits = [(outcome >> 1) as u8, (outcome & 1) as u8];
        for k in 0..2 {
            let j: f64 = jitter[k].sample(rng);
            if !alive[k] {
                continue;
            }
            let rec = DetectionRecord {
                tick: local_tick(em.paths[k].clock, arrival[k] + j, tick_s),
                block_index: blocks[k],
                node: em.paths[k].node,
                detector: bits[k],
                setting: x[k],
            };
            if k == 0 {
                out0.push(rec);
            } else {
                out1.push(rec);
            }
        }
    }
    Ok(())
}

fn dark_counts(
    path: &Path,
    schedule: &SettingsSchedule,
    duration_s: f64,
    tick_s: f64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<DetectionRecord>,
) -> Result<()> {
    let rate = path.detector.dark_rate_hz;
    if rate <= 0.0 || duration_s <= 0.0 {
        return Ok(());
    }
    let exp = Exp::new(rate).map_err(|e| Error::InvalidModel(e.to_string()))?;
    for detector in 0..2u8 {
        let mut t = 0.0;
        loop {
            t += exp.sample(rng);
            if t >= duration_s {
                break;
            }
            let block = schedule.block_index(t);
            out.push(DetectionRecord {
                tick: local_tick(path.clock, t, tick_s),
                block_index: block,
                node: path.node,
                detector,
                setting: path.setting(schedule.triple(block)),
            });
        }
    }
    Ok(())
}

fn site_references(
    clock: &ClockModel,
    duration_s: f64,
    tick_s: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SiteReferences> {
    let n_edges = (duration_s / SQUARE_PERIOD_S).floor() as u64 + 1;
    let edges = (0..n_edges)
        .map(|k| local_tick(clock, k as f64 * SQUARE_PERIOD_S, tick_s))
        .collect();
    let gps = Normal::new(0.0, clock.gps_coarse_sigma_ns * 1e-9)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    let n_pulses = (duration_s / PULSE_PERIOD_S).floor() as u64 + 1;
    let pulses = (0..n_pulses)
        .map(|k| local_tick(clock, k as f64 * PULSE_PERIOD_S + gps.sample(rng), tick_s))
        .collect();
    Ok(SiteReferences {
        square: ReferenceSignal::new(ReferenceKind::Square10kHz, edges)?,
        pulses: ReferenceSignal::new(ReferenceKind::Pulse1Hz, pulses)?,
    })
}

/// Simulate `duration_s` seconds of the two-source network.
///
/// Every random draw comes from a ChaCha substream keyed by (seed, purpose),
/// so equal inputs give bit-identical output.
pub fn simulate_run(
    net: &NetworkConfig,
    schedule: &SettingsSchedule,
    duration_s: f64,
    seed: u64,
) -> Result<SimOutput> {
    net.validate()?;
    schedule.validate()?;
    if !(duration_s >= 0.0) || !duration_s.is_finite() {
        return Err(Error::OutOfRange(format!("duration {duration_s} s")));
    }
    let plan = net.plan.build()?;
    let tick_s = net.tick_s();
    let clock_c = net.clocks.c_or_b().clone();
    let clocks = [net.clocks.a.clone(), net.clocks.b.clone(), clock_c];
    let ch = &net.channels;
    let det = &net.detectors;
    let path = |node: Node, channel, detector| Path {
        node,
        channel,
        detector,
        clock: &clocks[node.site() as usize],
    };
    let paths = [
        path(Node::A, &ch.source1_to_a, &det.a),
        path(Node::BArmA, &ch.source1_to_b, &det.b_arm_a),
        path(Node::BArmC, &ch.source2_to_b, &det.b_arm_c),
        path(Node::C, &ch.source2_to_c, &det.c),
    ];
    let mut out: [Vec<DetectionRecord>; 4] = Default::default();

    {
        let [s_a, s_ba, s_bc, s_c] = &mut out;
        let em1 = Emission {
            source: &net.source1,
            rho: net.source1.state.build()?,
            obs: [&plan.a, &plan.b_arm_a],
            paths: [
                path(Node::A, &ch.source1_to_a, &det.a),
                path(Node::BArmA, &ch.source1_to_b, &det.b_arm_a),
            ],
        };
        let mut rng = substream(seed, STREAM_SOURCE1);
        emit_pairs(&em1, schedule, duration_s, tick_s, &mut rng, [s_a, s_ba])?;
        let em2 = Emission {
            source: &net.source2,
            rho: net.source2.state.build()?,
            obs: [&plan.b_arm_c, &plan.c],
            paths: [
                path(Node::BArmC, &ch.source2_to_b, &det.b_arm_c),
                path(Node::C, &ch.source2_to_c, &det.c),
            ],
        };
        let mut rng = substream(seed, STREAM_SOURCE2);
        emit_pairs(&em2, schedule, duration_s, tick_s, &mut rng, [s_bc, s_c])?;
    }
    for (i, p) in paths.iter().enumerate() {
        let mut rng = substream(seed, STREAM_DARK + i as u64);
        dark_counts(p, schedule, duration_s, tick_s, &mut rng, &mut out[i])?;
    }
    for s in out.iter_mut() {
        s.sort_unstable_by_key(|r| (r.tick, r.detector, r.block_index, r.setting));
    }

    let mut refs = Vec::with_capacity(3);
    for site in Site::ALL {
        let mut rng = substream(seed, STREAM_REFERENCE + site as u64);
        refs.push(site_references(
            &clocks[site as usize],
            duration_s,
            tick_s,
            &mut rng,
        )?);
    }
    let references: [SiteReferences; 3] = refs.try_into().expect("three sites");

    let delays_s = [
        ch.source1_to_a.delay_s(),
        ch.source1_to_b.delay_s(),
        ch.source2_to_b.delay_s(),
        ch.source2_to_c.delay_s(),
    ];
    Ok(SimOutput {
        streams: Streams::new(out)?,
        references,
        truth: GroundTruth {
            tick_s,
            clocks,
            delays_s,
        },
        duration_s,
    })
}

/// Noise-free fixture: `n_events` four-fold events, one every
/// [`IDEAL_SPACING_TICKS`] on a shared clock, settings cycling through the
/// eight triples and outcomes drawn from `behavior`. Block `i / 8` holds
/// events `i` with the same quotient.
pub fn ideal_streams(behavior: &ArmBehavior, n_events: usize, seed: u64) -> Result<Streams> {
    if n_events == 0 {
        return Err(Error::OutOfRange("n_events must be positive".into()));
    }
    let mut rng = substream(seed, STREAM_IDEAL);
    let mut out: [Vec<DetectionRecord>; 4] = Default::default();
    for s in out.iter_mut() {
        s.reserve_exact(n_events);
    }
    let table = behavior.table();
    for i in 0..n_events {
        let x = i % 8;
        let (xa, xb, xc) = crate::quantum::settings_bits(x);
        let u: f64 = rng.random();
        let mut outcome = 15;
        let mut acc = 0.0;
        for (k, p) in table[x].iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = k;
                break;
            }
        }
        let (a, ba, bc, c) = ArmBehavior::outcome_bits(outcome);
        let tick = (i as u64 + 1) * IDEAL_SPACING_TICKS;
        let block_index = (i / 8) as u32;
        let rec = |node, detector: usize, setting: usize| DetectionRecord {
            tick,
            block_index,
            node,
            detector: detector as u8,
            setting: setting as u8,
        };
        out[0].push(rec(Node::A, a, xa));
        out[1].push(rec(Node::BArmA, ba, xb));
        out[2].push(rec(Node::BArmC, bc, xb));
        out[3].push(rec(Node::C, c, xc));
    }
    Streams::new(out)
}
