//! Streams in, bilocality and CHSH estimates out: drift removal, offsets,
//! two-fold matching per link, four-fold window sweep.

use serde::{Deserialize, Serialize};

use crate::coincidence::{
    chsh_from_twofolds, optimal_window, spacelike_check, twofold_match, window_sweep,
    EstimateWithError, Link, SweepPoint, TwoFoldEvent,
};
use crate::config::{ns_to_ticks, ExperimentConfig};
use crate::error::{Error, Result};
use crate::quantum::Convention;
use crate::sim::{DetectionRecord, Node, Site, SiteReferences, Streams};
use crate::sync::{
    apply_drift_map, coarse_offset, correct_reference, fine_offset, CoarseOffset, DriftMap,
    SyncSolution,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    pub tick_s: f64,
    pub twofold_window: u64,
    pub fourfold_windows: Vec<u64>,
    pub n_blocks: usize,
    pub convention: Convention,
    pub search_halfwidth: u64,
    pub bin: u64,
    /// Nominal extra path delay of the central arm over the peripheral
    /// station, per link, in ticks.
    pub delay_ab_ticks: f64,
    pub delay_bc_ticks: f64,
    pub gps_sigma_ticks: f64,
    pub separation_m: f64,
    /// Carry on past a low-confidence offset.
    pub force: bool,
}

impl AnalysisParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let tick_s = cfg.network.tick_s();
        let ch = &cfg.network.channels;
        let clocks = &cfg.network.clocks;
        let gps_ns = clocks
            .a
            .gps_coarse_sigma_ns
            .hypot(clocks.b.gps_coarse_sigma_ns);
        Self {
            tick_s,
            twofold_window: cfg.twofold_window_ticks(),
            fourfold_windows: cfg.fourfold_windows_ticks(),
            n_blocks: cfg.analysis.n_blocks,
            convention: cfg.analysis.convention,
            search_halfwidth: ns_to_ticks(cfg.analysis.search_halfwidth_ns, tick_s),
            bin: cfg.analysis.bin_ticks,
            delay_ab_ticks: (ch.source1_to_b.delay_s() - ch.source1_to_a.delay_s()) / tick_s,
            delay_bc_ticks: (ch.source2_to_b.delay_s() - ch.source2_to_c.delay_s()) / tick_s,
            gps_sigma_ticks: gps_ns * 1e-9 / tick_s,
            separation_m: cfg.analysis.separation_m,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSync {
    pub coarse: CoarseOffset,
    pub fine: SyncSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncReport {
    /// Estimated drift per site (A, B, C).
    pub drift: [f64; 3],
    pub ab: LinkSync,
    pub bc: LinkSync,
    /// Records outside the reference coverage, per station.
    pub excluded: [usize; 4],
}

fn shift(records: Vec<DetectionRecord>, by: i64) -> Result<Vec<DetectionRecord>> {
    records
        .into_iter()
        .map(|r| {
            let t = r.tick as i128 + by as i128;
            if t < 0 || t > u64::MAX as i128 {
                return Err(Error::TimestampRange(format!("shift by {by} ticks")));
            }
            Ok(DetectionRecord {
                tick: t as u64,
                ..r
            })
        })
        .collect()
}

fn link_offset(
    x: &[DetectionRecord],
    y: &[DetectionRecord],
    px: &SiteReferences,
    py: &SiteReferences,
    maps: (&DriftMap, &DriftMap),
    nominal_delay: f64,
    p: &AnalysisParams,
) -> Result<LinkSync> {
    let pulses_x = correct_reference(&px.pulses, maps.0)?;
    let pulses_y = correct_reference(&py.pulses, maps.1)?;
    let coarse = coarse_offset(&pulses_x, &pulses_y, p.gps_sigma_ticks)?;
    let expected = coarse.offset_ticks + nominal_delay.round() as i64;
    let mut fine = fine_offset(x, y, expected, p.search_halfwidth, p.bin)?;
    fine.drift_correction = maps.1.drift() - maps.0.drift();
    Ok(LinkSync { coarse, fine })
}

/// Bring all four streams onto the central node's drift-free time base,
/// with each peripheral stream moved onto its partner arm.
pub fn synchronize(
    streams: Streams,
    refs: &[SiteReferences; 3],
    p: &AnalysisParams,
) -> Result<(Streams, SyncReport)> {
    let maps = [
        DriftMap::fit(&refs[0].square, p.tick_s)?,
        DriftMap::fit(&refs[1].square, p.tick_s)?,
        DriftMap::fit(&refs[2].square, p.tick_s)?,
    ];
    let mut excluded = [0usize; 4];
    let raw = streams.into_inner();
    let mut corrected: Vec<Vec<DetectionRecord>> = Vec::with_capacity(4);
    for (i, s) in raw.into_iter().enumerate() {
        let site = Node::ALL[i].site();
        let (c, ex) = apply_drift_map(&s, &maps[site as usize]);
        excluded[i] = ex;
        corrected.push(c);
    }
    let [a, b_a, b_c, c]: [Vec<DetectionRecord>; 4] = corrected.try_into().expect("four streams");

    let (sa, sb, sc) = (Site::A as usize, Site::B as usize, Site::C as usize);
    let ab = link_offset(
        &a,
        &b_a,
        &refs[sa],
        &refs[sb],
        (&maps[sa], &maps[sb]),
        p.delay_ab_ticks,
        p,
    )?;
    let bc = link_offset(
        &c,
        &b_c,
        &refs[sc],
        &refs[sb],
        (&maps[sc], &maps[sb]),
        p.delay_bc_ticks,
        p,
    )?;
    for (name, l) in [("AB", &ab), ("BC", &bc)] {
        if !l.fine.is_confident() && !p.force {
            return Err(Error::Sync(format!(
                "link {name}: no clear coincidence peak near {} ticks (peak/background {:.2}); \
                 rerun with --force to analyze anyway",
                l.coarse.offset_ticks, l.fine.peak_to_background
            )));
        }
    }
    let a = shift(a, ab.fine.offset_refined.round() as i64)?;
    let c = shift(c, bc.fine.offset_refined.round() as i64)?;
    let report = SyncReport {
        drift: [maps[0].drift(), maps[1].drift(), maps[2].drift()],
        ab,
        bc,
        excluded,
    };
    Ok((Streams::new([a, b_a, b_c, c])?, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Summary {
    pub B: f64,
    pub B_std_error: f64,
    pub I1: f64,
    pub I2: f64,
    pub S_AB: Option<f64>,
    pub S_AB_std_error: Option<f64>,
    pub S_BC: Option<f64>,
    pub S_BC_std_error: Option<f64>,
    pub optimal_window_ns: f64,
    pub sigma_distance: f64,
    pub n_fourfolds: usize,
    pub spacelike: bool,
    pub convention: Convention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub sync: Option<SyncReport>,
    pub ab: Vec<TwoFoldEvent>,
    pub bc: Vec<TwoFoldEvent>,
    pub chsh_ab: Option<EstimateWithError>,
    pub chsh_bc: Option<EstimateWithError>,
    pub sweep: Vec<SweepPoint>,
    pub optimal: usize,
    pub summary: Summary,
}

/// Analysis of streams that already share one time base.
pub fn analyze_aligned(streams: &Streams, p: &AnalysisParams) -> Result<Analysis> {
    let ab = twofold_match(
        streams.get(Node::A),
        streams.get(Node::BArmA),
        p.twofold_window,
        Link::AB,
    );
    let bc = twofold_match(
        streams.get(Node::C),
        streams.get(Node::BArmC),
        p.twofold_window,
        Link::BC,
    );
    let chsh_ab = chsh_from_twofolds(&ab, p.n_blocks).ok();
    let chsh_bc = chsh_from_twofolds(&bc, p.n_blocks).ok();
    let sweep = window_sweep(&ab, &bc, &p.fourfold_windows, p.n_blocks, p.convention)?;
    let optimal = optimal_window(&sweep).ok_or(Error::NoEvents)?;
    let best = &sweep[optimal];
    let est = best.estimate.expect("optimal window has an estimate");
    let pooled = best.pooled.ok_or(Error::NoEvents)?;
    let window_s = best.window_ticks as f64 * p.tick_s;
    let summary = Summary {
        B: est.value,
        B_std_error: est.std_error,
        I1: pooled.i1,
        I2: pooled.i2,
        S_AB: chsh_ab.map(|e| e.value),
        S_AB_std_error: chsh_ab.map(|e| e.std_error),
        S_BC: chsh_bc.map(|e| e.value),
        S_BC_std_error: chsh_bc.map(|e| e.std_error),
        optimal_window_ns: (window_s * 1e15).round() / 1e6,
        sigma_distance: est.sigma_distance(1.0),
        n_fourfolds: best.n_fourfolds,
        spacelike: spacelike_check(window_s, p.separation_m)?,
        convention: p.convention,
    };
    Ok(Analysis {
        sync: None,
        ab,
        bc,
        chsh_ab,
        chsh_bc,
        sweep,
        optimal,
        summary,
    })
}

/// Full chain from raw local-clock streams and reference signals.
pub fn analyze(
    streams: Streams,
    refs: &[SiteReferences; 3],
    p: &AnalysisParams,
) -> Result<Analysis> {
    let (aligned, report) = synchronize(streams, refs, p)?;
    let mut out = analyze_aligned(&aligned, p)?;
    out.sync = Some(report);
    Ok(out)
}
