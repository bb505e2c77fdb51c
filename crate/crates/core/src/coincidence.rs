//! From synchronized click streams to two-fold and four-fold events,
//! estimated behaviors and functional values with block errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    biloc_functional, chsh, settings_index, ArmBehavior, Behavior, BipartiteBehavior, Convention,
    FunctionalResult,
};
use crate::sim::{DetectionRecord, SPEED_OF_LIGHT_M_PER_S};

/// Which source a two-fold event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    AB,
    BC,
}

/// Peripheral click paired with a central-arm click.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoFoldEvent {
    pub link: Link,
    pub t_mid: u64,
    pub x_local: u8,
    pub x_central: u8,
    pub out_local: u8,
    pub out_central: u8,
    pub block_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourFoldEvent {
    pub ab: TwoFoldEvent,
    pub bc: TwoFoldEvent,
    pub dt: u64,
}

/// Events that can be grouped by schedule block.
pub trait Blocked {
    fn block_index(&self) -> u32;
}

impl Blocked for TwoFoldEvent {
    fn block_index(&self) -> u32 {
        self.block_index
    }
}

impl Blocked for FourFoldEvent {
    fn block_index(&self) -> u32 {
        self.ab.block_index
    }
}

/// Pair each `local` click with the nearest unused `central` click within
/// ± window/2, taking local clicks in time order. Pairs whose clicks fall in
/// different schedule blocks are discarded.
pub fn twofold_match(
    local: &[DetectionRecord],
    central: &[DetectionRecord],
    window: u64,
    link: Link,
) -> Vec<TwoFoldEvent> {
    let mut used = vec![false; central.len()];
    let mut out = Vec::new();
    let mut start = 0usize;
    for x in local {
        let xt = x.tick as i128;
        while start < central.len() && 2 * (xt - central[start].tick as i128) > window as i128 {
            start += 1;
        }
        let mut best: Option<(usize, i128)> = None;
        let mut j = start;
        while j < central.len() {
            let d = central[j].tick as i128 - xt;
            if 2 * d > window as i128 {
                break;
            }
            if !used[j] && best.is_none_or(|(_, bd)| d.abs() < bd.abs()) {
                best = Some((j, d));
            }
            j += 1;
        }
        if let Some((j, _)) = best {
            used[j] = true;
            let y = &central[j];
            if y.block_index != x.block_index {
                continue;
            }
            let (lo, hi) = if x.tick <= y.tick {
                (x.tick, y.tick)
            } else {
                (y.tick, x.tick)
            };
            out.push(TwoFoldEvent {
                link,
                t_mid: lo + (hi - lo) / 2,
                x_local: x.setting,
                x_central: y.setting,
                out_local: x.detector,
                out_central: y.detector,
                block_index: x.block_index,
            });
        }
    }
    out
}

/// Join AB and BC events whose midpoints lie within `window` of each other
/// and that share a schedule block. Each AB event takes the earliest unused
/// BC event it can reach, which yields a maximum matching; the number of
/// four-folds therefore never drops when the window widens.
pub fn fourfold_filter(
    ab: &[TwoFoldEvent],
    bc: &[TwoFoldEvent],
    window: u64,
) -> Vec<FourFoldEvent> {
    let mut used = vec![false; bc.len()];
    let mut out = Vec::new();
    let mut start = 0usize;
    for e in ab {
        let t = e.t_mid as i128;
        while start < bc.len() && (used[start] || (bc[start].t_mid as i128) < t - window as i128) {
            start += 1;
        }
        let mut j = start;
        while j < bc.len() && (bc[j].t_mid as i128) <= t + window as i128 {
            if !used[j] && bc[j].block_index == e.block_index {
                used[j] = true;
                out.push(FourFoldEvent {
                    ab: *e,
                    bc: bc[j],
                    dt: (bc[j].t_mid as i128 - t).unsigned_abs() as u64,
                });
                break;
            }
            j += 1;
        }
    }
    out
}

/// Counts indexed by (xA, xB, xC, a, bA, bC, c).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    counts: [u64; 128],
}

impl Default for CountsTable {
    fn default() -> Self {
        Self { counts: [0; 128] }
    }
}

impl CountsTable {
    fn index(setting: usize, outcome: usize) -> usize {
        (setting << 4) | outcome
    }

    pub fn from_fourfolds(events: &[FourFoldEvent]) -> Self {
        let mut t = Self::default();
        for e in events {
            t.add(e);
        }
        t
    }

    pub fn add(&mut self, e: &FourFoldEvent) {
        let s = settings_index(
            e.ab.x_local as usize,
            e.ab.x_central as usize,
            e.bc.x_local as usize,
        );
        let o = ArmBehavior::outcome_index(
            e.ab.out_local as usize,
            e.ab.out_central as usize,
            e.bc.out_central as usize,
            e.bc.out_local as usize,
        );
        self.counts[Self::index(s, o)] += 1;
    }

    #[allow(clippy::too_many_arguments)]
    pub fn get(
        &self,
        xa: usize,
        xb: usize,
        xc: usize,
        a: usize,
        ba: usize,
        bc: usize,
        c: usize,
    ) -> u64 {
        self.counts[Self::index(
            settings_index(xa, xb, xc),
            ArmBehavior::outcome_index(a, ba, bc, c),
        )]
    }

    pub fn setting_total(&self, setting: usize) -> u64 {
        self.counts[setting << 4..(setting + 1) << 4].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Setting triples with no events.
    pub fn missing_settings(&self) -> Vec<usize> {
        (0..8).filter(|&s| self.setting_total(s) == 0).collect()
    }

    pub fn arm_behavior(&self) -> Result<ArmBehavior> {
        let missing = self.missing_settings();
        if !missing.is_empty() {
            return Err(Error::IncompleteSettings(missing));
        }
        let mut table = [[0.0; 16]; 8];
        for (s, row) in table.iter_mut().enumerate() {
            let n = self.setting_total(s) as f64;
            for (o, cell) in row.iter_mut().enumerate() {
                *cell = self.counts[Self::index(s, o)] as f64 / n;
            }
            // absorb rounding so the row validates
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        ArmBehavior::new(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorEstimate {
    pub counts: CountsTable,
    /// None when some setting triple has no events.
    pub behavior: Option<Behavior>,
    pub missing: Vec<usize>,
}

impl BehaviorEstimate {
    pub fn functional(&self, convention: Convention) -> Result<FunctionalResult> {
        match &self.behavior {
            Some(b) => Ok(biloc_functional(b, convention)),
            None => Err(Error::IncompleteSettings(self.missing.clone())),
        }
    }
}

/// Relative frequencies with the central bit reduced to bA ⊕ bC.
pub fn estimate_behavior(events: &[FourFoldEvent]) -> BehaviorEstimate {
    let counts = CountsTable::from_fourfolds(events);
    let missing = counts.missing_settings();
    let behavior = counts.arm_behavior().ok().map(|a| a.parity_marginal());
    BehaviorEstimate {
        counts,
        behavior,
        missing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_blocks: usize,
}

impl EstimateWithError {
    /// Standard error of the mean of per-block values.
    pub fn from_blocks(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InsufficientBlocks(n));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n_blocks: n,
        })
    }

    /// Distance above `bound` in standard errors.
    pub fn sigma_distance(&self, bound: f64) -> f64 {
        if self.std_error > 0.0 {
            (self.value - bound) / self.std_error
        } else if self.value > bound {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Split `events` into `n_blocks` groups of consecutive schedule blocks,
/// evaluate each group and combine. Groups `eval` rejects are dropped with
/// a warning.
pub fn block_errors<E: Blocked + Clone>(
    events: &[E],
    n_blocks: usize,
    eval: impl Fn(&[E]) -> Result<f64>,
) -> Result<EstimateWithError> {
    if n_blocks < 2 {
        return Err(Error::OutOfRange("n_blocks must be ≥ 2".into()));
    }
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let lo = events
        .iter()
        .map(Blocked::block_index)
        .min()
        .expect("non-empty") as u64;
    let hi = events
        .iter()
        .map(Blocked::block_index)
        .max()
        .expect("non-empty") as u64;
    let span = hi - lo + 1;
    let mut groups: Vec<Vec<E>> = vec![Vec::new(); n_blocks];
    for e in events {
        let g = ((e.block_index() as u64 - lo) * n_blocks as u64 / span) as usize;
        groups[g].push(e.clone());
    }
    let mut values = Vec::with_capacity(n_blocks);
    for (g, group) in groups.iter().enumerate() {
        match eval(group) {
            Ok(v) => values.push(v),
            Err(e) => log::warn!("block {g} dropped: {e}"),
        }
    }
    EstimateWithError::from_blocks(&values)
}

/// B with block errors.
pub fn biloc_block_errors(
    events: &[FourFoldEvent],
    n_blocks: usize,
    convention: Convention,
) -> Result<EstimateWithError> {
    block_errors(events, n_blocks, |g| {
        Ok(estimate_behavior(g).functional(convention)?.b)
    })
}

/// p(x_local, x_central, out_local, out_central) as a two-party behavior.
pub fn twofold_behavior(events: &[TwoFoldEvent]) -> Result<BipartiteBehavior> {
    let mut counts = [[0u64; 4]; 4];
    for e in events {
        counts[((e.x_local << 1) | e.x_central) as usize]
            [((e.out_local << 1) | e.out_central) as usize] += 1;
    }
    let missing: Vec<usize> = (0..4)
        .filter(|&s| counts[s].iter().sum::<u64>() == 0)
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteSettings(missing));
    }
    let mut table = [[0.0; 4]; 4];
    for s in 0..4 {
        let n: u64 = counts[s].iter().sum();
        for o in 0..4 {
            table[s][o] = counts[s][o] as f64 / n as f64;
        }
        let total: f64 = table[s].iter().sum();
        table[s].iter_mut().for_each(|p| *p /= total);
    }
    BipartiteBehavior::new(table)
}

/// CHSH value of one link with block errors.
pub fn chsh_from_twofolds(events: &[TwoFoldEvent], n_blocks: usize) -> Result<EstimateWithError> {
    twofold_behavior(events)?;
    block_errors(events, n_blocks, |g| Ok(chsh(&twofold_behavior(g)?)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub window_ticks: u64,
    pub n_fourfolds: usize,
    /// None when the window yields too few complete blocks.
    pub estimate: Option<EstimateWithError>,
    /// Functional evaluated on all four-folds together.
    pub pooled: Option<FunctionalResult>,
}

impl SweepPoint {
    pub fn sigma_distance(&self) -> Option<f64> {
        self.estimate.map(|e| e.sigma_distance(1.0))
    }
}

/// B against four-fold window.
pub fn window_sweep(
    ab: &[TwoFoldEvent],
    bc: &[TwoFoldEvent],
    windows: &[u64],
    n_blocks: usize,
    convention: Convention,
) -> Result<Vec<SweepPoint>> {
    if windows.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::OutOfRange("windows must ascend".into()));
    }
    Ok(windows
        .iter()
        .map(|&w| {
            let four = fourfold_filter(ab, bc, w);
            let estimate = match biloc_block_errors(&four, n_blocks, convention) {
                Ok(e) => Some(e),
                Err(err) => {
                    log::warn!("window {w} ticks has no estimate: {err}");
                    None
                }
            };
            SweepPoint {
                window_ticks: w,
                n_fourfolds: four.len(),
                estimate,
                pooled: estimate_behavior(&four).functional(convention).ok(),
            }
        })
        .collect())
}

/// Index of the window furthest above the bound in standard errors.
pub fn optimal_window(points: &[SweepPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.sigma_distance().map(|s| (i, s)))
        .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
}

/// Whether a coincidence window of `window_s` is shorter than the light
/// travel time over `distance_m`.
pub fn spacelike_check(window_s: f64, distance_m: f64) -> Result<bool> {
    if !(distance_m > 0.0) {
        return Err(Error::OutOfRange("distance must be positive".into()));
    }
    if !(window_s >= 0.0) {
        return Err(Error::OutOfRange("window must be ≥ 0".into()));
    }
    Ok(window_s < distance_m / SPEED_OF_LIGHT_M_PER_S)
}

/// Four-folds grouped per setting triple, for reporting.
pub fn settings_histogram(events: &[FourFoldEvent]) -> [u64; 8] {
    let t = CountsTable::from_fourfolds(events);
    let mut out = [0; 8];
    for (s, o) in out.iter_mut().enumerate() {
        *o = t.setting_total(s);
    }
    out
}
