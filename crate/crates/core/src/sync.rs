//! Common time base for the three buildings: drift removal against the
//! 10 kHz reference, coarse offset from the 1 Hz pulses and fine offset from
//! the peak of the photon time-difference histogram.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::DetectionRecord;

/// Edges further apart than this many nominal periods mark a dropout.
pub const MAX_GAP_PERIODS: f64 = 10.0;
/// Edges per least-squares window of the drift fit.
pub const FIT_WINDOW_EDGES: usize = 1000;
/// Drift magnitude above which a warning is logged.
pub const DRIFT_WARN: f64 = 1e-4;
/// Peak-to-background ratio below which an offset is low confidence.
pub const MIN_PEAK_RATIO: f64 = 3.0;
/// Peak excess over background, in Poisson standard deviations, below which
/// an offset is low confidence.
pub const MIN_PEAK_SIGNIFICANCE: f64 = 5.0;
const CENTROID_HALFWIDTH: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceKind {
    #[serde(rename = "square_10kHz")]
    Square10kHz,
    #[serde(rename = "pulse_1Hz")]
    Pulse1Hz,
}

impl ReferenceKind {
    pub fn nominal_period_s(self) -> f64 {
        match self {
            ReferenceKind::Square10kHz => 1e-4,
            ReferenceKind::Pulse1Hz => 1.0,
        }
    }
}

/// Rising edges of a reference signal, in local ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    kind: ReferenceKind,
    edges: Vec<u64>,
}

impl ReferenceSignal {
    pub fn new(kind: ReferenceKind, edges: Vec<u64>) -> Result<Self> {
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Sync(
                "reference edges must be strictly increasing".into(),
            ));
        }
        Ok(Self { kind, edges })
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn edges(&self) -> &[u64] {
        &self.edges
    }
}

/// Piecewise-linear map from local ticks to a time base running at the
/// nominal rate.
///
/// Knots sit at the centroids of least-squares line fits over consecutive
/// windows of reference edges, with edge numbers as abscissa. The map keeps
/// the local origin, so only the rate is changed.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMap {
    knot_local: Vec<f64>,
    knot_phase: Vec<f64>,
    first_slope: f64,
    last_slope: f64,
    origin: f64,
    period_ticks: f64,
    drift: f64,
    gaps: Vec<(u64, u64)>,
    valid: (f64, f64),
}

fn median_u64(v: &mut [u64]) -> u64 {
    let mid = v.len() / 2;
    *v.select_nth_unstable(mid).1
}

impl DriftMap {
    /// Fit the map from square-wave edges; `tick_s` is the tagger resolution.
    pub fn fit(reference: &ReferenceSignal, tick_s: f64) -> Result<Self> {
        let edges = reference.edges();
        if edges.len() < 2 {
            return Err(Error::Sync(
                "drift fit needs at least two reference edges".into(),
            ));
        }
        let period_ticks = reference.kind().nominal_period_s() / tick_s;
        let mut diffs: Vec<u64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let typical = median_u64(&mut diffs) as f64;

        // Edge numbers; dropouts split the fit into segments.
        let mut number = Vec::with_capacity(edges.len());
        let mut segments = vec![0usize];
        let mut gaps = Vec::new();
        number.push(0.0f64);
        for i in 1..edges.len() {
            let d = (edges[i] - edges[i - 1]) as f64;
            if d > MAX_GAP_PERIODS * period_ticks {
                gaps.push((edges[i - 1], edges[i]));
                segments.push(i);
            }
            number.push(number[i - 1] + (d / typical).round().max(1.0));
        }
        segments.push(edges.len());

        let mut knot_local = Vec::new();
        let mut knot_phase = Vec::new();
        let mut slopes = Vec::new();
        for seg in segments.windows(2) {
            let (s, e) = (seg[0], seg[1]);
            let n = e - s;
            let n_windows = (n / FIT_WINDOW_EDGES).max(1);
            for w in 0..n_windows {
                let lo = s + w * n / n_windows;
                let hi = s + (w + 1) * n / n_windows;
                let m = (hi - lo) as f64;
                let nb = number[lo..hi].iter().sum::<f64>() / m;
                // subtract the first edge before averaging to keep precision
                let base = edges[lo] as f64;
                let lb = edges[lo..hi].iter().map(|&x| x as f64 - base).sum::<f64>() / m;
                let mut sxy = 0.0;
                let mut sxx = 0.0;
                for k in lo..hi {
                    let dx = number[k] - nb;
                    sxy += dx * (edges[k] as f64 - base - lb);
                    sxx += dx * dx;
                }
                let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
                knot_local.push(base + lb);
                knot_phase.push(nb);
                slopes.push(slope);
            }
        }
        // Single-edge windows borrow the median rate.
        for s in slopes.iter_mut() {
            if !s.is_finite() {
                *s = typical;
            }
        }
        let first_slope = slopes[0];
        let last_slope = *slopes.last().expect("at least one window");
        let origin = knot_local[0] - knot_phase[0] * first_slope;
        let k = knot_local.len();
        let mean_rate = if k >= 2 && knot_phase[k - 1] > knot_phase[0] {
            (knot_local[k - 1] - knot_local[0]) / (knot_phase[k - 1] - knot_phase[0])
        } else {
            first_slope
        };
        let drift = mean_rate / period_ticks - 1.0;
        if drift.abs() > DRIFT_WARN {
            log::warn!("large clock drift {drift:.3e}; reference fit may be unreliable");
        }
        if !gaps.is_empty() {
            log::warn!(
                "{} reference dropout(s) excluded from the time base",
                gaps.len()
            );
        }
        let valid = (
            edges[0] as f64 - period_ticks,
            *edges.last().expect("non-empty") as f64 + period_ticks,
        );
        Ok(Self {
            knot_local,
            knot_phase,
            first_slope,
            last_slope,
            origin,
            period_ticks,
            drift,
            gaps,
            valid,
        })
    }

    /// Estimated fractional rate error of the local clock.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Corrected tick of local phase zero.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn gaps(&self) -> &[(u64, u64)] {
        &self.gaps
    }

    /// Whether `local` lies inside the reference span and outside dropouts.
    pub fn covers(&self, local: u64) -> bool {
        let l = local as f64;
        l >= self.valid.0
            && l <= self.valid.1
            && !self.gaps.iter().any(|&(a, b)| local > a && local < b)
    }

    fn phase(&self, local: f64) -> f64 {
        let k = self.knot_local.partition_point(|&x| x <= local);
        if k == 0 {
            self.knot_phase[0] + (local - self.knot_local[0]) / self.first_slope
        } else if k == self.knot_local.len() {
            let j = k - 1;
            self.knot_phase[j] + (local - self.knot_local[j]) / self.last_slope
        } else {
            let (l0, l1) = (self.knot_local[k - 1], self.knot_local[k]);
            let (p0, p1) = (self.knot_phase[k - 1], self.knot_phase[k]);
            p0 + (local - l0) * (p1 - p0) / (l1 - l0)
        }
    }

    /// Continuous corrected time of a local tick.
    pub fn map(&self, local: f64) -> f64 {
        self.origin + self.phase(local) * self.period_ticks
    }

    pub fn map_tick(&self, local: u64) -> u64 {
        self.map(local as f64).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCorrected {
    pub records: Vec<DetectionRecord>,
    pub map: DriftMap,
    /// Records dropped for lying in a reference dropout or outside the
    /// reference span.
    pub excluded: usize,
}

/// Re-stamp `records` on the drift-free time base of `reference`.
pub fn drift_correct(
    records: &[DetectionRecord],
    reference: &ReferenceSignal,
    tick_s: f64,
) -> Result<DriftCorrected> {
    let map = DriftMap::fit(reference, tick_s)?;
    let (records, excluded) = apply_drift_map(records, &map);
    Ok(DriftCorrected {
        records,
        map,
        excluded,
    })
}

pub fn apply_drift_map(
    records: &[DetectionRecord],
    map: &DriftMap,
) -> (Vec<DetectionRecord>, usize) {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if map.covers(r.tick) {
            out.push(DetectionRecord {
                tick: map.map_tick(r.tick),
                ..*r
            });
        }
    }
    let excluded = records.len() - out.len();
    (out, excluded)
}

/// Map reference edges (e.g. the 1 Hz pulses) through a drift map.
pub fn correct_reference(reference: &ReferenceSignal, map: &DriftMap) -> Result<ReferenceSignal> {
    let edges = reference
        .edges()
        .iter()
        .filter(|&&e| map.covers(e))
        .map(|&e| map.map_tick(e))
        .collect();
    ReferenceSignal::new(reference.kind(), edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseOffset {
    /// Median of y − x over nearest pulse pairs.
    pub offset_ticks: i64,
    pub uncertainty_ticks: f64,
    pub n_pairs: usize,
}

/// Offset of pulse train `y` relative to `x` from nearest-pulse differences.
pub fn coarse_offset(
    x: &ReferenceSignal,
    y: &ReferenceSignal,
    sigma_ticks: f64,
) -> Result<CoarseOffset> {
    let (xe, ye) = (x.edges(), y.edges());
    if xe.is_empty() || ye.is_empty() {
        return Err(Error::Sync(
            "coarse offset needs at least one pulse per train".into(),
        ));
    }
    // Pairs further apart than half a pulse period belong to different pulses.
    let limit = if xe.len() >= 2 {
        let mut d: Vec<u64> = xe.windows(2).map(|w| w[1] - w[0]).collect();
        (median_u64(&mut d) / 2) as i128
    } else {
        i128::MAX
    };
    let mut diffs = Vec::new();
    let mut j = 0usize;
    for &yv in ye {
        while j + 1 < xe.len() && xe[j + 1] <= yv {
            j += 1;
        }
        let mut best = yv as i128 - xe[j] as i128;
        if j + 1 < xe.len() {
            let alt = yv as i128 - xe[j + 1] as i128;
            if alt.abs() < best.abs() {
                best = alt;
            }
        }
        if best.abs() <= limit {
            diffs.push(best);
        }
    }
    if diffs.is_empty() {
        return Err(Error::Sync("pulse trains do not overlap".into()));
    }
    diffs.sort_unstable();
    let n = diffs.len();
    let med = if n % 2 == 1 {
        diffs[n / 2]
    } else {
        (diffs[n / 2 - 1] + diffs[n / 2]).div_euclid(2)
    };
    Ok(CoarseOffset {
        offset_ticks: med as i64,
        uncertainty_ticks: sigma_ticks,
        n_pairs: n,
    })
}

/// Histogram of y − x time differences over `[lo, lo + bins·bin)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffHistogram {
    lo: i64,
    bin: u64,
    counts: Vec<u64>,
}

impl DiffHistogram {
    /// Bins covering `center ± halfwidth`.
    pub fn centered(center: i64, halfwidth: u64, bin: u64) -> Result<Self> {
        if bin == 0 {
            return Err(Error::OutOfRange("histogram bin must be ≥ 1 tick".into()));
        }
        let span = 2 * halfwidth + 1;
        let bins = span.div_ceil(bin);
        let lo = center - ((bins * bin) / 2) as i64;
        Ok(Self {
            lo,
            bin,
            counts: vec![0; bins as usize],
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bin(&self) -> u64 {
        self.bin
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower edge of bin `k`.
    pub fn edge(&self, k: usize) -> i64 {
        self.lo + (k as u64 * self.bin) as i64
    }

    /// Center of bin `k`, in ticks.
    pub fn center(&self, k: usize) -> f64 {
        self.edge(k) as f64 + (self.bin as f64 - 1.0) / 2.0
    }

    fn hi(&self) -> i64 {
        self.lo + (self.counts.len() as u64 * self.bin) as i64
    }

    /// Add all pairwise differences between two sorted streams that fall
    /// in range, sweeping both once.
    pub fn accumulate(&mut self, x: &[DetectionRecord], y: &[DetectionRecord]) {
        let (lo, hi) = (self.lo as i128, self.hi() as i128);
        let mut start = 0usize;
        for xr in x {
            let xt = xr.tick as i128;
            while start < y.len() && (y[start].tick as i128) - xt < lo {
                start += 1;
            }
            let mut j = start;
            while j < y.len() {
                let d = y[j].tick as i128 - xt;
                if d >= hi {
                    break;
                }
                self.counts[((d - lo) as u64 / self.bin) as usize] += 1;
                j += 1;
            }
        }
    }

    /// Add another histogram over the same bins.
    pub fn merge(&mut self, other: &DiffHistogram) -> Result<()> {
        if self.lo != other.lo || self.bin != other.bin || self.counts.len() != other.counts.len() {
            return Err(Error::Sync("histograms cover different bins".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// `bin_center_ticks,count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_center_ticks,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.center(k), c));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncSolution {
    /// Center of the tallest bin.
    pub offset_ticks: i64,
    /// Background-subtracted centroid around the peak.
    pub offset_refined: f64,
    pub drift_correction: f64,
    pub residual_ticks: f64,
    pub confidence: Confidence,
    pub peak_to_background: f64,
    #[serde(skip)]
    pub histogram: DiffHistogram,
}

impl SyncSolution {
    pub fn is_confident(&self) -> bool {
        self.confidence == Confidence::High
    }
}

fn median_count(counts: &[u64]) -> f64 {
    let mut v = counts.to_vec();
    let n = v.len();
    v.sort_unstable();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Locate the correlation peak of y − x near `coarse`.
pub fn solve_histogram(hist: DiffHistogram, coarse: i64) -> SyncSolution {
    let counts = hist.counts();
    let mut peak = 0usize;
    for k in 1..counts.len() {
        let closer =
            (hist.center(k) - coarse as f64).abs() < (hist.center(peak) - coarse as f64).abs();
        if counts[k] > counts[peak] || (counts[k] == counts[peak] && closer) {
            peak = k;
        }
    }
    let background = median_count(counts);
    let peak_count = counts[peak] as f64;
    let ratio = peak_count / background.max(1.0);
    let significance = (peak_count - background) / (background + 1.0).sqrt();
    let confidence =
        if hist.total() == 0 || ratio < MIN_PEAK_RATIO || significance < MIN_PEAK_SIGNIFICANCE {
            Confidence::Low
        } else {
            Confidence::High
        };

    // Centroid over ±3 bins, re-centred until it stops moving.
    let mut center = peak as i64;
    let mut refined = hist.center(peak);
    for _ in 0..8 {
        let (mut w, mut m) = (0.0, 0.0);
        for k in (center - CENTROID_HALFWIDTH)..=(center + CENTROID_HALFWIDTH) {
            if k < 0 || k as usize >= counts.len() {
                continue;
            }
            let c = (counts[k as usize] as f64 - background).max(0.0);
            w += c;
            m += c * hist.center(k as usize);
        }
        if w <= 0.0 {
            break;
        }
        refined = m / w;
        let next = ((refined - hist.center(0)) / hist.bin() as f64).round() as i64;
        if next == center {
            break;
        }
        center = next;
    }

    let half = background + (peak_count - background) / 2.0;
    let mut left = peak;
    while left > 0 && counts[left - 1] as f64 >= half {
        left -= 1;
    }
    let mut right = peak;
    while right + 1 < counts.len() && counts[right + 1] as f64 >= half {
        right += 1;
    }
    let fwhm = ((right - left + 1) as u64 * hist.bin()) as f64;

    SyncSolution {
        offset_ticks: hist.center(peak).round() as i64,
        offset_refined: refined,
        drift_correction: 0.0,
        residual_ticks: fwhm / 2.0,
        confidence,
        peak_to_background: ratio,
        histogram: hist,
    }
}

/// Fine offset of stream `y` relative to `x`, searching `coarse ± halfwidth`.
pub fn fine_offset(
    x: &[DetectionRecord],
    y: &[DetectionRecord],
    coarse: i64,
    halfwidth: u64,
    bin: u64,
) -> Result<SyncSolution> {
    let mut hist = DiffHistogram::centered(coarse, halfwidth, bin)?;
    hist.accumulate(x, y);
    Ok(solve_histogram(hist, coarse))
}
