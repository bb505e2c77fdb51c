//! Experiment description read from TOML. Every dimensional key carries its
//! unit in the name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{visibility_for_chsh, Convention, PlanSpec, StateSpec};
use crate::sim::{
    ChannelModel, Channels, ClockModel, Clocks, DetectorModel, Detectors, NetworkConfig,
    SettingsSchedule, SourceKind, SourceModel,
};

/// Four-fold windows from 283.5 ns to 51.435 µs, 3500 to 635 000 ticks.
pub const SWEEP_MIN_NS: f64 = 283.5;
pub const SWEEP_MAX_NS: f64 = 51_435.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamFormat {
    #[default]
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream_format: StreamFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub twofold_window_ns: f64,
    pub fourfold_windows_ns: Vec<f64>,
    pub n_blocks: usize,
    #[serde(default)]
    pub convention: Convention,
    pub search_halfwidth_ns: f64,
    pub bin_ticks: u64,
    /// Distance between the outer stations, for the space-like check.
    pub separation_m: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            twofold_window_ns: 1.0,
            fourfold_windows_ns: log_windows_ns(SWEEP_MIN_NS, SWEEP_MAX_NS, 12),
            n_blocks: 25,
            convention: Convention::Peripheral,
            search_halfwidth_ns: 40.0,
            bin_ticks: 1,
            separation_m: 270.0,
        }
    }
}

/// `n` logarithmically spaced windows from `lo` to `hi`, both included.
pub fn log_windows_ns(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                // trim float noise from the exponential
                ((lo * (r * k as f64).exp()) * 1e6).round() / 1e6
            }
        })
        .collect()
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.twofold_window_ns > 0.0) {
            return Err(Error::config(
                "analysis.twofold_window_ns",
                "must be positive",
            ));
        }
        if self.fourfold_windows_ns.is_empty() {
            return Err(Error::config(
                "analysis.fourfold_windows_ns",
                "needs at least one window",
            ));
        }
        if self.fourfold_windows_ns.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::config(
                "analysis.fourfold_windows_ns",
                "windows must be positive",
            ));
        }
        if self.fourfold_windows_ns.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config(
                "analysis.fourfold_windows_ns",
                "windows must ascend",
            ));
        }
        if self.n_blocks < 2 {
            return Err(Error::config("analysis.n_blocks", "must be ≥ 2"));
        }
        if !(self.search_halfwidth_ns > 0.0) {
            return Err(Error::config(
                "analysis.search_halfwidth_ns",
                "must be positive",
            ));
        }
        if self.bin_ticks == 0 {
            return Err(Error::config("analysis.bin_ticks", "must be ≥ 1"));
        }
        if !(self.separation_m > 0.0) {
            return Err(Error::config("analysis.separation_m", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub network: NetworkConfig,
    #[serde(default)]
    pub schedule: SettingsSchedule,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn local_channel(label: &str) -> ChannelModel {
    ChannelModel {
        transmission: 1.0,
        delay_ns: 0.0,
        label: label.into(),
    }
}

impl ExperimentConfig {
    /// Rates, losses and visibilities of the campus deployment: a pulsed
    /// quantum-dot source beside A, a cw down-conversion source beside C,
    /// 270 m of free space to the central node and 25 m of fiber from C.
    pub fn calibrated() -> Self {
        let gps = 5.0;
        Self {
            run: RunConfig {
                duration_s: 1500.0,
                seed: 42,
                stream_format: StreamFormat::Binary,
            },
            network: NetworkConfig {
                source1: SourceModel {
                    kind: SourceKind::Pulsed,
                    rep_rate_hz: Some(320e6),
                    pair_rate_hz: 13.7e3,
                    state: StateSpec::Werner {
                        werner_visibility: visibility_for_chsh(2.484),
                    },
                },
                source2: SourceModel {
                    kind: SourceKind::Cw,
                    rep_rate_hz: None,
                    pair_rate_hz: 3e3,
                    state: StateSpec::Werner {
                        werner_visibility: visibility_for_chsh(2.699),
                    },
                },
                channels: Channels {
                    source1_to_a: local_channel("source 1 to A, same lab"),
                    source1_to_b: ChannelModel::free_space(
                        270.0,
                        0.85 * 0.85 * 0.80 * 0.50,
                        "free-space link A to B",
                    ),
                    source2_to_b: ChannelModel::fiber(25.0, 1.468, 0.92, "fiber link C to B"),
                    source2_to_c: local_channel("source 2 to C, same lab"),
                },
                detectors: Detectors {
                    a: DetectorModel::default(),
                    b_arm_a: DetectorModel::default(),
                    b_arm_c: DetectorModel::default(),
                    c: DetectorModel::default(),
                },
                clocks: Clocks {
                    a: ClockModel {
                        offset_ns: 13.0,
                        drift_ppm: 0.5,
                        gps_coarse_sigma_ns: gps,
                    },
                    b: ClockModel {
                        offset_ns: 0.0,
                        drift_ppm: -0.3,
                        gps_coarse_sigma_ns: gps,
                    },
                    c: None,
                },
                plan: PlanSpec::hwp_lab(),
            },
            schedule: SettingsSchedule::default(),
            analysis: AnalysisConfig::default(),
        }
    }

    /// Two perfect singlets, lossless noiseless detection, ideal clocks.
    pub fn ideal() -> Self {
        let det = DetectorModel {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_ps: 0.0,
            tick_ps: 81.0,
        };
        let mut cfg = Self::calibrated();
        cfg.run.duration_s = 60.0;
        cfg.network.source1.state = StateSpec::Werner {
            werner_visibility: 1.0,
        };
        cfg.network.source2.state = StateSpec::Werner {
            werner_visibility: 1.0,
        };
        cfg.network.channels.source1_to_b.transmission = 1.0;
        cfg.network.channels.source2_to_b.transmission = 1.0;
        cfg.network.detectors = Detectors {
            a: det.clone(),
            b_arm_a: det.clone(),
            b_arm_c: det.clone(),
            c: det,
        };
        cfg.network.clocks = Clocks {
            a: ClockModel::default(),
            b: ClockModel::default(),
            c: None,
        };
        cfg.network.plan = PlanSpec::named_optimal();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.run.duration_s >= 0.0) || !self.run.duration_s.is_finite() {
            return Err(Error::config("run.duration_s", "must be ≥ 0"));
        }
        self.network.validate()?;
        self.schedule.validate()?;
        self.analysis.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                }
                None => "toml".to_string(),
            };
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("serialize", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn twofold_window_ticks(&self) -> u64 {
        ns_to_ticks(self.analysis.twofold_window_ns, self.network.tick_s())
    }

    pub fn fourfold_windows_ticks(&self) -> Vec<u64> {
        let tick = self.network.tick_s();
        self.analysis
            .fourfold_windows_ns
            .iter()
            .map(|&w| ns_to_ticks(w, tick))
            .collect()
    }
}

pub fn ns_to_ticks(ns: f64, tick_s: f64) -> u64 {
    (ns * 1e-9 / tick_s).round() as u64
}
