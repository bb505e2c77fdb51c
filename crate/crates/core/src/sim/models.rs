use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{PlanSpec, StateSpec};

/// Local clocks start at this many seconds so that negative offsets stay
/// representable as unsigned ticks.
pub const CLOCK_EPOCH_S: f64 = 1.0;

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Pulsed,
    Cw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    pub kind: SourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep_rate_hz: Option<f64>,
    pub pair_rate_hz: f64,
    pub state: StateSpec,
}

impl SourceModel {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.pair_rate_hz >= 0.0) || !self.pair_rate_hz.is_finite() {
            return Err(Error::config(
                format!("{field}.pair_rate_hz"),
                "must be a finite non-negative rate",
            ));
        }
        if self.kind == SourceKind::Pulsed {
            let rep = self.rep_rate_hz.ok_or_else(|| {
                Error::config(
                    format!("{field}.rep_rate_hz"),
                    "required for pulsed sources",
                )
            })?;
            if !(rep > 0.0) || !rep.is_finite() {
                return Err(Error::config(
                    format!("{field}.rep_rate_hz"),
                    "must be positive",
                ));
            }
            if self.pair_rate_hz / rep > 1.0 {
                return Err(Error::config(
                    format!("{field}.pair_rate_hz"),
                    format!(
                        "pair-per-pulse probability {} exceeds 1",
                        self.pair_rate_hz / rep
                    ),
                ));
            }
        }
        self.state
            .build()
            .map_err(|e| Error::config(format!("{field}.state"), e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub transmission: f64,
    pub delay_ns: f64,
    #[serde(default)]
    pub label: String,
}

impl ChannelModel {
    /// Vacuum propagation over `length_m`.
    pub fn free_space(length_m: f64, transmission: f64, label: &str) -> Self {
        Self {
            transmission,
            delay_ns: length_m / SPEED_OF_LIGHT_M_PER_S * 1e9,
            label: label.into(),
        }
    }

    pub fn fiber(length_m: f64, group_index: f64, transmission: f64, label: &str) -> Self {
        Self {
            transmission,
            delay_ns: length_m * group_index / SPEED_OF_LIGHT_M_PER_S * 1e9,
            label: label.into(),
        }
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_ns * 1e-9
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.transmission > 0.0 && self.transmission <= 1.0) {
            return Err(Error::config(
                format!("{field}.transmission"),
                "must lie in (0, 1]",
            ));
        }
        if !(self.delay_ns >= 0.0) || !self.delay_ns.is_finite() {
            return Err(Error::config(format!("{field}.delay_ns"), "must be ≥ 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_ps: f64,
    pub tick_ps: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.6,
            dark_rate_hz: 200.0,
            jitter_ps: 100.0,
            tick_ps: 81.0,
        }
    }
}

impl DetectorModel {
    pub fn tick_s(&self) -> f64 {
        self.tick_ps * 1e-12
    }

    pub fn jitter_s(&self) -> f64 {
        self.jitter_ps * 1e-12
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config(
                format!("{field}.efficiency"),
                "must lie in [0, 1]",
            ));
        }
        if !(self.dark_rate_hz >= 0.0) || !self.dark_rate_hz.is_finite() {
            return Err(Error::config(
                format!("{field}.dark_rate_hz"),
                "must be ≥ 0",
            ));
        }
        if !(self.jitter_ps >= 0.0) || !self.jitter_ps.is_finite() {
            return Err(Error::config(format!("{field}.jitter_ps"), "must be ≥ 0"));
        }
        if !(self.tick_ps > 0.0) || !self.tick_ps.is_finite() {
            return Err(Error::config(
                format!("{field}.tick_ps"),
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// t_local = epoch + offset + (1 + drift)·t_true
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockModel {
    #[serde(default)]
    pub offset_ns: f64,
    #[serde(default)]
    pub drift_ppm: f64,
    #[serde(default)]
    pub gps_coarse_sigma_ns: f64,
}

impl ClockModel {
    pub fn drift(&self) -> f64 {
        self.drift_ppm * 1e-6
    }

    pub fn offset_s(&self) -> f64 {
        self.offset_ns * 1e-9
    }

    pub fn to_local_s(&self, t_true: f64) -> f64 {
        CLOCK_EPOCH_S + self.offset_s() + (1.0 + self.drift()) * t_true
    }

    pub fn to_true_s(&self, t_local: f64) -> f64 {
        (t_local - CLOCK_EPOCH_S - self.offset_s()) / (1.0 + self.drift())
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.drift().abs() < 1e-3) {
            return Err(Error::config(
                format!("{field}.drift_ppm"),
                "|drift| must be < 1000 ppm",
            ));
        }
        if !(self.offset_s().abs() < 0.5 * CLOCK_EPOCH_S) {
            return Err(Error::config(
                format!("{field}.offset_ns"),
                "|offset| must be < 0.5 s",
            ));
        }
        if !(self.gps_coarse_sigma_ns >= 0.0) || !self.gps_coarse_sigma_ns.is_finite() {
            return Err(Error::config(
                format!("{field}.gps_coarse_sigma_ns"),
                "must be ≥ 0",
            ));
        }
        Ok(())
    }
}

/// Photon paths: the first source feeds A and the central arm facing A,
/// the second feeds the central arm facing C and C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channels {
    pub source1_to_a: ChannelModel,
    pub source1_to_b: ChannelModel,
    pub source2_to_b: ChannelModel,
    pub source2_to_c: ChannelModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detectors {
    pub a: DetectorModel,
    pub b_arm_a: DetectorModel,
    pub b_arm_c: DetectorModel,
    pub c: DetectorModel,
}

/// One clock per building; C shares the central clock unless given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clocks {
    pub a: ClockModel,
    pub b: ClockModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<ClockModel>,
}

impl Clocks {
    pub fn c_or_b(&self) -> &ClockModel {
        self.c.as_ref().unwrap_or(&self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub source1: SourceModel,
    pub source2: SourceModel,
    pub channels: Channels,
    pub detectors: Detectors,
    pub clocks: Clocks,
    pub plan: PlanSpec,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        self.source1.validate("network.source1")?;
        self.source2.validate("network.source2")?;
        self.channels
            .source1_to_a
            .validate("network.channels.source1_to_a")?;
        self.channels
            .source1_to_b
            .validate("network.channels.source1_to_b")?;
        self.channels
            .source2_to_b
            .validate("network.channels.source2_to_b")?;
        self.channels
            .source2_to_c
            .validate("network.channels.source2_to_c")?;
        let dets = [
            ("a", &self.detectors.a),
            ("b_arm_a", &self.detectors.b_arm_a),
            ("b_arm_c", &self.detectors.b_arm_c),
            ("c", &self.detectors.c),
        ];
        for (name, d) in dets {
            d.validate(&format!("network.detectors.{name}"))?;
            if d.tick_ps != self.detectors.a.tick_ps {
                return Err(Error::config(
                    format!("network.detectors.{name}.tick_ps"),
                    "all time taggers must share one resolution",
                ));
            }
        }
        self.clocks.a.validate("network.clocks.a")?;
        self.clocks.b.validate("network.clocks.b")?;
        if let Some(c) = &self.clocks.c {
            c.validate("network.clocks.c")?;
        }
        self.plan
            .build()
            .map_err(|e| Error::config("network.plan", e.to_string()))?;
        Ok(())
    }

    pub fn tick_s(&self) -> f64 {
        self.detectors.a.tick_s()
    }
}
