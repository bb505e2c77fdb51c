//! Event-level simulation of the two-source network: pair emission, lossy
//! channels, detectors with jitter and dark counts, and one free-running
//! time tagger per building.

mod models;
mod records;
mod run;
mod schedule;

pub use models::{
    ChannelModel, Channels, ClockModel, Clocks, DetectorModel, Detectors, NetworkConfig,
    SourceKind, SourceModel, CLOCK_EPOCH_S, SPEED_OF_LIGHT_M_PER_S,
};
pub use records::{DetectionRecord, Node, Site, Streams};
pub use run::{
    ideal_streams, simulate_run, GroundTruth, SimOutput, SiteReferences, IDEAL_SPACING_TICKS,
    PULSE_PERIOD_S, SQUARE_PERIOD_S,
};
pub use schedule::SettingsSchedule;
