//! Bilocality in a two-source, three-station photonic network: exact
//! quantum predictions, classical hidden-variable bounds, an event-level
//! network simulator and the timing/coincidence analysis chain.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coincidence;
pub mod config;
pub mod error;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod quantum;
pub mod sim;
pub mod sync;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use quantum::{Behavior, Convention, FunctionalResult, MeasurementPlan, TwoQubitState};
