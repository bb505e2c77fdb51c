//! Exact quantum predictions for the two-source, three-station network.

mod behavior;
mod born;
mod functional;
mod observable;
mod state;

pub use behavior::{settings_bits, settings_index, ArmBehavior, Behavior, BipartiteBehavior};
pub use born::{born_arm_behavior, born_behavior, born_bipartite, pair_distribution};
pub use functional::{biloc_functional, chsh, Convention, FunctionalResult};
pub use observable::{
    hwp_to_observable, DichotomicObservable, Mat2, MeasurementPlan, ObservableSpec, PlanSpec,
};
pub use state::{
    fidelity, singlet_ket, singlet_state, werner_state, Ket4, Mat4, StateSpec, TwoQubitState,
};

/// Werner visibility that reproduces a CHSH value at the Tsirelson angles.
pub fn visibility_for_chsh(s: f64) -> f64 {
    s / (2.0 * std::f64::consts::SQRT_2)
}
