use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;

const UNIT_TOL: f64 = 1e-12;

/// A ±1-valued qubit observable n·σ, stored by its Bloch vector (x, y, z).
///
/// Outcome bit 0 is the +1 eigenvalue (the "plus" detector port), bit 1 is −1.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicObservable {
    bloch: [f64; 3],
    label: String,
}

impl DichotomicObservable {
    pub fn new(bloch: [f64; 3], label: impl Into<String>) -> Result<Self> {
        let norm = bloch.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidObservable("degenerate Bloch vector".into()));
        }
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidObservable(format!(
                "Bloch vector norm {norm} is not 1"
            )));
        }
        Ok(Self {
            bloch,
            label: label.into(),
        })
    }

    pub fn sigma_z() -> Self {
        Self::new([0.0, 0.0, 1.0], "sigma_z").unwrap()
    }

    pub fn sigma_x() -> Self {
        Self::new([1.0, 0.0, 0.0], "sigma_x").unwrap()
    }

    /// (σz + σx)/√2
    pub fn diag_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new([h, 0.0, h], "diag_plus").unwrap()
    }

    /// (σz − σx)/√2
    pub fn diag_minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new([-h, 0.0, h], "diag_minus").unwrap()
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "sigma_z" => Ok(Self::sigma_z()),
            "sigma_x" => Ok(Self::sigma_x()),
            "diag_plus" => Ok(Self::diag_plus()),
            "diag_minus" => Ok(Self::diag_minus()),
            other => Err(Error::InvalidObservable(format!(
                "unknown observable `{other}` (expected sigma_z, sigma_x, diag_plus, diag_minus)"
            ))),
        }
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same measurement with the two detector ports swapped.
    pub fn relabeled(&self) -> Self {
        Self {
            bloch: self.bloch.map(|c| -c),
            label: format!("-{}", self.label),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.bloch
            .iter()
            .zip(other.bloch.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn operator(&self) -> Mat2 {
        let [x, y, z] = self.bloch;
        Mat2::new(
            Complex64::new(z, 0.0),
            Complex64::new(x, -y),
            Complex64::new(x, y),
            Complex64::new(-z, 0.0),
        )
    }

    /// Eigenprojector (I ± n·σ)/2 for outcome bit 0 (+) or 1 (−).
    pub fn projector(&self, outcome: usize) -> Mat2 {
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        (Mat2::identity() + self.operator() * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0)
    }
}

/// Linear-polarization observable selected by a half-wave plate at `theta_deg`
/// in front of a polarizing beam splitter: Bloch vector cos4θ·ẑ + sin4θ·x̂.
pub fn hwp_to_observable(theta_deg: f64) -> DichotomicObservable {
    let phi = (4.0 * theta_deg).to_radians();
    let (s, c) = phi.sin_cos();
    // sin²+cos² can be off by an ulp; renormalize before validating.
    let n = (s * s + c * c).sqrt();
    DichotomicObservable::new([s / n, 0.0, c / n], format!("hwp{theta_deg}"))
        .expect("HWP Bloch vector is unit by construction")
}

/// Config-file form of an observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(String),
    Hwp {
        hwp_deg: f64,
        #[serde(default)]
        swap_ports: bool,
    },
}

impl ObservableSpec {
    pub fn build(&self) -> Result<DichotomicObservable> {
        match self {
            ObservableSpec::Named(name) => DichotomicObservable::named(name),
            ObservableSpec::Hwp {
                hwp_deg,
                swap_ports,
            } => {
                let obs = hwp_to_observable(*hwp_deg);
                Ok(if *swap_ports { obs.relabeled() } else { obs })
            }
        }
    }
}

/// Two binary settings for each of the four measurement stations.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub a: [DichotomicObservable; 2],
    pub b_arm_a: [DichotomicObservable; 2],
    pub b_arm_c: [DichotomicObservable; 2],
    pub c: [DichotomicObservable; 2],
}

impl MeasurementPlan {
    /// Pauli σz/σx on both central arms, (σz ± σx)/√2 on the peripheral nodes.
    pub fn optimal() -> Self {
        use DichotomicObservable as O;
        Self {
            a: [O::diag_plus(), O::diag_minus()],
            b_arm_a: [O::sigma_z(), O::sigma_x()],
            b_arm_c: [O::sigma_z(), O::sigma_x()],
            c: [O::diag_plus(), O::diag_minus()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub a: [ObservableSpec; 2],
    pub b_arm_a: [ObservableSpec; 2],
    pub b_arm_c: [ObservableSpec; 2],
    pub c: [ObservableSpec; 2],
}

impl PlanSpec {
    pub fn build(&self) -> Result<MeasurementPlan> {
        let two = |s: &[ObservableSpec; 2]| -> Result<[DichotomicObservable; 2]> {
            Ok([s[0].build()?, s[1].build()?])
        };
        Ok(MeasurementPlan {
            a: two(&self.a)?,
            b_arm_a: two(&self.b_arm_a)?,
            b_arm_c: two(&self.b_arm_c)?,
            c: two(&self.c)?,
        })
    }

    /// The lab settings: HWPs at 11.25°/33.75° on A and C (second port pair
    /// swapped), 0°/22.5° on both central arms.
    pub fn hwp_lab() -> Self {
        let hwp = |deg: f64, swap: bool| ObservableSpec::Hwp {
            hwp_deg: deg,
            swap_ports: swap,
        };
        Self {
            a: [hwp(11.25, false), hwp(33.75, true)],
            b_arm_a: [hwp(0.0, false), hwp(22.5, false)],
            b_arm_c: [hwp(0.0, false), hwp(22.5, false)],
            c: [hwp(11.25, false), hwp(33.75, true)],
        }
    }

    pub fn named_optimal() -> Self {
        let n = |s: &str| ObservableSpec::Named(s.to_string());
        Self {
            a: [n("diag_plus"), n("diag_minus")],
            b_arm_a: [n("sigma_z"), n("sigma_x")],
            b_arm_c: [n("sigma_z"), n("sigma_x")],
            c: [n("diag_plus"), n("diag_minus")],
        }
    }
}
