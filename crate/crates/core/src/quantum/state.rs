//! Two-qubit density matrices for the two entangled-pair sources.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<Complex64>;
pub type Ket4 = Vector4<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// A validated two-qubit density matrix.
///
/// Basis ordering is |00⟩, |01⟩, |10⟩, |11⟩ with the first qubit on the
/// peripheral side and the second on the central-node side.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    matrix: Mat4,
}

impl TwoQubitState {
    pub fn new(matrix: Mat4) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                let d = matrix[(i, j)] - matrix[(j, i)].conj();
                if d.norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i},{j}): deviation {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Pure state |ψ⟩⟨ψ| from an unnormalized ket.
    pub fn from_ket(ket: &Ket4) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero ket".into()));
        }
        let k = ket / Complex64::new(norm, 0.0);
        Self::new(k * k.adjoint())
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// ⟨ψ|ρ|ψ⟩ for a normalized target ket.
    pub fn fidelity(&self, target: &Ket4) -> f64 {
        let norm2 = target.norm_squared();
        let v = (target.adjoint() * self.matrix * target)[(0, 0)].re / norm2;
        v.clamp(0.0, 1.0)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: Mat4::identity() * Complex64::new(0.25, 0.0),
        }
    }
}

/// (|01⟩ − |10⟩)/√2
pub fn singlet_ket() -> Ket4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ket4::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

pub fn singlet_state() -> TwoQubitState {
    let k = singlet_ket();
    TwoQubitState {
        matrix: k * k.adjoint(),
    }
}

/// v·|Ψ⁻⟩⟨Ψ⁻| + (1−v)·I/4
pub fn werner_state(visibility: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::OutOfRange(format!(
            "Werner visibility {visibility} not in [0, 1]"
        )));
    }
    let s = singlet_state();
    let m = s.matrix * Complex64::new(visibility, 0.0)
        + Mat4::identity() * Complex64::new((1.0 - visibility) / 4.0, 0.0);
    Ok(TwoQubitState { matrix: m })
}

pub fn fidelity(rho: &TwoQubitState, target: &Ket4) -> f64 {
    rho.fidelity(target)
}

/// How a source's state is written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Werner {
        werner_visibility: f64,
    },
    Density {
        density_re: [[f64; 4]; 4],
        density_im: [[f64; 4]; 4],
    },
}

impl StateSpec {
    pub fn build(&self) -> Result<TwoQubitState> {
        match self {
            StateSpec::Werner { werner_visibility } => werner_state(*werner_visibility),
            StateSpec::Density {
                density_re,
                density_im,
            } => {
                let m = Mat4::from_fn(|i, j| Complex64::new(density_re[i][j], density_im[i][j]));
                TwoQubitState::new(m)
            }
        }
    }
}
