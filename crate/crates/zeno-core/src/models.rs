//! Model Hamiltonians and their analytic transition strengths.
//!
//! Three descriptions are supported: a two-level system with Rabi coupling
//! `omega` and detuning `delta`, a discretized continuum of modes coupled to
//! the initial state, and a raw Hermitian matrix. All of them build down to
//! a [`GenericModel`] — a Hermitian matrix plus the index of the initial
//! state — which the protocol engine consumes after the energy zero has been
//! shifted so that `<e|H|e> = 0`.
//!
//! The transition strength `delta_h_ee = sqrt(<e|H^2|e>)` (after the shift)
//! reduces to the Rabi coupling for a two-level system and to
//! `sqrt(sum |V_i|^2)` for a continuum. Only finite discretizations are
//! representable; for a broad continuum the measured number is the root of
//! the integrated squared coupling, which does not by itself determine the
//! golden-rule matrix element — recovering that is left to the caller.
//!
//! Units: hbar = 1 throughout; frequencies are in units of a caller-chosen
//! reference.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Relative tolerance on `<e|H|e>` below which a model counts as shifted.
const SHIFT_TOL: f64 = 1e-12;

/// Two-level system: `H = [[0, omega], [omega, delta]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelModel {
    /// Rabi coupling (non-negative; the coupling phase is absorbed into the
    /// basis).
    pub omega: f64,
    /// Detuning of the second level.
    pub delta: f64,
}

/// Initial state coupled to a finite set of modes; no mode-mode couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumModel {
    /// Mode frequencies (diagonal energies of the `|g_i>` states).
    pub omegas: Vec<f64>,
    /// Complex couplings `V_i` between `|e>` and `|g_i>`.
    pub couplings: Vec<C64>,
}

/// Any of the supported model descriptions.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelDescriptor {
    TwoLevel(TwoLevelModel),
    Continuum(ContinuumModel),
    Generic {
        matrix: ComplexMatrix,
        initial_index: usize,
    },
}

/// Hermitian Hamiltonian with a distinguished initial state.
///
/// `applied_shift` accumulates the energy-zero shifts applied so far; the
/// protocol requires `<e|H|e> = 0`, established by [`shift_energy_zero`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenericModel {
    hamiltonian: ComplexMatrix,
    initial_index: usize,
    applied_shift: f64,
}

impl GenericModel {
    /// Wraps a Hermitian matrix; `initial_index` selects `|e>`.
    pub fn new(hamiltonian: ComplexMatrix, initial_index: usize) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.rows(),
                got: hamiltonian.cols(),
            });
        }
        if initial_index >= hamiltonian.rows() {
            return Err(Error::InvalidModel("initial_index out of range"));
        }
        let defect = hamiltonian.hermitian_defect();
        if defect > crate::linalg::HERMITIAN_TOL {
            return Err(Error::NonHermitian { defect });
        }
        Ok(Self {
            hamiltonian,
            initial_index,
            applied_shift: 0.0,
        })
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn initial_index(&self) -> usize {
        self.initial_index
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    /// Total energy shift applied by [`shift_energy_zero`] so far.
    pub fn applied_shift(&self) -> f64 {
        self.applied_shift
    }

    /// `<e|H|e>` of the current matrix.
    pub fn h_ee(&self) -> f64 {
        self.hamiltonian.get(self.initial_index, self.initial_index).re
    }

    /// Largest matrix element magnitude (the coupling bound used in the
    /// validity condition).
    pub fn omega_bar(&self) -> f64 {
        self.hamiltonian.max_abs()
    }

    /// Errors unless `|<e|H|e>| <= 1e-12 * omega_bar`.
    pub fn require_shifted(&self) -> Result<()> {
        let h_ee = self.h_ee();
        if libm::fabs(h_ee) > SHIFT_TOL * self.omega_bar().max(f64::MIN_POSITIVE) {
            return Err(Error::NotShifted { h_ee });
        }
        Ok(())
    }
}

/// Dimension, transition strength, coupling bound, and applied shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSummary {
    pub dim: usize,
    /// `sqrt(<e|H^2|e>)` after the energy-zero shift.
    pub delta_h_ee: f64,
    /// `max_ij |H_ij|`.
    pub omega_bar: f64,
    /// Energy shift applied to reach `<e|H|e> = 0`.
    pub h_ee_shift: f64,
}

/// Builds the concrete matrix model from a descriptor.
///
/// Two-level: `[[0, omega], [omega, delta]]` with `|e>` at index 0.
/// Continuum: `(n+1) x (n+1)` with mode energies on the diagonal, `V_i`
/// coupling `|e> <-> |g_i>`, and no mode-mode couplings.
pub fn build_generic(descriptor: &ModelDescriptor) -> Result<GenericModel> {
    match descriptor {
        ModelDescriptor::TwoLevel(tl) => {
            if !(tl.omega.is_finite() && tl.delta.is_finite()) {
                return Err(Error::NonFinite);
            }
            if tl.omega < 0.0 {
                return Err(Error::InvalidModel("omega must be non-negative"));
            }
            let z = |x: f64| C64::new(x, 0.0);
            let h = ComplexMatrix::new(
                2,
                2,
                vec![z(0.0), z(tl.omega), z(tl.omega), z(tl.delta)],
            )?;
            GenericModel::new(h, 0)
        }
        ModelDescriptor::Continuum(cm) => {
            if cm.omegas.is_empty() {
                return Err(Error::EmptyContinuum);
            }
            if cm.omegas.len() != cm.couplings.len() {
                return Err(Error::InvalidModel("omegas and couplings differ in length"));
            }
            let n = cm.omegas.len();
            let d = n + 1;
            let mut h = ComplexMatrix::zeros(d, d);
            for (i, (&w, &v)) in cm.omegas.iter().zip(cm.couplings.iter()).enumerate() {
                if !(w.is_finite() && v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                h.set(i + 1, i + 1, C64::new(w, 0.0));
                h.set(i + 1, 0, v);
                h.set(0, i + 1, v.conj());
            }
            GenericModel::new(h, 0)
        }
        ModelDescriptor::Generic {
            matrix,
            initial_index,
        } => GenericModel::new(matrix.clone(), *initial_index),
    }
}

/// Shifts the energy zero so that `<e|H|e> = 0` exactly; returns the shifted
/// model and the shift value.
pub fn shift_energy_zero(model: &GenericModel) -> (GenericModel, f64) {
    let shift = model.h_ee();
    let mut h = model.hamiltonian.clone();
    let d = h.rows();
    for i in 0..d {
        let v = h.get(i, i);
        h.set(i, i, C64::new(v.re - shift, v.im));
    }
    // Pin the initial diagonal entry to exactly zero regardless of roundoff.
    h.set(model.initial_index, model.initial_index, C64::new(0.0, 0.0));
    (
        GenericModel {
            hamiltonian: h,
            initial_index: model.initial_index,
            applied_shift: model.applied_shift + shift,
        },
        shift,
    )
}

/// Transition strength `sqrt(<e|H^2|e>) = sqrt(sum_{i != e} |H_ie|^2)`.
///
/// Requires the model to be energy-shifted; the value equals the Rabi
/// coupling for a two-level model and `sqrt(sum |V_i|^2)` for a continuum.
pub fn delta_h_ee(model: &GenericModel) -> Result<f64> {
    model.require_shifted()?;
    Ok(coupling_row_norm(model))
}

/// `sqrt(sum_{i != e} |H_ie|^2)` of the current matrix; shift-independent.
fn coupling_row_norm(model: &GenericModel) -> f64 {
    let e = model.initial_index;
    let sum: f64 = (0..model.dim())
        .filter(|&i| i != e)
        .map(|i| model.hamiltonian.get(i, e).norm_sqr())
        .sum();
    libm::sqrt(sum)
}

/// Collects dimension, transition strength, coupling bound, and shift.
pub fn summarize(model: &GenericModel) -> ModelSummary {
    ModelSummary {
        dim: model.dim(),
        delta_h_ee: coupling_row_norm(model),
        omega_bar: model.omega_bar(),
        h_ee_shift: model.applied_shift,
    }
}

/// Convenience: build from a descriptor and shift the energy zero.
pub fn build_shifted(descriptor: &ModelDescriptor) -> Result<GenericModel> {
    let model = build_generic(descriptor)?;
    let (shifted, _) = shift_energy_zero(&model);
    Ok(shifted)
}
