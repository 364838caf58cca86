//! Numerical tolerances and size guards shared by every module.
//!
//! Everything that decides pass/fail lives here so a run can override it from
//! one config block.

use serde::{Deserialize, Serialize};

/// Largest chain handled by the dense `2^N` Hamiltonian exponential.
pub const DENSE_MAX_SITES: usize = 10;
/// Largest chain handled by the full determinant lift.
pub const LIFT_MAX_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tolerance for mirror symmetry of synthesized parameters.
    pub mirror_symmetry: f64,
    /// Gap pattern check, applied to `gap * tau mod 2pi`.
    pub spectrum_gap: f64,
    /// Max-norm deviation of `U^dagger U` from the identity.
    pub unitarity: f64,
    /// Entry-wise tolerance for the transfer-structure check of `U(tau)`.
    pub transfer_structure: f64,
    /// Stroboscopic mapping distance.
    pub mapping: f64,
    /// Lift-versus-dense equivalence.
    pub lift_oracle: f64,
    /// Circuit equivalence up to a layer of Z phases.
    pub z_layer_equivalence: f64,
    /// Norm drift allowed during state evolution.
    pub norm: f64,
    /// Probability agreement of the parity protocol with the exact parity.
    pub parity: f64,
    /// Propagator step-halving convergence for the device model.
    pub step_halving: f64,
    /// Relative SWT-versus-numeric coupling agreement.
    pub swt_relative: f64,
    pub dense_max_sites: usize,
    pub lift_max_sites: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mirror_symmetry: 1e-12,
            spectrum_gap: 1e-8,
            unitarity: 1e-10,
            transfer_structure: 1e-8,
            mapping: 1e-8,
            lift_oracle: 1e-9,
            z_layer_equivalence: 1e-8,
            norm: 1e-10,
            parity: 1e-8,
            step_halving: 1e-6,
            swt_relative: 0.15,
            dense_max_sites: DENSE_MAX_SITES,
            lift_max_sites: LIFT_MAX_SITES,
        }
    }
}
