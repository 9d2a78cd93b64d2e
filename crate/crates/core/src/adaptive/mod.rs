//! Adaptive measurement selection.
//!
//! After a first stage of cube measurements, each adaptive step scores every
//! one-dimensional effect of a candidate catalog by how much absorbing it would
//! shrink Tr(Q), and performs the POVM that contains the best effect.

mod schedule;
mod search;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use schedule::{resource_schedule, ResourceSchedule};
pub use search::{
    descend_from, min_prob_product_projector, product_probability, qubit_state_from_bloch, theta_to_p_matrix,
    ProductProjector, ProjectorSearchState, SearchRun, EXTRA_RESTARTS, MAX_ITERATIONS, STOP_TOLERANCE,
};

use crate::measurements::{complete_product_povm, cube_settings, eigenbasis_povm, MeasurementCatalog, Povm};
use crate::quantum::{bloch_to_matrix, project_to_physical, state_to_bloch, BlochVector, HermitianBasis};
use crate::{Error, Result};

/// Predicted probabilities are clamped to this margin before weight prediction.
pub const PREDICTION_CLAMP: f64 = 1e-6;

pub const PRODUCT_LABEL: &str = "PROD";
pub const EIGENBASIS_LABEL: &str = "EIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdaptiveMode {
    /// Product measurements only.
    Raqst1,
    /// Product measurements plus the eigenbasis of the current estimate.
    Raqst2,
}

/// g = ΓᵀQ²Γ / (1/W + ΓᵀQΓ), the decrease of Tr(Q) from absorbing one
/// effect with weight W.
pub fn gain(q: &DMatrix<f64>, gamma: &DVector<f64>, w_pred: f64) -> f64 {
    let q_gamma = q * gamma;
    let num = q_gamma.norm_squared();
    if num == 0.0 {
        return 0.0;
    }
    num / (1.0 / w_pred + gamma.dot(&q_gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedProb {
    /// γ₀/d + Θ̂ᵀΓ; may fall outside [0, 1] for unphysical Θ̂.
    pub raw: f64,
    /// `raw` clamped to [0, 1].
    pub clamped: f64,
}

pub fn predicted_prob(theta_hat: &BlochVector, gamma0: f64, gamma: &DVector<f64>, dim: usize) -> Result<PredictedProb> {
    if gamma.len() != theta_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_hat.len(),
            got: gamma.len(),
        });
    }
    let raw = gamma0 / dim as f64 + theta_hat.0.dot(gamma);
    Ok(PredictedProb {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// Cube settings plus the product POVM completing the minimum-probability
/// product projector; RAQST2 also adds the eigenbasis of the physical estimate.
///
/// The projector search runs on the Bloch vector of the physical estimate, so
/// the minimized probability is a genuine Born probability.
pub fn build_candidate_set(theta_hat: &BlochVector, mode: AdaptiveMode, basis: &HermitianBasis) -> Result<MeasurementCatalog> {
    let mut catalog = cube_settings(basis)?;
    let estimate = project_to_physical(&bloch_to_matrix(theta_hat, basis)?)?;
    let physical_theta = state_to_bloch(&estimate, basis)?;
    let projector = min_prob_product_projector(&physical_theta)?;
    catalog.push(complete_product_povm(PRODUCT_LABEL, &projector.psi1, &projector.psi2, basis)?)?;
    if mode == AdaptiveMode::Raqst2 {
        catalog.push(eigenbasis_povm(EIGENBASIS_LABEL, &estimate, basis)?)?;
    }
    Ok(catalog)
}

/// The outcome of scoring a catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Index of the chosen POVM in the catalog.
    pub setting: usize,
    /// Index of the max-gain effect inside that POVM.
    pub effect: usize,
    pub gain: f64,
    pub predicted: PredictedProb,
}

/// Scores every effect with W̃ = n_per_step / (p̃(1 − p̃)), p̃ clamped to
/// [1e-6, 1 − 1e-6], and returns the POVM holding the max-gain effect.
/// Ties go to the first effect in catalog order.
pub fn select_next_setting(
    q: &DMatrix<f64>,
    theta_hat: &BlochVector,
    candidates: &[Povm],
    n_per_step: u64,
    dim: usize,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    if n_per_step == 0 {
        return Err(Error::InvalidArgument("n_per_step must be positive".into()));
    }
    let mut best: Option<Selection> = None;
    for (s, povm) in candidates.iter().enumerate() {
        for (m, effect) in povm.effects().iter().enumerate() {
            let predicted = predicted_prob(theta_hat, effect.gamma0, &effect.gamma, dim)?;
            let p = predicted.raw.clamp(PREDICTION_CLAMP, 1.0 - PREDICTION_CLAMP);
            let w = n_per_step as f64 / (p * (1.0 - p));
            let g = gain(q, &effect.gamma, w);
            if best.as_ref().is_none_or(|b| g > b.gain) {
                best = Some(Selection {
                    setting: s,
                    effect: m,
                    gain: g,
                    predicted,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("candidate POVMs have no effects".into()))
}
