//! Numerical second-derivative estimates of the objective curvature.

use serde::{Deserialize, Serialize};

use crate::estimator::{objective, ObjectiveVariant};
use crate::panel::{ModelParams, PanelDataset};
use crate::sum::pairwise_sum_by;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimates {
    /// Row-major `k × k`, symmetric.
    pub v1_hat: Vec<f64>,
    pub v2_hat: f64,
    pub k: usize,
    pub omega_beta: f64,
    pub omega_gamma: f64,
}

/// `V̂₁` with the default objective variant.
pub fn estimate_v1(data: &PanelDataset, beta_hat: &[f64], omega: f64) -> Vec<f64> {
    estimate_v1_with(data, ObjectiveVariant::AdjacentOnly, beta_hat, omega)
}

/// Fourth-difference estimate of the Hessian of `n⁻¹Σξ_i` at `β̂`. Only
/// `k ≤ l` is computed; the lower triangle is mirrored.
pub fn estimate_v1_with(data: &PanelDataset, variant: ObjectiveVariant, beta_hat: &[f64], omega: f64) -> Vec<f64> {
    let k = beta_hat.len();
    let n = data.n() as f64;
    let mean_xi = |b: &[f64]| pairwise_sum_by(data.n(), &|i| objective::xi_with(data, variant, i, b)) / n;
    let shifted = |a: usize, sa: f64, c: usize, sc: f64| {
        let mut b = beta_hat.to_vec();
        b[a] += sa * omega;
        b[c] += sc * omega;
        b
    };
    let mut v = vec![0.0; k * k];
    for a in 0..k {
        for c in a..k {
            let d = mean_xi(&shifted(a, 1.0, c, 1.0)) - mean_xi(&shifted(a, 1.0, c, -1.0))
                - mean_xi(&shifted(a, -1.0, c, 1.0))
                + mean_xi(&shifted(a, -1.0, c, -1.0));
            let e = d / (4.0 * omega * omega);
            v[a * k + c] = e;
            v[c * k + a] = e;
        }
    }
    v
}

/// `V̂₂` with the default objective variant.
pub fn estimate_v2(data: &PanelDataset, params: &ModelParams, omega: f64, h: f64) -> f64 {
    estimate_v2_with(data, ObjectiveVariant::AdjacentOnly, params, omega, h)
}

/// Second difference of `n⁻¹Σς_i(·, β̂)` at `γ̂` with step `2ω`.
pub fn estimate_v2_with(data: &PanelDataset, variant: ObjectiveVariant, params: &ModelParams, omega: f64, h: f64) -> f64 {
    let b = &params.beta;
    let g = params.gamma;
    let total = pairwise_sum_by(data.n(), &|i| {
        let at = |r: f64| objective::varsigma_with(data, variant, i, r, b, h);
        at(g + 2.0 * omega) - 2.0 * at(g) + at(g - 2.0 * omega)
    });
    total / (4.0 * omega * omega * data.n() as f64)
}
