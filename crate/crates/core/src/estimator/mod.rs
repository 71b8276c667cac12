//! Two-step maximum score estimation.
//!
//! Step one maximizes the β objective over the unit sphere. Step two plugs
//! `β̂` into the kernel-weighted γ objective and maximizes over `[γ_lo, γ_hi]`.
//! Both objectives are piecewise constant, so maximization is done by
//! breakpoint enumeration (see [`sweep`]) rather than by smooth optimizers.

pub mod objective;
pub mod sphere;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{ModelParams, PanelDataset, MIN_ESTIMATION_PERIODS};

pub use objective::{epanechnikov, kernel_h, BetaTerm, GammaTerm};
pub use sphere::{direction_grid, BetaGrid, Quadratic, SphereObjective};

/// Which sums enter the objectives.
///
/// * `AdjacentOnly`: β from consecutive-triple comparisons, γ from adjacent
///   periods. At T = 4 these are the basic two-step objectives.
/// * `Combined`: as `AdjacentOnly`, with the non-adjacent γ sum added.
/// * `GeneralT`: β from all period pairs `t > s + 1`; γ as `Combined`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ObjectiveVariant {
    #[default]
    AdjacentOnly,
    Combined,
    GeneralT,
}

impl std::str::FromStr for ObjectiveVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(Self::AdjacentOnly),
            "combined" => Ok(Self::Combined),
            "general" | "general-t" => Ok(Self::GeneralT),
            other => Err(Error::InvalidConfig(format!("unknown objective variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Kernel {
    #[default]
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `h_n = n^{-1/4} / ln n`.
    #[default]
    PaperDefault,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            Bandwidth::PaperDefault => bandwidth(n),
            Bandwidth::Fixed(h) => h,
        }
    }
}

/// `n^{-1/4} (ln n)^{-1}`.
pub fn bandwidth(n: usize) -> f64 {
    let n = n as f64;
    n.powf(-0.25) / n.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    pub gamma_bounds: (f64, f64),
    pub beta_grid: BetaGrid,
    pub objective_variant: ObjectiveVariant,
    pub seed: u64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Epanechnikov,
            bandwidth: Bandwidth::PaperDefault,
            gamma_bounds: (-3.0, 3.0),
            beta_grid: BetaGrid::default(),
            objective_variant: ObjectiveVariant::AdjacentOnly,
            seed: 0,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig(format!("bandwidth h must be positive, got {h}")));
            }
        }
        let (lo, hi) = self.gamma_bounds;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if self.beta_grid.points_per_level < 8 || self.beta_grid.levels < 1 {
            return Err(Error::InvalidConfig("beta grid needs at least 8 points per level and one level".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Pieces of the β objective visited (K = 2) or points/circles examined.
    pub beta_evaluations: usize,
    /// Open intervals of the γ objective inside the bounds.
    pub gamma_pieces: usize,
    /// The β objective is constant over the sphere; `β̂ = e₁` by convention.
    pub beta_constant: bool,
    /// No γ breakpoint inside the bounds; `γ̂` is the midpoint of the bounds.
    pub gamma_constant: bool,
    /// Maximizing γ interval.
    pub gamma_interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub params: ModelParams,
    pub q1_value: f64,
    pub q2_value: f64,
    pub beta_effective: usize,
    pub gamma_effective: usize,
    pub h_used: f64,
    pub diagnostics: Diagnostics,
}

/// `Q₁ₙ(b)` with the default objective variant.
pub fn q1_objective(data: &PanelDataset, b: &[f64]) -> Result<f64> {
    q1_objective_variant(data, ObjectiveVariant::AdjacentOnly, b)
}

pub fn q1_objective_variant(data: &PanelDataset, variant: ObjectiveVariant, b: &[f64]) -> Result<f64> {
    data.require_periods(MIN_ESTIMATION_PERIODS)?;
    check_dim(data, b)?;
    Ok(objective::q1_objective_with(data, variant, b))
}

/// `Q₂ₙᴷ(r; b)` with kernel bandwidth `h`.
pub fn q2_kernel_objective(data: &PanelDataset, variant: ObjectiveVariant, r: f64, b: &[f64], h: f64) -> Result<f64> {
    data.require_periods(MIN_ESTIMATION_PERIODS)?;
    check_dim(data, b)?;
    Ok(objective::q2_kernel_objective_with(data, variant, r, b, h))
}

/// `ξ_i(b)` (default variant, reference term dropped).
pub fn xi(data: &PanelDataset, i: usize, b: &[f64]) -> f64 {
    objective::xi_with(data, ObjectiveVariant::AdjacentOnly, i, b)
}

/// `ς_ni(r, b)` (default variant, reference terms dropped).
pub fn varsigma(data: &PanelDataset, i: usize, r: f64, b: &[f64], h: f64) -> f64 {
    objective::varsigma_with(data, ObjectiveVariant::AdjacentOnly, i, r, b, h)
}

fn check_dim(data: &PanelDataset, b: &[f64]) -> Result<()> {
    if b.len() != data.k() {
        return Err(Error::InvalidConfig(format!("direction has {} entries, data has K={}", b.len(), data.k())));
    }
    Ok(())
}

/// β objective in indicator form, `Σ_j w_j 1[v_j'b > 0]`, with per-term
/// weights `sign_j · scale(individual_j)`.
pub fn beta_sphere_objective(
    k: usize,
    terms: &[BetaTerm],
    scale: impl Fn(usize) -> f64,
    quad: Option<Quadratic>,
) -> SphereObjective {
    let mut weights = Vec::with_capacity(terms.len());
    let mut vectors = Vec::with_capacity(terms.len() * k);
    for t in terms {
        weights.push(t.sign * scale(t.individual));
        vectors.extend_from_slice(&t.v);
    }
    SphereObjective::new(k, weights, vectors, quad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaEstimate {
    pub beta: Vec<f64>,
    pub q1_value: f64,
    pub constant: bool,
    pub evaluations: usize,
}

/// `β̂ = argmax_{‖b‖=1} Q₁ₙ(b)`.
pub fn estimate_beta(data: &PanelDataset, cfg: &EstimationConfig) -> Result<BetaEstimate> {
    data.require_periods(MIN_ESTIMATION_PERIODS)?;
    cfg.validate()?;
    let variant = cfg.objective_variant;
    let terms = objective::beta_terms(data, variant);
    if terms.is_empty() {
        return Err(Error::NoSwitchers);
    }
    // sgn(v'b) = 2·1[v'b > 0] − 1 off the breakpoints; the constant does not
    // move the argmax.
    let n = data.n() as f64;
    let obj = beta_sphere_objective(data.k(), &terms, |_| 2.0 / n, None);
    let found = sphere::maximize_on_sphere(&obj, &cfg.beta_grid, cfg.seed);
    let q1_value = objective::q1_objective_with(data, variant, &found.b);
    Ok(BetaEstimate { beta: found.b, q1_value, constant: found.constant, evaluations: found.evaluations })
}

/// Step terms `weight · 1[lag·(r − threshold) > 0]` for the sweep, derived
/// from γ terms scaled per individual.
pub fn gamma_step_terms(terms: &[GammaTerm], scale: impl Fn(usize) -> f64) -> Vec<sweep::StepTerm> {
    terms
        .iter()
        .filter(|t| t.lag != 0)
        .map(|t| sweep::StepTerm {
            weight: t.weight * scale(t.individual),
            threshold: -t.index * t.lag as f64,
            dir: t.lag,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub q2_value: f64,
    pub constant: bool,
    pub interval: (f64, f64),
    pub pieces: usize,
}

/// `γ̂ = argmax_{r ∈ [γ_lo, γ_hi]} Q₂ₙᴷ(r; β̂)`.
pub fn estimate_gamma(data: &PanelDataset, beta_hat: &[f64], cfg: &EstimationConfig) -> Result<GammaEstimate> {
    data.require_periods(MIN_ESTIMATION_PERIODS)?;
    cfg.validate()?;
    check_dim(data, beta_hat)?;
    let variant = cfg.objective_variant;
    let h = cfg.bandwidth.resolve(data.n());
    if objective::gamma_effective(data, variant) == 0 {
        return Err(Error::NoGammaSwitchers);
    }
    let terms = objective::gamma_terms(data, variant, beta_hat, h);
    if !terms.iter().any(|t| t.lag != 0) {
        return Err(Error::AllWeightsZero { h });
    }
    let n = data.n() as f64;
    // sgn(a + r·d) = 2·1[d(r + a d) > 0] − 1 for d = ±1 off the breakpoints.
    let steps = gamma_step_terms(&terms, |_| 2.0 / n);
    let (lo, hi) = cfg.gamma_bounds;
    let found = sweep::maximize_on_interval(&steps, lo, hi, None);
    let q2_value = objective::q2_kernel_objective_with(data, variant, found.r, beta_hat, h);
    Ok(GammaEstimate { gamma: found.r, q2_value, constant: found.constant, interval: found.interval, pieces: found.pieces })
}

/// Runs both steps.
pub fn estimate(data: &PanelDataset, cfg: &EstimationConfig) -> Result<EstimateResult> {
    let beta = estimate_beta(data, cfg)?;
    let gamma = estimate_gamma(data, &beta.beta, cfg)?;
    let variant = cfg.objective_variant;
    Ok(EstimateResult {
        params: ModelParams { beta: beta.beta, gamma: gamma.gamma },
        q1_value: beta.q1_value,
        q2_value: gamma.q2_value,
        beta_effective: objective::beta_effective(data, variant),
        gamma_effective: objective::gamma_effective(data, variant),
        h_used: cfg.bandwidth.resolve(data.n()),
        diagnostics: Diagnostics {
            beta_evaluations: beta.evaluations,
            gamma_pieces: gamma.pieces,
            beta_constant: beta.constant,
            gamma_constant: gamma.constant,
            gamma_interval: gamma.interval,
        },
    })
}
