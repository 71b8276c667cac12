//! Bootstrap inference for the two-step estimator.
//!
//! Every draw resamples individuals with replacement and records the
//! multiplicity `m_i` of each original individual. The numerical, modified
//! and classic procedures then only reweight the original objective terms,
//! so a draw costs one sweep and no data copy. The m-out-of-n procedure
//! materializes the subsample and reruns the full estimator on it.

pub mod curvature;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    self, bandwidth, beta_sphere_objective, gamma_step_terms, objective, sphere, sweep, Bandwidth,
    EstimateResult, EstimationConfig, Quadratic,
};
use crate::panel::{ModelParams, PanelDataset};
use crate::rng::{derive_seed, domain, stream};

pub use curvature::{estimate_v1, estimate_v1_with, estimate_v2, estimate_v2_with, CurvatureEstimates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BootstrapMethod {
    Numerical,
    ModifiedObjective,
    MOutOfN,
    Classic,
}

impl BootstrapMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Numerical => "numerical",
            Self::ModifiedObjective => "modified",
            Self::MOutOfN => "mn",
            Self::Classic => "classic",
        }
    }
}

impl std::str::FromStr for BootstrapMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numerical" => Ok(Self::Numerical),
            "modified" => Ok(Self::ModifiedObjective),
            "mn" | "m-out-of-n" => Ok(Self::MOutOfN),
            "classic" => Ok(Self::Classic),
            other => Err(Error::InvalidConfig(format!("unknown bootstrap method '{other}'"))),
        }
    }
}

/// Largest share of missing draws tolerated before giving up.
pub const MAX_MISSING_SHARE: f64 = 0.10;

/// Cap on the β-step numerical-derivative step.
pub const OMEGA_BETA_CAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub method: BootstrapMethod,
    pub b_draws: usize,
    /// Multiplies the ε and ω rate rules.
    pub c: f64,
    /// Resample size for m-out-of-n; `None` means `⌈n^{2/3}⌉`.
    pub m: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
    /// Overrides the ε rule when set.
    pub epsilon: Option<f64>,
    pub omega_beta: Option<f64>,
    pub omega_gamma: Option<f64>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            method: BootstrapMethod::Numerical,
            b_draws: 199,
            c: 1.0,
            m: None,
            alpha: 0.05,
            seed: 0,
            epsilon: None,
            omega_beta: None,
            omega_gamma: None,
        }
    }
}

/// `ε_n = c·n^{-2/3}·ln n`.
pub fn epsilon_rule(n: usize, c: f64) -> f64 {
    let nf = n as f64;
    c * nf.powf(-2.0 / 3.0) * nf.ln()
}

/// `ω_n = min(c·n^{-1/7}·ln n, 0.5)`.
pub fn omega_beta_rule(n: usize, c: f64) -> f64 {
    let nf = n as f64;
    (c * nf.powf(-1.0 / 7.0) * nf.ln()).min(OMEGA_BETA_CAP)
}

/// `ω_n = c·n^{-3/28}·(ln n)^{1/7}`.
pub fn omega_gamma_rule(n: usize, c: f64) -> f64 {
    let nf = n as f64;
    c * nf.powf(-3.0 / 28.0) * nf.ln().powf(1.0 / 7.0)
}

/// `⌈n^{2/3}⌉`.
pub fn default_m(n: usize) -> usize {
    (n as f64).powf(2.0 / 3.0).ceil() as usize
}

impl BootstrapConfig {
    pub fn epsilon_for(&self, n: usize) -> f64 {
        self.epsilon.unwrap_or_else(|| epsilon_rule(n, self.c))
    }

    pub fn omega_beta_for(&self, n: usize) -> f64 {
        self.omega_beta.unwrap_or_else(|| omega_beta_rule(n, self.c))
    }

    pub fn omega_gamma_for(&self, n: usize) -> f64 {
        self.omega_gamma.unwrap_or_else(|| omega_gamma_rule(n, self.c))
    }

    pub fn m_for(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| default_m(n))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.b_draws < 2 {
            return Err(Error::InvalidConfig(format!("B must be at least 2, got {}", self.b_draws)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        match self.method {
            BootstrapMethod::Numerical => {
                let eps = self.epsilon_for(n);
                // ε = 1/n is admitted: it is the classic bootstrap.
                if !(eps >= 1.0 / n as f64 && eps < 1.0) {
                    return Err(Error::InvalidConfig(format!("epsilon {eps} outside [1/n, 1) for n={n}")));
                }
            }
            BootstrapMethod::ModifiedObjective => {
                for (name, w) in [("omega_beta", self.omega_beta_for(n)), ("omega_gamma", self.omega_gamma_for(n))] {
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(Error::InvalidConfig(format!("{name} must be positive, got {w}")));
                    }
                }
            }
            BootstrapMethod::MOutOfN => {
                let m = self.m_for(n);
                if m < 2 || m > n {
                    return Err(Error::InvalidConfig(format!("m must satisfy 2 <= m <= n, got m={m}, n={n}")));
                }
            }
            BootstrapMethod::Classic => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDraw {
    pub beta: Vec<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub method: BootstrapMethod,
    pub point: ModelParams,
    pub alpha: f64,
    /// `(lower, upper)` per β coordinate.
    pub beta_ci: Vec<(f64, f64)>,
    pub gamma_ci: (f64, f64),
    /// One entry per draw index; `None` marks a degenerate resample.
    pub draws: Vec<Option<BootstrapDraw>>,
    pub missing: usize,
    pub epsilon: Option<f64>,
    pub omega_beta: Option<f64>,
    pub omega_gamma: Option<f64>,
    pub h: f64,
    pub m: Option<usize>,
    /// Rescaling applied to the reflected draws (1 for the modified method).
    pub scale_beta: f64,
    pub scale_gamma: f64,
    /// 1-based order statistics used for the lower and upper quantiles.
    pub quantile_indices: (usize, usize),
    pub curvature: Option<CurvatureEstimates>,
    /// `V̂₂ > 0`, so the γ penalty is not concave.
    pub curvature_unusable: bool,
    pub inconsistent_method: bool,
}

/// 1-based index `⌈τ·B⌉` clamped to `[1, B]`.
pub fn quantile_index(b: usize, tau: f64) -> usize {
    ((tau * b as f64).ceil() as usize).clamp(1, b.max(1))
}

/// Order statistic at [`quantile_index`]; no interpolation.
pub fn quantile(samples: &[f64], tau: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s[quantile_index(s.len(), tau) - 1])
}

/// Multiplicity of each original individual in a size-`size` resample.
fn resample_counts(n: usize, size: usize, seed: u64, draw: usize) -> Vec<u32> {
    let mut rng = stream(seed, domain::BOOTSTRAP, draw as u64);
    let mut counts = vec![0u32; n];
    for _ in 0..size {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

fn resample_indices(n: usize, size: usize, seed: u64, draw: usize) -> Vec<usize> {
    let mut rng = stream(seed, domain::BOOTSTRAP, draw as u64);
    (0..size).map(|_| rng.random_range(0..n)).collect()
}

/// Runs the configured bootstrap around `est`, which must have been computed
/// from `data` with `est_cfg`.
pub fn bootstrap(
    data: &PanelDataset,
    est: &EstimateResult,
    est_cfg: &EstimationConfig,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let n = data.n();
    cfg.validate(n)?;
    est_cfg.validate()?;
    match cfg.method {
        BootstrapMethod::MOutOfN => m_out_of_n(data, est, est_cfg, cfg),
        _ => reweighted(data, est, est_cfg, cfg),
    }
}

/// How each original individual's terms are weighted in a draw, given its
/// resample multiplicity, plus the smooth penalties.
struct DrawObjective {
    weight: Box<dyn Fn(u32) -> f64 + Sync>,
    beta_quad: Option<Quadratic>,
    gamma_quad: Option<sweep::Parabola>,
}

fn reweighted(
    data: &PanelDataset,
    est: &EstimateResult,
    est_cfg: &EstimationConfig,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let n = data.n();
    let nf = n as f64;
    let variant = est_cfg.objective_variant;
    let beta_hat = &est.params.beta;
    let gamma_hat = est.params.gamma;
    let h = est.h_used;

    let mut epsilon = None;
    let mut omega_beta = None;
    let mut omega_gamma = None;
    let mut curvature = None;
    let (scale_beta, scale_gamma);
    let obj = match cfg.method {
        BootstrapMethod::Numerical => {
            let eps = cfg.epsilon_for(n);
            epsilon = Some(eps);
            let s = (nf * eps).sqrt();
            let a = (nf * eps).powf(-1.0 / 3.0);
            scale_beta = a;
            scale_gamma = a;
            // n⁻¹Σξ + s·n⁻¹(Σ m_i ξ_i − Σ ξ_i) = Σ ((1 − s) + s·m_i)/n · ξ_i
            DrawObjective { weight: Box::new(move |m| ((1.0 - s) + s * m as f64) / nf), beta_quad: None, gamma_quad: None }
        }
        BootstrapMethod::ModifiedObjective => {
            let wb = cfg.omega_beta_for(n);
            let wg = cfg.omega_gamma_for(n);
            omega_beta = Some(wb);
            omega_gamma = Some(wg);
            let v1 = estimate_v1_with(data, variant, beta_hat, wb);
            let v2 = estimate_v2_with(data, variant, &est.params, wg, h);
            scale_beta = 1.0;
            scale_gamma = 1.0;
            let quads = (
                Some(Quadratic { matrix: v1.clone(), center: beta_hat.clone() }),
                Some(sweep::Parabola { curvature: v2, center: gamma_hat }),
            );
            curvature = Some(CurvatureEstimates { v1_hat: v1, v2_hat: v2, k: data.k(), omega_beta: wb, omega_gamma: wg });
            DrawObjective { weight: Box::new(move |m| (m as f64 - 1.0) / nf), beta_quad: quads.0, gamma_quad: quads.1 }
        }
        BootstrapMethod::Classic => {
            scale_beta = 1.0;
            scale_gamma = 1.0;
            DrawObjective { weight: Box::new(move |m| m as f64 / nf), beta_quad: None, gamma_quad: None }
        }
        BootstrapMethod::MOutOfN => unreachable!("handled by m_out_of_n"),
    };

    let beta_terms = objective::beta_terms(data, variant);
    let gamma_terms: Vec<_> =
        objective::gamma_terms(data, variant, beta_hat, h).into_iter().filter(|t| t.lag != 0).collect();
    let (lo, hi) = est_cfg.gamma_bounds;

    let draws: Vec<Option<BootstrapDraw>> = (0..cfg.b_draws)
        .into_par_iter()
        .map(|d| {
            let counts = resample_counts(n, n, cfg.seed, d);
            let has_beta = beta_terms.iter().any(|t| counts[t.individual] > 0);
            let has_gamma = gamma_terms.iter().any(|t| counts[t.individual] > 0);
            if !has_beta || !has_gamma {
                return None;
            }
            let w = |i: usize| (obj.weight)(counts[i]);
            let sobj = beta_sphere_objective(data.k(), &beta_terms, w, obj.beta_quad.clone());
            let seed = derive_seed(est_cfg.seed, domain::SEARCH, d as u64 + 1);
            let b = sphere::maximize_on_sphere(&sobj, &est_cfg.beta_grid, seed).b;
            let steps = gamma_step_terms(&gamma_terms, w);
            let r = sweep::maximize_on_interval(&steps, lo, hi, obj.gamma_quad.as_ref()).r;
            Some(BootstrapDraw { beta: b, gamma: r })
        })
        .collect();

    let curvature_unusable = curvature.as_ref().is_some_and(|c| c.v2_hat > 0.0);
    let mut out = finish(cfg, est, draws, scale_beta, scale_gamma)?;
    out.epsilon = epsilon;
    out.omega_beta = omega_beta;
    out.omega_gamma = omega_gamma;
    out.h = h;
    out.curvature = curvature;
    out.curvature_unusable = curvature_unusable;
    Ok(out)
}

fn m_out_of_n(
    data: &PanelDataset,
    est: &EstimateResult,
    est_cfg: &EstimationConfig,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let n = data.n();
    let m = cfg.m_for(n);
    let h_m = bandwidth(m);
    let draw_cfg = EstimationConfig { bandwidth: Bandwidth::Fixed(h_m), ..est_cfg.clone() };
    let draws: Vec<Option<BootstrapDraw>> = (0..cfg.b_draws)
        .into_par_iter()
        .map(|d| {
            let sub = data.select(&resample_indices(n, m, cfg.seed, d));
            // Missing when the subsample carries no usable switchers.
            estimator::estimate(&sub, &draw_cfg)
                .ok()
                .map(|e| BootstrapDraw { beta: e.params.beta, gamma: e.params.gamma })
        })
        .collect();
    let ratio = m as f64 / n as f64;
    let scale_beta = ratio.cbrt();
    let scale_gamma = (ratio * h_m / est.h_used).cbrt();
    let mut out = finish(cfg, est, draws, scale_beta, scale_gamma)?;
    out.h = h_m;
    out.m = Some(m);
    Ok(out)
}

/// Checks the missing share and builds the confidence intervals.
fn finish(
    cfg: &BootstrapConfig,
    est: &EstimateResult,
    draws: Vec<Option<BootstrapDraw>>,
    scale_beta: f64,
    scale_gamma: f64,
) -> Result<BootstrapResult> {
    let missing = draws.iter().filter(|d| d.is_none()).count();
    if missing as f64 > MAX_MISSING_SHARE * draws.len() as f64 {
        return Err(Error::ResampleDegenerate { missing, draws: draws.len() });
    }
    let valid: Vec<&BootstrapDraw> = draws.iter().flatten().collect();
    let (tau_lo, tau_hi) = (cfg.alpha / 2.0, 1.0 - cfg.alpha / 2.0);
    let classic = cfg.method == BootstrapMethod::Classic;
    let interval = |samples: Vec<f64>, point: f64, scale: f64| -> Result<(f64, f64)> {
        let q_lo = quantile(&samples, tau_lo)?;
        let q_hi = quantile(&samples, tau_hi)?;
        Ok(if classic {
            (q_lo, q_hi)
        } else {
            (point - scale * (q_hi - point), point - scale * (q_lo - point))
        })
    };
    let k = est.params.beta.len();
    let beta_ci = (0..k)
        .map(|j| interval(valid.iter().map(|d| d.beta[j]).collect(), est.params.beta[j], scale_beta))
        .collect::<Result<Vec<_>>>()?;
    let gamma_ci = interval(valid.iter().map(|d| d.gamma).collect(), est.params.gamma, scale_gamma)?;
    let b = valid.len();
    Ok(BootstrapResult {
        method: cfg.method,
        point: est.params.clone(),
        alpha: cfg.alpha,
        beta_ci,
        gamma_ci,
        quantile_indices: (quantile_index(b, tau_lo), quantile_index(b, tau_hi)),
        draws,
        missing,
        epsilon: None,
        omega_beta: None,
        omega_gamma: None,
        h: est.h_used,
        m: None,
        scale_beta,
        scale_gamma,
        curvature: None,
        curvature_unusable: false,
        inconsistent_method: classic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_order_statistics() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert_eq!(quantile_index(199, 0.975), 195);
        assert_eq!(quantile_index(199, 0.025), 5);
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptySample)));
        let s: Vec<f64> = (1..=199).rev().map(f64::from).collect();
        assert_eq!(quantile(&s, 0.975).unwrap(), 195.0);
    }

    #[test]
    fn tuning_rules() {
        assert!((epsilon_rule(5000, 1.0) - 0.029130).abs() < 5e-6);
        assert!((omega_gamma_rule(5000, 1.0) - 0.5453).abs() < 5e-4);
        assert_eq!(omega_beta_rule(5000, 1.0), OMEGA_BETA_CAP);
        assert!(omega_beta_rule(5000, 0.01) < OMEGA_BETA_CAP);
        assert_eq!(default_m(5000), 293);
    }

    #[test]
    fn config_validation() {
        let ok = BootstrapConfig::default();
        assert!(ok.validate(5000).is_ok());
        assert!(BootstrapConfig { b_draws: 1, ..ok.clone() }.validate(5000).is_err());
        assert!(BootstrapConfig { alpha: 1.0, ..ok.clone() }.validate(5000).is_err());
        assert!(BootstrapConfig { epsilon: Some(1.0), ..ok.clone() }.validate(5000).is_err());
        assert!(BootstrapConfig { epsilon: Some(1.0 / 5000.0), ..ok.clone() }.validate(5000).is_ok());
        let mn = BootstrapConfig { method: BootstrapMethod::MOutOfN, m: Some(6000), ..ok };
        assert!(mn.validate(5000).is_err());
    }

    #[test]
    fn resample_counts_match_indices() {
        let idx = resample_indices(50, 50, 9, 3);
        let counts = resample_counts(50, 50, 9, 3);
        let mut from_idx = vec![0u32; 50];
        for i in idx {
            from_idx[i] += 1;
        }
        assert_eq!(counts, from_idx);
        assert_eq!(counts.iter().sum::<u32>(), 50);
    }
}
