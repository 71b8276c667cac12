//! Simulation of dynamic binary-choice panels.
//!
//! `y_i0 = 1[x_i0'β + α_i − ε_i0 > 0]` and
//! `y_it = 1[x_it'β + γ y_i,t-1 + α_i − ε_it > 0]` for `t = 1..T`, with
//! standard normal regressors, unit-variance logistic errors and
//! `α_i` equal to the mean of the second regressor over periods `0..=T`.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Design {
    /// i.i.d. N(0,1) regressors, β = (1,1), γ = −1.
    Design1,
    /// As Design 1, but `x_·2` follows an AR(1) with coefficient 0.5.
    Design2,
    /// Three i.i.d. N(0,1) regressors, β = (1,1,1), γ = −1.
    Design3,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorLaw {
    /// `(π²/3)^{-1/2} · Logistic(0,1)`.
    UnitVarianceLogistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedEffectRule {
    /// `α_i = (x_i0,2 + … + x_iT,2) / (T+1)`; the first regressor when K = 1.
    MeanOfX2AcrossPeriods,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub design_id: Design,
    pub beta_raw: Vec<f64>,
    pub gamma_raw: f64,
    pub t_max: usize,
    /// AR(1) coefficient of the second regressor (0 = i.i.d.).
    pub ar_coefficient: f64,
    pub error_law: ErrorLaw,
    pub fixed_effect_rule: FixedEffectRule,
}

/// Scale-normalized true parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub beta_normalized: Vec<f64>,
    pub gamma_normalized: f64,
}

impl DgpSpec {
    pub fn design(design: Design) -> Self {
        let (beta_raw, rho) = match design {
            Design::Design1 | Design::Custom => (vec![1.0, 1.0], 0.0),
            Design::Design2 => (vec![1.0, 1.0], 0.5),
            Design::Design3 => (vec![1.0, 1.0, 1.0], 0.0),
        };
        Self {
            design_id: design,
            beta_raw,
            gamma_raw: -1.0,
            t_max: 4,
            ar_coefficient: rho,
            error_law: ErrorLaw::UnitVarianceLogistic,
            fixed_effect_rule: FixedEffectRule::MeanOfX2AcrossPeriods,
        }
    }

    /// Design by number 1, 2 or 3.
    pub fn from_number(design: u32) -> Result<Self> {
        match design {
            1 => Ok(Self::design(Design::Design1)),
            2 => Ok(Self::design(Design::Design2)),
            3 => Ok(Self::design(Design::Design3)),
            other => Err(Error::InvalidSpec(format!("unknown design {other}; expected 1, 2 or 3"))),
        }
    }

    pub fn k(&self) -> usize {
        self.beta_raw.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_raw.is_empty() || self.beta_raw.iter().all(|&b| b == 0.0) {
            return Err(Error::InvalidSpec("beta_raw needs at least one nonzero entry".into()));
        }
        if self.beta_raw.iter().any(|b| !b.is_finite()) || !self.gamma_raw.is_finite() {
            return Err(Error::InvalidSpec("coefficients must be finite".into()));
        }
        if !(self.ar_coefficient > -1.0 && self.ar_coefficient < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "AR coefficient {} outside (-1, 1)",
                self.ar_coefficient
            )));
        }
        if self.t_max < crate::panel::MIN_PERIODS {
            return Err(Error::InvalidSpec(format!("t_max={} below {}", self.t_max, crate::panel::MIN_PERIODS)));
        }
        Ok(())
    }

    pub fn true_params(&self) -> TrueParams {
        let norm = self.beta_raw.iter().map(|b| b * b).sum::<f64>().sqrt();
        TrueParams {
            beta_normalized: self.beta_raw.iter().map(|b| b / norm).collect(),
            gamma_normalized: self.gamma_raw / norm,
        }
    }

    fn fe_column(&self) -> usize {
        1.min(self.k() - 1)
    }
}

/// Standard deviation scale turning Logistic(0,1) into unit variance.
pub fn logistic_scale() -> f64 {
    (std::f64::consts::PI * std::f64::consts::PI / 3.0).sqrt().recip()
}

/// Unit-variance logistic draw by inverse CDF.
pub fn draw_logistic(rng: &mut impl RngCore) -> f64 {
    let u = rng::open_unit(rng);
    logistic_scale() * (u / (1.0 - u)).ln()
}

struct Individual {
    y: Vec<u8>,
    /// Periods 1..=T, row-major.
    x: Vec<f64>,
}

fn simulate_individual(spec: &DgpSpec, seed: u64, i: usize) -> Individual {
    let k = spec.k();
    let t_max = spec.t_max;
    let mut rng = rng::stream(seed, domain::SIMULATE, i as u64);
    let fe_col = spec.fe_column();

    // Regressors for periods 0..=T, period-major.
    let mut x = vec![0.0; (t_max + 1) * k];
    for t in 0..=t_max {
        for j in 0..k {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[t * k + j] = if j == fe_col && t > 0 && spec.ar_coefficient != 0.0 {
                spec.ar_coefficient * x[(t - 1) * k + j] + z
            } else {
                z
            };
        }
    }
    let alpha = (0..=t_max).map(|t| x[t * k + fe_col]).sum::<f64>() / (t_max + 1) as f64;

    let mut y = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        let index: f64 = x[t * k..(t + 1) * k].iter().zip(&spec.beta_raw).map(|(a, b)| a * b).sum();
        let lag = if t == 0 { 0.0 } else { spec.gamma_raw * y[t - 1] as f64 };
        let eps = draw_logistic(&mut rng);
        y.push(u8::from(index + lag + alpha - eps > 0.0));
    }
    Individual { y, x: x[k..].to_vec() }
}

/// Simulates `n` individuals. The stream of individual `i` depends only on
/// `(seed, i)`.
pub fn simulate(spec: &DgpSpec, n: usize, seed: u64) -> Result<(PanelDataset, TrueParams)> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    let people: Vec<Individual> = (0..n).into_par_iter().map(|i| simulate_individual(spec, seed, i)).collect();
    let mut y = Vec::with_capacity(n * (spec.t_max + 1));
    let mut x = Vec::with_capacity(n * spec.t_max * spec.k());
    for p in people {
        y.extend(p.y);
        x.extend(p.x);
    }
    let data = PanelDataset::new(n, spec.t_max, spec.k(), y, x)?;
    Ok((data, spec.true_params()))
}
