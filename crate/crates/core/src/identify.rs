//! Large-sample checks of the population identification results on
//! simulated designs, using the true β.

use serde::{Deserialize, Serialize};

use crate::dgp::{simulate, DgpSpec};
use crate::error::{Error, Result};
use crate::estimator::{bandwidth, direction_grid, gamma_step_terms, objective, sweep, ObjectiveVariant};
use crate::panel::MIN_ESTIMATION_PERIODS;

/// Fewer conditioning observations than this is an error.
pub const MIN_MASS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Share of `y₃ = 1` in the bin.
    pub p3: f64,
    /// Share of `y₁ = 1` in the bin.
    pub p1: f64,
    /// `None` when the bin is exempt (straddles zero or is too small).
    pub agree: Option<bool>,
}

impl InequalityBin {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub bins: Vec<InequalityBin>,
    pub conditioning_count: usize,
    pub min_bin: usize,
    /// Agreeing bins over non-exempt bins (1 when every bin is exempt).
    pub agreement_rate: f64,
}

/// Among individuals with `y₀ = y₂ = y₄`, compares `P(y₃ = 1)` and
/// `P(y₁ = 1)` within quantile bins of `d = (x₃ − x₁)'β`. The inequality
/// predicts `p₃ > p₁` where `d > 0` and the reverse where `d < 0`.
pub fn check_identifying_inequality(
    spec: &DgpSpec,
    n_large: usize,
    bins: usize,
    min_bin: usize,
    seed: u64,
) -> Result<InequalityReport> {
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be positive".into()));
    }
    if spec.t_max < MIN_ESTIMATION_PERIODS {
        return Err(Error::PanelTooShort { t_max: spec.t_max, required: MIN_ESTIMATION_PERIODS });
    }
    let (data, truth) = simulate(spec, n_large, seed)?;
    let beta = &truth.beta_normalized;
    let mut obs: Vec<(f64, u8, u8)> = (0..data.n())
        .filter(|&i| data.y(i, 0) == data.y(i, 2) && data.y(i, 2) == data.y(i, 4))
        .map(|i| (data.index_diff(i, 3, 1, beta), data.y(i, 3), data.y(i, 1)))
        .collect();
    if obs.len() < MIN_MASS {
        return Err(Error::InsufficientMass { count: obs.len(), required: MIN_MASS });
    }
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = obs.len();
    let mut out = Vec::with_capacity(bins);
    let mut start = 0;
    for j in 0..bins {
        let end = total * (j + 1) / bins;
        let chunk = &obs[start..end];
        start = end;
        if chunk.is_empty() {
            continue;
        }
        let count = chunk.len();
        let p3 = chunk.iter().filter(|o| o.1 == 1).count() as f64 / count as f64;
        let p1 = chunk.iter().filter(|o| o.2 == 1).count() as f64 / count as f64;
        let (lo, hi) = (chunk[0].0, chunk[count - 1].0);
        let straddles = lo <= 0.0 && hi >= 0.0;
        let agree = if straddles || count < min_bin {
            None
        } else {
            let mid = 0.5 * (lo + hi);
            Some((p3 - p1).signum() == mid.signum() && p3 != p1)
        };
        out.push(InequalityBin { lo, hi, count, p3, p1, agree });
    }
    let judged: Vec<bool> = out.iter().filter_map(|b| b.agree).collect();
    let agreement_rate =
        if judged.is_empty() { 1.0 } else { judged.iter().filter(|&&a| a).count() as f64 / judged.len() as f64 };
    Ok(InequalityReport { bins: out, conditioning_count: total, min_bin, agreement_rate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerReport {
    pub beta_true: Vec<f64>,
    pub gamma_true: f64,
    pub beta_argmax: Vec<f64>,
    pub beta_value: f64,
    /// Angle in radians between the grid argmax and the true β.
    pub beta_angle: f64,
    pub gamma_argmax: f64,
    pub gamma_value: f64,
    pub gamma_distance: f64,
    pub h: f64,
}

/// Evaluates `Q₁ₙ` on `beta_points` grid directions and `Q₂ₙᴷ(·; β)` at the
/// true β on `gamma_grid = (lo, hi, step)`, reporting the grid argmax of each.
/// Ties keep the first grid point. `h` defaults to `bandwidth(n_large)`.
pub fn check_population_maximizers(
    spec: &DgpSpec,
    n_large: usize,
    beta_points: usize,
    gamma_grid: (f64, f64, f64),
    h: Option<f64>,
    seed: u64,
) -> Result<MaximizerReport> {
    let (lo, hi, step) = gamma_grid;
    if !(step > 0.0 && lo <= hi) || beta_points == 0 {
        return Err(Error::InvalidConfig(format!("bad grids: {beta_points} directions, gamma ({lo}, {hi}, {step})")));
    }
    if spec.t_max < MIN_ESTIMATION_PERIODS {
        return Err(Error::PanelTooShort { t_max: spec.t_max, required: MIN_ESTIMATION_PERIODS });
    }
    let (data, truth) = simulate(spec, n_large, seed)?;
    let variant = ObjectiveVariant::AdjacentOnly;
    let mass = objective::beta_effective(&data, variant);
    if mass < MIN_MASS {
        return Err(Error::InsufficientMass { count: mass, required: MIN_MASS });
    }
    let gmass = objective::gamma_effective(&data, variant);
    if gmass < MIN_MASS {
        return Err(Error::InsufficientMass { count: gmass, required: MIN_MASS });
    }
    let nf = data.n() as f64;

    let terms = objective::beta_terms(&data, variant);
    let q1 = |b: &[f64]| {
        terms.iter().map(|t| t.sign * objective::sgn(t.v.iter().zip(b).map(|(v, c)| v * c).sum())).sum::<f64>() / nf
    };
    let mut beta_argmax = Vec::new();
    let mut beta_value = f64::NEG_INFINITY;
    for b in direction_grid(data.k(), beta_points, seed) {
        let v = q1(&b);
        if v > beta_value {
            beta_value = v;
            beta_argmax = b;
        }
    }
    let cos = beta_argmax.iter().zip(&truth.beta_normalized).map(|(a, b)| a * b).sum::<f64>();
    let beta_angle = cos.clamp(-1.0, 1.0).acos();

    let h = h.unwrap_or_else(|| bandwidth(data.n()));
    let gterms = objective::gamma_terms(&data, variant, &truth.beta_normalized, h);
    // sgn(a + r·d) = 2·1[d(r + a·d) > 0] − 1, and terms with d = 0 are constant in r.
    let steps = gamma_step_terms(&gterms, |_| 2.0 / nf);
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let mut gamma_argmax = lo;
    let mut best = f64::NEG_INFINITY;
    for j in 0..count {
        let r = lo + j as f64 * step;
        let v = sweep::line_step_value(&steps, r);
        if v > best {
            best = v;
            gamma_argmax = r;
        }
    }
    let gamma_value = objective::q2_kernel_objective_with(&data, variant, gamma_argmax, &truth.beta_normalized, h);
    Ok(MaximizerReport {
        beta_true: truth.beta_normalized.clone(),
        gamma_true: truth.gamma_normalized,
        beta_argmax,
        beta_value,
        beta_angle,
        gamma_argmax,
        gamma_value,
        gamma_distance: (gamma_argmax - truth.gamma_normalized).abs(),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_sample_lacks_mass() {
        let spec = DgpSpec::from_number(1).unwrap();
        assert!(matches!(check_identifying_inequality(&spec, 50, 5, 1, 1), Err(Error::InsufficientMass { .. })));
        assert!(matches!(
            check_population_maximizers(&spec, 50, 36, (-3.0, 3.0, 0.1), None, 1),
            Err(Error::InsufficientMass { .. })
        ));
    }

    #[test]
    fn bins_partition_the_conditioning_set() {
        let spec = DgpSpec::from_number(1).unwrap();
        let rep = check_identifying_inequality(&spec, 20_000, 10, 50, 3).unwrap();
        assert_eq!(rep.bins.iter().map(|b| b.count).sum::<usize>(), rep.conditioning_count);
        for w in rep.bins.windows(2) {
            assert!(w[0].hi <= w[1].lo);
        }
        for b in &rep.bins {
            assert!((0.0..=1.0).contains(&b.p3) && (0.0..=1.0).contains(&b.p1));
            if b.lo <= 0.0 && b.hi >= 0.0 {
                assert!(b.agree.is_none());
            }
        }
    }
}
