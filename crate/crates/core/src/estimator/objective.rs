//! Sample objectives for the two estimation steps.
//!
//! Two routes are kept deliberately separate: the `*_objective`, [`xi`] and
//! [`varsigma`] functions evaluate the formulas directly from the panel,
//! while [`beta_terms`] and [`gamma_terms`] flatten the same sums into term
//! lists for the sweep maximizers. Tests check one against the other.

use crate::panel::PanelDataset;
use crate::sum::pairwise_sum_by;

use super::ObjectiveVariant;

/// `sgn(0) = 0`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn ind(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Epanechnikov kernel `¾(1 − u²)·1[|u| ≤ 1]`.
#[inline]
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `𝒦_h(v) = h⁻¹ 𝒦(v / h)`.
#[inline]
pub fn kernel_h(v: f64, h: f64) -> f64 {
    epanechnikov(v / h) / h
}

fn dy(data: &PanelDataset, i: usize, t: usize, s: usize) -> f64 {
    (data.yi(i, t) - data.yi(i, s)) as f64
}

/// Pairs `(s, t)` entering the β objective, with the matching condition on
/// outcomes already applied by the caller.
fn beta_pairs(t_max: usize, variant: ObjectiveVariant) -> Vec<(usize, usize)> {
    match variant {
        // 1[y_{t-1} = y_{t+1} = y_{t+3}] (y_{t+2} − y_t) sgn((x_{t+2} − x_t)'b), t = 1..T-3
        ObjectiveVariant::AdjacentOnly | ObjectiveVariant::Combined => (1..=t_max - 3).map(|t| (t, t + 2)).collect(),
        // 1[y_{s-1} = y_{t-1}] 1[y_{s+1} = y_{t+1}] (y_t − y_s) sgn((x_t − x_s)'b), t > s + 1
        ObjectiveVariant::GeneralT => {
            let mut v = Vec::new();
            for s in 1..t_max {
                for t in s + 2..t_max {
                    v.push((s, t));
                }
            }
            v
        }
    }
}

/// Switch factor of a β pair: `(y_t − y_s)` times the outcome matching
/// indicators, so nonzero only for switchers.
fn beta_factor(data: &PanelDataset, i: usize, s: usize, t: usize) -> f64 {
    if data.y(i, s - 1) == data.y(i, t - 1) && data.y(i, s + 1) == data.y(i, t + 1) {
        dy(data, i, t, s)
    } else {
        0.0
    }
}

/// Contribution of individual `i` to `n·Q₁ₙ(b)`.
pub fn q1_term(data: &PanelDataset, variant: ObjectiveVariant, i: usize, b: &[f64]) -> f64 {
    beta_pairs(data.t_max(), variant)
        .into_iter()
        .map(|(s, t)| {
            let f = beta_factor(data, i, s, t);
            if f == 0.0 {
                0.0
            } else {
                f * sgn(data.index_diff(i, t, s, b))
            }
        })
        .sum()
}

/// `Q₁ₙ(b)`. For `T = 4` this is
/// `n⁻¹ Σ 1[y₀ = y₂ = y₄](y₃ − y₁) sgn(x₃₁'b)`.
pub fn q1_objective_with(data: &PanelDataset, variant: ObjectiveVariant, b: &[f64]) -> f64 {
    pairwise_sum_by(data.n(), &|i| q1_term(data, variant, i, b)) / data.n() as f64
}

/// `ξ_i(b)` with the reference term at the unknown truth dropped:
/// `Σ (y_t − y_s)·[matching]·1[(x_t − x_s)'b > 0]`.
pub fn xi_with(data: &PanelDataset, variant: ObjectiveVariant, i: usize, b: &[f64]) -> f64 {
    beta_pairs(data.t_max(), variant)
        .into_iter()
        .map(|(s, t)| {
            let f = beta_factor(data, i, s, t);
            if f == 0.0 {
                0.0
            } else {
                f * ind(data.index_diff(i, t, s, b))
            }
        })
        .sum()
}

/// One γ-step summand: `weight(b) · switch · step(index(b) + r·lag)`.
struct GammaPiece {
    /// Periods whose index difference feeds the kernel: `(x_hi − x_lo)'b`.
    kernel: (usize, usize),
    /// Periods of the switch factor `(y_t − y_s)`.
    switch: (usize, usize),
    /// Periods of the index inside the sign: `(x_t − x_s)'b`.
    index: (usize, usize),
    /// Periods of the lag difference multiplying `r`.
    lag: (usize, usize),
    /// Extra outcome match required (`y_a = y_b`), if any.
    matching: Option<(usize, usize)>,
}

fn gamma_pieces(t_max: usize, variant: ObjectiveVariant) -> Vec<GammaPiece> {
    let mut v = Vec::new();
    // adjacent: 𝒦_h((x_{t+1} − x_t)'b)(y_t − y_{t−1}) sgn((x_t − x_{t−1})'b + r(y_{t+1} − y_{t−2})), t = 2..T−1
    for t in 2..t_max {
        v.push(GammaPiece {
            kernel: (t + 1, t),
            switch: (t, t - 1),
            index: (t, t - 1),
            lag: (t + 1, t - 2),
            matching: None,
        });
    }
    if matches!(variant, ObjectiveVariant::Combined | ObjectiveVariant::GeneralT) {
        // 1[y_{s+1} = y_{t+1}] 𝒦_h((x_{t+1} − x_{s+1})'b)(y_t − y_s) sgn((x_t − x_s)'b + r(y_{t−1} − y_{s−1}))
        for s in 1..t_max.saturating_sub(2) {
            for t in s + 2..t_max {
                v.push(GammaPiece {
                    kernel: (t + 1, s + 1),
                    switch: (t, s),
                    index: (t, s),
                    lag: (t - 1, s - 1),
                    matching: Some((s + 1, t + 1)),
                });
            }
        }
    }
    v
}

fn piece_parts(data: &PanelDataset, i: usize, p: &GammaPiece, b: &[f64], h: f64) -> Option<(f64, f64, f64)> {
    if let Some((a, c)) = p.matching {
        if data.y(i, a) != data.y(i, c) {
            return None;
        }
    }
    let switch = dy(data, i, p.switch.0, p.switch.1);
    if switch == 0.0 {
        return None;
    }
    let w = kernel_h(data.index_diff(i, p.kernel.0, p.kernel.1, b), h);
    if w == 0.0 {
        return None;
    }
    let index = data.index_diff(i, p.index.0, p.index.1, b);
    let lag = dy(data, i, p.lag.0, p.lag.1);
    Some((w * switch, index, lag))
}

/// Contribution of individual `i` to `n·Q₂ₙᴷ(r; b)`.
pub fn q2_term(data: &PanelDataset, variant: ObjectiveVariant, i: usize, r: f64, b: &[f64], h: f64) -> f64 {
    gamma_pieces(data.t_max(), variant)
        .iter()
        .filter_map(|p| piece_parts(data, i, p, b, h))
        .map(|(w, index, lag)| w * sgn(index + r * lag))
        .sum()
}

pub fn q2_kernel_objective_with(data: &PanelDataset, variant: ObjectiveVariant, r: f64, b: &[f64], h: f64) -> f64 {
    pairwise_sum_by(data.n(), &|i| q2_term(data, variant, i, r, b, h)) / data.n() as f64
}

/// `ς_ni(r, b)` with the reference indicators at the truth dropped.
pub fn varsigma_with(data: &PanelDataset, variant: ObjectiveVariant, i: usize, r: f64, b: &[f64], h: f64) -> f64 {
    gamma_pieces(data.t_max(), variant)
        .iter()
        .filter_map(|p| piece_parts(data, i, p, b, h))
        .map(|(w, index, lag)| w * ind(index + r * lag))
        .sum()
}

/// Flattened β-step summand: `sign · step(v'b)` for individual `individual`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTerm {
    pub individual: usize,
    pub sign: f64,
    pub v: Vec<f64>,
}

pub fn beta_terms(data: &PanelDataset, variant: ObjectiveVariant) -> Vec<BetaTerm> {
    let pairs = beta_pairs(data.t_max(), variant);
    let mut out = Vec::new();
    for i in 0..data.n() {
        for &(s, t) in &pairs {
            let f = beta_factor(data, i, s, t);
            if f != 0.0 {
                out.push(BetaTerm { individual: i, sign: f, v: data.x_diff(i, t, s) });
            }
        }
    }
    out
}

/// Flattened γ-step summand at fixed `b`:
/// `weight · step(index + r·lag)`, `weight = 𝒦_h(·)·(y_t − y_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTerm {
    pub individual: usize,
    pub weight: f64,
    pub index: f64,
    pub lag: i8,
}

/// γ-step terms at `b`. Terms with a zero switch factor or a vanishing
/// kernel weight are omitted.
pub fn gamma_terms(data: &PanelDataset, variant: ObjectiveVariant, b: &[f64], h: f64) -> Vec<GammaTerm> {
    let pieces = gamma_pieces(data.t_max(), variant);
    let mut out = Vec::new();
    for i in 0..data.n() {
        for p in &pieces {
            if let Some((w, index, lag)) = piece_parts(data, i, p, b, h) {
                out.push(GammaTerm { individual: i, weight: w, index, lag: lag as i8 });
            }
        }
    }
    out
}

/// Number of individuals with at least one γ-step summand that depends on
/// `r` (switch factor and lag difference both nonzero), ignoring kernels.
pub fn gamma_effective(data: &PanelDataset, variant: ObjectiveVariant) -> usize {
    let pieces = gamma_pieces(data.t_max(), variant);
    (0..data.n())
        .filter(|&i| {
            pieces.iter().any(|p| {
                p.matching.is_none_or(|(a, c)| data.y(i, a) == data.y(i, c))
                    && dy(data, i, p.switch.0, p.switch.1) != 0.0
                    && dy(data, i, p.lag.0, p.lag.1) != 0.0
            })
        })
        .count()
}

pub fn beta_effective(data: &PanelDataset, variant: ObjectiveVariant) -> usize {
    let pairs = beta_pairs(data.t_max(), variant);
    (0..data.n()).filter(|&i| pairs.iter().any(|&(s, t)| beta_factor(data, i, s, t) != 0.0)).count()
}
