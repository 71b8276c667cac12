//! Two-step maximum score estimation for dynamic binary-choice panel data
//! models with individual fixed effects and a lagged dependent variable.
//!
//! The model is `y_it = 1[x_it'β + γ y_i,t-1 + α_i − ε_it > 0]` for
//! `t = 1..T`, with `y_i0` observed. `β` is identified up to scale, so it is
//! normalized to the unit sphere.
//!
//! * [`panel`] holds the balanced-panel container, CSV I/O and switcher counts.
//! * [`dgp`] simulates the three benchmark Monte Carlo designs.
//! * [`estimator`] builds the sample objectives and maximizes them exactly
//!   (K = 2 and the 1-D γ step) or by grid plus great-circle search (K ≥ 3).
//! * [`inference`] runs the numerical, modified-objective, m-out-of-n and
//!   classic bootstraps.
//! * [`mc`] replicates designs and summarizes MEAN/BIAS/MAD/RMSE and coverage.
//! * [`identify`] checks the identifying inequality and population maximizers
//!   by large-sample simulation.

pub mod cli;
pub mod dgp;
pub mod error;
pub mod estimator;
pub mod identify;
pub mod inference;
pub mod mc;
pub mod panel;
pub mod rng;
pub mod sum;

pub use dgp::{simulate, Design, DgpSpec, TrueParams};
pub use error::{Error, Result};
pub use estimator::{
    bandwidth, epanechnikov, estimate, estimate_beta, estimate_gamma, q1_objective,
    q2_kernel_objective, varsigma, xi, Bandwidth, EstimateResult, EstimationConfig,
    ObjectiveVariant,
};
pub use inference::{bootstrap, quantile, BootstrapConfig, BootstrapMethod, BootstrapResult, CurvatureEstimates};
pub use panel::{switcher_counts, ModelParams, PanelDataset};

/// Runs `f` inside a rayon pool with `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
