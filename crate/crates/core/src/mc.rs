//! Replicated Monte Carlo experiments and their summary tables.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{simulate, DgpSpec};
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimationConfig};
use crate::inference::{bootstrap, BootstrapConfig, BootstrapMethod};
use crate::rng::{derive_seed, domain};

/// Largest share of failed replications tolerated.
pub const MAX_FAILURE_SHARE: f64 = 0.05;

/// Tuning-constant sweep used by the full tables.
pub const C_SWEEP: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];

/// Centre of the MAD statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MadCenter {
    /// Median of `|θ̂ − θ|`.
    #[default]
    Truth,
    /// Median of `|θ̂ − median(θ̂)|`.
    Median,
}

/// Bootstrap part of a plan: every method is run at every `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McBootstrap {
    pub methods: Vec<BootstrapMethod>,
    pub c_values: Vec<f64>,
    /// Template for B, alpha, m and overrides; `method`, `c` and `seed` are
    /// set per cell and replication.
    pub base: BootstrapConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    pub design: DgpSpec,
    pub n: usize,
    pub replications: usize,
    pub estimation: EstimationConfig,
    pub bootstrap: Option<McBootstrap>,
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    pub mad_center: MadCenter,
}

impl McPlan {
    pub fn new(design: DgpSpec, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            design,
            n,
            replications,
            estimation: EstimationConfig::default(),
            bootstrap: None,
            seed,
            workers: 0,
            mad_center: MadCenter::Truth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        self.design.validate()?;
        self.estimation.validate()?;
        if let Some(bs) = &self.bootstrap {
            if bs.methods.is_empty() || bs.c_values.is_empty() {
                return Err(Error::InvalidConfig("bootstrap needs at least one method and one c value".into()));
            }
            for &method in &bs.methods {
                for &c in &bs.c_values {
                    BootstrapConfig { method, c, ..bs.base.clone() }.validate(self.n)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub mad: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub name: String,
    pub coverage: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub method: BootstrapMethod,
    pub c: f64,
    /// Replications whose bootstrap succeeded.
    pub completed: usize,
    pub failures: usize,
    pub params: Vec<CoverageSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub design: String,
    pub n: usize,
    pub replications: usize,
    pub completed: usize,
    pub failures: usize,
    pub mad_center: MadCenter,
    pub params: Vec<ParamSummary>,
    pub inference: Vec<InferenceSummary>,
}

impl McSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn inference_for(&self, method: BootstrapMethod, c: f64) -> Option<&InferenceSummary> {
        self.inference.iter().find(|s| s.method == method && s.c == c)
    }
}

/// Names of the reported coordinates: `β₂..β_K` and `γ`. `β₁` is determined
/// by the others through the unit norm.
pub fn free_parameter_names(k: usize) -> Vec<String> {
    let mut v: Vec<String> = (2..=k).map(|j| format!("beta{j}")).collect();
    if k == 1 {
        v.push("beta1".into());
    }
    v.push("gamma".into());
    v
}

fn free_coordinates(beta: &[f64], gamma: f64) -> Vec<f64> {
    let mut v: Vec<f64> = if beta.len() == 1 { beta.to_vec() } else { beta[1..].to_vec() };
    v.push(gamma);
    v
}

struct Replication {
    estimate: Vec<f64>,
    /// Per inference cell: per-parameter CI, or `None` if the bootstrap failed.
    intervals: Vec<Option<Vec<(f64, f64)>>>,
}

fn cells(plan: &McPlan) -> Vec<(BootstrapMethod, f64)> {
    plan.bootstrap
        .as_ref()
        .map(|bs| bs.methods.iter().flat_map(|&m| bs.c_values.iter().map(move |&c| (m, c))).collect())
        .unwrap_or_default()
}

fn replicate(plan: &McPlan, r: usize) -> Result<Replication> {
    let seed = derive_seed(plan.seed, domain::REPLICATION, r as u64);
    let (data, _) = simulate(&plan.design, plan.n, seed)?;
    let est = estimate(&data, &plan.estimation)?;
    let mut intervals = Vec::new();
    if let Some(bs) = &plan.bootstrap {
        let boot_seed = derive_seed(plan.seed, domain::BOOTSTRAP, r as u64);
        for (method, c) in cells(plan) {
            let cfg = BootstrapConfig { method, c, seed: boot_seed, ..bs.base.clone() };
            intervals.push(bootstrap(&data, &est, &plan.estimation, &cfg).ok().map(|res| {
                let k = res.beta_ci.len();
                let mut ci: Vec<(f64, f64)> = if k == 1 { res.beta_ci.clone() } else { res.beta_ci[1..].to_vec() };
                ci.push(res.gamma_ci);
                ci
            }));
        }
    }
    Ok(Replication { estimate: free_coordinates(&est.params.beta, est.params.gamma), intervals })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Runs `plan.replications` replications in parallel. Replication `r` uses
/// seeds derived from `(plan.seed, r)` only, so results do not depend on the
/// worker count.
pub fn run_monte_carlo(plan: &McPlan) -> Result<McSummary> {
    plan.validate()?;
    let results: Vec<Result<Replication>> =
        crate::with_workers(plan.workers, || (0..plan.replications).into_par_iter().map(|r| replicate(plan, r + 1)).collect());
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut first_err = None;
    for res in results {
        match res {
            Ok(rep) => ok.push(rep),
            Err(e) => {
                first_err.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let failed = total - ok.len();
    if failed as f64 > MAX_FAILURE_SHARE * total as f64 || ok.is_empty() {
        return Err(Error::TooManyFailures { failed, total, first: first_err.unwrap_or_default() });
    }

    let truth = plan.design.true_params();
    let truth_free = free_coordinates(&truth.beta_normalized, truth.gamma_normalized);
    let names = free_parameter_names(plan.design.k());
    let m = ok.len() as f64;
    let params = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let est: Vec<f64> = ok.iter().map(|r| r.estimate[j]).collect();
            let t = truth_free[j];
            let mean = est.iter().sum::<f64>() / m;
            let center = match plan.mad_center {
                MadCenter::Truth => t,
                MadCenter::Median => median(est.clone()),
            };
            let mad = median(est.iter().map(|e| (e - center).abs()).collect());
            let rmse = (est.iter().map(|e| (e - t) * (e - t)).sum::<f64>() / m).sqrt();
            ParamSummary { name: name.clone(), truth: t, mean, bias: mean - t, mad, rmse }
        })
        .collect();

    let inference = cells(plan)
        .into_iter()
        .enumerate()
        .map(|(cell, (method, c))| {
            let done: Vec<&Vec<(f64, f64)>> = ok.iter().filter_map(|r| r.intervals[cell].as_ref()).collect();
            let k = done.len() as f64;
            let params = names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let t = truth_free[j];
                    let (covered, length) = done.iter().fold((0usize, 0.0), |(cv, len), ci| {
                        let (lo, hi) = ci[j];
                        (cv + usize::from(lo <= t && t <= hi), len + (hi - lo))
                    });
                    let (coverage, length) = if done.is_empty() { (f64::NAN, f64::NAN) } else { (covered as f64 / k, length / k) };
                    CoverageSummary { name: name.clone(), coverage, length }
                })
                .collect();
            InferenceSummary { method, c, completed: done.len(), failures: ok.len() - done.len(), params }
        })
        .collect();

    Ok(McSummary {
        design: format!("{:?}", plan.design.design_id),
        n: plan.n,
        replications: total,
        completed: ok.len(),
        failures: failed,
        mad_center: plan.mad_center,
        params,
        inference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown table format '{other}'"))),
        }
    }
}

/// One row of the long-format table shared by the csv and json renders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub design: String,
    pub n: usize,
    /// Empty for point-estimation rows.
    pub method: String,
    pub c: Option<f64>,
    pub statistic: String,
    pub parameter: String,
    pub value: f64,
}

/// Flattens summaries into long-format rows.
pub fn table_rows(summaries: &[McSummary]) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for s in summaries {
        for p in &s.params {
            for (stat, value) in [("MEAN", p.mean), ("BIAS", p.bias), ("MAD", p.mad), ("RMSE", p.rmse)] {
                rows.push(TableRow {
                    design: s.design.clone(),
                    n: s.n,
                    method: String::new(),
                    c: None,
                    statistic: stat.into(),
                    parameter: p.name.clone(),
                    value,
                });
            }
        }
        for inf in &s.inference {
            for p in &inf.params {
                for (stat, value) in [("COVERAGE", p.coverage), ("LENGTH", p.length)] {
                    rows.push(TableRow {
                        design: s.design.clone(),
                        n: s.n,
                        method: inf.method.name().into(),
                        c: Some(inf.c),
                        statistic: stat.into(),
                        parameter: p.name.clone(),
                        value,
                    });
                }
            }
        }
    }
    rows
}

/// Renders summaries (typically one per sample size) as a table. Text puts
/// sample sizes side by side with MEAN/BIAS/MAD/RMSE rows, followed by one
/// COVERAGE/LENGTH block per bootstrap method when any were run.
pub fn emit_table(summaries: &[McSummary], format: TableFormat) -> String {
    match format {
        TableFormat::Json => serde_json::to_string_pretty(&table_rows(summaries)).unwrap_or_default(),
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in table_rows(summaries) {
                // Writing to memory cannot fail.
                let _ = w.serialize(row);
            }
            String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
        }
        TableFormat::Text => render_text(summaries),
    }
}

fn render_text(summaries: &[McSummary]) -> String {
    let mut out = String::new();
    let Some(first) = summaries.first() else { return out };
    let names: Vec<String> = first.params.iter().map(|p| p.name.clone()).collect();
    let width = 10;
    let label = 18;
    let block = width * names.len();
    let _ = writeln!(out, "{}: performance of the estimators", first.design);
    let _ = write!(out, "{:label$}", "");
    for s in summaries {
        let _ = write!(out, "{:>block$}", format!("n={}", s.n));
    }
    out.push('\n');
    let header = |out: &mut String| {
        let _ = write!(out, "{:label$}", "");
        for _ in summaries {
            for name in &names {
                let _ = write!(out, "{name:>width$}");
            }
        }
        out.push('\n');
    };
    header(&mut out);
    for stat in ["MEAN", "BIAS", "MAD", "RMSE"] {
        let _ = write!(out, "{stat:label$}");
        for s in summaries {
            for p in &s.params {
                let v = match stat {
                    "MEAN" => p.mean,
                    "BIAS" => p.bias,
                    "MAD" => p.mad,
                    _ => p.rmse,
                };
                let _ = write!(out, "{v:>width$.3}");
            }
        }
        out.push('\n');
    }

    let mut methods: Vec<BootstrapMethod> = Vec::new();
    for inf in summaries.iter().flat_map(|s| &s.inference) {
        if !methods.contains(&inf.method) {
            methods.push(inf.method);
        }
    }
    for method in methods {
        let _ = writeln!(out, "\n{} bootstrap", method.name());
        header(&mut out);
        let mut cs: Vec<f64> = Vec::new();
        for inf in summaries.iter().flat_map(|s| &s.inference).filter(|i| i.method == method) {
            if !cs.contains(&inf.c) {
                cs.push(inf.c);
            }
        }
        for c in cs {
            for stat in ["COVERAGE", "LENGTH"] {
                let _ = write!(out, "{:label$}", format!("c={c} {stat}"));
                for s in summaries {
                    match s.inference_for(method, c) {
                        Some(inf) => {
                            for p in &inf.params {
                                let v = if stat == "COVERAGE" { p.coverage } else { p.length };
                                let _ = write!(out, "{v:>width$.3}");
                            }
                        }
                        None => {
                            let _ = write!(out, "{:>block$}", "");
                        }
                    }
                }
                out.push('\n');
            }
        }
    }
    let failures: usize = summaries.iter().map(|s| s.failures).sum();
    if failures > 0 {
        let _ = writeln!(out, "\n{failures} replication(s) failed and were excluded");
    }
    out
}
