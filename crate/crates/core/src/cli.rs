//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dgp::{simulate, Design, DgpSpec};
use crate::error::{Error, ErrorClass, Result};
use crate::estimator::{estimate, Bandwidth, BetaGrid, EstimationConfig, ObjectiveVariant};
use crate::identify::{check_identifying_inequality, check_population_maximizers};
use crate::inference::{bootstrap, BootstrapConfig, BootstrapMethod};
use crate::mc::{emit_table, run_monte_carlo, MadCenter, McBootstrap, McPlan, TableFormat};
use crate::panel::{switcher_counts, PanelDataset};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const SUBCOMMANDS: [&str; 5] = ["simulate", "estimate", "bootstrap", "montecarlo", "identify-check"];

#[derive(Debug, Parser)]
#[command(name = "dynpanel", version, about = "Two-step maximum score estimation for dynamic binary-choice panels")]
#[command(args_override_self = true)]
struct Cli {
    /// Key-value file (`key = value` per line) supplying default flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "DYNPANEL_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Also write the result as JSON.
    #[arg(long, global = true, value_name = "PATH")]
    out_json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a benchmark design and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate (β, γ) from a CSV panel.
    Estimate(EstimateArgs),
    /// Estimate and build bootstrap confidence intervals.
    Bootstrap(BootstrapArgs),
    /// Replicate a design and tabulate estimator and CI performance.
    Montecarlo(MonteCarloArgs),
    /// Check the identifying inequality (and optionally population maximizers).
    IdentifyCheck(IdentifyArgs),
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Benchmark design (1, 2 or 3).
    #[arg(long, default_value_t = 1)]
    design: u32,
    /// Custom coefficients, comma separated; turns the design into a custom one.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    t_max: Option<usize>,
}

impl DesignArgs {
    fn spec(&self) -> Result<DgpSpec> {
        let mut spec = DgpSpec::from_number(self.design)?;
        if self.beta.is_some() || self.gamma.is_some() || self.t_max.is_some() {
            spec.design_id = Design::Custom;
            if let Some(b) = &self.beta {
                spec.beta_raw = b.clone();
            }
            if let Some(g) = self.gamma {
                spec.gamma_raw = g;
            }
            if let Some(t) = self.t_max {
                spec.t_max = t;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimationArgs {
    /// adjacent, combined or general.
    #[arg(long, default_value = "adjacent")]
    variant: String,
    /// `paper` (n^{-1/4}/ln n) or `fixed` (requires --h).
    #[arg(long)]
    bandwidth_rule: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    gamma_lo: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    gamma_hi: f64,
    /// Grid points per level of the K ≥ 3 β search.
    #[arg(long, default_value_t = BetaGrid::default().points_per_level)]
    grid_points: usize,
    #[arg(long, default_value_t = BetaGrid::default().levels)]
    grid_levels: usize,
}

impl EstimationArgs {
    fn config(&self, seed: u64) -> Result<EstimationConfig> {
        let bandwidth = match (self.bandwidth_rule.as_deref(), self.h) {
            (Some("paper"), Some(_)) => {
                return Err(Error::InvalidConfig("--h cannot be combined with --bandwidth-rule paper".into()))
            }
            (Some("paper") | None, None) => Bandwidth::PaperDefault,
            (Some("fixed") | None, Some(h)) => Bandwidth::Fixed(h),
            (Some("fixed"), None) => return Err(Error::InvalidConfig("--bandwidth-rule fixed requires --h".into())),
            (Some(other), _) => return Err(Error::InvalidConfig(format!("unknown bandwidth rule '{other}'"))),
        };
        let cfg = EstimationConfig {
            bandwidth,
            gamma_bounds: (self.gamma_lo, self.gamma_hi),
            beta_grid: BetaGrid { points_per_level: self.grid_points, levels: self.grid_levels },
            objective_variant: self.variant.parse::<ObjectiveVariant>()?,
            seed,
            ..EstimationConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    estimation: EstimationArgs,
}

#[derive(Debug, Args)]
struct BootstrapFlags {
    /// Bootstrap draws.
    #[arg(long = "B", default_value_t = 199)]
    b_draws: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Resample size for the m-out-of-n method.
    #[arg(long)]
    m: Option<usize>,
    /// Fixed ε for the numerical bootstrap instead of the rate rule.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    omega_beta: Option<f64>,
    #[arg(long)]
    omega_gamma: Option<f64>,
}

impl BootstrapFlags {
    fn config(&self, method: BootstrapMethod, c: f64, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            method,
            b_draws: self.b_draws,
            c,
            m: self.m,
            alpha: self.alpha,
            seed,
            epsilon: self.epsilon,
            omega_beta: self.omega_beta,
            omega_gamma: self.omega_gamma,
        }
    }
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// numerical, modified, mn or classic.
    #[arg(long, default_value = "numerical")]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    flags: BootstrapFlags,
    /// Include every bootstrap draw in the JSON output.
    #[arg(long)]
    dump_draws: bool,
    #[command(flatten)]
    estimation: EstimationArgs,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Sample sizes, comma separated; one table column block each.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bootstrap methods to run per replication, comma separated.
    #[arg(long, value_delimiter = ',')]
    bootstrap: Vec<String>,
    /// Tuning constants for the bootstrap rules.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    c_sweep: Vec<f64>,
    #[command(flatten)]
    flags: BootstrapFlags,
    /// truth or median.
    #[arg(long, default_value = "truth")]
    mad_center: String,
    /// Table destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// text, csv or json; inferred from the --out extension when absent.
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    estimation: EstimationArgs,
}

#[derive(Debug, Args)]
struct IdentifyArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 500_000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 500)]
    min_bin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also grid-maximize the sample objectives at large n.
    #[arg(long)]
    maximizers: bool,
    #[arg(long, default_value_t = 360)]
    beta_points: usize,
    #[arg(long, default_value_t = 0.01)]
    gamma_step: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    gamma_lo: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    gamma_hi: f64,
    /// Kernel bandwidth for the γ objective; defaults to the n^{-1/4}/ln n rule.
    #[arg(long)]
    h: Option<f64>,
}

/// Reads `key = value` lines (blank lines and `#` comments ignored) into
/// `--key value` arguments. `true` becomes a bare flag and `false` is dropped.
fn config_args(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected key = value".into(),
            });
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            continue;
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts config-file arguments right after the subcommand so that the
/// user's own flags, which follow, override them.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = find_config(&args) else { return Ok(args) };
    let extra = config_args(&path)?;
    let pos = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let Some(pos) = pos else { return Ok(args) };
    let mut merged = args[..=pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}

fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let workers = cli.workers;
    match crate::with_workers(workers, || dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_json(path: &Option<PathBuf>, value: &impl Serialize) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(format!("serializing output: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.clone(), source })
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => {
            let spec = a.design.spec()?;
            let (data, truth) = simulate(&spec, a.n, a.seed)?;
            data.save_csv(&a.out)?;
            let (sb, sg) = switcher_counts(&data)?;
            println!("wrote {} individuals x {} periods to {}", data.n(), data.t_max() + 1, a.out.display());
            println!("true beta (normalized): [{}]", fmt_vec(&truth.beta_normalized));
            println!("true gamma (normalized): {:.6}", truth.gamma_normalized);
            println!("beta switchers: {sb}, gamma switchers: {sg}");
            #[derive(Serialize)]
            struct Out<'a> {
                spec: &'a DgpSpec,
                n: usize,
                seed: u64,
                truth: &'a crate::dgp::TrueParams,
                beta_switchers: usize,
                gamma_switchers: usize,
            }
            write_json(
                &cli.out_json,
                &Out { spec: &spec, n: a.n, seed: a.seed, truth: &truth, beta_switchers: sb, gamma_switchers: sg },
            )
        }
        Command::Estimate(a) => {
            let cfg = a.estimation.config(a.seed)?;
            let data = PanelDataset::load_csv(&a.data)?;
            let est = estimate(&data, &cfg)?;
            println!("beta:  [{}]", fmt_vec(&est.params.beta));
            println!("gamma: {:.6}", est.params.gamma);
            println!("Q1n: {:.6}  Q2n: {:.6}  h: {:.6}", est.q1_value, est.q2_value, est.h_used);
            println!("effective individuals: beta {}, gamma {}", est.beta_effective, est.gamma_effective);
            if est.diagnostics.beta_constant {
                println!("warning: beta objective is constant; reporting the first axis");
            }
            if est.diagnostics.gamma_constant {
                println!("warning: gamma objective is constant; reporting the midpoint of the bounds");
            }
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a EstimationConfig,
                result: &'a crate::estimator::EstimateResult,
            }
            write_json(&cli.out_json, &Out { config: &cfg, result: &est })
        }
        Command::Bootstrap(a) => {
            let cfg = a.estimation.config(a.seed)?;
            let method: BootstrapMethod = a.method.parse()?;
            let bcfg = a.flags.config(method, a.c, a.seed);
            let data = PanelDataset::load_csv(&a.data)?;
            bcfg.validate(data.n())?;
            let est = estimate(&data, &cfg)?;
            let mut res = bootstrap(&data, &est, &cfg, &bcfg)?;
            let pct = 100.0 * (1.0 - res.alpha);
            println!("{} bootstrap, B={}, {} missing", method.name(), res.draws.len(), res.missing);
            for (j, (b, (lo, hi))) in est.params.beta.iter().zip(&res.beta_ci).enumerate() {
                println!("beta{}  {:>10.6}  {pct}% CI [{lo:.6}, {hi:.6}]", j + 1, b);
            }
            let (lo, hi) = res.gamma_ci;
            println!("gamma  {:>10.6}  {pct}% CI [{lo:.6}, {hi:.6}]", est.params.gamma);
            if res.inconsistent_method {
                println!("warning: the classic bootstrap is inconsistent for this estimator");
            }
            if res.curvature_unusable {
                println!("warning: estimated gamma curvature is positive; penalty is not concave");
            }
            if !a.dump_draws {
                res.draws.clear();
            }
            write_json(&cli.out_json, &res)
        }
        Command::Montecarlo(a) => {
            let spec = a.design.spec()?;
            let estimation = a.estimation.config(a.seed)?;
            let methods = a.bootstrap.iter().map(|m| m.parse::<BootstrapMethod>()).collect::<Result<Vec<_>>>()?;
            let mad_center = match a.mad_center.as_str() {
                "truth" => MadCenter::Truth,
                "median" => MadCenter::Median,
                other => return Err(Error::InvalidConfig(format!("unknown MAD centre '{other}'"))),
            };
            let format = match (&a.format, &a.out) {
                (Some(f), _) => f.parse()?,
                (None, Some(p)) => match p.extension().and_then(|e| e.to_str()) {
                    Some("csv") => TableFormat::Csv,
                    Some("json") => TableFormat::Json,
                    _ => TableFormat::Text,
                },
                (None, None) => TableFormat::Text,
            };
            let bootstrap = (!methods.is_empty()).then(|| McBootstrap {
                methods,
                c_values: a.c_sweep.clone(),
                base: a.flags.config(BootstrapMethod::Numerical, 1.0, a.seed),
            });
            let mut summaries = Vec::new();
            for &n in &a.n {
                let plan = McPlan {
                    design: spec.clone(),
                    n,
                    replications: a.reps,
                    estimation: estimation.clone(),
                    bootstrap: bootstrap.clone(),
                    seed: a.seed,
                    workers: cli.workers,
                    mad_center,
                };
                summaries.push(run_monte_carlo(&plan)?);
            }
            let table = emit_table(&summaries, format);
            match &a.out {
                Some(p) => {
                    std::fs::write(p, &table).map_err(|source| Error::Io { path: p.clone(), source })?;
                    if format != TableFormat::Text {
                        print!("{}", emit_table(&summaries, TableFormat::Text));
                    }
                    println!("wrote {}", p.display());
                }
                None => print!("{table}"),
            }
            write_json(&cli.out_json, &summaries)
        }
        Command::IdentifyCheck(a) => {
            let spec = a.design.spec()?;
            let rep = check_identifying_inequality(&spec, a.n, a.bins, a.min_bin, a.seed)?;
            println!("conditioning observations (y0=y2=y4): {}", rep.conditioning_count);
            println!("{:>10} {:>10} {:>8} {:>8} {:>8} {:>6}", "lo", "hi", "count", "p3", "p1", "agree");
            for b in &rep.bins {
                let flag = match b.agree {
                    Some(true) => "yes",
                    Some(false) => "NO",
                    None => "-",
                };
                println!("{:>10.4} {:>10.4} {:>8} {:>8.4} {:>8.4} {:>6}", b.lo, b.hi, b.count, b.p3, b.p1, flag);
            }
            println!("agreement rate: {:.4}", rep.agreement_rate);
            let maximizers = if a.maximizers {
                let m = check_population_maximizers(&spec, a.n, a.beta_points, (a.gamma_lo, a.gamma_hi, a.gamma_step), a.h, a.seed)?;
                println!("Q1n grid argmax: [{}], angle to truth {:.4} rad", fmt_vec(&m.beta_argmax), m.beta_angle);
                println!("Q2n grid argmax: {:.4}, distance to truth {:.4}", m.gamma_argmax, m.gamma_distance);
                Some(m)
            } else {
                None
            };
            #[derive(Serialize)]
            struct Out<'a> {
                inequality: &'a crate::identify::InequalityReport,
                maximizers: Option<crate::identify::MaximizerReport>,
            }
            write_json(&cli.out_json, &Out { inequality: &rep, maximizers })
        }
    }
}
