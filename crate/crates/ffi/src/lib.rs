//! C ABI for dynpanel.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every fallible call returns a [`DpStatus`]; on failure the
//! message is available from [`dp_last_error`] until the next failing call
//! on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dynpanel::error::ErrorClass;
use dynpanel::{
    BootstrapConfig, BootstrapMethod, DgpSpec, Error, EstimateResult, EstimationConfig, ObjectiveVariant,
    PanelDataset,
};

/// Status codes. The first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
    NullPointer = 4,
    Panic = 5,
}

pub const DP_VARIANT_ADJACENT: u32 = 0;
pub const DP_VARIANT_COMBINED: u32 = 1;
pub const DP_VARIANT_GENERAL: u32 = 2;

pub const DP_METHOD_NUMERICAL: u32 = 0;
pub const DP_METHOD_MODIFIED: u32 = 1;
pub const DP_METHOD_M_OUT_OF_N: u32 = 2;
pub const DP_METHOD_CLASSIC: u32 = 3;

/// Opaque panel handle.
pub struct DpPanel(PanelDataset);

/// Opaque estimate handle; remembers the configuration it was computed with.
pub struct DpEstimate {
    result: EstimateResult,
    config: EstimationConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DpEstimateOptions {
    /// One of the `DP_VARIANT_*` constants.
    pub variant: u32,
    /// Kernel bandwidth; values `<= 0` select the default rule.
    pub h: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DpBootstrapOptions {
    /// One of the `DP_METHOD_*` constants.
    pub method: u32,
    pub draws: usize,
    pub c: f64,
    pub alpha: f64,
    /// Resample size for m-out-of-n; 0 selects the default.
    pub m: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> DpStatus {
    let status = match e.class() {
        ErrorClass::Usage => DpStatus::Usage,
        ErrorClass::Data => DpStatus::Data,
        ErrorClass::Numerical => DpStatus::Numerical,
    };
    set_error(e.to_string());
    status
}

fn null(what: &str) -> DpStatus {
    set_error(format!("NullPointer: {what} is null"));
    DpStatus::NullPointer
}

fn guard(f: impl FnOnce() -> DpStatus) -> DpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("Panic: internal error".into());
            DpStatus::Panic
        }
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults matching the library: adjacent objective, default bandwidth,
/// γ in [−3, 3], seed 0.
#[no_mangle]
pub extern "C" fn dp_estimate_options_default() -> DpEstimateOptions {
    let d = EstimationConfig::default();
    DpEstimateOptions { variant: DP_VARIANT_ADJACENT, h: 0.0, gamma_lo: d.gamma_bounds.0, gamma_hi: d.gamma_bounds.1, seed: 0 }
}

/// Defaults: numerical bootstrap, 199 draws, c = 1, alpha = 0.05.
#[no_mangle]
pub extern "C" fn dp_bootstrap_options_default() -> DpBootstrapOptions {
    let d = BootstrapConfig::default();
    DpBootstrapOptions { method: DP_METHOD_NUMERICAL, draws: d.b_draws, c: d.c, alpha: d.alpha, m: 0, seed: 0 }
}

fn publish<T>(value: T, out: *mut *mut T) -> DpStatus {
    // SAFETY: callers check `out` for null before building `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    DpStatus::Ok
}

/// Reads a panel from a CSV file with header `id,t,y,x1..xK`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_panel_load_csv(path: *const c_char, out: *mut *mut DpPanel) -> DpStatus {
    guard(|| {
        if path.is_null() {
            return null("path");
        }
        if out.is_null() {
            return null("out");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => return fail(Error::InvalidConfig("path is not valid UTF-8".into())),
        };
        match PanelDataset::load_csv(path) {
            Ok(p) => publish(DpPanel(p), out),
            Err(e) => fail(e),
        }
    })
}

/// Simulates benchmark design 1, 2 or 3.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_panel_simulate(design: u32, n: usize, seed: u64, out: *mut *mut DpPanel) -> DpStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let res = DgpSpec::from_number(design).and_then(|spec| dynpanel::simulate(&spec, n, seed));
        match res {
            Ok((p, _)) => publish(DpPanel(p), out),
            Err(e) => fail(e),
        }
    })
}

/// Builds a panel from row-major arrays: `y` holds `n·(t_max+1)` outcomes
/// for periods `0..=t_max`, `x` holds `n·t_max·k` regressors for periods
/// `1..=t_max`. The data are copied.
///
/// # Safety
/// `y` and `x` must point to arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn dp_panel_from_arrays(
    n: usize,
    t_max: usize,
    k: usize,
    y: *const u8,
    x: *const f64,
    out: *mut *mut DpPanel,
) -> DpStatus {
    guard(|| {
        if y.is_null() {
            return null("y");
        }
        if x.is_null() {
            return null("x");
        }
        if out.is_null() {
            return null("out");
        }
        let (Some(ny), Some(nx)) = (n.checked_mul(t_max + 1), n.checked_mul(t_max).and_then(|v| v.checked_mul(k))) else {
            return fail(Error::InvalidConfig("array sizes overflow".into()));
        };
        let ys = std::slice::from_raw_parts(y, ny).to_vec();
        let xs = std::slice::from_raw_parts(x, nx).to_vec();
        match PanelDataset::new(n, t_max, k, ys, xs) {
            Ok(p) => publish(DpPanel(p), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `panel` must come from a `dp_panel_*` constructor and not be used after.
#[no_mangle]
pub unsafe extern "C" fn dp_panel_free(panel: *mut DpPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// # Safety
/// `panel` must be a live handle; output pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn dp_panel_dims(panel: *const DpPanel, n: *mut usize, t_max: *mut usize, k: *mut usize) -> DpStatus {
    guard(|| {
        let Some(p) = panel.as_ref() else { return null("panel") };
        if let Some(n) = n.as_mut() {
            *n = p.0.n();
        }
        if let Some(t) = t_max.as_mut() {
            *t = p.0.t_max();
        }
        if let Some(k) = k.as_mut() {
            *k = p.0.k();
        }
        DpStatus::Ok
    })
}

fn estimation_config(opts: Option<&DpEstimateOptions>) -> Result<EstimationConfig, Error> {
    let o = opts.copied().unwrap_or_else(|| dp_estimate_options_default());
    let objective_variant = match o.variant {
        DP_VARIANT_ADJACENT => ObjectiveVariant::AdjacentOnly,
        DP_VARIANT_COMBINED => ObjectiveVariant::Combined,
        DP_VARIANT_GENERAL => ObjectiveVariant::GeneralT,
        v => return Err(Error::InvalidConfig(format!("unknown variant code {v}"))),
    };
    let cfg = EstimationConfig {
        bandwidth: if o.h > 0.0 { dynpanel::Bandwidth::Fixed(o.h) } else { dynpanel::Bandwidth::PaperDefault },
        gamma_bounds: (o.gamma_lo, o.gamma_hi),
        objective_variant,
        seed: o.seed,
        ..EstimationConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the two-step estimator. `opts` may be null for defaults.
///
/// # Safety
/// `panel` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_estimate(
    panel: *const DpPanel,
    opts: *const DpEstimateOptions,
    out: *mut *mut DpEstimate,
) -> DpStatus {
    guard(|| {
        let Some(p) = panel.as_ref() else { return null("panel") };
        if out.is_null() {
            return null("out");
        }
        let res = estimation_config(opts.as_ref())
            .and_then(|config| dynpanel::estimate(&p.0, &config).map(|result| DpEstimate { result, config }));
        match res {
            Ok(e) => publish(e, out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `est` must come from [`dp_estimate`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn dp_estimate_free(est: *mut DpEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Copies `β̂` into `out`, which must hold exactly `k` values.
///
/// # Safety
/// `est` must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dp_estimate_beta(est: *const DpEstimate, out: *mut f64, len: usize) -> DpStatus {
    guard(|| {
        let Some(e) = est.as_ref() else { return null("estimate") };
        if out.is_null() {
            return null("out");
        }
        let beta = &e.result.params.beta;
        if len != beta.len() {
            return fail(Error::InvalidConfig(format!("buffer holds {len} values, beta has {}", beta.len())));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(beta);
        DpStatus::Ok
    })
}

/// # Safety
/// `est` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_estimate_gamma(est: *const DpEstimate, out: *mut f64) -> DpStatus {
    guard(|| {
        let Some(e) = est.as_ref() else { return null("estimate") };
        let Some(out) = out.as_mut() else { return null("out") };
        *out = e.result.params.gamma;
        DpStatus::Ok
    })
}

/// Bootstrap confidence intervals around `est`. `beta_lo`/`beta_hi` must
/// hold `k` values each. `opts` may be null for defaults.
///
/// # Safety
/// Handles must be live and buffers writable for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn dp_bootstrap(
    panel: *const DpPanel,
    est: *const DpEstimate,
    opts: *const DpBootstrapOptions,
    beta_lo: *mut f64,
    beta_hi: *mut f64,
    k: usize,
    gamma_lo: *mut f64,
    gamma_hi: *mut f64,
) -> DpStatus {
    guard(|| {
        let Some(p) = panel.as_ref() else { return null("panel") };
        let Some(e) = est.as_ref() else { return null("estimate") };
        if beta_lo.is_null() || beta_hi.is_null() || gamma_lo.is_null() || gamma_hi.is_null() {
            return null("output buffer");
        }
        if k != p.0.k() {
            return fail(Error::InvalidConfig(format!("buffers hold {k} values, panel has K={}", p.0.k())));
        }
        let o = opts.as_ref().copied().unwrap_or_else(|| dp_bootstrap_options_default());
        let method = match o.method {
            DP_METHOD_NUMERICAL => BootstrapMethod::Numerical,
            DP_METHOD_MODIFIED => BootstrapMethod::ModifiedObjective,
            DP_METHOD_M_OUT_OF_N => BootstrapMethod::MOutOfN,
            DP_METHOD_CLASSIC => BootstrapMethod::Classic,
            v => return fail(Error::InvalidConfig(format!("unknown bootstrap method code {v}"))),
        };
        let cfg = BootstrapConfig {
            method,
            b_draws: o.draws,
            c: o.c,
            alpha: o.alpha,
            m: (o.m > 0).then_some(o.m),
            seed: o.seed,
            ..BootstrapConfig::default()
        };
        match dynpanel::bootstrap(&p.0, &e.result, &e.config, &cfg) {
            Ok(res) => {
                let lo = std::slice::from_raw_parts_mut(beta_lo, k);
                let hi = std::slice::from_raw_parts_mut(beta_hi, k);
                for (j, &(l, h)) in res.beta_ci.iter().enumerate() {
                    lo[j] = l;
                    hi[j] = h;
                }
                *gamma_lo = res.gamma_ci.0;
                *gamma_hi = res.gamma_ci.1;
                DpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// `Q₁ₙ(b)` for a direction of length `k`.
///
/// # Safety
/// `panel` must be live, `b` must point to `k` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_q1_objective(panel: *const DpPanel, b: *const f64, k: usize, out: *mut f64) -> DpStatus {
    guard(|| {
        let Some(p) = panel.as_ref() else { return null("panel") };
        if b.is_null() {
            return null("b");
        }
        let Some(out) = out.as_mut() else { return null("out") };
        match dynpanel::q1_objective(&p.0, std::slice::from_raw_parts(b, k)) {
            Ok(v) => {
                *out = v;
                DpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
