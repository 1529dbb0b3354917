//! C ABI for the coexistence model, optimizer and simulator.
//!
//! Scenarios are opaque handles created by `dcf_scenario_*` and released
//! with `dcf_scenario_free`. Every fallible call returns a `DcfStatus`;
//! on failure `dcf_last_error` gives a message for the calling thread.
//! Quantities that do not apply (no secondary network, no scan) are NaN.
//!
//! ```c
//! DcfScenario *s = NULL;
//! if (dcf_scenario_new_preset("reference", &s) != DCF_STATUS_OK) {
//!     fprintf(stderr, "%s\n", dcf_last_error());
//! }
//! dcf_scenario_set(s, "n_primary", "16");
//! DcfReport r;
//! dcf_analyze(s, &r);
//! dcf_scenario_free(s);
//! ```

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dcf_coexist::config::{ConfigOverrides, RawConfig};
use dcf_coexist::optimizer::{optimize_any, OptimizationProblem};
use dcf_coexist::sim::{run_replications, summarize, Metric, SimConfig};
use dcf_coexist::{analyze, Error, Scenario, Scheme};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    NonConvergence = 4,
    Config = 5,
    Mismatch = 6,
    Io = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcfScheme {
    Sensing = 0,
    SilentPeriod = 1,
    Coexist = 2,
}

fn scheme_from_c(code: i32) -> Result<Scheme, (DcfStatus, String)> {
    match code {
        0 => Ok(Scheme::Sensing),
        1 => Ok(Scheme::SilentPeriod),
        2 => Ok(Scheme::Coexist),
        other => Err((DcfStatus::InvalidArgument, format!("unknown scheme code {other}"))),
    }
}

impl From<Scheme> for DcfScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Sensing => DcfScheme::Sensing,
            Scheme::SilentPeriod => DcfScheme::SilentPeriod,
            Scheme::Coexist => DcfScheme::Coexist,
        }
    }
}

/// Opaque scenario handle.
pub struct DcfScenario {
    inner: Scenario,
}

/// Solved model for one scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcfReport {
    pub tau_p1: f64,
    pub p_p1: f64,
    pub tau_p2: f64,
    pub tau_s2: f64,
    pub p_p2: f64,
    pub p_s2: f64,
    pub alpha_b: f64,
    pub alpha_i: f64,
    /// NaN outside the sensing scheme.
    pub alpha_c: f64,
    pub pt: f64,
    pub st: f64,
    pub st_conditional: f64,
    /// Primary throughput without the secondary network.
    pub baseline_pt: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcfOptimum {
    pub scheme: DcfScheme,
    /// NaN unless sensing.
    pub t_us: f64,
    pub w_s: u32,
    /// NaN unless silent period.
    pub beta: f64,
    pub pt: f64,
    pub st: f64,
    pub baseline_pt: f64,
    /// False when no grid point meets the loss cap; the point is then the
    /// one with the highest primary throughput.
    pub feasible: bool,
}

/// Pooled simulation estimates, indexed tau_p1, tau_p2, tau_s2, alpha_c,
/// pt, st.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcfSimSummary {
    pub value: [f64; 6],
    /// Batch-means standard errors.
    pub se: [f64; 6],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DcfStatus {
    match e {
        Error::Validation { .. } => DcfStatus::Validation,
        Error::NonConvergence { .. } => DcfStatus::NonConvergence,
        Error::Config(_) => DcfStatus::Config,
        Error::Mismatch(_) => DcfStatus::Mismatch,
        Error::InvalidArgument(_) => DcfStatus::InvalidArgument,
        Error::Io(_) | Error::Csv(_) => DcfStatus::Io,
    }
}

/// Runs `f`, mapping errors and panics to a status and the thread's last
/// error message.
fn guard(f: impl FnOnce() -> Result<(), (DcfStatus, String)>) -> DcfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            DcfStatus::Panic
        }
    }
}

fn lift<T>(r: dcf_coexist::Result<T>) -> Result<T, (DcfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DcfStatus, String) {
    (DcfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DcfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DcfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn scenario_ref<'a>(p: *const DcfScenario) -> Result<&'a Scenario, (DcfStatus, String)> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("scenario"))
}

fn nan_if_none(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a scenario from a named preset ("reference").
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcf_scenario_new_preset(name: *const c_char, out: *mut *mut DcfScenario) -> DcfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = c_str(name, "name")?;
        let inner = lift(Scenario::preset(name))?;
        *out = Box::into_raw(Box::new(DcfScenario { inner }));
        Ok(())
    })
}

/// Creates a scenario from TOML config text (same keys as the CLI flags).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcf_scenario_from_toml(text: *const c_char, out: *mut *mut DcfScenario) -> DcfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(text, "text")?;
        let inner = lift(ConfigOverrides::from_toml_str(text).and_then(|o| o.resolve()?.to_scenario()))?;
        *out = Box::into_raw(Box::new(DcfScenario { inner }));
        Ok(())
    })
}

/// Sets one config key from its textual value. The scenario is left
/// unchanged when the result would be invalid.
///
/// # Safety
/// `scenario` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dcf_scenario_set(
    scenario: *mut DcfScenario,
    key: *const c_char,
    value: *const c_char,
) -> DcfStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let (key, value) = (c_str(key, "key")?, c_str(value, "value")?);
        let mut raw = RawConfig::from_scenario(&s.inner);
        lift(raw.set(key, value))?;
        s.inner = lift(raw.to_scenario())?;
        Ok(())
    })
}

/// Releases a scenario; NULL is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dcf_scenario_free(scenario: *mut DcfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Solves the model for `scenario`.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcf_analyze(scenario: *const DcfScenario, out: *mut DcfReport) -> DcfStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = lift(analyze(s))?;
        let has_secondary = s.network().n_secondary > 0;
        let two = |x: f64| if has_secondary { x } else { f64::NAN };
        *out = DcfReport {
            tau_p1: a.state1.tau_p1,
            p_p1: a.state1.p_p1,
            tau_p2: two(a.state2.tau_p2),
            tau_s2: two(a.state2.tau_s2),
            p_p2: two(a.state2.p_p2),
            p_s2: two(a.state2.p_s2),
            alpha_b: a.scan.alpha_b,
            alpha_i: a.scan.alpha_i,
            alpha_c: nan_if_none(a.report.alpha_c),
            pt: a.report.pt,
            st: a.report.st,
            st_conditional: a.report.st_conditional,
            baseline_pt: a.report.baseline_pt,
        };
        Ok(())
    })
}

/// Maximizes secondary throughput for `scheme` (a `DcfScheme` value) over
/// the default grids, keeping primary throughput at least `(1 - loss_cap)`
/// of its value alone.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcf_optimize(
    scenario: *const DcfScenario,
    scheme: i32,
    loss_cap: f64,
    out: *mut DcfOptimum,
) -> DcfStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = lift(optimize_any(&OptimizationProblem::new(*s, scheme_from_c(scheme)?, loss_cap)))?;
        let b = r.best;
        *out = DcfOptimum {
            scheme: b.scheme.into(),
            t_us: nan_if_none(b.t_us),
            w_s: b.w_s,
            beta: nan_if_none(b.beta),
            pt: b.pt,
            st: b.st,
            baseline_pt: r.baseline_pt,
            feasible: r.feasible,
        };
        Ok(())
    })
}

/// Runs `replications` simulations of `run_length` slots (5 % warmup, 10
/// batches each) on streams `0..replications` of `seed` and pools them.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcf_simulate(
    scenario: *const DcfScenario,
    seed: u64,
    run_length: u64,
    replications: u32,
    out: *mut DcfSimSummary,
) -> DcfStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if replications == 0 {
            return Err((DcfStatus::InvalidArgument, "replications must be ≥ 1".into()));
        }
        let config = SimConfig::new(*s, seed).with_run_length(run_length);
        let runs = lift(run_replications(&config, replications as usize))?;
        let summary = lift(summarize(&runs))?;
        *out = DcfSimSummary {
            value: Metric::ALL.map(|m| nan_if_none(summary.value(m))),
            se: Metric::ALL.map(|m| nan_if_none(summary.se(m))),
        };
        Ok(())
    })
}
