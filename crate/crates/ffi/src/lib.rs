//! C ABI over `crsim-core`.
//!
//! Scenarios and reports are opaque handles created and destroyed through
//! this API. Every fallible call returns a [`CrsimStatus`]; on failure the
//! message is available from [`crsim_last_error`] on the same thread.
//! Strings handed out by the library must be released with
//! [`crsim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crsim_core::fsm::{self, Mode};
use crsim_core::markov::{blocking_probability, OccupancyChain};
use crsim_core::qos::{self, TrafficType};
use crsim_core::sim::{self, Metrics, RunOptions, RunOutput, Scenario};
use crsim_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrsimStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    InvalidParameter = 4,
    NoUniqueStationary = 5,
    DemandExceedsCapacity = 6,
    NeverCompletes = 7,
    BufferTooSmall = 8,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrsimMode {
    Normal = 0,
    Warning = 1,
    Failure = 2,
}

impl From<Mode> for CrsimMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Normal => CrsimMode::Normal,
            Mode::Warning => CrsimMode::Warning,
            Mode::Failure => CrsimMode::Failure,
        }
    }
}

/// Sensitivities of one traffic type, each from 1 (very low) to 5 (very high).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrsimQosProfile {
    pub bandwidth: u8,
    pub delay: u8,
    pub loss: u8,
    pub jitter: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrsimMetrics {
    pub arrivals: u64,
    pub admitted: u64,
    pub blocked: u64,
    pub completed: u64,
    pub dropped: u64,
    pub still_active: u64,
    pub negotiations: u64,
    pub grants: u64,
    pub refusals: u64,
    pub handovers: u64,
    pub failed_handovers: u64,
    pub replans: u64,
    pub interference_steps: u64,
    pub steps_normal: u64,
    pub steps_warning: u64,
    pub steps_failure: u64,
    pub empirical_blocking: f64,
    pub empirical_noncompletion: f64,
}

impl From<&Metrics> for CrsimMetrics {
    fn from(m: &Metrics) -> Self {
        CrsimMetrics {
            arrivals: m.arrivals,
            admitted: m.admitted,
            blocked: m.blocked,
            completed: m.completed,
            dropped: m.dropped,
            still_active: m.still_active,
            negotiations: m.negotiations,
            grants: m.grants,
            refusals: m.refusals,
            handovers: m.handovers,
            failed_handovers: m.failed_handovers,
            replans: m.replans,
            interference_steps: m.interference_steps,
            steps_normal: m.mode_histogram.normal,
            steps_warning: m.mode_histogram.warning,
            steps_failure: m.mode_histogram.failure,
            empirical_blocking: m.empirical_blocking,
            empirical_noncompletion: m.empirical_noncompletion,
        }
    }
}

/// Opaque scenario handle.
pub struct CrsimScenario(Scenario);

/// Opaque result of one simulation run.
pub struct CrsimReport {
    scenario: Scenario,
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> CrsimStatus {
    match err {
        Error::Validation(_) | Error::Assumption(_) => CrsimStatus::Validation,
        Error::NoUniqueStationary => CrsimStatus::NoUniqueStationary,
        Error::DemandExceedsCapacity { .. } => CrsimStatus::DemandExceedsCapacity,
        Error::NeverCompletes => CrsimStatus::NeverCompletes,
        _ => CrsimStatus::InvalidParameter,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CrsimStatus, String)>) -> CrsimStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CrsimStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CrsimStatus::Internal
        }
    }
}

fn core_err(e: Error) -> (CrsimStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CrsimStatus, String) {
    (CrsimStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CrsimStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (CrsimStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes replaced").into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn crsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a scenario from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_scenario_from_json(json: *const c_char, out: *mut *mut CrsimScenario) -> CrsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let scenario = Scenario::from_json(text).map_err(core_err)?;
        *out = Box::into_raw(Box::new(CrsimScenario(scenario)));
        Ok(())
    })
}

/// The built-in canonical scenario. Never fails.
#[no_mangle]
pub extern "C" fn crsim_scenario_canonical() -> *mut CrsimScenario {
    Box::into_raw(Box::new(CrsimScenario(Scenario::canonical())))
}

/// # Safety
/// `scenario` must come from this library and not be freed twice. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn crsim_scenario_free(scenario: *mut CrsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario with `seed` (the scenario's own seed when
/// `override_seed` is false).
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_simulate(
    scenario: *const CrsimScenario,
    override_seed: bool,
    seed: u64,
    out: *mut *mut CrsimReport,
) -> CrsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let scenario = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let mut s = scenario.0.clone();
        if override_seed {
            s.seed = seed;
        }
        let output = sim::run_with(&s, RunOptions::default()).map_err(core_err)?;
        *out = Box::into_raw(Box::new(CrsimReport { scenario: s, output }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_report_metrics(report: *const CrsimReport, out: *mut CrsimMetrics) -> CrsimStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = CrsimMetrics::from(&report.output.metrics);
        Ok(())
    })
}

/// Copies the 64-character hex trace hash plus a NUL into `buf`.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn crsim_report_trace_hash(report: *const CrsimReport, buf: *mut c_char, len: usize) -> CrsimStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let hash = report.output.trace.hash.as_bytes();
        if len < hash.len() + 1 {
            return Err((
                CrsimStatus::BufferTooSmall,
                format!("need {} bytes, got {len}", hash.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(hash.as_ptr().cast(), buf, hash.len());
        *buf.add(hash.len()) = 0;
        Ok(())
    })
}

/// Metrics and provenance as JSON. Release with [`crsim_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_report_to_json(report: *const CrsimReport, out: *mut *mut c_char) -> CrsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let value = serde_json::json!({
            "provenance": {
                "tool": "crsim",
                "version": env!("CARGO_PKG_VERSION"),
                "scenario_hash": report.scenario.hash(),
                "seed": report.scenario.seed,
            },
            "metrics": report.output.metrics,
            "trace": { "events": report.output.trace.len, "hash": report.output.trace.hash },
        });
        *out = into_c_string(value.to_string());
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be freed twice. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn crsim_report_free(report: *mut CrsimReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn crsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stationary occupancy law of a band; writes `capacity + 1` values.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn crsim_stationary(capacity: u32, p: f64, q: f64, out: *mut f64, len: usize) -> CrsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let pi = OccupancyChain::new(capacity, p, q)
            .and_then(|c| c.stationary())
            .map_err(core_err)?;
        let probs = pi.probabilities();
        if len < probs.len() {
            return Err((
                CrsimStatus::BufferTooSmall,
                format!("need {} values, got {len}", probs.len()),
            ));
        }
        ptr::copy_nonoverlapping(probs.as_ptr(), out, probs.len());
        Ok(())
    })
}

/// Blocking probability for `demand` over `count` independent bands given
/// as parallel arrays.
///
/// # Safety
/// Each array must hold `count` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_blocking(
    capacities: *const u32,
    p: *const f64,
    q: *const f64,
    count: usize,
    demand: u32,
    out: *mut f64,
) -> CrsimStatus {
    guard(|| {
        if capacities.is_null() || p.is_null() || q.is_null() {
            return Err(null("band arrays"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let caps = std::slice::from_raw_parts(capacities, count);
        let ps = std::slice::from_raw_parts(p, count);
        let qs = std::slice::from_raw_parts(q, count);
        let chains = caps
            .iter()
            .zip(ps)
            .zip(qs)
            .map(|((&c, &p), &q)| OccupancyChain::new(c, p, q))
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_err)?;
        *out = blocking_probability(&chains, demand).map_err(core_err)?;
        Ok(())
    })
}

/// Probability that a session on a single band is dropped before it
/// completes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_noncompletion(
    capacity: u32,
    p: f64,
    q: f64,
    demand: u32,
    completion: f64,
    grant: f64,
    out: *mut f64,
) -> CrsimStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = OccupancyChain::new(capacity, p, q)
            .and_then(|c| c.noncompletion_probability(demand, completion, grant))
            .map_err(core_err)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_classify_mode(pu_used: u32, demand: u32, capacity: u32, out: *mut CrsimMode) -> CrsimStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = fsm::classify_mode(pu_used, demand, capacity).map_err(core_err)?.into();
        Ok(())
    })
}

/// Sensitivity row for a traffic type given by its snake_case key, e.g.
/// `"video_conferencing"`.
///
/// # Safety
/// `traffic` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crsim_qos_profile(traffic: *const c_char, out: *mut CrsimQosProfile) -> CrsimStatus {
    guard(|| {
        let key = read_str(traffic, "traffic")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let t: TrafficType = key
            .parse()
            .map_err(|_| (CrsimStatus::InvalidParameter, format!("unknown traffic type `{key}`")))?;
        let p = qos::qos_profile(t);
        *out = CrsimQosProfile {
            bandwidth: p.bandwidth.get(),
            delay: p.delay.get(),
            loss: p.loss.get(),
            jitter: p.jitter.get(),
        };
        Ok(())
    })
}
