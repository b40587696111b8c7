//! C ABI over the memweave library.
//!
//! Conventions: every fallible call returns an [`MwStatus`]; `MwStatus_Ok`
//! means all requested out-parameters were written. On any other status,
//! `mw_last_error_message` returns a thread-local, NUL-terminated
//! description valid until the next failing call on the same thread.
//! Profile sets are opaque handles owned by the caller and released with
//! `mw_profiles_free`. No call unwinds across the boundary; panics are
//! reported as `MwStatus_Internal`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use memweave::{
    analytic, dataset, sim, AnalyticError, CalibrationError, DemandPoint, InterleaveWeights,
    ProfileSet, SimConfig, SimError, WorkloadMix,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwStatus {
    /// Success; all requested outputs were written.
    Ok = 0,
    /// A pointer was null or a scalar argument out of its legal range.
    InvalidArgument = 1,
    /// Input text (JSON, mix, weights) did not parse.
    Parse = 2,
    /// Input parsed but violated a profile or weights invariant.
    Validation = 3,
    /// The requested mix falls outside the calibrated read-fraction range.
    OutOfRange = 4,
    /// The tier has no calibration points for the requested write kind.
    MissingFamily = 5,
    /// The offered demand would saturate a tier under these weights.
    Infeasible = 6,
    /// No weight assignment within the budget can carry the demand.
    NoFeasibleWeights = 7,
    /// The profile file could not be read.
    Io = 8,
    /// A panic was caught at the boundary; state is unspecified.
    Internal = 9,
}

/// Opaque calibrated profile set.
pub struct MwProfileSet {
    set: ProfileSet,
    /// Tier names as C strings, same order as the set.
    names: Vec<CString>,
}

/// Closed-loop simulation parameters.
#[repr(C)]
pub struct MwSimConfig {
    /// Per-tier interleave weights; length must equal the tier count.
    pub weights: *const u32,
    pub weights_len: usize,
    /// Access mix, e.g. "1r0w" or "2r1wnt".
    pub mix: *const c_char,
    pub streams: u32,
    pub outstanding_per_stream: u32,
    /// Bytes per request, at most one 4096-byte page.
    pub transfer_bytes: u32,
    /// 0 = uniform random page choice, 1 = sequential per stream.
    pub pattern: u32,
    pub page_count: u64,
    /// Negative selects the default of a tenth of measured_requests.
    pub warmup_requests: i64,
    pub measured_requests: u64,
    pub seed: u64,
}

/// Scalar results of one simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MwSimReport {
    pub achieved_gbps: f64,
    pub mean_latency_ns: f64,
    pub p50_latency_ns: f64,
    pub p95_latency_ns: f64,
    pub p99_latency_ns: f64,
    pub total_time_ns: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let text = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: MwStatus, err: impl std::fmt::Display) -> MwStatus {
    set_error(err.to_string());
    status
}

fn invalid(message: &str) -> MwStatus {
    set_error(message.to_string());
    MwStatus::InvalidArgument
}

fn calibration_status(err: &CalibrationError) -> MwStatus {
    match err {
        CalibrationError::Io { .. } => MwStatus::Io,
        CalibrationError::Parse { .. } | CalibrationError::InvalidMix { .. } => MwStatus::Parse,
        CalibrationError::OutOfRange { .. } => MwStatus::OutOfRange,
        CalibrationError::MissingFamily { .. } => MwStatus::MissingFamily,
        _ => MwStatus::Validation,
    }
}

fn analytic_status(err: &AnalyticError) -> MwStatus {
    match err {
        AnalyticError::Calibration(inner) => calibration_status(inner),
        AnalyticError::Weights(_) => MwStatus::Validation,
        AnalyticError::InfeasibleLoad { .. } => MwStatus::Infeasible,
        AnalyticError::NoFeasibleWeights { .. } => MwStatus::NoFeasibleWeights,
        AnalyticError::TierMismatch { .. }
        | AnalyticError::InvalidDemand { .. }
        | AnalyticError::InvalidUtilization { .. }
        | AnalyticError::InvalidMaxWeight { .. } => MwStatus::InvalidArgument,
    }
}

fn sim_status(err: &SimError) -> MwStatus {
    match err {
        SimError::Calibration(inner) => calibration_status(inner),
        SimError::InvalidConfig { .. } => MwStatus::InvalidArgument,
    }
}

/// Shields the C boundary from panics.
fn guarded(body: impl FnOnce() -> MwStatus) -> MwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            MwStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, MwStatus> {
    if ptr.is_null() {
        return Err(invalid(&format!("{name} must not be null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(&format!("{name} must be valid UTF-8")))
}

unsafe fn read_handle<'a>(set: *const MwProfileSet) -> Result<&'a MwProfileSet, MwStatus> {
    if set.is_null() {
        return Err(invalid("profile set must not be null"));
    }
    Ok(&*set)
}

unsafe fn read_weights(
    ptr: *const u32,
    len: usize,
    expected_tiers: usize,
) -> Result<InterleaveWeights, MwStatus> {
    if ptr.is_null() {
        return Err(invalid("weights must not be null"));
    }
    if len != expected_tiers {
        return Err(invalid(&format!(
            "weights length {len} does not match tier count {expected_tiers}"
        )));
    }
    let slice = std::slice::from_raw_parts(ptr, len);
    InterleaveWeights::new(slice.to_vec()).map_err(|e| fail(MwStatus::Validation, e))
}

fn parse_mix(text: &str) -> Result<WorkloadMix, MwStatus> {
    text.parse::<WorkloadMix>()
        .map_err(|e| fail(calibration_status(&e), e))
}

fn wrap_set(set: ProfileSet, out: *mut *mut MwProfileSet) -> MwStatus {
    let names = set
        .tiers()
        .iter()
        .map(|tier| CString::new(tier.name()).unwrap_or_default())
        .collect();
    let handle = Box::new(MwProfileSet { set, names });
    unsafe { *out = Box::into_raw(handle) };
    MwStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the
/// next failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn mw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Load a profile set from a JSON file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer;
/// on success `*out` must later be released with [`mw_profiles_free`].
#[no_mangle]
pub unsafe extern "C" fn mw_profiles_load(
    path: *const c_char,
    out: *mut *mut MwProfileSet,
) -> MwStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out must not be null");
        }
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match memweave::load_profiles(Path::new(path)) {
            Ok(set) => wrap_set(set, out),
            Err(e) => fail(calibration_status(&e), e),
        }
    })
}

/// Parse a profile set from JSON text.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer;
/// on success `*out` must later be released with [`mw_profiles_free`].
#[no_mangle]
pub unsafe extern "C" fn mw_profiles_from_json(
    json: *const c_char,
    out: *mut *mut MwProfileSet,
) -> MwStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out must not be null");
        }
        let json = match read_str(json, "json") {
            Ok(j) => j,
            Err(status) => return status,
        };
        match memweave::parse_profiles(json, "json argument") {
            Ok(set) => wrap_set(set, out),
            Err(e) => fail(calibration_status(&e), e),
        }
    })
}

/// The profile set bundled with the library.
///
/// # Safety
/// `out` must be a valid pointer; on success `*out` must later be released
/// with [`mw_profiles_free`].
#[no_mangle]
pub unsafe extern "C" fn mw_profiles_bundled(out: *mut *mut MwProfileSet) -> MwStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out must not be null");
        }
        wrap_set(dataset::bundled_profiles(), out)
    })
}

/// Release a profile set. Null is a no-op.
///
/// # Safety
/// `set` must be null or a pointer obtained from one of the `mw_profiles_*`
/// constructors that has not been freed; no borrowed tier-name pointer may
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mw_profiles_free(set: *mut MwProfileSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of tiers, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live profile-set handle.
#[no_mangle]
pub unsafe extern "C" fn mw_profiles_tier_count(set: *const MwProfileSet) -> u32 {
    if set.is_null() {
        return 0;
    }
    (*set).set.len() as u32
}

/// Borrowed tier name, valid while the set lives; null if out of range.
///
/// # Safety
/// `set` must be null or a live profile-set handle; the returned pointer
/// must not be used after the set is freed.
#[no_mangle]
pub unsafe extern "C" fn mw_profiles_tier_name(
    set: *const MwProfileSet,
    tier: u32,
) -> *const c_char {
    if set.is_null() {
        return std::ptr::null();
    }
    let handle = &*set;
    match handle.names.get(tier as usize) {
        Some(name) => name.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Calibrated bandwidth of one tier at a mix, interpolating as needed.
///
/// # Safety
/// `set` must be a live profile-set handle, `mix` a valid NUL-terminated
/// string, and `out_gbps` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_bandwidth_at(
    set: *const MwProfileSet,
    tier: u32,
    mix: *const c_char,
    out_gbps: *mut f64,
) -> MwStatus {
    guarded(|| {
        let handle = match read_handle(set) {
            Ok(h) => h,
            Err(status) => return status,
        };
        if out_gbps.is_null() {
            return invalid("out_gbps must not be null");
        }
        if tier as usize >= handle.set.len() {
            return invalid(&format!(
                "tier {tier} out of range for {} tiers",
                handle.set.len()
            ));
        }
        let mix = match read_str(mix, "mix").and_then(parse_mix) {
            Ok(m) => m,
            Err(status) => return status,
        };
        match handle.set.tier(tier as usize).bandwidth_at(&mix) {
            Ok(gbps) => {
                *out_gbps = gbps;
                MwStatus::Ok
            }
            Err(e) => fail(calibration_status(&e), e),
        }
    })
}

/// Predict aggregate bandwidth for a weight vector. `out_shares` and
/// `out_utilization`, when non-null, must hold `weights_len` doubles.
///
/// # Safety
/// `set` must be a live profile-set handle, `weights` must point to
/// `weights_len` values, `mix` must be a valid NUL-terminated string, and
/// every non-null out-pointer must satisfy the capacity stated above.
#[no_mangle]
pub unsafe extern "C" fn mw_predict(
    set: *const MwProfileSet,
    weights: *const u32,
    weights_len: usize,
    mix: *const c_char,
    out_aggregate_gbps: *mut f64,
    out_bottleneck_tier: *mut u32,
    out_shares: *mut f64,
    out_utilization: *mut f64,
) -> MwStatus {
    guarded(|| {
        let handle = match read_handle(set) {
            Ok(h) => h,
            Err(status) => return status,
        };
        let weights = match read_weights(weights, weights_len, handle.set.len()) {
            Ok(w) => w,
            Err(status) => return status,
        };
        let mix = match read_str(mix, "mix").and_then(parse_mix) {
            Ok(m) => m,
            Err(status) => return status,
        };
        match analytic::predict_bandwidth(&handle.set, &weights, &mix) {
            Ok(prediction) => {
                if !out_aggregate_gbps.is_null() {
                    *out_aggregate_gbps = prediction.aggregate_gbps;
                }
                if !out_bottleneck_tier.is_null() {
                    *out_bottleneck_tier = prediction.bottleneck as u32;
                }
                if !out_shares.is_null() {
                    std::slice::from_raw_parts_mut(out_shares, weights_len)
                        .copy_from_slice(&prediction.shares);
                }
                if !out_utilization.is_null() {
                    std::slice::from_raw_parts_mut(out_utilization, weights_len)
                        .copy_from_slice(&prediction.utilization);
                }
                MwStatus::Ok
            }
            Err(e) => fail(analytic_status(&e), e),
        }
    })
}

/// Best weights for a mix under the weight-total budget. `out_weights`
/// must hold one u32 per tier.
///
/// # Safety
/// `set` must be a live profile-set handle, `mix` a valid NUL-terminated
/// string, and `out_weights` must hold one `u32` per tier of the set.
#[no_mangle]
pub unsafe extern "C" fn mw_recommend(
    set: *const MwProfileSet,
    mix: *const c_char,
    max_weight: u32,
    out_weights: *mut u32,
    out_aggregate_gbps: *mut f64,
) -> MwStatus {
    guarded(|| {
        let handle = match read_handle(set) {
            Ok(h) => h,
            Err(status) => return status,
        };
        if out_weights.is_null() {
            return invalid("out_weights must not be null");
        }
        let mix = match read_str(mix, "mix").and_then(parse_mix) {
            Ok(m) => m,
            Err(status) => return status,
        };
        match analytic::recommend_weights(&handle.set, &mix, max_weight) {
            Ok((weights, prediction)) => {
                std::slice::from_raw_parts_mut(out_weights, handle.set.len())
                    .copy_from_slice(weights.as_slice());
                if !out_aggregate_gbps.is_null() {
                    *out_aggregate_gbps = prediction.aggregate_gbps;
                }
                MwStatus::Ok
            }
            Err(e) => fail(analytic_status(&e), e),
        }
    })
}

/// Latency-optimal weights for an offered demand in GB/s. `out_weights`
/// must hold one u32 per tier.
///
/// # Safety
/// `set` must be a live profile-set handle, `mix` a valid NUL-terminated
/// string, and `out_weights` must hold one `u32` per tier of the set.
#[no_mangle]
pub unsafe extern "C" fn mw_recommend_for_demand(
    set: *const MwProfileSet,
    mix: *const c_char,
    demand_gbps: f64,
    max_weight: u32,
    out_weights: *mut u32,
    out_latency_ns: *mut f64,
) -> MwStatus {
    guarded(|| {
        let handle = match read_handle(set) {
            Ok(h) => h,
            Err(status) => return status,
        };
        if out_weights.is_null() {
            return invalid("out_weights must not be null");
        }
        let mix = match read_str(mix, "mix").and_then(parse_mix) {
            Ok(m) => m,
            Err(status) => return status,
        };
        let demand = match DemandPoint::new(demand_gbps) {
            Ok(d) => d,
            Err(e) => return fail(analytic_status(&e), e),
        };
        match analytic::recommend_weights_for_demand(&handle.set, &mix, demand, max_weight) {
            Ok((weights, latency_ns)) => {
                std::slice::from_raw_parts_mut(out_weights, handle.set.len())
                    .copy_from_slice(weights.as_slice());
                if !out_latency_ns.is_null() {
                    *out_latency_ns = latency_ns;
                }
                MwStatus::Ok
            }
            Err(e) => fail(analytic_status(&e), e),
        }
    })
}

/// Expected mean latency at an offered demand under given weights.
///
/// # Safety
/// `set` must be a live profile-set handle, `weights` must point to
/// `weights_len` values, `mix` must be a valid NUL-terminated string, and
/// `out_latency_ns` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_mixture_latency(
    set: *const MwProfileSet,
    weights: *const u32,
    weights_len: usize,
    mix: *const c_char,
    demand_gbps: f64,
    out_latency_ns: *mut f64,
) -> MwStatus {
    guarded(|| {
        let handle = match read_handle(set) {
            Ok(h) => h,
            Err(status) => return status,
        };
        if out_latency_ns.is_null() {
            return invalid("out_latency_ns must not be null");
        }
        let weights = match read_weights(weights, weights_len, handle.set.len()) {
            Ok(w) => w,
            Err(status) => return status,
        };
        let mix = match read_str(mix, "mix").and_then(parse_mix) {
            Ok(m) => m,
            Err(status) => return status,
        };
        let demand = match DemandPoint::new(demand_gbps) {
            Ok(d) => d,
            Err(e) => return fail(analytic_status(&e), e),
        };
        match analytic::mixture_latency(&handle.set, &weights, &mix, demand) {
            Ok(ns) => {
                *out_latency_ns = ns;
                MwStatus::Ok
            }
            Err(e) => fail(analytic_status(&e), e),
        }
    })
}

/// Run one closed-loop simulation. `out_report` is required; the per-tier
/// buffers, when non-null, must hold one element per tier.
///
/// # Safety
/// `set` must be a live profile-set handle; `config` and `out_report` must
/// be valid pointers; the pointers inside `config` must satisfy the same
/// string and array rules as elsewhere; non-null per-tier buffers must hold
/// one element per tier of the set.
#[no_mangle]
pub unsafe extern "C" fn mw_simulate(
    set: *const MwProfileSet,
    config: *const MwSimConfig,
    out_report: *mut MwSimReport,
    out_tier_requests: *mut u64,
    out_tier_utilization: *mut f64,
) -> MwStatus {
    guarded(|| {
        let handle = match read_handle(set) {
            Ok(h) => h,
            Err(status) => return status,
        };
        if config.is_null() {
            return invalid("config must not be null");
        }
        if out_report.is_null() {
            return invalid("out_report must not be null");
        }
        let config = &*config;
        let weights = match read_weights(config.weights, config.weights_len, handle.set.len()) {
            Ok(w) => w,
            Err(status) => return status,
        };
        let mix = match read_str(config.mix, "config.mix").and_then(parse_mix) {
            Ok(m) => m,
            Err(status) => return status,
        };
        let pattern = match config.pattern {
            0 => sim::AccessPattern::UniformRandom,
            1 => sim::AccessPattern::Sequential,
            other => return invalid(&format!("pattern must be 0 or 1, got {other}")),
        };
        let mut sim_config = SimConfig::new(weights, mix);
        sim_config.streams = config.streams;
        sim_config.outstanding_per_stream = config.outstanding_per_stream;
        sim_config.transfer_bytes = config.transfer_bytes;
        sim_config.page_count = config.page_count as usize;
        sim_config.pattern = pattern;
        sim_config.warmup_requests = u64::try_from(config.warmup_requests).ok();
        sim_config.measured_requests = config.measured_requests;
        sim_config.seed = config.seed;
        match sim::run(&handle.set, &sim_config) {
            Ok(report) => {
                *out_report = MwSimReport {
                    achieved_gbps: report.achieved_gbps,
                    mean_latency_ns: report.mean_latency_ns,
                    p50_latency_ns: report.p50_latency_ns,
                    p95_latency_ns: report.p95_latency_ns,
                    p99_latency_ns: report.p99_latency_ns,
                    total_time_ns: report.total_time_ns,
                    seed: report.seed,
                };
                let tiers = handle.set.len();
                if !out_tier_requests.is_null() {
                    std::slice::from_raw_parts_mut(out_tier_requests, tiers)
                        .copy_from_slice(&report.tier_requests);
                }
                if !out_tier_utilization.is_null() {
                    std::slice::from_raw_parts_mut(out_tier_utilization, tiers)
                        .copy_from_slice(&report.tier_utilization);
                }
                MwStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e),
        }
    })
}
