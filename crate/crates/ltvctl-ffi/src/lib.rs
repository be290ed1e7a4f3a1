//! C ABI for the ltvctl library.
//!
//! Conventions: every object crosses the boundary as an opaque handle that
//! must be released with its matching `_free` function; fallible calls
//! return an [`LtvStatus`] and leave a message for [`ltv_last_error_message`]
//! on failure; strings returned through out-parameters are owned by the
//! caller and released with [`ltv_string_free`]. Panics are caught at the
//! boundary and reported as `LTV_STATUS_INTERNAL_PANIC`.
//!
//! Numeric values enter and leave as doubles. Handles parsed in rational
//! mode still compute exactly internally (doubles are binary rationals);
//! JSON accessors expose the exact values when they matter.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ltvctl::analysis::{
    decoupling_term, is_completely_controllable, is_completely_observable,
};
use ltvctl::canonical::canonical_transform;
use ltvctl::ct::{discretize, CtSystem};
use ltvctl::error::{Error, ErrorClass};
use ltvctl::io;
use ltvctl::nullify::{nullify_all, nullify_state, NullifyOptions};
use ltvctl::scalar::{Scalar, ScalarMode, Tol};
use ltvctl::system::{simulate, FeedbackSchedule, LtvSystem, SimInput};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum LtvStatus {
    Ok = 0,
    /// Bad input: schema, dimensions, ranges, unparsable numbers.
    InvalidInput = 1,
    /// An algorithm stage could not proceed on valid input.
    AlgorithmFailure = 2,
    NullPointer = 3,
    Utf8Error = 4,
    BufferTooSmall = 5,
    InternalPanic = 6,
}

/// Scalar arithmetic mode for parsed systems.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum LtvScalarMode {
    Rational = 0,
    Float = 1,
}

impl From<LtvScalarMode> for ScalarMode {
    fn from(m: LtvScalarMode) -> ScalarMode {
        match m {
            LtvScalarMode::Rational => ScalarMode::Rational,
            LtvScalarMode::Float => ScalarMode::Float,
        }
    }
}

/// Opaque discrete-time system handle.
pub struct LtvSystemHandle {
    inner: LtvSystem,
}

/// Opaque continuous-time system handle.
pub struct LtvCtSystemHandle {
    inner: CtSystem,
}

/// Opaque feedback-schedule handle.
pub struct LtvScheduleHandle {
    inner: FeedbackSchedule,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_of(err: &Error) -> LtvStatus {
    match err.class() {
        ErrorClass::Validation => LtvStatus::InvalidInput,
        ErrorClass::Algorithm => LtvStatus::AlgorithmFailure,
    }
}

fn fail(err: Error) -> LtvStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Run a closure, translating panics into a status.
fn guarded<F: FnOnce() -> LtvStatus>(f: F) -> LtvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            LtvStatus::InternalPanic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, LtvStatus> {
    if ptr.is_null() {
        set_error("null string pointer".into());
        return Err(LtvStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8".into());
        LtvStatus::Utf8Error
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> LtvStatus {
    let cstring = match CString::new(text) {
        Ok(s) => s,
        Err(_) => {
            set_error("output contained an interior NUL".into());
            return LtvStatus::InternalPanic;
        }
    };
    unsafe { *out = cstring.into_raw() };
    LtvStatus::Ok
}

macro_rules! require {
    ($ptr:expr, $name:literal) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer: ", $name).into());
            return LtvStatus::NullPointer;
        }
    };
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ltv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread; valid until the next
/// failing call. Do not free. Null when no error has occurred yet.
#[no_mangle]
pub extern "C" fn ltv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Release a string returned through an out-parameter.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ltv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a discrete-time system JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_parse_json(
    json: *const c_char,
    mode: LtvScalarMode,
    out: *mut *mut LtvSystemHandle,
) -> LtvStatus {
    guarded(|| {
        require!(out, "out");
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match io::load_system_str(text, mode.into()) {
            Ok(io::LoadedSystem::Discrete(inner)) => {
                *out = Box::into_raw(Box::new(LtvSystemHandle { inner }));
                LtvStatus::Ok
            }
            Ok(io::LoadedSystem::Continuous(_)) => {
                set_error("document is a continuous-time system; use ltv_ct_system_parse_json".into());
                LtvStatus::InvalidInput
            }
            Err(e) => fail(e),
        }
    })
}

/// Serialize a system back to its JSON document.
///
/// # Safety
/// `handle` must be live; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_to_json(
    handle: *const LtvSystemHandle,
    out_json: *mut *mut c_char,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out_json, "out_json");
        give_string(io::discrete_to_json_string(&(*handle).inner), out_json)
    })
}

/// # Safety
/// `handle` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_free(handle: *mut LtvSystemHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `handle` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_dim(handle: *const LtvSystemHandle) -> usize {
    if handle.is_null() {
        0
    } else {
        (*handle).inner.dim()
    }
}

fn state_from_doubles(values: &[f64], mode: ScalarMode) -> Result<Vec<Scalar>, Error> {
    values.iter().map(|&v| Scalar::from_f64(v, mode)).collect()
}

/// Simulate `steps` zero-input steps from `(k0, x0)` and write the
/// trajectory row-major into `out_states` ((steps + 1) * n doubles).
///
/// # Safety
/// `x0` must point to `n` doubles and `out_states` to `(steps + 1) * n`.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_simulate(
    handle: *const LtvSystemHandle,
    k0: i64,
    x0: *const f64,
    n: usize,
    steps: usize,
    out_states: *mut f64,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(x0, "x0");
        require!(out_states, "out_states");
        let sys = &(*handle).inner;
        if n != sys.dim() {
            set_error(format!("state dimension {n} does not match the system ({})", sys.dim()));
            return LtvStatus::InvalidInput;
        }
        let x0 = match state_from_doubles(std::slice::from_raw_parts(x0, n), sys.mode()) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        match simulate(sys, k0, &x0, &SimInput::Free { steps }) {
            Ok(traj) => {
                let out = std::slice::from_raw_parts_mut(out_states, (steps + 1) * n);
                for (t, state) in traj.states.iter().enumerate() {
                    for (i, value) in state.iter().enumerate() {
                        out[t * n + i] = value.to_f64();
                    }
                }
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Closed-loop simulation under a schedule; trajectory layout as in
/// [`ltv_system_simulate`] with `steps = ltv_schedule_len(schedule)`.
///
/// # Safety
/// Pointer contracts as in [`ltv_system_simulate`]; `schedule` must be live.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_simulate_feedback(
    handle: *const LtvSystemHandle,
    schedule: *const LtvScheduleHandle,
    x0: *const f64,
    n: usize,
    out_states: *mut f64,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(schedule, "schedule");
        require!(x0, "x0");
        require!(out_states, "out_states");
        let sys = &(*handle).inner;
        let sched = &(*schedule).inner;
        if n != sys.dim() {
            set_error(format!("state dimension {n} does not match the system ({})", sys.dim()));
            return LtvStatus::InvalidInput;
        }
        let x0 = match state_from_doubles(std::slice::from_raw_parts(x0, n), sys.mode()) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        match simulate(sys, sched.k_start, &x0, &SimInput::Feedback(sched.clone())) {
            Ok(traj) => {
                let out = std::slice::from_raw_parts_mut(out_states, (sched.len() + 1) * n);
                for (t, state) in traj.states.iter().enumerate() {
                    for (i, value) in state.iter().enumerate() {
                        out[t * n + i] = value.to_f64();
                    }
                }
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Whether every controllability matrix on `[k_lo, k_hi]` is nonsingular.
///
/// # Safety
/// `handle` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_is_completely_controllable(
    handle: *const LtvSystemHandle,
    k_lo: i64,
    k_hi: i64,
    out: *mut bool,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out, "out");
        match is_completely_controllable(&(*handle).inner, k_lo, k_hi, &Tol::default()) {
            Ok(verdict) => {
                *out = verdict.verdict;
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Whether every observability matrix on `[k_lo, k_hi]` is nonsingular.
///
/// # Safety
/// `handle` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_is_completely_observable(
    handle: *const LtvSystemHandle,
    k_lo: i64,
    k_hi: i64,
    out: *mut bool,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out, "out");
        match is_completely_observable(&(*handle).inner, k_lo, k_hi, &Tol::default()) {
            Ok(verdict) => {
                *out = verdict.verdict;
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// The scalar `c_k adj(A_k) b_k` as a double.
///
/// # Safety
/// `handle` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_system_decoupling_term(
    handle: *const LtvSystemHandle,
    k: i64,
    out: *mut f64,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out, "out");
        match decoupling_term(&(*handle).inner, k) {
            Ok(value) => {
                *out = value.to_f64();
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Controller canonical form on `[k_lo, k_hi]`. On success `out_system`
/// owns the canonical system; when `out_transform_json` is non-null it
/// receives the transform document.
///
/// # Safety
/// `handle` must be live; out-pointers must be valid (`out_transform_json`
/// may be null).
#[no_mangle]
pub unsafe extern "C" fn ltv_canonical_transform(
    handle: *const LtvSystemHandle,
    k_lo: i64,
    k_hi: i64,
    out_system: *mut *mut LtvSystemHandle,
    out_transform_json: *mut *mut c_char,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out_system, "out_system");
        match canonical_transform(&(*handle).inner, k_lo, k_hi, &Tol::default()) {
            Ok(dec) => {
                if !out_transform_json.is_null() {
                    let status = give_string(
                        io::transform_to_json_string(&dec.transform),
                        out_transform_json,
                    );
                    if status != LtvStatus::Ok {
                        return status;
                    }
                }
                *out_system = Box::into_raw(Box::new(LtvSystemHandle { inner: dec.canonical }));
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Memoryless output-feedback schedule driving `(k, x0)` to the origin.
///
/// # Safety
/// `handle` must be live, `x0` must point to `n` doubles, `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_nullify_state(
    handle: *const LtvSystemHandle,
    k: i64,
    x0: *const f64,
    n: usize,
    seed: u64,
    out: *mut *mut LtvScheduleHandle,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(x0, "x0");
        require!(out, "out");
        let sys = &(*handle).inner;
        if n != sys.dim() {
            set_error(format!("state dimension {n} does not match the system ({})", sys.dim()));
            return LtvStatus::InvalidInput;
        }
        let x0 = match state_from_doubles(std::slice::from_raw_parts(x0, n), sys.mode()) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let opts = NullifyOptions { seed, ..Default::default() };
        match nullify_state(sys, k, &x0, &opts) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(LtvScheduleHandle { inner: outcome.schedule }));
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Schedule nullifying every initial state at time `k`.
///
/// # Safety
/// `handle` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_nullify_all(
    handle: *const LtvSystemHandle,
    k: i64,
    seed: u64,
    out: *mut *mut LtvScheduleHandle,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out, "out");
        let opts = NullifyOptions { seed, ..Default::default() };
        match nullify_all(&(*handle).inner, k, &opts) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(LtvScheduleHandle { inner: outcome.schedule }));
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `handle` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ltv_schedule_k_start(handle: *const LtvScheduleHandle) -> i64 {
    if handle.is_null() {
        0
    } else {
        (*handle).inner.k_start
    }
}

/// # Safety
/// `handle` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ltv_schedule_len(handle: *const LtvScheduleHandle) -> usize {
    if handle.is_null() {
        0
    } else {
        (*handle).inner.len()
    }
}

/// Copy the gains as doubles into a caller buffer of capacity `cap`.
///
/// # Safety
/// `out` must point to at least `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltv_schedule_gains(
    handle: *const LtvScheduleHandle,
    out: *mut f64,
    cap: usize,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out, "out");
        let gains = &(*handle).inner.gains;
        if cap < gains.len() {
            set_error(format!("buffer holds {cap} values, schedule has {}", gains.len()));
            return LtvStatus::BufferTooSmall;
        }
        let out = std::slice::from_raw_parts_mut(out, gains.len());
        for (slot, gain) in out.iter_mut().zip(gains) {
            *slot = gain.to_f64();
        }
        LtvStatus::Ok
    })
}

/// Exact schedule document (rationals preserved as `p/q` strings).
///
/// # Safety
/// `handle` must be live; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_schedule_to_json(
    handle: *const LtvScheduleHandle,
    out_json: *mut *mut c_char,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out_json, "out_json");
        give_string(io::schedule_to_json_string(&(*handle).inner), out_json)
    })
}

/// # Safety
/// `handle` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ltv_schedule_free(handle: *mut LtvScheduleHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Parse a continuous-time system JSON document (expression strings).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_ct_system_parse_json(
    json: *const c_char,
    out: *mut *mut LtvCtSystemHandle,
) -> LtvStatus {
    guarded(|| {
        require!(out, "out");
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match io::load_system_str(text, ScalarMode::Float) {
            Ok(io::LoadedSystem::Continuous(inner)) => {
                *out = Box::into_raw(Box::new(LtvCtSystemHandle { inner }));
                LtvStatus::Ok
            }
            Ok(io::LoadedSystem::Discrete(_)) => {
                set_error("document is a discrete-time system; use ltv_system_parse_json".into());
                LtvStatus::InvalidInput
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `handle` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ltv_ct_system_free(handle: *mut LtvCtSystemHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Zero-order-hold sample a continuous-time system over `[k_lo, k_hi]` with
/// period `delta` and integrator tolerance `tol`; the result is a float-mode
/// discrete system handle.
///
/// # Safety
/// `handle` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ltv_ct_discretize(
    handle: *const LtvCtSystemHandle,
    delta: f64,
    k_lo: i64,
    k_hi: i64,
    tol: f64,
    out: *mut *mut LtvSystemHandle,
) -> LtvStatus {
    guarded(|| {
        require!(handle, "handle");
        require!(out, "out");
        match discretize(&(*handle).inner, delta, k_lo, k_hi, tol) {
            Ok(sampled) => {
                *out = Box::into_raw(Box::new(LtvSystemHandle { inner: sampled.system }));
                LtvStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYSTEM: &str = r#"{
        "n": 2, "k_min": 0, "k_max": 0, "extension": {"periodic": 1},
        "steps": [
            {"k": 0, "A": [["0", "1"], ["3", "2"]], "b": ["0", "1"], "c": ["1", "2"]}
        ]
    }"#;

    fn cstr(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    unsafe fn parse(text: &str) -> *mut LtvSystemHandle {
        let json = cstr(text);
        let mut handle: *mut LtvSystemHandle = std::ptr::null_mut();
        let status = ltv_system_parse_json(json.as_ptr(), LtvScalarMode::Rational, &mut handle);
        assert!(status == LtvStatus::Ok);
        handle
    }

    #[test]
    fn parse_inspect_round_trip() {
        unsafe {
            let handle = parse(SYSTEM);
            assert_eq!(ltv_system_dim(handle), 2);

            let mut controllable = false;
            assert!(
                ltv_system_is_completely_controllable(handle, 0, 3, &mut controllable)
                    == LtvStatus::Ok
            );
            assert!(controllable);

            let mut observable = false;
            assert!(
                ltv_system_is_completely_observable(handle, 0, 3, &mut observable)
                    == LtvStatus::Ok
            );
            assert!(observable);

            let mut dec = 0.0f64;
            assert!(ltv_system_decoupling_term(handle, 0, &mut dec) == LtvStatus::Ok);
            assert_eq!(dec, -1.0);

            let mut json: *mut c_char = std::ptr::null_mut();
            assert!(ltv_system_to_json(handle, &mut json) == LtvStatus::Ok);
            let round = CStr::from_ptr(json).to_str().unwrap().to_owned();
            ltv_string_free(json);
            assert!(round.contains("\"steps\""));

            ltv_system_free(handle);
        }
    }

    #[test]
    fn nullify_through_the_boundary_reaches_zero() {
        unsafe {
            let handle = parse(SYSTEM);
            let x0 = [1.0f64, 0.0];
            let mut schedule: *mut LtvScheduleHandle = std::ptr::null_mut();
            let status = ltv_nullify_state(handle, 0, x0.as_ptr(), 2, 0, &mut schedule);
            assert!(status == LtvStatus::Ok, "{:?}", last_error());

            let len = ltv_schedule_len(schedule);
            assert!(len >= 1 && len <= 14);
            assert_eq!(ltv_schedule_k_start(schedule), 0);

            let mut gains = vec![0.0f64; len];
            assert!(ltv_schedule_gains(schedule, gains.as_mut_ptr(), len) == LtvStatus::Ok);
            let mut tiny = vec![0.0f64; 0];
            assert!(
                ltv_schedule_gains(schedule, tiny.as_mut_ptr(), 0) == LtvStatus::BufferTooSmall
            );

            let mut states = vec![f64::NAN; (len + 1) * 2];
            assert!(
                ltv_system_simulate_feedback(handle, schedule, x0.as_ptr(), 2, states.as_mut_ptr())
                    == LtvStatus::Ok
            );
            assert_eq!(states[len * 2], 0.0);
            assert_eq!(states[len * 2 + 1], 0.0);

            let mut json: *mut c_char = std::ptr::null_mut();
            assert!(ltv_schedule_to_json(schedule, &mut json) == LtvStatus::Ok);
            ltv_string_free(json);

            ltv_schedule_free(schedule);
            ltv_system_free(handle);
        }
    }

    #[test]
    fn canonical_transform_returns_a_new_handle() {
        unsafe {
            let handle = parse(SYSTEM);
            let mut canonical: *mut LtvSystemHandle = std::ptr::null_mut();
            let mut transform: *mut c_char = std::ptr::null_mut();
            let status = ltv_canonical_transform(handle, 0, 3, &mut canonical, &mut transform);
            assert!(status == LtvStatus::Ok, "{:?}", last_error());
            assert_eq!(ltv_system_dim(canonical), 2);
            let doc = CStr::from_ptr(transform).to_str().unwrap();
            assert!(doc.contains("\"range\""));
            ltv_string_free(transform);
            ltv_system_free(canonical);
            ltv_system_free(handle);
        }
    }

    #[test]
    fn continuous_parse_and_discretize() {
        unsafe {
            let json = cstr(r#"{"n": 2, "A": [["0","1"],["-1","0"]], "b": ["0","1"], "c": ["1","0"]}"#);
            let mut ct: *mut LtvCtSystemHandle = std::ptr::null_mut();
            assert!(ltv_ct_system_parse_json(json.as_ptr(), &mut ct) == LtvStatus::Ok);
            let mut sampled: *mut LtvSystemHandle = std::ptr::null_mut();
            let status = ltv_ct_discretize(ct, 0.5, 0, 1, 1e-10, &mut sampled);
            assert!(status == LtvStatus::Ok, "{:?}", last_error());
            assert_eq!(ltv_system_dim(sampled), 2);
            ltv_system_free(sampled);
            ltv_ct_system_free(ct);
        }
    }

    #[test]
    fn errors_set_status_and_message() {
        unsafe {
            let mut handle: *mut LtvSystemHandle = std::ptr::null_mut();
            let junk = cstr("{\"n\": 1}");
            let status =
                ltv_system_parse_json(junk.as_ptr(), LtvScalarMode::Rational, &mut handle);
            assert!(status == LtvStatus::InvalidInput);
            assert!(last_error().is_some());

            let status = ltv_system_parse_json(
                std::ptr::null(),
                LtvScalarMode::Rational,
                &mut handle,
            );
            assert!(status == LtvStatus::NullPointer);

            // Algorithm failures map to their own status: a vanishing
            // decoupling term rejects nullification.
            let degenerate = cstr(
                r#"{
                    "n": 2, "k_min": 0, "k_max": 0, "extension": {"periodic": 1},
                    "steps": [
                        {"k": 0, "A": [["0","1"],["3","2"]], "b": ["0","1"], "c": ["0","1"]}
                    ]
                }"#,
            );
            let status =
                ltv_system_parse_json(degenerate.as_ptr(), LtvScalarMode::Rational, &mut handle);
            assert!(status == LtvStatus::Ok);
            let x0 = [1.0f64, 0.0];
            let mut schedule: *mut LtvScheduleHandle = std::ptr::null_mut();
            let status = ltv_nullify_state(handle, 0, x0.as_ptr(), 2, 0, &mut schedule);
            assert!(status == LtvStatus::AlgorithmFailure);
            assert!(last_error().unwrap().contains("decoupling"));
            ltv_system_free(handle);
        }
    }

    fn last_error() -> Option<String> {
        let ptr = ltv_last_error_message();
        if ptr.is_null() {
            return None;
        }
        unsafe { Some(CStr::from_ptr(ptr).to_str().unwrap().to_owned()) }
    }
}
