//! C ABI for the vcount library.
//!
//! Conventions: every function returns a [`VcountStatus`]; results are
//! returned through out-parameters as heap-allocated JSON strings that the
//! caller releases with [`vcount_string_free`]. Instances are opaque
//! handles released with [`vcount_instance_free`]. On any non-OK status a
//! thread-local message is readable via [`vcount_last_error_message`].
//! Panics are caught at the boundary and reported as `VCOUNT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};
use vcount::approx::{
    confidence_interval, counting_prove, ApproxConfig, PrelimSplits, SplitStrategy,
};
use vcount::decision::{decide, Budget, DEFAULT_LEAF_THRESHOLD};
use vcount::exact::{count_exact, ExactOutcome};
use vcount::oracle::{count_brute, DEFAULT_BRUTE_CAP};
use vcount::property::{parse_property, VerificationInstance};
use vcount::Error;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VcountStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Model, property or configuration rejected; see the error message.
    InvalidInput = 3,
    /// The operation refused to start within the given budget.
    BudgetRefused = 4,
    /// The search hit its time or node limit before finishing.
    Timeout = 5,
    /// A panic was caught at the FFI boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn error_status(e: &Error) -> VcountStatus {
    set_error(&e.to_string());
    match e {
        Error::BudgetRefused(_) => VcountStatus::BudgetRefused,
        _ => VcountStatus::InvalidInput,
    }
}

/// Opaque verification instance: network, discretized domain and
/// postcondition.
pub struct VcountInstance {
    inner: VerificationInstance,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, VcountStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(VcountStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        VcountStatus::InvalidUtf8
    })
}

fn write_json(out: *mut *mut c_char, json: String) -> VcountStatus {
    if out.is_null() {
        set_error("null output argument");
        return VcountStatus::NullArgument;
    }
    let cstring = CString::new(json).expect("serde_json output has no interior NUL");
    unsafe { *out = cstring.into_raw() };
    VcountStatus::Ok
}

fn guarded(f: impl FnOnce() -> VcountStatus) -> VcountStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            VcountStatus::Panic
        }
    }
}

fn budget_ms(time_limit_ms: u64) -> Budget {
    Budget {
        deadline: (time_limit_ms > 0)
            .then(|| Instant::now() + Duration::from_millis(time_limit_ms)),
        node_limit: None,
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn vcount_version() -> *const c_char {
    static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr().cast()
}

/// Message for the most recent error on this thread; valid until the next
/// failing call on the same thread. Do not free.
#[no_mangle]
pub extern "C" fn vcount_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned through a `char **` out-parameter.
///
/// # Safety
/// `ptr` must be null or a pointer previously written by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vcount_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(unsafe { CString::from_raw(ptr) });
    }
}

/// Build an instance from model JSON, property JSON and a grid pitch.
/// On success writes a handle to `out`; release with
/// [`vcount_instance_free`].
///
/// # Safety
/// `model_json` and `property_json` must be null or valid NUL-terminated
/// strings; `out` must be null or a valid pointer to write to.
#[no_mangle]
pub unsafe extern "C" fn vcount_instance_new(
    model_json: *const c_char,
    property_json: *const c_char,
    epsilon: f64,
    out: *mut *mut VcountInstance,
) -> VcountStatus {
    guarded(|| {
        let model = match unsafe { read_str(model_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let property = match unsafe { read_str(property_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        if out.is_null() {
            set_error("null output argument");
            return VcountStatus::NullArgument;
        }
        if epsilon.is_nan() || epsilon <= 0.0 {
            set_error("epsilon must be > 0");
            return VcountStatus::InvalidInput;
        }
        let build = || -> Result<VerificationInstance, Error> {
            let network = vcount::network::parse_json(model)?;
            let spec = parse_property(property, network.output_dim())?;
            let domain = spec.domain(epsilon)?;
            VerificationInstance::new(network, domain, spec.post)
        };
        match build() {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(VcountInstance { inner })) };
                VcountStatus::Ok
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Release an instance handle. Null is a no-op.
///
/// # Safety
/// `inst` must be null or a handle from [`vcount_instance_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn vcount_instance_free(inst: *mut VcountInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

unsafe fn instance_ref<'a>(inst: *const VcountInstance) -> Result<&'a VerificationInstance, VcountStatus> {
    if inst.is_null() {
        set_error("null instance handle");
        return Err(VcountStatus::NullArgument);
    }
    Ok(&unsafe { &*inst }.inner)
}

/// Decide satisfiability of the postcondition over the grid. Writes a
/// verdict JSON `{"kind": "SAT"|"UNSAT"|"TIMEOUT", ...}`; a timeout is
/// reported both in the JSON and as the return status.
///
/// # Safety
/// `inst` must be a live handle; `out_json` must be a valid pointer to
/// write to.
#[no_mangle]
pub unsafe extern "C" fn vcount_verify(
    inst: *const VcountInstance,
    time_limit_ms: u64,
    out_json: *mut *mut c_char,
) -> VcountStatus {
    guarded(|| {
        let instance = match unsafe { instance_ref(inst) } {
            Ok(i) => i,
            Err(status) => return status,
        };
        match decide(instance, budget_ms(time_limit_ms), DEFAULT_LEAF_THRESHOLD) {
            Ok(verdict) => {
                let timed_out =
                    matches!(verdict.kind, vcount::decision::VerdictKind::Timeout);
                let status = write_json(out_json, serde_json::to_string(&verdict).unwrap());
                if status == VcountStatus::Ok && timed_out {
                    set_error("verification hit its time limit");
                    VcountStatus::Timeout
                } else {
                    status
                }
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Exact violation count by bisection. `time_limit_ms` of 0 means
/// unlimited; `leaf_threshold` of 0 selects the default.
///
/// # Safety
/// `inst` must be a live handle; `out_json` must be a valid pointer to
/// write to.
#[no_mangle]
pub unsafe extern "C" fn vcount_count_exact(
    inst: *const VcountInstance,
    time_limit_ms: u64,
    leaf_threshold: u64,
    out_json: *mut *mut c_char,
) -> VcountStatus {
    guarded(|| {
        let instance = match unsafe { instance_ref(inst) } {
            Ok(i) => i,
            Err(status) => return status,
        };
        let leaf = if leaf_threshold == 0 { DEFAULT_LEAF_THRESHOLD } else { leaf_threshold };
        match count_exact(instance, budget_ms(time_limit_ms), leaf) {
            Ok(ExactOutcome::Counted(report)) => {
                write_json(out_json, serde_json::to_string(&report).unwrap())
            }
            Ok(ExactOutcome::Timeout { boxes_explored, .. }) => {
                set_error(&format!(
                    "exact count hit its time limit after {boxes_explored} boxes"
                ));
                VcountStatus::Timeout
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Exact violation count by full enumeration; `cap` of 0 selects the
/// default refusal threshold.
///
/// # Safety
/// `inst` must be a live handle; `out_json` must be a valid pointer to
/// write to.
#[no_mangle]
pub unsafe extern "C" fn vcount_count_brute(
    inst: *const VcountInstance,
    cap: u64,
    out_json: *mut *mut c_char,
) -> VcountStatus {
    guarded(|| {
        let instance = match unsafe { instance_ref(inst) } {
            Ok(i) => i,
            Err(status) => return status,
        };
        let cap = if cap == 0 { DEFAULT_BRUTE_CAP } else { cap };
        match count_brute(instance, cap) {
            Ok(report) => write_json(out_json, serde_json::to_string(&report).unwrap()),
            Err(e) => error_status(&e),
        }
    })
}

/// Randomized bound on the violation rate. `config_json` accepts
/// `{"beta": f, "t": n, "m": n, "seed": n}` plus optional
/// `"prelim_splits"` (int), `"exact_time_limit_ms"`, `"sample_budget"`,
/// `"leaf_threshold"`, `"split_fraction"` and `"upper"` (bool, also
/// computes the upper bound).
///
/// # Safety
/// `inst` must be a live handle; `config_json` must be null or a valid
/// NUL-terminated string; `out_json` must be a valid pointer to write to.
#[no_mangle]
pub unsafe extern "C" fn vcount_count_approx(
    inst: *const VcountInstance,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> VcountStatus {
    guarded(|| {
        let instance = match unsafe { instance_ref(inst) } {
            Ok(i) => i,
            Err(status) => return status,
        };
        let config = match unsafe { read_str(config_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let parsed: serde_json::Value = match serde_json::from_str(config) {
            Ok(v) => v,
            Err(e) => {
                set_error(&format!("config JSON: {e}"));
                return VcountStatus::InvalidInput;
            }
        };
        let field = |name: &str| parsed.get(name).and_then(|v| v.as_u64());
        let (Some(beta), Some(t), Some(m), Some(seed)) = (
            parsed.get("beta").and_then(|v| v.as_f64()),
            field("t"),
            field("m"),
            field("seed"),
        ) else {
            set_error("config JSON requires numeric \"beta\", \"t\", \"m\" and \"seed\"");
            return VcountStatus::InvalidInput;
        };
        let mut cfg = ApproxConfig::new(beta, t, m, seed);
        if let Some(k) = field("prelim_splits") {
            cfg.prelim_splits = PrelimSplits::Fixed(k);
        }
        if let Some(ms) = field("exact_time_limit_ms") {
            cfg.exact_time_limit = Duration::from_millis(ms);
        }
        if let Some(b) = field("sample_budget") {
            cfg.sample_budget = b;
        }
        if let Some(l) = field("leaf_threshold") {
            cfg.leaf_threshold = l;
        }
        if let Some(f) = parsed.get("split_fraction").and_then(|v| v.as_f64()) {
            cfg.strategy = SplitStrategy::FixedFraction(f);
        }
        let upper = parsed.get("upper").and_then(|v| v.as_bool()).unwrap_or(false);
        let run = if upper {
            confidence_interval(instance, &cfg)
        } else {
            counting_prove(instance, &cfg)
        };
        match run {
            Ok(report) => write_json(out_json, serde_json::to_string(&report).unwrap()),
            Err(e) => error_status(&e),
        }
    })
}
