//! Exercises the C ABI exactly as a C caller would: raw pointers, status
//! codes, JSON out-strings and explicit frees.

use serde_json::Value;
use std::ffi::{c_char, CStr, CString};
use std::ptr;
use vcount_ffi::*;

const MODEL: &str = r#"{
  "version": 1,
  "layers": [
    {"weights": [[5.0, -1.0], [-1.0, 3.0]], "biases": [0.0, 0.0], "activation": "relu"},
    {"weights": [[-1.0, 3.0]], "biases": [0.0], "activation": "identity"}
  ]
}"#;

const PROPERTY: &str = r#"{
  "input": [{"lo": 0.0, "hi": 1.0}, {"lo": 0.0, "hi": 1.0}],
  "output_constraints": [[{"coeffs": [1.0], "offset": 0.0, "relation": "LT"}]]
}"#;

fn make_instance(epsilon: f64) -> *mut VcountInstance {
    let model = CString::new(MODEL).unwrap();
    let property = CString::new(PROPERTY).unwrap();
    let mut handle: *mut VcountInstance = ptr::null_mut();
    let status = unsafe {
        vcount_instance_new(model.as_ptr(), property.as_ptr(), epsilon, &mut handle)
    };
    assert_eq!(status, VcountStatus::Ok, "{}", last_error());
    assert!(!handle.is_null());
    handle
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(vcount_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn take_json(ptr: *mut c_char) -> Value {
    assert!(!ptr.is_null());
    let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_owned();
    unsafe { vcount_string_free(ptr) };
    serde_json::from_str(&text).unwrap()
}

#[test]
fn version_is_semver() {
    let v = unsafe { CStr::from_ptr(vcount_version()) }.to_str().unwrap();
    assert!(v.split('.').count() >= 3, "{v}");
}

#[test]
fn exact_count_roundtrip() {
    let inst = make_instance(0.01);
    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe { vcount_count_exact(inst, 0, 0, &mut out) };
    assert_eq!(status, VcountStatus::Ok, "{}", last_error());
    let report = take_json(out);
    assert_eq!(report["total"], "10201");

    let mut brute: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { vcount_count_brute(inst, 0, &mut brute) }, VcountStatus::Ok);
    assert_eq!(take_json(brute)["violations"], report["violations"]);
    unsafe { vcount_instance_free(inst) };
}

#[test]
fn verify_reports_sat_with_witness() {
    let inst = make_instance(0.01);
    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe { vcount_verify(inst, 0, &mut out) };
    assert_eq!(status, VcountStatus::Ok, "{}", last_error());
    let verdict = take_json(out);
    assert_eq!(verdict["kind"], "SAT");
    assert_eq!(verdict["witness"].as_array().unwrap().len(), 2);
    unsafe { vcount_instance_free(inst) };
}

#[test]
fn approx_is_deterministic_for_fixed_seed() {
    let inst = make_instance(0.02);
    let cfg = CString::new(
        r#"{"beta": 0.5, "t": 4, "m": 20, "seed": 9, "prelim_splits": 5, "leaf_threshold": 64}"#,
    )
    .unwrap();
    let run = || {
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { vcount_count_approx(inst, cfg.as_ptr(), &mut out) };
        assert_eq!(status, VcountStatus::Ok, "{}", last_error());
        take_json(out)
    };
    let (a, b) = (run(), run());
    assert_eq!(a["lower_bound"], b["lower_bound"]);
    assert_eq!(a["traces"], b["traces"]);
    assert!(a["confidence"].as_f64().unwrap() > 0.0);
    unsafe { vcount_instance_free(inst) };
}

#[test]
fn approx_upper_bound_mode() {
    let inst = make_instance(0.02);
    let cfg = CString::new(
        r#"{"beta": 0.5, "t": 2, "m": 10, "seed": 1, "prelim_splits": 5, "upper": true}"#,
    )
    .unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { vcount_count_approx(inst, cfg.as_ptr(), &mut out) }, VcountStatus::Ok);
    let report = take_json(out);
    let lower = report["lower_bound"].as_f64().unwrap();
    let upper = report["upper_bound"].as_f64().unwrap();
    assert!(0.0 <= lower && lower <= upper && upper <= 1.0);
    unsafe { vcount_instance_free(inst) };
}

#[test]
fn null_and_garbage_inputs_are_rejected() {
    let mut handle: *mut VcountInstance = ptr::null_mut();
    let status = unsafe { vcount_instance_new(ptr::null(), ptr::null(), 0.1, &mut handle) };
    assert_eq!(status, VcountStatus::NullArgument);

    let garbage = CString::new("not json").unwrap();
    let property = CString::new(PROPERTY).unwrap();
    let status = unsafe {
        vcount_instance_new(garbage.as_ptr(), property.as_ptr(), 0.1, &mut handle)
    };
    assert_eq!(status, VcountStatus::InvalidInput);
    assert!(!last_error().is_empty());

    let model = CString::new(MODEL).unwrap();
    let status = unsafe {
        vcount_instance_new(model.as_ptr(), property.as_ptr(), -1.0, &mut handle)
    };
    assert_eq!(status, VcountStatus::InvalidInput);
}

#[test]
fn timeout_surfaces_as_status() {
    let inst = make_instance(0.0005);
    let mut out: *mut c_char = ptr::null_mut();
    // 4e6 grid points with a 1 ms limit cannot finish
    let status = unsafe { vcount_count_exact(inst, 1, 2, &mut out) };
    assert_eq!(status, VcountStatus::Timeout);
    assert!(out.is_null());
    assert!(last_error().contains("time limit"));
    unsafe { vcount_instance_free(inst) };
}

#[test]
fn bad_approx_config_is_invalid_input() {
    let inst = make_instance(0.1);
    let cfg = CString::new(r#"{"beta": 0.5}"#).unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { vcount_count_approx(inst, cfg.as_ptr(), &mut out) },
        VcountStatus::InvalidInput
    );
    unsafe { vcount_instance_free(inst) };
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        vcount_instance_free(ptr::null_mut());
        vcount_string_free(ptr::null_mut());
    }
}
