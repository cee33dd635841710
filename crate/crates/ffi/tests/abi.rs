use std::ffi::{c_char, CStr, CString};
use std::ptr;

use absum_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    absum_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = absum_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_owned()
}

#[test]
fn exact_value() {
    unsafe {
        let mut r = ptr::null_mut();
        let x = c("1");
        let st = absum_eval(x.as_ptr(), 2, 2, ptr::null(), 128, 1e-25, &mut r);
        assert_eq!(st, AbsumStatus::Ok);
        assert!(absum_last_error().is_null());
        assert_eq!(take(absum_result_value(r)), "11/18");
        assert!(absum_result_is_exact(r));
        assert_eq!(absum_result_error_bound(r), 0.0);
        assert!((absum_result_real(r) - 11.0 / 18.0).abs() < 1e-16);
        assert_eq!(absum_result_imag(r), 0.0);
        assert!(absum_result_terms_used(r) > 0);
        let json: serde_json::Value = serde_json::from_str(&take(absum_result_json(r))).unwrap();
        assert_eq!(json["value"], "11/18");
        absum_result_free(r);
    }
}

#[test]
fn named_method() {
    unsafe {
        let mut r = ptr::null_mut();
        let (x, method) = (c("1/2"), c("quadrature-6"));
        let st = absum_eval(x.as_ptr(), 3, 1, method.as_ptr(), 128, 1e-25, &mut r);
        assert_eq!(st, AbsumStatus::Ok);
        assert_eq!(CStr::from_ptr(absum_result_method(r)).to_str().unwrap(), "quadrature-6");
        assert!(!absum_result_is_exact(r));
        let bound = absum_result_error_bound(r);
        assert!(bound > 0.0 && bound < 1e-20);
        assert!((absum_result_real(r) - 32.0 / 35.0).abs() < 1e-15);
        absum_result_free(r);
    }
}

#[test]
fn error_statuses() {
    unsafe {
        let mut r = ptr::null_mut();
        let x = c("-2");
        assert_eq!(absum_eval(x.as_ptr(), 3, 1, ptr::null(), 128, 1e-25, &mut r), AbsumStatus::Pole);
        assert!(r.is_null());
        assert!(last_error().contains("pole"));

        let x = c("1");
        let st = absum_eval(x.as_ptr(), 3, 1, ptr::null(), 16, 1e-25, &mut r);
        assert_eq!(st, AbsumStatus::InvalidArgument);

        let bogus = c("no-such-method");
        let st = absum_eval(x.as_ptr(), 3, 1, bogus.as_ptr(), 128, 1e-25, &mut r);
        assert_ne!(st, AbsumStatus::Ok);

        let junk = c("abc");
        let st = absum_eval(junk.as_ptr(), 3, 1, ptr::null(), 128, 1e-25, &mut r);
        assert_eq!(st, AbsumStatus::Parse);
    }
}

#[test]
fn null_pointers() {
    unsafe {
        let mut r = ptr::null_mut();
        let x = c("1");
        assert_eq!(absum_eval(ptr::null(), 3, 1, ptr::null(), 128, 1e-25, &mut r), AbsumStatus::NullPointer);
        assert_eq!(absum_eval(x.as_ptr(), 3, 1, ptr::null(), 128, 1e-25, ptr::null_mut()), AbsumStatus::NullPointer);
        assert_eq!(
            absum_validate(x.as_ptr(), 3, 1, 128, 1e-25, ptr::null_mut(), ptr::null_mut()),
            AbsumStatus::NullPointer
        );
        assert!(absum_result_value(ptr::null()).is_null());
        assert!(absum_result_method(ptr::null()).is_null());
        assert!(absum_result_error_bound(ptr::null()).is_nan());
        absum_result_free(ptr::null_mut());
        absum_string_free(ptr::null_mut());
    }
}

#[test]
fn two_param() {
    unsafe {
        let (x, y) = (c("1"), c("2"));
        for form in [0, 30, 34, 36] {
            let mut r = ptr::null_mut();
            let st = absum_eval_two_param(x.as_ptr(), y.as_ptr(), 1, 1, form, 128, 1e-20, &mut r);
            assert_eq!(st, AbsumStatus::Ok, "form {form}");
            assert!((absum_result_real(r) - 0.5).abs() < 1e-15, "form {form}");
            absum_result_free(r);
        }
        let mut r = ptr::null_mut();
        let st = absum_eval_two_param(x.as_ptr(), y.as_ptr(), 1, 1, 99, 128, 1e-20, &mut r);
        assert_eq!(st, AbsumStatus::InvalidArgument);
    }
}

#[test]
fn validate_report() {
    unsafe {
        let x = c("3/2");
        let mut passed = -1;
        let mut report = ptr::null_mut();
        let st = absum_validate(x.as_ptr(), 4, 3, 128, 1e-25, &mut passed, &mut report);
        assert_eq!(st, AbsumStatus::Ok);
        assert_eq!(passed, 1);
        let doc: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(doc["passed"], true);
        assert!(!doc["entries"].as_array().unwrap().is_empty());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(absum_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/absum.h")).unwrap();
    for name in [
        "absum_eval(",
        "absum_eval_two_param(",
        "absum_validate(",
        "absum_result_value(",
        "absum_result_json(",
        "absum_result_method(",
        "absum_result_is_exact(",
        "absum_result_error_bound(",
        "absum_result_real(",
        "absum_result_imag(",
        "absum_result_terms_used(",
        "absum_result_free(",
        "absum_string_free(",
        "absum_last_error(",
        "absum_version(",
        "ABSUM_STATUS_POLE = 2",
        "typedef struct AbsumResult AbsumResult;",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
