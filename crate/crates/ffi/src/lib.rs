//! C ABI for `absum`.
//!
//! Every entry point returns an [`AbsumStatus`]. Results come back through
//! opaque [`AbsumResult`] handles released with [`absum_result_free`]; strings
//! returned by the library are released with [`absum_string_free`]. On failure
//! the message is available from [`absum_last_error`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use absum::cli::ResultRecord;
use absum::eval::{cross_validate, evaluate, evaluate_auto, EvalOptions, EvalResult, Method, SumParams};
use absum::extensions::{eval2_quad, eval2_series, TwoParamForm, TwoParamSpec};
use absum::numeric::{PrecisionContext, Scalar};
use absum::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsumStatus {
    Ok = 0,
    InvalidArgument = 1,
    Pole = 2,
    NoConvergence = 3,
    DivisionByZero = 4,
    IdentityViolation = 5,
    ContextMismatch = 6,
    Parse = 7,
    Cache = 8,
    NullPointer = 9,
    Panic = 10,
}

impl From<&Error> for AbsumStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => AbsumStatus::InvalidArgument,
            Error::DivisionByZero => AbsumStatus::DivisionByZero,
            Error::Pole(_) => AbsumStatus::Pole,
            Error::NoConvergence(_) => AbsumStatus::NoConvergence,
            Error::IdentityViolation { .. } => AbsumStatus::IdentityViolation,
            Error::ContextMismatch(..) => AbsumStatus::ContextMismatch,
            Error::Parse(_) => AbsumStatus::Parse,
            Error::Cache(_) => AbsumStatus::Cache,
        }
    }
}

/// Opaque evaluation result.
pub struct AbsumResult {
    inner: EvalResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("no interior nul")));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), AbsumStatus>) -> AbsumStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbsumStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic");
            AbsumStatus::Panic
        }
    }
}

fn fail(e: Error) -> AbsumStatus {
    set_last_error(e.to_string());
    AbsumStatus::from(&e)
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, AbsumStatus> {
    if p.is_null() {
        set_last_error(format!("{what} is null"));
        return Err(AbsumStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        AbsumStatus::Parse
    })
}

unsafe fn read_opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, AbsumStatus> {
    if p.is_null() {
        return Ok(None);
    }
    read_str(p, "string").map(Some)
}

fn options(bits: u32, tol: f64) -> Result<EvalOptions, AbsumStatus> {
    let ctx = PrecisionContext::new(bits).map_err(fail)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(fail(Error::InvalidArgument(format!("tol must lie in (0, 1), got {tol}"))));
    }
    Ok(EvalOptions::new(ctx, tol))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

unsafe fn write_result(out: *mut *mut AbsumResult, r: EvalResult) {
    *out = Box::into_raw(Box::new(AbsumResult { inner: r }));
}

/// Evaluates S(x, N, m). `method` may be null or "auto" for automatic selection.
#[no_mangle]
pub unsafe extern "C" fn absum_eval(
    x: *const c_char,
    n: u64,
    m: u32,
    method: *const c_char,
    bits: u32,
    tol: f64,
    out: *mut *mut AbsumResult,
) -> AbsumStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("out is null");
            return Err(AbsumStatus::NullPointer);
        }
        *out = ptr::null_mut();
        let x = read_str(x, "x")?;
        let method = read_opt_str(method)?;
        let opts = options(bits, tol)?;
        let x = Scalar::parse(x, opts.ctx).map_err(fail)?;
        let p = SumParams::new(x, n, m).map_err(fail)?;
        let r = match method {
            None | Some("auto") => evaluate_auto(&p, &opts),
            Some(id) => id.parse::<Method>().and_then(|meth| evaluate(&p, meth, &opts)),
        }
        .map_err(fail)?;
        write_result(out, r);
        Ok(())
    })
}

/// Evaluates the two-parameter sum S(x, y, m, n). `form` selects the method:
/// 0 series, 30, 34 or 36 for the quadrature forms.
#[no_mangle]
pub unsafe extern "C" fn absum_eval_two_param(
    x: *const c_char,
    y: *const c_char,
    m: u32,
    n: u32,
    form: u32,
    bits: u32,
    tol: f64,
    out: *mut *mut AbsumResult,
) -> AbsumStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("out is null");
            return Err(AbsumStatus::NullPointer);
        }
        *out = ptr::null_mut();
        let opts = options(bits, tol)?;
        let x = Scalar::parse(read_str(x, "x")?, opts.ctx).map_err(fail)?;
        let y = Scalar::parse(read_str(y, "y")?, opts.ctx).map_err(fail)?;
        let spec = TwoParamSpec::new(x, y, m, n).map_err(fail)?;
        let r = match form {
            0 => eval2_series(&spec, opts.tol, opts.max_terms, opts.ctx),
            30 => eval2_quad(&spec, TwoParamForm::Eq30, opts.tol, opts.ctx),
            34 => eval2_quad(&spec, TwoParamForm::Eq34, opts.tol, opts.ctx),
            36 => eval2_quad(&spec, TwoParamForm::Eq36, opts.tol, opts.ctx),
            other => Err(Error::InvalidArgument(format!("unknown form {other}"))),
        }
        .map_err(fail)?;
        write_result(out, r);
        Ok(())
    })
}

/// Cross-validates every applicable method; `passed` receives 1 or 0 and
/// `report_json` (optional) the report document.
#[no_mangle]
pub unsafe extern "C" fn absum_validate(
    x: *const c_char,
    n: u64,
    m: u32,
    bits: u32,
    tol: f64,
    passed: *mut i32,
    report_json: *mut *mut c_char,
) -> AbsumStatus {
    guard(|| {
        if passed.is_null() {
            set_last_error("passed is null");
            return Err(AbsumStatus::NullPointer);
        }
        let opts = options(bits, tol)?;
        let x = Scalar::parse(read_str(x, "x")?, opts.ctx).map_err(fail)?;
        let p = SumParams::new(x, n, m).map_err(fail)?;
        let report = cross_validate(&p, &Method::ALL, &opts).map_err(fail)?;
        *passed = i32::from(report.passed());
        if !report_json.is_null() {
            let entries: Vec<serde_json::Value> = report
                .entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "method": e.method.id(),
                        "status": e.status,
                        "discrepancy": e.discrepancy,
                        "message": e.message,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "passed": report.passed(),
                "reference": ResultRecord::of(&report.reference),
                "entries": entries,
            });
            *report_json = to_c_string(doc.to_string());
        }
        Ok(())
    })
}

/// The value as "p/q", a decimal string or "re+imi". Free with [`absum_string_free`].
#[no_mangle]
pub unsafe extern "C" fn absum_result_value(r: *const AbsumResult) -> *mut c_char {
    match r.as_ref() {
        Some(r) => {
            let digits = r.inner.context.map(PrecisionContext::decimal_digits).unwrap_or(0);
            to_c_string(r.inner.value.render(digits))
        }
        None => ptr::null_mut(),
    }
}

/// The result as a JSON object. Free with [`absum_string_free`].
#[no_mangle]
pub unsafe extern "C" fn absum_result_json(r: *const AbsumResult) -> *mut c_char {
    match r.as_ref() {
        Some(r) => to_c_string(serde_json::to_string(&ResultRecord::of(&r.inner)).expect("serializable")),
        None => ptr::null_mut(),
    }
}

/// Method identifier; static storage, do not free.
#[no_mangle]
pub unsafe extern "C" fn absum_result_method(r: *const AbsumResult) -> *const c_char {
    static IDS: std::sync::OnceLock<Vec<(Method, CString)>> = std::sync::OnceLock::new();
    let ids = IDS.get_or_init(|| {
        Method::ALL
            .into_iter()
            .chain(Method::TWO_PARAM)
            .map(|m| (m, CString::new(m.id()).expect("ascii")))
            .collect()
    });
    match r.as_ref() {
        Some(r) => ids
            .iter()
            .find(|(m, _)| *m == r.inner.method)
            .map_or(ptr::null(), |(_, s)| s.as_ptr()),
        None => ptr::null(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn absum_result_is_exact(r: *const AbsumResult) -> bool {
    r.as_ref().is_some_and(|r| r.inner.exact)
}

/// Absolute error bound; 0 for exact results, NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn absum_result_error_bound(r: *const AbsumResult) -> f64 {
    match r.as_ref() {
        Some(r) => r.inner.error_bound.as_ref().map_or(0.0, |e| e.to_f64()),
        None => f64::NAN,
    }
}

/// Nearest double to the real part.
#[no_mangle]
pub unsafe extern "C" fn absum_result_real(r: *const AbsumResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.value.re(64).to_f64())
}

#[no_mangle]
pub unsafe extern "C" fn absum_result_imag(r: *const AbsumResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.value.im(64).to_f64())
}

#[no_mangle]
pub unsafe extern "C" fn absum_result_terms_used(r: *const AbsumResult) -> u64 {
    r.as_ref().map_or(0, |r| r.inner.terms_used)
}

#[no_mangle]
pub unsafe extern "C" fn absum_result_free(r: *mut AbsumResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

#[no_mangle]
pub unsafe extern "C" fn absum_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn absum_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version; static storage.
#[no_mangle]
pub extern "C" fn absum_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
