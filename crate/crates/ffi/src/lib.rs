//! C interface to `hahnloc`.
//!
//! Models and reports are opaque handles owned by the caller and released
//! with their `_free` function. Strings returned through out-parameters are
//! released with [`hl_string_free`]. Every entry point returns an
//! [`HlStatus`]; on failure [`hl_last_error_message`] describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hahnloc::cli::{self, Command, Format, Report, RunOptions};
use hahnloc::model::{parse_model, ModelDocument};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    /// A report was produced and at least one check failed.
    CheckFailed = 1,
    InvalidInput = 2,
    NullPointer = 3,
    Utf8 = 4,
    Internal = 5,
}

/// A parsed and validated model document.
pub struct HlModel(ModelDocument);

/// The result of running a command on a model.
pub struct HlReport(Report);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HlOptions {
    pub seed: u64,
    pub grid_denominator: u32,
    pub probe_depth: u32,
    pub strict: bool,
    /// Adds run metadata, including a timestamp, to rendered reports.
    pub meta: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `body`, turning panics into `Internal`.
fn guard(body: impl FnOnce() -> Result<HlStatus, (HlStatus, String)>) -> HlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error: the library panicked");
            HlStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, (HlStatus, String)> {
    if text.is_null() {
        return Err((HlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(text).to_str().map_err(|e| (HlStatus::Utf8, format!("{what} is not UTF-8: {e}")))
}

fn into_c_string(text: String) -> Result<*mut c_char, (HlStatus, String)> {
    CString::new(text).map(CString::into_raw).map_err(|_| (HlStatus::Internal, "output contains a NUL byte".to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), (HlStatus, String)> {
    if p.is_null() {
        Err((HlStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Default options: seed 0, grid denominator 64, probe depth 2.
#[no_mangle]
pub extern "C" fn hl_default_options() -> HlOptions {
    let d = RunOptions::default();
    HlOptions {
        seed: d.seed,
        grid_denominator: d.grid_denominator,
        probe_depth: d.probe_depth as u32,
        strict: d.strict,
        meta: d.meta,
    }
}

/// Parses a model document. On `InvalidInput` the error message lists the
/// positioned diagnostics, one per line.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_model_parse(text: *const c_char, out: *mut *mut HlModel) -> HlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let text = read_str(text, "text")?;
        match parse_model(text) {
            Ok(doc) => {
                *out = Box::into_raw(Box::new(HlModel(doc)));
                Ok(HlStatus::Ok)
            }
            Err(diags) => {
                let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
                Err((HlStatus::InvalidInput, lines.join("\n")))
            }
        }
    })
}

/// # Safety
/// `model` must be null or come from [`hl_model_parse`], and not be used again.
#[no_mangle]
pub unsafe extern "C" fn hl_model_free(model: *mut HlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the canonical text of a model.
///
/// # Safety
/// `model` must come from [`hl_model_parse`]; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_model_emit(model: *const HlModel, out: *mut *mut c_char) -> HlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(model, "model")?;
        *out = into_c_string((*model).0.emit())?;
        Ok(HlStatus::Ok)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs a command (`"kraft"`, `"verify-localization"`, ...) on a model.
/// `options` may be null for the defaults. Returns `Ok` or `CheckFailed`
/// with a report, or an error status with `*out` set to null.
///
/// # Safety
/// `model` must come from [`hl_model_parse`], `command` must be a
/// NUL-terminated string, `options` null or valid, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hl_run(
    model: *const HlModel,
    command: *const c_char,
    options: *const HlOptions,
    out: *mut *mut HlReport,
) -> HlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(model, "model")?;
        let command: Command =
            read_str(command, "command")?.parse().map_err(|e: cli::CliError| (HlStatus::InvalidInput, e.to_string()))?;
        let o = if options.is_null() { hl_default_options() } else { *options };
        let opts = RunOptions {
            seed: o.seed,
            grid_denominator: o.grid_denominator,
            strict: o.strict,
            probe_depth: o.probe_depth as usize,
            meta: o.meta,
        };
        let report = cli::run(command, &(*model).0, &opts).map_err(|e| (HlStatus::InvalidInput, e.to_string()))?;
        let status = if report.passed() { HlStatus::Ok } else { HlStatus::CheckFailed };
        *out = Box::into_raw(Box::new(HlReport(report)));
        Ok(status)
    })
}

/// The command-line exit code for a report: 0 pass, 1 check failure.
/// Returns -1 for a null report.
///
/// # Safety
/// `report` must be null or come from [`hl_run`].
#[no_mangle]
pub unsafe extern "C" fn hl_report_exit_code(report: *const HlReport) -> i32 {
    if report.is_null() {
        return -1;
    }
    (*report).0.exit_code()
}

/// Renders a report in the machine format when `machine` is true and the
/// human format otherwise.
///
/// # Safety
/// `report` must come from [`hl_run`]; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_report_text(report: *const HlReport, machine: bool, out: *mut *mut c_char) -> HlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(report, "report")?;
        let format = if machine { Format::Machine } else { Format::Human };
        *out = into_c_string((*report).0.render(format))?;
        Ok(HlStatus::Ok)
    })
}

/// # Safety
/// `report` must be null or come from [`hl_run`], and not be used again.
#[no_mangle]
pub unsafe extern "C" fn hl_report_free(report: *mut HlReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The message for the last failed call on this thread, or null. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
