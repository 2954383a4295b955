//! C ABI over `qoptic`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every fallible call returns a
//! [`QopticStatus`]; on failure the message is available from
//! [`qoptic_last_error_message`] on the same thread.
//!
//! Strings are copied into caller buffers: pass `buf = NULL, len = 0` to
//! learn the required size (including the terminating NUL) via `needed`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qoptic::gradients::gradient;
use qoptic::objectives::Objective;
use qoptic::setup_file::Setup;
use qoptic::simulator::{decode, run_from_zero, valid_state_fraction};
use qoptic::{Error, ParamValues};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QopticStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    SetupFile = 3,
    Validation = 4,
    Degenerate = 5,
    OutOfRange = 6,
    NoObjective = 7,
    BufferTooSmall = 8,
    Io = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QopticBackend {
    Qubit = 0,
    Oracle = 1,
}

/// A parsed setup and, when it has one, its compiled objective.
pub struct QopticSetup {
    setup: Setup,
    objective: Option<Objective>,
}

/// A decoded output distribution, sorted by descending probability.
pub struct QopticDistribution {
    rows: Vec<(CString, f64)>,
    valid_fraction: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(e: &Error) -> QopticStatus {
    match e {
        Error::SetupFile(_) => QopticStatus::SetupFile,
        Error::DegenerateFidelity(_) => QopticStatus::Degenerate,
        Error::Io(_) => QopticStatus::Io,
        Error::Config(_) | Error::Lookup(_) | Error::Validation(_) | Error::Binding(_) | Error::Encoding(_) => {
            QopticStatus::Validation
        }
        _ => QopticStatus::Internal,
    }
}

struct Fail(QopticStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QopticStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            QopticStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside qoptic");
            QopticStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(QopticStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(QopticStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn copy_out(s: &CStr, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let bytes = s.to_bytes_with_nul();
    if !needed.is_null() {
        *needed = bytes.len();
    }
    if buf.is_null() && len == 0 {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < bytes.len() {
        return Err(Fail(
            QopticStatus::BufferTooSmall,
            format!("buffer holds {len} bytes, {} needed", bytes.len()),
        ));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
    Ok(())
}

unsafe fn values_at(s: &QopticSetup, x: *const f64, len: usize) -> Result<ParamValues, Fail> {
    if x.is_null() {
        if len != 0 {
            return Err(null("x"));
        }
        return Ok(s.setup.values(None));
    }
    if len != s.setup.params.len() {
        return Err(Fail(
            QopticStatus::OutOfRange,
            format!("expected {} parameter values, got {len}", s.setup.params.len()),
        ));
    }
    Ok(s.setup.values(Some(std::slice::from_raw_parts(x, len))))
}

fn wrap(setup: Setup) -> Result<QopticSetup, Fail> {
    let objective = match setup.objective {
        Some(_) => Some(setup.build_objective(setup.simulation.trotter_steps)?),
        None => None,
    };
    Ok(QopticSetup { setup, objective })
}

/// Parse a setup from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoptic_setup_from_toml(toml: *const c_char, out: *mut *mut QopticSetup) -> QopticStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(toml, "toml")?;
        let handle = wrap(Setup::from_toml_str(text)?)?;
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Load a setup from a file path.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoptic_setup_load(path: *const c_char, out: *mut *mut QopticSetup) -> QopticStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_str(path, "path")?;
        let handle = wrap(Setup::load(path)?)?;
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `setup` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qoptic_setup_free(setup: *mut QopticSetup) {
    if !setup.is_null() {
        drop(Box::from_raw(setup));
    }
}

/// Number of declared parameters, 0 for a NULL handle.
///
/// # Safety
/// `setup` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoptic_setup_param_count(setup: *const QopticSetup) -> usize {
    setup.as_ref().map_or(0, |s| s.setup.params.len())
}

/// Name of parameter `index`, in declaration order.
///
/// # Safety
/// `setup` must be a live handle; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qoptic_setup_param_name(
    setup: *const QopticSetup,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> QopticStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        let (name, _) = s
            .setup
            .params
            .get(index)
            .ok_or_else(|| Fail(QopticStatus::OutOfRange, format!("no parameter {index}")))?;
        let c = CString::new(name.as_str()).map_err(|e| Fail(QopticStatus::Internal, e.to_string()))?;
        copy_out(&c, buf, len, needed)
    })
}

/// Declared initial values.
///
/// # Safety
/// `out` must hold `len` doubles, `len` equal to the parameter count.
#[no_mangle]
pub unsafe extern "C" fn qoptic_setup_param_values(setup: *const QopticSetup, out: *mut f64, len: usize) -> QopticStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != s.setup.params.len() {
            return Err(Fail(QopticStatus::OutOfRange, format!("expected length {}", s.setup.params.len())));
        }
        for (i, (_, v)) in s.setup.params.iter().enumerate() {
            *out.add(i) = *v;
        }
        Ok(())
    })
}

fn objective_of(s: &QopticSetup) -> Result<&Objective, Fail> {
    s.objective
        .as_ref()
        .ok_or_else(|| Fail(QopticStatus::NoObjective, "setup has no objective".into()))
}

/// Objective value at `x` (declared values when `x` is NULL and `len` is 0).
///
/// # Safety
/// `x` must hold `len` doubles; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoptic_evaluate(
    setup: *const QopticSetup,
    x: *const f64,
    len: usize,
    value: *mut f64,
) -> QopticStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        let v = values_at(s, x, len)?;
        *value = objective_of(s)?.evaluate(&v)?.value;
        Ok(())
    })
}

/// Objective value and gradient; `grad` receives one entry per parameter.
///
/// # Safety
/// `x` and `grad` must hold `len` doubles (`x` may be NULL with `len` 0,
/// then `grad` must hold the parameter count); `value` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn qoptic_gradient(
    setup: *const QopticSetup,
    x: *const f64,
    len: usize,
    value: *mut f64,
    grad: *mut f64,
) -> QopticStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if grad.is_null() {
            return Err(null("grad"));
        }
        let v = values_at(s, x, len)?;
        let r = gradient(objective_of(s)?, &s.setup.param_names(), &v, s.setup.simulation.gradient)?;
        if !value.is_null() {
            *value = r.evaluation.value;
        }
        for (i, g) in r.gradient.iter().enumerate() {
            *grad.add(i) = *g;
        }
        Ok(())
    })
}

/// Output distribution over Fock states. `steps` of 0 uses the file's value.
///
/// # Safety
/// `x` must hold `len` doubles or be NULL with `len` 0; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoptic_distribution_compute(
    setup: *const QopticSetup,
    x: *const f64,
    len: usize,
    backend: QopticBackend,
    steps: usize,
    out: *mut *mut QopticDistribution,
) -> QopticStatus {
    guard(|| {
        let s = setup.as_ref().ok_or_else(|| null("setup"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = values_at(s, x, len)?;
        let steps = if steps == 0 { s.setup.simulation.trotter_steps } else { steps };
        let expected = s.setup.expected_photons()?;
        let (dist, valid_fraction) = match backend {
            QopticBackend::Oracle => (s.setup.oracle_distribution(&v)?, 1.0),
            QopticBackend::Qubit => {
                let state = run_from_zero(&s.setup.circuit(steps)?, &v)?;
                let vf = expected.map_or(f64::NAN, |n| valid_state_fraction(&state, &s.setup.layout, n));
                (decode(&state, &s.setup.layout)?, vf)
            }
        };
        let mut rows: Vec<(CString, f64)> = dist
            .iter()
            .map(|(k, p)| (CString::new(s.setup.layout.fock_label(k)).unwrap_or_default(), *p))
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        *out = Box::into_raw(Box::new(QopticDistribution { rows, valid_fraction }));
        Ok(())
    })
}

/// # Safety
/// `dist` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoptic_distribution_len(dist: *const QopticDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.rows.len())
}

/// Probability mass on photon-number-correct states; NaN when undefined.
///
/// # Safety
/// `dist` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qoptic_distribution_valid_fraction(dist: *const QopticDistribution) -> f64 {
    dist.as_ref().map_or(f64::NAN, |d| d.valid_fraction)
}

/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qoptic_distribution_probability(
    dist: *const QopticDistribution,
    index: usize,
    out: *mut f64,
) -> QopticStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let row = d
            .rows
            .get(index)
            .ok_or_else(|| Fail(QopticStatus::OutOfRange, format!("no row {index}")))?;
        *out = row.1;
        Ok(())
    })
}

/// Fock label of row `index`, e.g. `1@(0,a) 2@(0,b)`.
///
/// # Safety
/// `dist` must be a live handle; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qoptic_distribution_label(
    dist: *const QopticDistribution,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> QopticStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        let row = d
            .rows
            .get(index)
            .ok_or_else(|| Fail(QopticStatus::OutOfRange, format!("no row {index}")))?;
        copy_out(&row.0, buf, len, needed)
    })
}

/// # Safety
/// `dist` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qoptic_distribution_free(dist: *mut QopticDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn qoptic_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn qoptic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
