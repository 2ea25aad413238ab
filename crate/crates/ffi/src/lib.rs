//! C ABI over the `xtele` library.
//!
//! Channels are opaque heap handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns an [`XteleStatus`]; on
//! failure a human-readable message is available from
//! [`xtele_last_error_message`] on the same thread. Undefined quantities are
//! reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xtele::channels::{make_pure_channel, x_concurrence, PureChannel, XParams, XState};
use xtele::fidelity::{average_fidelity, Averaging, ClosedForms, OutcomeKind, QuadratureRule, Selection};
use xtele::pipelines::{Channel, Route, Teleportation};
use xtele::thresholds::{compute_thresholds, plain_threshold, Verdict};
use xtele::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XteleStatus {
    Ok = 0,
    NullPointer = 1,
    /// Parameters do not describe a valid channel.
    InvalidChannel = 2,
    /// `r11 = 0` or `alpha = 0`: no extraction unitary exists.
    ExtractionImpossible = 3,
    InvalidArgument = 4,
    /// The selected outcomes never occur, so their fidelity is undefined.
    UndefinedFidelity = 5,
    Internal = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XteleVerdict {
    Classical = 0,
    Quantum = 1,
    Boundary = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XteleMethod {
    ClosedForm = 0,
    Quadrature = 1,
    MonteCarlo = 2,
}

/// Which outcomes an average is taken over.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XteleSelection {
    /// Plain teleportation, no extraction.
    Plain = 0,
    /// Teleportation followed by extraction, all outcomes.
    UseTotal = 1,
    /// Successful extraction only.
    UseSuccess = 2,
    /// Failed extraction only.
    UseFailure = 3,
}

/// Opaque X-state channel.
pub struct XteleXState(XState);

/// Opaque pure channel `alpha|00> + beta|11>`.
pub struct XtelePureChannel(PureChannel);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XteleConcurrence {
    pub c14: f64,
    pub c23: f64,
    pub concurrence: f64,
}

/// Thresholds are NaN and verdicts `Classical` when `r11 = 0`, except for
/// the plain threshold, which is always defined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XteleThresholds {
    pub c14: f64,
    pub c_x_th: f64,
    pub c_x_use_th: f64,
    pub c_x_use_0_th: f64,
    pub quantum_plain: XteleVerdict,
    pub quantum_use_total: XteleVerdict,
    pub quantum_use_filtered: XteleVerdict,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XteleFidelities {
    pub f_x: f64,
    pub f_x_use: f64,
    pub f_x_use_0: f64,
    pub f_x_use_1: f64,
    pub p_qext: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XteleEstimate {
    pub value: f64,
    /// Zero for deterministic methods.
    pub std_error: f64,
    pub n_samples: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &Error) -> XteleStatus {
    match e {
        Error::ExtractionImpossible => XteleStatus::ExtractionImpossible,
        Error::InvalidArgument(_) | Error::Parse(_) => XteleStatus::InvalidArgument,
        Error::NonFinite(_)
        | Error::NonCanonicalAlpha { .. }
        | Error::TraceNotUnit { .. }
        | Error::Negative { .. }
        | Error::NotPositive { .. }
        | Error::PrincipalSubspace { .. }
        | Error::NonCanonicalOrdering { .. }
        | Error::RatioAboveOne { .. } => XteleStatus::InvalidChannel,
        _ => XteleStatus::Internal,
    }
}

fn fail(status: XteleStatus, msg: impl Into<String>) -> XteleStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting panics and errors into status codes.
fn guard(f: impl FnOnce() -> Result<(), XteleStatus>) -> XteleStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XteleStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(XteleStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lift<T>(r: xtele::Result<T>) -> Result<T, XteleStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, XteleStatus> {
    // SAFETY: the caller passes either null or a live pointer from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(XteleStatus::NullPointer, "null pointer argument"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), XteleStatus> {
    if out.is_null() {
        return Err(fail(XteleStatus::NullPointer, "null output pointer"));
    }
    // SAFETY: non-null and, per the caller contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn or_nan(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn verdict(v: Verdict) -> XteleVerdict {
    match v {
        Verdict::Quantum => XteleVerdict::Quantum,
        Verdict::Classical => XteleVerdict::Classical,
        Verdict::Boundary => XteleVerdict::Boundary,
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn xtele_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xtele_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validates an X-state and stores a new handle in `*out`. With `strict`
/// the principal-subspace condition `r11·r44 > r22·r33` is enforced.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn xtele_x_state_new(
    r11: f64,
    r22: f64,
    r33: f64,
    r44: f64,
    r14: f64,
    r23: f64,
    strict: bool,
    out: *mut *mut XteleXState,
) -> XteleStatus {
    guard(|| {
        let params = XParams { r11, r22, r33, r44, r14, r23 };
        let x = lift(XState::new(params, strict))?;
        unsafe { write_out(out, Box::into_raw(Box::new(XteleXState(x)))) }
    })
}

/// # Safety
/// `x` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn xtele_x_state_free(x: *mut XteleXState) {
    if !x.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(x) });
    }
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn xtele_pure_channel_new(alpha: f64, out: *mut *mut XtelePureChannel) -> XteleStatus {
    guard(|| {
        let ch = lift(make_pure_channel(alpha))?;
        unsafe { write_out(out, Box::into_raw(Box::new(XtelePureChannel(ch)))) }
    })
}

/// # Safety
/// `ch` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn xtele_pure_channel_free(ch: *mut XtelePureChannel) {
    if !ch.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(ch) });
    }
}

/// Embeds a pure channel as the X-state `(α², 0, 0, β², αβ, 0)`.
///
/// # Safety
/// `ch` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn xtele_pure_channel_to_x_state(
    ch: *const XtelePureChannel,
    out: *mut *mut XteleXState,
) -> XteleStatus {
    guard(|| {
        let ch = unsafe { deref(ch) }?;
        unsafe { write_out(out, Box::into_raw(Box::new(XteleXState(ch.0.to_x_state())))) }
    })
}

/// # Safety
/// `x` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtele_x_state_concurrence(
    x: *const XteleXState,
    out: *mut XteleConcurrence,
) -> XteleStatus {
    guard(|| {
        let x = unsafe { deref(x) }?;
        let r = x_concurrence(&x.0);
        unsafe {
            write_out(
                out,
                XteleConcurrence {
                    c14: r.c14,
                    c23: r.c23,
                    concurrence: r.concurrence,
                },
            )
        }
    })
}

/// # Safety
/// `x` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtele_x_state_thresholds(
    x: *const XteleXState,
    out: *mut XteleThresholds,
) -> XteleStatus {
    guard(|| {
        let x = unsafe { deref(x) }?;
        let c14 = x_concurrence(&x.0).c14;
        let c_x_th = plain_threshold(&x.0);
        let report = match compute_thresholds(&x.0) {
            Ok(t) => XteleThresholds {
                c14,
                c_x_th,
                c_x_use_th: t.c_x_use_th,
                c_x_use_0_th: t.c_x_use_0_th,
                quantum_plain: verdict(t.quantum_plain),
                quantum_use_total: verdict(t.quantum_use_total),
                quantum_use_filtered: verdict(t.quantum_use_filtered),
            },
            Err(_) => XteleThresholds {
                c14,
                c_x_th,
                c_x_use_th: f64::NAN,
                c_x_use_0_th: f64::NAN,
                quantum_plain: verdict(Verdict::classify(c14, c_x_th)),
                quantum_use_total: XteleVerdict::Classical,
                quantum_use_filtered: XteleVerdict::Classical,
            },
        };
        unsafe { write_out(out, report) }
    })
}

/// Closed-form average fidelities.
///
/// # Safety
/// `x` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtele_x_state_fidelities(
    x: *const XteleXState,
    out: *mut XteleFidelities,
) -> XteleStatus {
    guard(|| {
        let x = unsafe { deref(x) }?;
        let c = ClosedForms::evaluate(&x.0);
        unsafe {
            write_out(
                out,
                XteleFidelities {
                    f_x: c.f_x,
                    f_x_use: or_nan(c.f_x_use),
                    f_x_use_0: or_nan(c.f_x_use_0),
                    f_x_use_1: or_nan(c.f_x_use_1),
                    p_qext: or_nan(c.p_qext),
                },
            )
        }
    })
}

/// Average fidelity of the outcomes in `selection`, by quadrature over
/// the Bloch sphere or by Monte Carlo with `samples` Haar states drawn from
/// `seed`. `ClosedForm` returns the analytic value. Results are identical
/// for identical arguments.
///
/// # Safety
/// `x` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtele_x_state_average_fidelity(
    x: *const XteleXState,
    method: XteleMethod,
    selection: XteleSelection,
    samples: u64,
    seed: u64,
    out: *mut XteleEstimate,
) -> XteleStatus {
    guard(|| {
        let x = unsafe { deref(x) }?.0;
        let estimate = match method {
            XteleMethod::ClosedForm => {
                let c = ClosedForms::evaluate(&x);
                let value = match selection {
                    XteleSelection::Plain => Some(c.f_x),
                    XteleSelection::UseTotal => c.f_x_use,
                    XteleSelection::UseSuccess => c.f_x_use_0,
                    XteleSelection::UseFailure => c.f_x_use_1,
                };
                let value = value.ok_or_else(|| {
                    if x.r11() <= 0.0 {
                        fail(XteleStatus::ExtractionImpossible, Error::ExtractionImpossible.to_string())
                    } else {
                        fail(XteleStatus::UndefinedFidelity, "selected outcomes never occur")
                    }
                })?;
                XteleEstimate {
                    value,
                    std_error: 0.0,
                    n_samples: 0,
                }
            }
            XteleMethod::Quadrature | XteleMethod::MonteCarlo => {
                let averaging = if method == XteleMethod::MonteCarlo {
                    let samples = usize::try_from(samples)
                        .ok()
                        .filter(|&n| n >= 2)
                        .ok_or_else(|| fail(XteleStatus::InvalidArgument, "need at least 2 samples"))?;
                    Averaging::MonteCarlo { samples, seed }
                } else {
                    Averaging::Quadrature(QuadratureRule::default())
                };
                let channel = Channel::X(x);
                let (protocol, sel) = match selection {
                    XteleSelection::Plain => (Teleportation::plain(channel, Route::Simulated), Selection::all()),
                    other => {
                        let p = lift(Teleportation::with_extraction(channel, Route::Simulated))?;
                        let sel = match other {
                            XteleSelection::UseSuccess => Selection::kind(OutcomeKind::Extracted),
                            XteleSelection::UseFailure => Selection::kind(OutcomeKind::Rejected),
                            _ => Selection::all(),
                        };
                        (p, sel)
                    }
                };
                let e = average_fidelity(&protocol, &averaging, sel).map_err(|e| match e {
                    Error::InvalidArgument(msg) => fail(XteleStatus::UndefinedFidelity, msg),
                    other => fail(status_of(&other), other.to_string()),
                })?;
                XteleEstimate {
                    value: e.value,
                    std_error: e.std_error,
                    n_samples: e.n_samples as u64,
                }
            }
        };
        unsafe { write_out(out, estimate) }
    })
}
