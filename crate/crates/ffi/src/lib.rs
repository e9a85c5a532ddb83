//! C interface to `petz-core`.
//!
//! Every function returns a [`PetzStatus`]; results come back through out
//! pointers. Channels, states and strings handed out by this library are owned
//! by the caller and must be released with the matching `*_free` function.
//! After a failure, [`petz_last_error`] describes it for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use petz_core::channels::{amplitude_damping, compose, phase_damping};
use petz_core::dqc::{plan_dqc, verify};
use petz_core::harness::{channel_from_json, channel_to_json};
use petz_core::linalg::fidelity;
use petz_core::petz::{petz_general_for, ChannelFamily};
use petz_core::{ComplexMatrix, DensityMatrix, Error, KrausChannel, C64};

/// Opaque handle to a quantum channel.
pub struct PetzChannel(KrausChannel);

/// Opaque handle to a density matrix.
pub struct PetzState(DensityMatrix);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    DimensionMismatch = 4,
    NotTracePreserving = 5,
    Unsupported = 6,
    Json = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetzFamily {
    AmplitudeDamping = 0,
    PhaseDamping = 1,
}

/// Family code from C, which may hold any integer.
fn family_from(code: i32) -> Result<ChannelFamily, Fail> {
    match code {
        c if c == PetzFamily::AmplitudeDamping as i32 => Ok(ChannelFamily::Ad),
        c if c == PetzFamily::PhaseDamping as i32 => Ok(ChannelFamily::Pd),
        other => Err(invalid(format!("unknown channel family {other}"))),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> PetzStatus {
    match err {
        Error::OutOfRange { .. } | Error::Config(_) | Error::Parse(_) | Error::BadAxis(_) => PetzStatus::InvalidArgument,
        Error::NotHermitian { .. }
        | Error::NotPsd { .. }
        | Error::ZeroMatrix
        | Error::NotNormalized { .. }
        | Error::InvalidState(_) => PetzStatus::InvalidState,
        Error::DimMismatch { .. } | Error::ShapeMismatch(_) => PetzStatus::DimensionMismatch,
        Error::NotTracePreserving { .. } => PetzStatus::NotTracePreserving,
        Error::NotUnitary { .. } | Error::WNotUnitary { .. } | Error::VColumnZero { .. } | Error::UnsupportedChannel { .. } => {
            PetzStatus::Unsupported
        }
        Error::Json(_) => PetzStatus::Json,
        Error::Io { .. } => PetzStatus::Io,
    }
}

struct Fail(PetzStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(status_of(&e))
    }
}

fn null(what: &str) -> Fail {
    set_error(format!("{what} is null"));
    Fail(PetzStatus::NullPointer)
}

fn invalid(msg: String) -> Fail {
    set_error(msg);
    Fail(PetzStatus::InvalidArgument)
}

/// Runs `f`, converting errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PetzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PetzStatus::Ok
        }
        Ok(Err(Fail(status))) => status,
        Err(_) => {
            set_error("internal panic");
            PetzStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

/// Message for the last failure on this thread, or null after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn petz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Amplitude-damping channel with decay probability `p`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_amplitude_damping(p: f64, out: *mut *mut PetzChannel) -> PetzStatus {
    guard(|| put(out, PetzChannel(amplitude_damping(p)?)))
}

/// Phase-damping channel with strength `p`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_phase_damping(p: f64, out: *mut *mut PetzChannel) -> PetzStatus {
    guard(|| put(out, PetzChannel(phase_damping(p)?)))
}

/// Closed-form recovery map for `family` (a [`PetzFamily`] value) at strength `p` and reference weight `eps`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_recovery(
    family: i32,
    p: f64,
    eps: f64,
    out: *mut *mut PetzChannel,
) -> PetzStatus {
    guard(|| put(out, PetzChannel(family_from(family)?.recovery(p, eps)?)))
}

/// Recovery map built from the general construction rather than the closed form.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_recovery_general(
    family: i32,
    p: f64,
    eps: f64,
    out: *mut *mut PetzChannel,
) -> PetzStatus {
    guard(|| put(out, PetzChannel(petz_general_for(family_from(family)?, p, eps)?)))
}

/// `outer ∘ inner`.
///
/// # Safety
/// `outer` and `inner` must be live channel handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_compose(
    outer: *const PetzChannel,
    inner: *const PetzChannel,
    out: *mut *mut PetzChannel,
) -> PetzStatus {
    guard(|| {
        let (a, b) = (deref(outer, "outer")?, deref(inner, "inner")?);
        put(out, PetzChannel(compose(&a.0, &b.0)?))
    })
}

/// Number of Kraus operators and the input/output dimensions.
///
/// # Safety
/// `channel` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_shape(
    channel: *const PetzChannel,
    kraus_count: *mut usize,
    dim_in: *mut usize,
    dim_out: *mut usize,
) -> PetzStatus {
    guard(|| {
        let ch = &deref(channel, "channel")?.0;
        put_value(kraus_count, ch.len())?;
        put_value(dim_in, ch.dim_in())?;
        put_value(dim_out, ch.dim_out())
    })
}

/// ‖Σ K†K − 1‖_F for the channel.
///
/// # Safety
/// `channel` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_tp_residual(channel: *const PetzChannel, out: *mut f64) -> PetzStatus {
    guard(|| put_value(out, deref(channel, "channel")?.0.tp_residual()))
}

/// Applies `channel` to `state`.
///
/// # Safety
/// `channel` and `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_apply(
    channel: *const PetzChannel,
    state: *const PetzState,
    out: *mut *mut PetzState,
) -> PetzStatus {
    guard(|| {
        let (ch, rho) = (deref(channel, "channel")?, deref(state, "state")?);
        put(out, PetzState(ch.0.apply(&rho.0)?))
    })
}

/// Compiles `channel` to a dilated quantum circuit and reports the Choi
/// distance between the simulated circuit and the channel.
///
/// # Safety
/// `channel` must be a live handle; `distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_dqc_distance(channel: *const PetzChannel, distance: *mut f64) -> PetzStatus {
    guard(|| {
        let ch = &deref(channel, "channel")?.0;
        let prog = plan_dqc(ch)?;
        put_value(distance, verify(&prog, ch)?)
    })
}

/// Parses a channel from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_from_json(json: *const c_char, out: *mut *mut PetzChannel) -> PetzStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| invalid(format!("json is not UTF-8: {e}")))?;
        put(out, PetzChannel(channel_from_json(text)?))
    })
}

/// JSON form of a channel; release the string with [`petz_string_free`].
///
/// # Safety
/// `channel` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_to_json(channel: *const PetzChannel, out: *mut *mut c_char) -> PetzStatus {
    guard(|| {
        let text = channel_to_json(&deref(channel, "channel")?.0)?;
        let c = CString::new(text).map_err(|e| invalid(e.to_string()))?;
        put_value(out, c.into_raw())
    })
}

/// # Safety
/// `channel` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_channel_free(channel: *mut PetzChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Density matrix from row-major real and imaginary parts of a `dim`×`dim` matrix.
///
/// # Safety
/// `re` and `im` must each point to `dim * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_state_new(dim: usize, re: *const f64, im: *const f64, out: *mut *mut PetzState) -> PetzStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("matrix data"));
        }
        if dim == 0 {
            return Err(invalid("dimension must be positive".into()));
        }
        let n = dim.checked_mul(dim).ok_or_else(|| invalid("dimension too large".into()))?;
        let (re, im) = (std::slice::from_raw_parts(re, n), std::slice::from_raw_parts(im, n));
        let data = re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect();
        put(out, PetzState(DensityMatrix::new(ComplexMatrix::from_vec(dim, dim, data)?)?))
    })
}

/// Pure state |ψ⟩⟨ψ| from `dim` amplitudes.
///
/// # Safety
/// `re` and `im` must each point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_state_pure(dim: usize, re: *const f64, im: *const f64, out: *mut *mut PetzState) -> PetzStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("amplitudes"));
        }
        if dim == 0 {
            return Err(invalid("dimension must be positive".into()));
        }
        let (re, im) = (std::slice::from_raw_parts(re, dim), std::slice::from_raw_parts(im, dim));
        let psi: Vec<C64> = re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect();
        put(out, PetzState(DensityMatrix::pure(&psi)?))
    })
}

/// Dimension of a state.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_state_dim(state: *const PetzState, out: *mut usize) -> PetzStatus {
    guard(|| put_value(out, deref(state, "state")?.0.dim()))
}

/// Entry (`row`, `col`) of a state.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_state_entry(
    state: *const PetzState,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> PetzStatus {
    guard(|| {
        let rho = &deref(state, "state")?.0;
        if row >= rho.dim() || col >= rho.dim() {
            return Err(invalid(format!("entry ({row}, {col}) outside a {0}x{0} state", rho.dim())));
        }
        let z = rho.matrix()[(row, col)];
        put_value(re, z.re)?;
        put_value(im, z.im)
    })
}

/// Uhlmann fidelity (squared convention) between two states.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn petz_fidelity(a: *const PetzState, b: *const PetzState, out: *mut f64) -> PetzStatus {
    guard(|| {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        put_value(out, fidelity(&a.0, &b.0)?)
    })
}

/// # Safety
/// `state` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_state_free(state: *mut PetzState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn petz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
