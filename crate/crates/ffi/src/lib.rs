//! C ABI for `gaussconvex`.
//!
//! Bodies and transforms cross the boundary as opaque handles created by a
//! `*_parse` function and released by the matching `*_free`. Every fallible
//! call returns a [`GcStatus`]; on failure the message is kept per thread
//! and can be copied out with [`gc_last_error`]. Output pointers are written
//! only on success. Panics are caught and reported as `GC_STATUS_PANIC`.

use gaussconvex::body::{parse as parse_body, SupportBody};
use gaussconvex::cli::parse_transform;
use gaussconvex::gaussmoments::{measure, SphereRule};
use gaussconvex::transform::Transform;
use gaussconvex::verify::{self, Verdict};
use gaussconvex::{cylinder, specfun, torsion, Error};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad text, parameter or dimension.
    InvalidArgument = 2,
    /// A numerical routine missed its tolerance.
    NumericalFailure = 3,
    Unsupported = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcVerdict {
    ConcaveWithinTol = 0,
    Violation = 1,
    Inconclusive = 2,
}

/// Spherical quadrature settings; see [`gc_rule_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcRule {
    pub tol: f64,
    pub max_panels: usize,
    pub mc_directions: usize,
    pub seed: u64,
    pub fail_tol: f64,
}

/// A value and its absolute error bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcEstimate {
    pub value: f64,
    pub err: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcConcavity {
    pub max_second_difference: f64,
    pub budget: f64,
    pub worst_ratio: f64,
    pub worst_t: f64,
    pub verdict: GcVerdict,
}

/// Opaque convex body.
pub struct GcBody(SupportBody);

/// Opaque concavity transform.
pub struct GcTransform(Transform);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GcStatus {
    match e {
        Error::NumericalFailure { .. } => GcStatus::NumericalFailure,
        Error::Unsupported(_) => GcStatus::Unsupported,
        _ => GcStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), GcStatus>) -> GcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            GcStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside gaussconvex".into());
            GcStatus::Panic
        }
    }
}

fn lift<T>(r: gaussconvex::Result<T>) -> Result<T, GcStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> GcStatus {
    set_error("null pointer argument".into());
    GcStatus::NullPointer
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, GcStatus> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        GcStatus::InvalidArgument
    })
}

unsafe fn rule_of(p: *const GcRule) -> SphereRule {
    if p.is_null() {
        SphereRule::default()
    } else {
        let r = &*p;
        SphereRule {
            tol: r.tol,
            max_panels: r.max_panels,
            mc_directions: r.mc_directions,
            seed: r.seed,
            fail_tol: r.fail_tol,
        }
    }
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), GcStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns its full length.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn gc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

#[no_mangle]
pub extern "C" fn gc_rule_default() -> GcRule {
    let r = SphereRule::default();
    GcRule {
        tol: r.tol,
        max_panels: r.max_panels,
        mc_directions: r.mc_directions,
        seed: r.seed,
        fail_tol: r.fail_tol,
    }
}

/// Parses a body in the one-line grammar; `n = 0` takes the dimension from
/// the text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_body_parse(
    text_: *const c_char,
    n: usize,
    out: *mut *mut GcBody,
) -> GcStatus {
    guard(|| {
        let b = lift(parse_body(text(text_)?, n))?;
        put(out, Box::into_raw(Box::new(GcBody(b))))
    })
}

/// # Safety
/// `body` must come from [`gc_body_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_body_free(body: *mut GcBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Dimension of `body`, or 0 for null.
///
/// # Safety
/// `body` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gc_body_dim(body: *const GcBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.dim())
}

/// Gaussian measure of `body`; `rule` may be null for defaults.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_measure(
    body: *const GcBody,
    rule: *const GcRule,
    out: *mut GcEstimate,
) -> GcStatus {
    guard(|| {
        let b = body.as_ref().ok_or_else(null)?;
        let e = lift(measure(&b.0, &rule_of(rule)))?;
        put(
            out,
            GcEstimate {
                value: e.value,
                err: e.err,
            },
        )
    })
}

/// Parses `psi_inv`, `phi_inv`, `power:p=..`, `conjecture_F:c0=..`,
/// `weak_F:c0=..` or `bad_func`; `n` is used by the last three.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_transform_parse(
    text_: *const c_char,
    n: usize,
    out: *mut *mut GcTransform,
) -> GcStatus {
    guard(|| {
        let t = lift(parse_transform(text(text_)?, n))?;
        put(out, Box::into_raw(Box::new(GcTransform(t))))
    })
}

/// # Safety
/// `t` must come from [`gc_transform_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_transform_free(t: *mut GcTransform) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Transform value at measure `a`.
///
/// # Safety
/// `t` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_transform_apply(
    t: *const GcTransform,
    a: f64,
    out: *mut GcEstimate,
) -> GcStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(null)?;
        let v = lift(t.0.apply(a))?;
        put(
            out,
            GcEstimate {
                value: v.value,
                err: v.err,
            },
        )
    })
}

/// Concavity of `t -> F(gamma((1-t) K + t L))` on `grid_points` interior
/// points of a uniform grid (at least 9).
///
/// # Safety
/// Handles must be live; `rule` may be null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_concavity_check(
    transform: *const GcTransform,
    k: *const GcBody,
    l: *const GcBody,
    grid_points: usize,
    rule: *const GcRule,
    out: *mut GcConcavity,
) -> GcStatus {
    guard(|| {
        let t = transform.as_ref().ok_or_else(null)?;
        let (k, l) = (k.as_ref().ok_or_else(null)?, l.as_ref().ok_or_else(null)?);
        let r = lift(verify::concavity_check(
            &t.0,
            &k.0,
            &l.0,
            &verify::t_grid(grid_points),
            &rule_of(rule),
        ))?;
        put(
            out,
            GcConcavity {
                max_second_difference: r.max_second_difference,
                budget: r.budget,
                worst_ratio: r.worst_ratio,
                worst_t: r.worst_t,
                verdict: match r.verdict {
                    Verdict::ConcaveWithinTol => GcVerdict::ConcaveWithinTol,
                    Verdict::Violation => GcVerdict::Violation,
                    Verdict::Inconclusive => GcVerdict::Inconclusive,
                },
            },
        )
    })
}

/// Normal distribution function.
#[no_mangle]
pub extern "C" fn gc_psi(t: f64) -> f64 {
    specfun::psi(t)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_psi_inv(a: f64, out: *mut f64) -> GcStatus {
    guard(|| put(out, lift(specfun::psi_inv(a))?))
}

/// Inverse of `erf(t / sqrt 2)`, the half-width of a strip of measure `a`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_phi_inv(a: f64, out: *mut f64) -> GcStatus {
    guard(|| put(out, lift(specfun::phi_inv(a))?))
}

/// Concavity power of the round `k`-cylinder of measure `a`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_cylinder_ps(k: usize, a: f64, out: *mut f64) -> GcStatus {
    guard(|| put(out, lift(cylinder::ps_cylinder(k, a))?))
}

/// Torsional rigidity (source 1) of a half-space of measure `a`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_torsion_halfspace(a: f64, out: *mut GcEstimate) -> GcStatus {
    guard(|| {
        let t = lift(torsion::torsion_halfspace(a))?;
        put(
            out,
            GcEstimate {
                value: t.value,
                err: t.err,
            },
        )
    })
}
