use gaussconvex_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn body(text: &str, n: usize) -> *mut GcBody {
    let s = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { gc_body_parse(s.as_ptr(), n, &mut out) },
        GcStatus::Ok
    );
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { gc_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(gc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn measure_of_strip_matches_erf() {
    let b = body("strip:w=0.8", 2);
    assert_eq!(unsafe { gc_body_dim(b) }, 2);
    let mut e = GcEstimate {
        value: 0.0,
        err: 0.0,
    };
    assert_eq!(unsafe { gc_measure(b, ptr::null(), &mut e) }, GcStatus::Ok);
    assert!((e.value - erf_series(0.8 / 2f64.sqrt())).abs() < 1e-14);
    unsafe { gc_body_free(b) };
}

// Maclaurin series of erf, independent of the library.
fn erf_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = x;
    for k in 0..60 {
        sum += term / (2 * k + 1) as f64;
        term *= -x * x / (k + 1) as f64;
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn errors_are_codes_with_messages() {
    let s = CString::new("ball:R=-1").unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { gc_body_parse(s.as_ptr(), 2, &mut out) };
    assert_eq!(st, GcStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let mut x = 0.0;
    assert_eq!(
        unsafe { gc_psi_inv(1.5, &mut x) },
        GcStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { gc_psi_inv(0.5, ptr::null_mut()) },
        GcStatus::NullPointer
    );
    assert_eq!(
        unsafe { gc_body_parse(ptr::null(), 2, &mut out) },
        GcStatus::NullPointer
    );
    assert_eq!(
        unsafe { gc_measure(ptr::null(), ptr::null(), ptr::null_mut()) },
        GcStatus::NullPointer
    );
    assert_eq!(unsafe { gc_body_dim(ptr::null()) }, 0);
    unsafe { gc_body_free(ptr::null_mut()) };
    unsafe { gc_transform_free(ptr::null_mut()) };
}

#[test]
fn last_error_truncates_and_reports_length() {
    let mut x = 0.0;
    assert_ne!(unsafe { gc_phi_inv(-1.0, &mut x) }, GcStatus::Ok);
    let full = unsafe { gc_last_error(ptr::null_mut(), 0) };
    let mut buf = [0 as c_char; 8];
    assert_eq!(unsafe { gc_last_error(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn scalar_functions() {
    let mut x = 0.0;
    assert_eq!(unsafe { gc_psi_inv(0.975, &mut x) }, GcStatus::Ok);
    assert!((gc_psi(x) - 0.975).abs() < 1e-15);
    assert_eq!(
        unsafe { gc_cylinder_ps(2, 1.0 - (-0.5f64).exp(), &mut x) },
        GcStatus::Ok
    );
    assert!((x - 1.0).abs() < 1e-9, "{x}");
    let mut e = GcEstimate {
        value: 0.0,
        err: 0.0,
    };
    assert_eq!(unsafe { gc_torsion_halfspace(0.5, &mut e) }, GcStatus::Ok);
    assert!(e.value > 0.0 && e.err < 1e-10);
}

#[test]
fn concavity_through_handles() {
    let k = body("box:a=0.5/1.5", 0);
    let l = body("ball:R=1", 2);
    let s = CString::new("psi_inv").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { gc_transform_parse(s.as_ptr(), 2, &mut t) },
        GcStatus::Ok
    );
    let mut v = GcEstimate {
        value: 0.0,
        err: 0.0,
    };
    assert_eq!(unsafe { gc_transform_apply(t, 0.5, &mut v) }, GcStatus::Ok);
    assert!(v.value.abs() < 1e-15);
    let rule = gc_rule_default();
    let mut rep = GcConcavity {
        max_second_difference: 0.0,
        budget: 0.0,
        worst_ratio: 0.0,
        worst_t: 0.0,
        verdict: GcVerdict::Inconclusive,
    };
    assert_eq!(
        unsafe { gc_concavity_check(t, k, l, 9, &rule, &mut rep) },
        GcStatus::Ok
    );
    assert_eq!(rep.verdict, GcVerdict::ConcaveWithinTol);
    assert_eq!(
        unsafe { gc_concavity_check(t, k, l, 3, &rule, &mut rep) },
        GcStatus::InvalidArgument
    );
    unsafe {
        gc_transform_free(t);
        gc_body_free(k);
        gc_body_free(l);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/gaussconvex.h"
    ))
    .unwrap();
    for name in [
        "gc_body_parse",
        "gc_body_free",
        "gc_measure",
        "gc_concavity_check",
        "gc_last_error",
        "typedef struct GcBody GcBody",
        "GC_STATUS_NUMERICAL_FAILURE",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"gaussconvex.h\"\nint main(void) { GcRule r = gc_rule_default(); return r.max_panels == 0; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(_) => eprintln!("no C compiler; syntax check skipped"),
    }
}
