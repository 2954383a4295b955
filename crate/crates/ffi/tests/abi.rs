use std::ffi::{CStr, CString};
use std::ptr;

use qoptic_ffi::*;

const SETUPS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../setups");

fn last_error() -> String {
    unsafe { CStr::from_ptr(qoptic_last_error_message()) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut QopticSetup {
    let path = CString::new(format!("{SETUPS}/{name}")).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { qoptic_setup_load(path.as_ptr(), &mut h) };
    assert_eq!(st, QopticStatus::Ok, "{}", last_error());
    assert!(!h.is_null());
    h
}

fn param_name(h: *const QopticSetup, i: usize) -> String {
    let mut needed = 0usize;
    unsafe {
        assert_eq!(qoptic_setup_param_name(h, i, ptr::null_mut(), 0, &mut needed), QopticStatus::Ok);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(qoptic_setup_param_name(h, i, buf.as_mut_ptr(), buf.len(), &mut needed), QopticStatus::Ok);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn parameters_in_declaration_order() {
    let h = load("ghz332.toml");
    unsafe {
        assert_eq!(qoptic_setup_param_count(h), 3);
        let names: Vec<String> = (0..3).map(|i| param_name(h, i)).collect();
        assert_eq!(names, ["phi", "alpha", "beta"]);
        let mut vals = [0.0; 3];
        assert_eq!(qoptic_setup_param_values(h, vals.as_mut_ptr(), 3), QopticStatus::Ok);
        assert_eq!(vals, [0.3, -0.2, 0.1]);
        assert_eq!(qoptic_setup_param_name(h, 3, ptr::null_mut(), 0, ptr::null_mut()), QopticStatus::OutOfRange);
        qoptic_setup_free(h);
    }
}

#[test]
fn evaluate_and_gradient_at_optimum() {
    let h = load("ghz332.toml");
    let pi = std::f64::consts::PI;
    let x = [pi / 2.0, -pi / 4.0, 0.0];
    unsafe {
        let mut v = 0.0;
        assert_eq!(qoptic_evaluate(h, x.as_ptr(), 3, &mut v), QopticStatus::Ok);
        assert!((v - 1.0).abs() < 1e-10);
        let mut g = [f64::NAN; 3];
        let mut v2 = 0.0;
        assert_eq!(qoptic_gradient(h, x.as_ptr(), 3, &mut v2, g.as_mut_ptr()), QopticStatus::Ok);
        assert_eq!(v, v2);
        assert!(g.iter().all(|d| d.abs() < 1e-8), "{g:?}");
        assert_eq!(qoptic_evaluate(h, x.as_ptr(), 2, &mut v), QopticStatus::OutOfRange);
        assert!(last_error().contains("expected 3"));
        qoptic_setup_free(h);
    }
}

#[test]
fn distribution_backends_agree_at_cutoff_one() {
    let h = load("toy_splitter.toml");
    let x = [0.4];
    unsafe {
        let mut q = ptr::null_mut();
        let mut o = ptr::null_mut();
        assert_eq!(qoptic_distribution_compute(h, x.as_ptr(), 1, QopticBackend::Qubit, 0, &mut q), QopticStatus::Ok);
        assert_eq!(qoptic_distribution_compute(h, x.as_ptr(), 1, QopticBackend::Oracle, 0, &mut o), QopticStatus::Ok);
        assert_eq!(qoptic_distribution_len(q), 2);
        assert_eq!(qoptic_distribution_len(o), 2);
        for i in 0..2 {
            let (mut a, mut b) = (0.0, 0.0);
            qoptic_distribution_probability(q, i, &mut a);
            qoptic_distribution_probability(o, i, &mut b);
            assert!((a - b).abs() < 1e-12);
        }
        let mut p0 = 0.0;
        qoptic_distribution_probability(q, 0, &mut p0);
        assert!((p0 - 0.4f64.cos().powi(2)).abs() < 1e-12);
        let mut buf = [0 as std::ffi::c_char; 32];
        let mut needed = 0;
        assert_eq!(qoptic_distribution_label(q, 0, buf.as_mut_ptr(), buf.len(), &mut needed), QopticStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "1@(0,a)");
        assert_eq!(qoptic_distribution_label(q, 0, buf.as_mut_ptr(), 3, &mut needed), QopticStatus::BufferTooSmall);
        assert_eq!(needed, 8);
        assert!((qoptic_distribution_valid_fraction(q) - 1.0).abs() < 1e-12);
        qoptic_distribution_free(q);
        qoptic_distribution_free(o);
        qoptic_setup_free(h);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut h = ptr::null_mut();
        let bad = CString::new("[layout]\ncutoff = 1\npaths = []\nbogus = 1\n").unwrap();
        assert_eq!(qoptic_setup_from_toml(bad.as_ptr(), &mut h), QopticStatus::SetupFile);
        assert!(h.is_null());
        assert!(last_error().contains("bogus"), "{}", last_error());
        assert_eq!(qoptic_setup_from_toml(ptr::null(), &mut h), QopticStatus::NullPointer);
        let missing = CString::new("/nonexistent/setup.toml").unwrap();
        assert_eq!(qoptic_setup_load(missing.as_ptr(), &mut h), QopticStatus::Io);

        let boson = load("boson5.toml");
        let mut v = 0.0;
        assert_eq!(qoptic_evaluate(boson, ptr::null(), 0, &mut v), QopticStatus::NoObjective);
        qoptic_setup_free(boson);
        qoptic_setup_free(ptr::null_mut());
        assert_eq!(qoptic_setup_param_count(ptr::null()), 0);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qoptic_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
