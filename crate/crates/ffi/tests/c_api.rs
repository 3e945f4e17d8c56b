use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use scprop_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { scp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(s.len(), n);
    s
}

fn harmonic(hbar: f64) -> *mut ScpModel {
    let mut m = ptr::null_mut();
    let st = unsafe { scp_model_harmonic(1.0, 1.0, hbar.sqrt(), hbar, &mut m) };
    assert_eq!(st, ScpStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(scp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn invalid_widths_are_reported() {
    let mut m = ptr::null_mut();
    let st = unsafe { scp_model_harmonic(1.0, 1.0, -0.3, 0.1, &mut m) };
    assert_eq!(st, ScpStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("b > 0"));
    assert_eq!(scp_last_error_length(), last_error().len());
}

#[test]
fn null_outputs_are_rejected() {
    let st = unsafe { scp_model_harmonic(1.0, 1.0, 0.3, 0.1, ptr::null_mut()) };
    assert_eq!(st, ScpStatus::NullPointer);
    let mut e = 0.0;
    let st = unsafe { scp_quantize(ptr::null(), ScpRule::WeylWkb, 0, &mut e) };
    assert_eq!(st, ScpStatus::NullPointer);
    assert!(last_error().contains("model"));
}

#[test]
fn error_message_truncates_safely() {
    let mut m = ptr::null_mut();
    unsafe { scp_model_harmonic(1.0, 1.0, 0.0, 0.1, &mut m) };
    let mut buf = [1 as c_char; 5];
    let n = unsafe { scp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, 4);
    assert_eq!(buf[4], 0);
    assert_eq!(unsafe { scp_last_error_message(ptr::null_mut(), 10) }, 0);
}

#[test]
fn harmonic_levels_through_the_c_api() {
    let hbar = 0.1;
    let m = harmonic(hbar);
    for rule in [ScpRule::SmoothedPlusI, ScpRule::AntismoothedMinusI, ScpRule::WeylWkb] {
        for level in [0usize, 3, 7] {
            let mut e = f64::NAN;
            assert_eq!(unsafe { scp_quantize(m, rule, level, &mut e) }, ScpStatus::Ok);
            assert!((e - hbar * (level as f64 + 0.5)).abs() < 1e-8, "{rule:?} {level}: {e}");
        }
    }
    unsafe { scp_model_destroy(m) };
}

#[test]
fn eigen_handle_lifecycle() {
    let hbar = 0.1;
    let m = harmonic(hbar);
    let mut eig = ptr::null_mut();
    assert_eq!(unsafe { scp_eigen_solve(m, 80, &mut eig) }, ScpStatus::Ok);
    let (mut total, mut trusted) = (0usize, 0usize);
    assert_eq!(unsafe { scp_eigen_count(eig, &mut total, &mut trusted) }, ScpStatus::Ok);
    assert_eq!(total, 80);
    assert!(trusted > 10);
    let mut e = vec![0.0; 10];
    assert_eq!(unsafe { scp_eigen_energies(eig, e.as_mut_ptr(), e.len()) }, ScpStatus::Ok);
    for (n, v) in e.iter().enumerate() {
        assert!((v - hbar * (n as f64 + 0.5)).abs() < 1e-9);
    }
    let mut big = vec![0.0; 81];
    assert_eq!(unsafe { scp_eigen_energies(eig, big.as_mut_ptr(), big.len()) }, ScpStatus::BufferTooSmall);
    unsafe {
        scp_eigen_destroy(eig);
        scp_eigen_destroy(ptr::null_mut());
        scp_model_destroy(m);
        scp_model_destroy(ptr::null_mut());
    }
}

#[test]
fn free_packet_matches_the_spreading_gaussian() {
    let (b, hbar) = (0.3, 0.05);
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { scp_model_polynomial(1.0, ptr::null(), 0, b, hbar, &mut m) }, ScpStatus::Ok);
    let xs = [-0.5, 0.0, 1.2, 2.0, 2.7];
    let (mut re, mut im) = ([0.0; 5], [0.0; 5]);
    let (q0, p0, t) = (0.0, 1.0, 2.0);
    // Herman-Kluk packets are not normalized, so only the other two are compared
    for method in [ScpMethod::SmoothedIvr, ScpMethod::Heller] {
        let st = unsafe { scp_mixed_packet(m, method, q0, p0, t, xs.as_ptr(), xs.len(), re.as_mut_ptr(), im.as_mut_ptr()) };
        assert_eq!(st, ScpStatus::Ok);
        for (k, &x) in xs.iter().enumerate() {
            // |ψ|² of a free Gaussian with σ²(t) = (b²/2)(1 + (ħt/b²)²)
            let s2 = 0.5 * b * b * (1.0 + (hbar * t / (b * b)).powi(2));
            let exact = (-(x - q0 - p0 * t).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
            let got = re[k] * re[k] + im[k] * im[k];
            assert!((got - exact).abs() < 1e-9, "{method:?} x = {x}: {got} vs {exact}");
        }
    }
    let st = unsafe { scp_mixed_packet(m, ScpMethod::Heller, 0.0, 0.0, -1.0, xs.as_ptr(), 1, re.as_mut_ptr(), im.as_mut_ptr()) };
    assert_eq!(st, ScpStatus::InvalidArgument);
    unsafe { scp_model_destroy(m) };
}

#[test]
fn coherent_propagator_at_zero_time_is_the_overlap() {
    let m = harmonic(0.1);
    let (mut re, mut im) = (0.0, 0.0);
    let st = unsafe { scp_coherent_propagator(m, ScpSymbol::Smoothed, 0.3, 0.1, 0.3, 0.1, 0.0, &mut re, &mut im) };
    assert_eq!(st, ScpStatus::Ok);
    assert!((re - 1.0).abs() < 1e-14 && im.abs() < 1e-14);
    // harmonic: ⟨z|e^{−iĤt/ħ}|z⟩ = exp(|z|²(e^{−it} − 1) − it/2)
    let t = 1.3;
    let st = unsafe { scp_coherent_propagator(m, ScpSymbol::Smoothed, 0.3, 0.1, 0.3, 0.1, t, &mut re, &mut im) };
    assert_eq!(st, ScpStatus::Ok);
    let z2 = 0.1;
    let i = scprop::Complex64::new(0.0, 1.0);
    let exact = (z2 * ((-i * t).exp() - 1.0) - 0.5 * i * t).exp();
    assert!((re - exact.re).abs() < 1e-8 && (im - exact.im).abs() < 1e-8, "{re} {im} vs {exact}");
    unsafe { scp_model_destroy(m) };
}

#[test]
fn spa_through_the_c_api() {
    let f = [0.0, 0.0, 2.0, 0.0, 24.0];
    let g = [1.0, 0.0, 0.0];
    let mut out = [0.0; 5];
    assert_eq!(unsafe { scp_spa(f.as_ptr(), g.as_ptr(), 0.1, out.as_mut_ptr()) }, ScpStatus::Ok);
    assert_eq!(out[2], -0.75);
    let flat = [0.0, 0.0, 0.0, 1.0, 0.0];
    assert_eq!(unsafe { scp_spa(flat.as_ptr(), g.as_ptr(), 0.1, out.as_mut_ptr()) }, ScpStatus::ComputeError);
    assert!(last_error().contains("degenerate"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/scprop.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
        }
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping syntax check");
        return;
    }
    for lang in ["c", "c++"] {
        let out = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(dir.join("include/scprop.h"))
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
