use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use auxsbm_ffi::*;

fn last_error() -> String {
    let p = auxsbm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn params_and_thresholds() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(auxsbm_params_new(9.0, 1.0, 3.0, 1.0, 0.5, f64::NAN, &mut p), AuxsbmStatus::Ok);
        let mut eta = 0.0;
        assert_eq!(auxsbm_eta1(p, &mut eta), AuxsbmStatus::Ok);
        assert!((eta - 1.133_974_596_215_561_4).abs() < 1e-12);
        assert_eq!(auxsbm_eta2(p, &mut eta), AuxsbmStatus::Ok);
        assert!((eta - (3.5 - 6f64.sqrt())).abs() < 1e-12);
        let (mut value, mut exact) = (0.0, false);
        assert_eq!(auxsbm_sdp_threshold(p, true, &mut value, &mut exact), AuxsbmStatus::Ok);
        assert!(exact && value > 1.0);
        auxsbm_params_free(p);
        assert_eq!(auxsbm_params_new(7.0, 1.0, 3.0, 1.0, 0.5, f64::NAN, &mut p), AuxsbmStatus::Ok);
        assert_eq!(auxsbm_sdp_threshold(p, false, &mut value, &mut exact), AuxsbmStatus::Ok);
        assert!(!exact && value < 1.0);
        auxsbm_params_free(p);
    }
}

#[test]
fn invalid_params_report_domain_error() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(auxsbm_params_new(9.0, 1.0, 3.0, 1.0, 1.5, f64::NAN, &mut p), AuxsbmStatus::Domain);
        assert!(p.is_null());
        assert!(last_error().contains("rho"), "{}", last_error());
        let bad = CString::new("{\"q0\": 9").unwrap();
        assert_eq!(auxsbm_params_from_json(bad.as_ptr(), &mut p), AuxsbmStatus::InvalidJson);
        assert_eq!(auxsbm_eta1(ptr::null(), ptr::null_mut()), AuxsbmStatus::NullPointer);
    }
}

#[test]
fn divergence_matches_core() {
    let (a, b) = ([4.0], [1.0]);
    let (mut v, mut t) = (0.0, 0.0);
    unsafe {
        assert_eq!(auxsbm_ch_divergence(a.as_ptr(), b.as_ptr(), 1, &mut v, &mut t), AuxsbmStatus::Ok);
    }
    assert!((v - 0.506_550_749_165_635_6).abs() < 1e-9);
    assert!((t - 0.556_864_436_833_026_9).abs() < 1e-6);
    let neg = [-1.0];
    unsafe {
        assert_eq!(auxsbm_ch_divergence(neg.as_ptr(), b.as_ptr(), 1, &mut v, ptr::null_mut()), AuxsbmStatus::Domain);
    }
}

#[test]
fn sample_solve_certify_roundtrip() {
    unsafe {
        let json = CString::new(r#"{"q0":30,"q1":1,"q2":3,"q3":1,"rho":0.5}"#).unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(auxsbm_params_from_json(json.as_ptr(), &mut p), AuxsbmStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(auxsbm_sample(p, 60, 3, &mut g), AuxsbmStatus::Ok);
        assert_eq!(auxsbm_graph_n(g), 60);
        let edges = auxsbm_graph_num_edges(g);
        assert!(edges > 0);

        let mut s = ptr::null_mut();
        assert_eq!(auxsbm_graph_to_json(g, &mut s), AuxsbmStatus::Ok);
        let mut g2 = ptr::null_mut();
        assert_eq!(auxsbm_graph_from_json(s, &mut g2), AuxsbmStatus::Ok);
        assert_eq!(auxsbm_graph_num_edges(g2), edges);
        auxsbm_string_free(s);

        let mut sol = ptr::null_mut();
        assert_eq!(auxsbm_solve(g2, p, AuxsbmScenario::SbmKnownY, 1, true, &mut sol), AuxsbmStatus::Ok);
        assert_eq!(auxsbm_solution_len(sol), 60);
        let mut labels = vec![0i8; 60];
        assert_eq!(auxsbm_solution_labels(sol, labels.as_mut_ptr(), 60), AuxsbmStatus::Ok);
        assert_eq!(labels.iter().map(|&v| v as i32).sum::<i32>(), 0);
        assert_eq!(labels[0], 1);
        assert_eq!(auxsbm_solution_labels(sol, labels.as_mut_ptr(), 10), AuxsbmStatus::BufferTooSmall);
        assert!(auxsbm_solution_objective(sol).is_finite());
        assert!(auxsbm_solution_certified(sol) >= 0);
        let mut js = ptr::null_mut();
        assert_eq!(auxsbm_solution_to_json(sol, &mut js), AuxsbmStatus::Ok);
        assert!(CStr::from_ptr(js).to_str().unwrap().contains("x_hat"));
        auxsbm_string_free(js);
        auxsbm_solution_free(sol);

        assert_eq!(auxsbm_solve(g2, ptr::null(), AuxsbmScenario::SbmUnknownY, 1, false, &mut sol), AuxsbmStatus::Ok);
        assert_eq!(auxsbm_solution_certified(sol), -1);
        auxsbm_solution_free(sol);
        assert_eq!(auxsbm_solve(g2, ptr::null(), AuxsbmScenario::SbmKnownY, 1, false, &mut sol), AuxsbmStatus::NullPointer);
        assert_eq!(auxsbm_solve(g2, p, AuxsbmScenario::CbmKnownY, 1, false, &mut sol), AuxsbmStatus::Domain);

        auxsbm_graph_free(g);
        auxsbm_graph_free(g2);
        auxsbm_params_free(p);
        auxsbm_params_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(auxsbm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/auxsbm.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["auxsbm_solve", "auxsbm_last_error", "auxsbm_graph_free", "AUXSBM_STATUS_DOMAIN"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
        .expect("a C compiler is required to check the header");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
