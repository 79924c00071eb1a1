use std::ffi::{CStr, CString};
use std::ptr;

use crsim_ffi::*;

fn last_error() -> String {
    let p = crsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(crsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn canonical_run_through_handles() {
    unsafe {
        let scenario = crsim_scenario_canonical();
        let mut report = ptr::null_mut();
        assert_eq!(crsim_simulate(scenario, false, 0, &mut report), CrsimStatus::Ok);
        let mut m = CrsimMetrics::default();
        assert_eq!(crsim_report_metrics(report, &mut m), CrsimStatus::Ok);
        assert_eq!(m.arrivals, 10_000);
        assert_eq!(m.admitted + m.blocked, m.arrivals);
        assert!((m.empirical_blocking - 4.0 / 9.0).abs() <= 0.02);

        let mut hash = [0 as std::ffi::c_char; 65];
        assert_eq!(crsim_report_trace_hash(report, hash.as_mut_ptr(), hash.len()), CrsimStatus::Ok);
        let hash = CStr::from_ptr(hash.as_ptr()).to_str().unwrap().to_owned();
        assert_eq!(hash.len(), 64);

        let mut small = [0 as std::ffi::c_char; 10];
        assert_eq!(
            crsim_report_trace_hash(report, small.as_mut_ptr(), small.len()),
            CrsimStatus::BufferTooSmall
        );

        let mut json = ptr::null_mut();
        assert_eq!(crsim_report_to_json(report, &mut json), CrsimStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        crsim_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["trace"]["hash"], hash.as_str());
        assert_eq!(v["provenance"]["seed"], 42);

        let mut again = ptr::null_mut();
        assert_eq!(crsim_simulate(scenario, true, 42, &mut again), CrsimStatus::Ok);
        let mut other = [0 as std::ffi::c_char; 65];
        crsim_report_trace_hash(again, other.as_mut_ptr(), other.len());
        assert_eq!(CStr::from_ptr(other.as_ptr()).to_str().unwrap(), hash);

        crsim_report_free(again);
        crsim_report_free(report);
        crsim_scenario_free(scenario);
    }
}

#[test]
fn scenario_json_errors_are_reported() {
    unsafe {
        let bad = CString::new(r#"{"bands": [], "sessions": [], "horizon": 0, "seed": 1}"#).unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(crsim_scenario_from_json(bad.as_ptr(), &mut s), CrsimStatus::Validation);
        assert!(s.is_null());
        let msg = last_error();
        assert!(msg.contains("bands") && msg.contains("horizon"), "{msg}");

        assert_eq!(crsim_scenario_from_json(ptr::null(), &mut s), CrsimStatus::NullArgument);

        let good = CString::new(
            r#"{"bands": [{"id": 0, "capacity": 4, "p": 0.1, "q": 0.1}],
                "sessions": [{"traffic": "voice", "arrival": 0, "completion_prob": 0.5}],
                "horizon": 10, "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(crsim_scenario_from_json(good.as_ptr(), &mut s), CrsimStatus::Ok);
        assert!(crsim_last_error().is_null());
        crsim_scenario_free(s);
    }
}

#[test]
fn analytic_entry_points() {
    unsafe {
        let mut pi = [0.0; 9];
        assert_eq!(crsim_stationary(8, 0.2, 0.2, pi.as_mut_ptr(), pi.len()), CrsimStatus::Ok);
        assert!(pi.iter().all(|&x| (x - 1.0 / 9.0).abs() < 1e-12));
        assert_eq!(crsim_stationary(8, 0.2, 0.2, pi.as_mut_ptr(), 3), CrsimStatus::BufferTooSmall);
        assert_eq!(crsim_stationary(8, 0.0, 0.0, pi.as_mut_ptr(), 9), CrsimStatus::NoUniqueStationary);

        let (caps, ps, qs) = ([8u32, 8], [0.2, 0.2], [0.2, 0.2]);
        let mut b = 0.0;
        assert_eq!(crsim_blocking(caps.as_ptr(), ps.as_ptr(), qs.as_ptr(), 1, 4, &mut b), CrsimStatus::Ok);
        assert!((b - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(crsim_blocking(caps.as_ptr(), ps.as_ptr(), qs.as_ptr(), 2, 4, &mut b), CrsimStatus::Ok);
        assert!((b - 16.0 / 81.0).abs() < 1e-12);

        let mut nc = 0.0;
        assert_eq!(crsim_noncompletion(2, 0.3, 0.3, 1, 0.1, 0.5, &mut nc), CrsimStatus::Ok);
        assert!((nc - 0.641_489_361_702_127_3).abs() < 1e-12);
        assert_eq!(crsim_noncompletion(2, 0.3, 0.3, 1, 0.0, 0.5, &mut nc), CrsimStatus::NeverCompletes);
        assert_eq!(crsim_noncompletion(2, 0.3, 0.3, 3, 0.1, 0.5, &mut nc), CrsimStatus::DemandExceedsCapacity);
    }
}

#[test]
fn modes_and_qos() {
    unsafe {
        let mut mode = CrsimMode::Normal;
        for (pu, expected) in [(3, CrsimMode::Normal), (4, CrsimMode::Warning), (5, CrsimMode::Failure)] {
            assert_eq!(crsim_classify_mode(pu, 4, 8, &mut mode), CrsimStatus::Ok);
            assert_eq!(mode, expected);
        }
        assert_eq!(crsim_classify_mode(9, 4, 8, &mut mode), CrsimStatus::InvalidParameter);

        let mut q = CrsimQosProfile::default();
        let key = CString::new("video_conferencing").unwrap();
        assert_eq!(crsim_qos_profile(key.as_ptr(), &mut q), CrsimStatus::Ok);
        assert_eq!((q.bandwidth, q.delay, q.loss, q.jitter), (4, 4, 3, 4));
        let bad = CString::new("carrier_pigeon").unwrap();
        assert_eq!(crsim_qos_profile(bad.as_ptr(), &mut q), CrsimStatus::InvalidParameter);
        assert!(last_error().contains("carrier_pigeon"));
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/crsim.h")).unwrap();
    for name in [
        "crsim_version",
        "crsim_last_error",
        "crsim_scenario_from_json",
        "crsim_scenario_canonical",
        "crsim_scenario_free",
        "crsim_simulate",
        "crsim_report_metrics",
        "crsim_report_trace_hash",
        "crsim_report_to_json",
        "crsim_report_free",
        "crsim_string_free",
        "crsim_stationary",
        "crsim_blocking",
        "crsim_noncompletion",
        "crsim_classify_mode",
        "crsim_qos_profile",
        "typedef struct CrsimScenario CrsimScenario",
        "typedef struct CrsimReport CrsimReport",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
