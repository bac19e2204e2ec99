use std::ffi::{CStr, CString};
use std::ptr;

use stefan_lab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sl_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn pde_handle_round_trip() {
    let mut h = ptr::null_mut();
    let st = unsafe { sl_pde_solve(1.0, 1.0, -1.0, 1.0, 1.0, 1.0 / 64.0, 0.1, 3, &mut h) };
    assert_eq!(st, SlStatus::Ok, "{}", last_error());
    unsafe {
        assert_eq!(sl_pde_num_times(h), 3);
        let n = sl_pde_num_cells(h);
        assert_eq!(n, 128);
        let mut t = 0.0;
        assert_eq!(sl_pde_time(h, 2, &mut t), SlStatus::Ok);
        assert!((t - 0.1).abs() < 1e-15);
        let mut b = f64::NAN;
        assert_eq!(sl_pde_front(h, 2, &mut b), SlStatus::Ok);
        assert_eq!(b, 0.0);
        let mut rho = vec![0.0; n];
        assert_eq!(sl_pde_copy(h, 1, rho.as_mut_ptr(), n), SlStatus::Ok);
        // odd profile, exact antisymmetry
        for j in 0..n {
            assert_eq!(rho[j], -rho[n - 1 - j]);
        }
        let mut centers = vec![0.0; n];
        assert_eq!(sl_pde_copy(h, usize::MAX, centers.as_mut_ptr(), n), SlStatus::Ok);
        assert_eq!(centers[0], -1.0 + 1.0 / 128.0);
        assert_eq!(sl_pde_copy(h, 1, rho.as_mut_ptr(), n - 1), SlStatus::OutOfRange);
        assert_eq!(sl_pde_time(h, 3, &mut t), SlStatus::OutOfRange);
        assert!(last_error().contains("sample 3"));
        sl_pde_free(h);
    }
}

#[test]
fn errors_are_reported() {
    let mut h = ptr::null_mut();
    // 2 l / dx odd
    let st = unsafe { sl_pde_solve(1.0, 1.0, -1.0, 1.0, 1.0, 2.0 / 3.0, 0.1, 3, &mut h) };
    assert_eq!(st, SlStatus::Config);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { sl_pde_solve(1.0, 1.0, -1.0, 1.0, 1.0, 0.25, 0.1, 3, ptr::null_mut()) }, SlStatus::NullArgument);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { sl_study_run(SlCommand::Pde, ptr::null(), &mut r) }, SlStatus::NullArgument);
    let bad = CString::new("[model]\na_minus = 1.0\n").unwrap();
    assert_eq!(unsafe { sl_study_run(SlCommand::Pde, bad.as_ptr(), &mut r) }, SlStatus::Config);
    assert!(last_error().contains("a_plus"), "{}", last_error());
    unsafe {
        sl_pde_free(ptr::null_mut());
        sl_report_free(ptr::null_mut());
        assert_eq!(sl_report_all_passed(ptr::null()), 0);
    }
}

#[test]
fn study_report_and_files() {
    let doc = CString::new(
        r#"
[model]
a_minus = 1.0
a_plus = 1.0
kind = "boundary_frame"

[profile]
preset = "asymmetric_step"
left = -0.6
right = 1.0

[run]
n = [16]
l = 1.0
t = 0.05
sample_times = [0.0, 0.05]
seeds = [1, 2]
"#,
    )
    .unwrap();
    let dir = std::env::temp_dir().join(format!("stefan-lab-ffi-{}", std::process::id()));
    let cdir = CString::new(dir.to_str().unwrap()).unwrap();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(sl_study_run(SlCommand::Simulate, doc.as_ptr(), &mut r), SlStatus::Ok, "{}", last_error());
        assert_eq!(sl_report_all_passed(r), 1);
        assert!(sl_report_num_checks(r) >= 1);
        let summary = CStr::from_ptr(sl_report_summary(r)).to_str().unwrap();
        assert!(summary.starts_with("study: simulate\n"), "{summary}");
        assert_eq!(sl_report_write(r, cdir.as_ptr()), SlStatus::Ok, "{}", last_error());
        sl_report_free(r);
    }
    assert!(dir.join("report.json").is_file() && dir.join("summary.txt").is_file());
    std::fs::remove_dir_all(&dir).unwrap();
}
