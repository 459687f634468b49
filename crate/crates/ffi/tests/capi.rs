use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use sse_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sse_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn eigenvalue_and_hs_norm() {
    let mut v = 0.0;
    assert_eq!(unsafe { sse_eigenvalue(2, &mut v) }, SseStatus::Ok);
    assert!((v - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    assert_eq!(unsafe { sse_eigenvalue(0, &mut v) }, SseStatus::InvalidArgument);
    assert!(last_error().contains("index"));
    assert_eq!(unsafe { sse_eigenvalue(1, ptr::null_mut()) }, SseStatus::NullPointer);

    assert_eq!(unsafe { sse_hs_norm(0.0, 2.0, 10_000, &mut v) }, SseStatus::Ok);
    assert!((v * v - 1.0 / 90.0).abs() < 1e-6);
    assert!(last_error().is_empty());
}

#[test]
fn fem_system_matches_closed_form() {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { sse_fem_system_new(8, &mut sys) }, SseStatus::Ok);
    let n = unsafe { sse_fem_system_num_dofs(sys) };
    assert_eq!(n, 7);
    let mut eig = vec![0.0; n];
    assert_eq!(unsafe { sse_fem_system_eigenvalues(sys, eig.as_mut_ptr(), n) }, SseStatus::Ok);
    let h = 1.0 / 8.0;
    for (i, l) in eig.iter().enumerate() {
        let c = ((i + 1) as f64 * std::f64::consts::PI * h).cos();
        let exact = 6.0 * (1.0 - c) / (h * h * (2.0 + c));
        assert!((l - exact).abs() / exact < 1e-10);
    }
    let mut short = vec![0.0; 3];
    assert_eq!(unsafe { sse_fem_system_eigenvalues(sys, short.as_mut_ptr(), 3) }, SseStatus::InvalidArgument);
    unsafe { sse_fem_system_free(sys) };
    unsafe { sse_fem_system_free(ptr::null_mut()) };

    assert_eq!(unsafe { sse_fem_system_new(0, &mut sys) }, SseStatus::InvalidArgument);
    assert_eq!(unsafe { sse_fem_system_num_dofs(ptr::null()) }, 0);
}

#[test]
fn path_coarsening_sums_increments() {
    let mut fine = ptr::null_mut();
    assert_eq!(unsafe { sse_path_sample(2.501, 4, 1.0, 8, 3, 0, &mut fine) }, SseStatus::Ok);
    let mut coarse = ptr::null_mut();
    assert_eq!(unsafe { sse_path_coarsen(fine, 2, &mut coarse) }, SseStatus::Ok);
    let (mut steps, mut modes) = (0, 0);
    assert_eq!(unsafe { sse_path_shape(coarse, &mut steps, &mut modes) }, SseStatus::Ok);
    assert_eq!((steps, modes), (4, 4));

    let read = |p: *const SsePath, step: usize| {
        let (mut a, mut b) = (vec![0.0; 4], vec![0.0; 4]);
        assert_eq!(unsafe { sse_path_increments(p, step, a.as_mut_ptr(), b.as_mut_ptr(), 4) }, SseStatus::Ok);
        (a, b)
    };
    for step in 0..4 {
        let (c1, c2) = read(coarse, step);
        let (a1, a2) = read(fine, 2 * step);
        let (b1, b2) = read(fine, 2 * step + 1);
        for j in 0..4 {
            assert_eq!(c1[j], a1[j] + b1[j]);
            assert_eq!(c2[j], a2[j] + b2[j]);
        }
    }
    let mut x = vec![0.0; 4];
    let mut y = vec![0.0; 4];
    assert_eq!(
        unsafe { sse_path_increments(coarse, 4, x.as_mut_ptr(), y.as_mut_ptr(), 4) },
        SseStatus::InvalidArgument
    );
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { sse_path_coarsen(fine, 3, &mut bad) }, SseStatus::InvalidArgument);
    assert!(bad.is_null());
    unsafe {
        sse_path_free(coarse);
        sse_path_free(fine);
    }
}

#[test]
fn run_final_is_deterministic_and_finite() {
    let mut problem = ptr::null_mut();
    let mut sys = ptr::null_mut();
    let mut path = ptr::null_mut();
    unsafe {
        assert_eq!(sse_problem_new(2.501, 16, 1.0, 1, &mut problem), SseStatus::Ok);
        assert_eq!(sse_fem_system_new(16, &mut sys), SseStatus::Ok);
        assert_eq!(sse_path_sample(2.501, 16, 1.0, 16, 9, 0, &mut path), SseStatus::Ok);
    }
    let run = || {
        let (mut re, mut im) = (vec![0.0; 15], vec![0.0; 15]);
        assert_eq!(
            unsafe { sse_run_final(problem, sys, path, re.as_mut_ptr(), im.as_mut_ptr(), 15) },
            SseStatus::Ok
        );
        (re, im)
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.0.iter().chain(&a.1).all(|v| v.is_finite()));

    let mut short = ptr::null_mut();
    unsafe { assert_eq!(sse_path_sample(2.501, 8, 1.0, 16, 9, 0, &mut short), SseStatus::Ok) };
    let (mut re, mut im) = (vec![0.0; 15], vec![0.0; 15]);
    let status = unsafe { sse_run_final(problem, sys, short, re.as_mut_ptr(), im.as_mut_ptr(), 15) };
    assert_ne!(status, SseStatus::Ok);
    assert!(!last_error().is_empty());
    unsafe {
        sse_path_free(short);
        sse_path_free(path);
        sse_fem_system_free(sys);
        sse_problem_free(problem);
    }
}

#[test]
fn strong_error_through_handles() {
    let mut problem = ptr::null_mut();
    unsafe { assert_eq!(sse_problem_new(2.501, 16, 1.0, 0, &mut problem), SseStatus::Ok) };
    let mut e = SseStrongError::default();
    assert_eq!(unsafe { sse_strong_error(problem, 4, 8, 16, 8, 20, 1, &mut e) }, SseStatus::Ok);
    assert_eq!(e.n_samples, 20);
    assert!(e.rms > 0.0 && e.rms.is_finite());
    assert!((e.rms * e.rms - (e.rms_re.powi(2) + e.rms_im.powi(2))).abs() < 1e-12);
    assert_eq!(
        unsafe { sse_strong_error(ptr::null(), 4, 8, 16, 8, 20, 1, &mut e) },
        SseStatus::NullPointer
    );
    unsafe { sse_problem_free(problem) };
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("sse.h");
    assert!(header.exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include <stdio.h>\n#include \"sse.h\"\nint main(void) {\n  SseStrongError e;\n  SseFemSystem *s = 0;\n  \
         e.std_error = 0.0;\n  return sse_fem_system_new(4, &s) == SSE_STATUS_OK ? (int)e.std_error : 1;\n}\n",
    )
    .unwrap();
    let status = match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler available; skipping");
            return;
        }
    };
    assert!(status.success());
}
