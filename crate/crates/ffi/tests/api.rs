use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dualrdm_ffi::*;

fn last_error() -> String {
    let n = unsafe { dualrdm_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; n];
    unsafe { dualrdm_last_error_message(buf.as_mut_ptr(), n) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn dimer(t: f64, u: f64) -> *mut DualrdmSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { dualrdm_system_hubbard_dimer(t, u, &mut sys) }, DualrdmStatus::Ok);
    assert!(!sys.is_null());
    sys
}

#[test]
fn dimer_bound_matches_fci() {
    let sys = dimer(1.0, 4.0);
    unsafe {
        assert_eq!(dualrdm_system_n_orbitals(sys), 4);
        assert_eq!(dualrdm_system_n_electrons(sys), 2);
        let mut fci = 0.0;
        assert_eq!(dualrdm_fci_energy(sys, &mut fci), DualrdmStatus::Ok);
        let exact = 2.0 - 8f64.sqrt();
        assert!((fci - exact).abs() < 1e-10);

        let mut opts = dualrdm_solve_options_default();
        opts.confirm = false;
        let mut sol = DualrdmSolution::default();
        assert_eq!(dualrdm_solve(sys, &opts, &mut sol), DualrdmStatus::Ok, "{}", last_error());
        assert!(sol.energy <= fci + 1e-6);
        assert!(fci - sol.energy < 1e-6);
        assert!(sol.outer_iterations >= 1 && sol.outer_iterations <= 5);
        dualrdm_system_free(sys);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        let mut sol = DualrdmSolution::default();
        assert_eq!(dualrdm_solve(ptr::null(), ptr::null(), &mut sol), DualrdmStatus::NullPointer);
        assert!(last_error().contains("system"));
        assert_eq!(dualrdm_system_hubbard_dimer(1.0, 1.0, ptr::null_mut()), DualrdmStatus::NullPointer);
        assert_eq!(dualrdm_system_n_orbitals(ptr::null()), 0);
        dualrdm_system_free(ptr::null_mut());
    }
}

#[test]
fn bad_inputs_are_invalid() {
    unsafe {
        let mut sys = ptr::null_mut();
        let path = CString::new("/nonexistent/file.dump").unwrap();
        assert_eq!(dualrdm_system_from_fcidump(path.as_ptr(), &mut sys), DualrdmStatus::InvalidInput);
        assert!(sys.is_null());
        assert!(last_error().contains("/nonexistent/file.dump"));

        assert_eq!(dualrdm_system_random(1, 5, 2, 1.0, &mut sys), DualrdmStatus::InvalidInput);

        let sys = dimer(1.0, 1.0);
        let mut opts = dualrdm_solve_options_default();
        opts.conditions = DUALRDM_CONDITION_Q;
        let mut sol = DualrdmSolution::default();
        assert_eq!(dualrdm_solve(sys, &opts, &mut sol), DualrdmStatus::InvalidInput);
        opts = dualrdm_solve_options_default();
        opts.damping = 1.5;
        assert_eq!(dualrdm_solve(sys, &opts, &mut sol), DualrdmStatus::InvalidInput);
        dualrdm_system_free(sys);
    }
}

#[test]
fn iteration_cap_is_not_converged() {
    let sys = dimer(1.0, 4.0);
    unsafe {
        let mut opts = dualrdm_solve_options_default();
        opts.max_inner = 2;
        opts.confirm = false;
        let mut sol = DualrdmSolution::default();
        assert_eq!(dualrdm_solve(sys, &opts, &mut sol), DualrdmStatus::NotConverged);
        dualrdm_system_free(sys);
    }
}

#[test]
fn curve_is_decreasing() {
    let sys = dimer(1.0, 2.0);
    let mu = [-2.0, -1.5, -1.0, -0.8];
    let mut delta = [0.0; 4];
    let mut deriv = [0.0; 4];
    unsafe {
        let status = dualrdm_sample_curve(sys, ptr::null(), mu.as_ptr(), 4, delta.as_mut_ptr(), deriv.as_mut_ptr());
        assert_eq!(status, DualrdmStatus::Ok);
        dualrdm_system_free(sys);
    }
    assert!(delta.iter().all(|d| d.is_finite() && *d >= 0.0));
    assert!(delta.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert!(deriv.iter().all(|d| *d <= 1e-9));
}

#[test]
fn error_message_truncates() {
    unsafe {
        let mut sol = DualrdmSolution::default();
        dualrdm_solve(ptr::null(), ptr::null(), &mut sol);
        let mut buf = [1 as c_char; 4];
        let needed = dualrdm_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(needed > 4);
        assert_eq!(buf[3], 0);
        let v = CStr::from_ptr(dualrdm_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dualrdm.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for name in ["dualrdm_solve", "dualrdm_system_free", "DualrdmSystem", "DUALRDM_STATUS_NOT_CONVERGED"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempdir();
    let src = dir.join("use.c");
    std::fs::write(&src, "#include \"dualrdm.h\"\nint main(void){ DualrdmSolveOptions o = dualrdm_solve_options_default(); return (int)o.max_outer == 0; }\n").unwrap();
    let include = header.parent().unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(include).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("cc not found; skipping C syntax check"),
    }
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dualrdm-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
