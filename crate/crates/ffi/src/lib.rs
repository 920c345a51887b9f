//! C ABI for the dual 2-RDM solver.
//!
//! Systems are opaque handles created by one of the `dualrdm_system_*` constructors and
//! released with [`dualrdm_system_free`]. Every fallible call returns a [`DualrdmStatus`];
//! the message of the most recent failure on the calling thread is available through
//! [`dualrdm_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dualrdm::fci::{solve_fci, DEFAULT_DETERMINANT_CAP};
use dualrdm::hamiltonians::{hubbard_dimer, load_fcidump_path, random_two_body, reduced_from_integrals};
use dualrdm::newton::{sample_delta_curve, solve_system, StopReason};
use dualrdm::{ConditionSet, Error, IntegralSet, NewtonConfig, ProjectionOptions, ReducedHamiltonian, SpinIntegrals};

/// Status codes; the nonzero values match the command-line exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualrdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotConverged = 3,
    Numerical = 4,
    Panic = 5,
}

/// Why the outer iteration stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualrdmStop {
    SlopeTest = 0,
    ZeroDistance = 1,
    StartAtZero = 2,
}

/// Condition bits for [`DualrdmSolveOptions::conditions`].
pub const DUALRDM_CONDITION_P: u32 = 1;
pub const DUALRDM_CONDITION_Q: u32 = 2;
pub const DUALRDM_CONDITION_G: u32 = 4;

/// Opaque integral set together with its reduced Hamiltonian.
pub struct DualrdmSystem {
    spin: SpinIntegrals,
    k: ReducedHamiltonian,
}

/// Solver settings. Obtain defaults from [`dualrdm_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DualrdmSolveOptions {
    /// Use `mu0` instead of the Aufbau starting value.
    pub has_mu0: bool,
    pub mu0: f64,
    pub damping: f64,
    pub epsilon: f64,
    pub max_outer: usize,
    /// Absolute gradient tolerance; zero or negative selects the default.
    pub tol_g: f64,
    pub max_inner: usize,
    pub memory: usize,
    /// Bitwise or of `DUALRDM_CONDITION_*`; must include P.
    pub conditions: u32,
    pub confirm: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DualrdmSolution {
    /// Lower bound in the integrals' energy unit, core energy included.
    pub energy: f64,
    pub mu_star: f64,
    pub outer_iterations: usize,
    pub refinements: usize,
    pub inner_iterations: usize,
    pub stop: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> DualrdmStatus {
    match dualrdm::cli::exit_code(err) {
        2 => DualrdmStatus::InvalidInput,
        3 => DualrdmStatus::NotConverged,
        _ => DualrdmStatus::Numerical,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard<F: FnOnce() -> Result<(), (DualrdmStatus, String)>>(f: F) -> DualrdmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DualrdmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DualrdmStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DualrdmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DualrdmStatus, String) {
    (DualrdmStatus::NullPointer, format!("{what} is null"))
}

fn make_system(ints: IntegralSet) -> dualrdm::Result<Box<DualrdmSystem>> {
    let (spin, k) = reduced_from_integrals(&ints)?;
    Ok(Box::new(DualrdmSystem { spin, k }))
}

unsafe fn store_system(
    out: *mut *mut DualrdmSystem,
    ints: dualrdm::Result<IntegralSet>,
) -> Result<(), (DualrdmStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = ptr::null_mut();
    let system = ints.and_then(make_system).map_err(lib_err)?;
    *out = Box::into_raw(system);
    Ok(())
}

/// Loads an FCIDUMP file. `path` is a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_system_from_fcidump(
    path: *const c_char,
    out: *mut *mut DualrdmSystem,
) -> DualrdmStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (DualrdmStatus::InvalidInput, "path is not valid UTF-8".to_string()))?;
        store_system(out, load_fcidump_path(path))
    })
}

/// Two-site Hubbard model at half filling.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_system_hubbard_dimer(t: f64, u: f64, out: *mut *mut DualrdmSystem) -> DualrdmStatus {
    guard(|| store_system(out, hubbard_dimer(t, u)))
}

/// Seeded random integrals over `n_orbitals` spin orbitals (even).
#[no_mangle]
pub unsafe extern "C" fn dualrdm_system_random(
    seed: u64,
    n_orbitals: usize,
    n_electrons: usize,
    scale: f64,
    out: *mut *mut DualrdmSystem,
) -> DualrdmStatus {
    guard(|| store_system(out, random_two_body(seed, n_orbitals, n_electrons, scale)))
}

/// Releases a system; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_system_free(system: *mut DualrdmSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Spin orbitals of the system, 0 for null.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_system_n_orbitals(system: *const DualrdmSystem) -> usize {
    system.as_ref().map_or(0, |s| s.spin.basis().n_orbitals())
}

/// Electrons of the system, 0 for null.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_system_n_electrons(system: *const DualrdmSystem) -> usize {
    system.as_ref().map_or(0, |s| s.spin.basis().n_electrons())
}

#[no_mangle]
pub extern "C" fn dualrdm_solve_options_default() -> DualrdmSolveOptions {
    let d = NewtonConfig::default();
    DualrdmSolveOptions {
        has_mu0: false,
        mu0: 0.0,
        damping: d.damping,
        epsilon: d.epsilon,
        max_outer: d.max_outer,
        tol_g: 0.0,
        max_inner: d.projection.max_inner,
        memory: d.projection.memory,
        conditions: DUALRDM_CONDITION_P | DUALRDM_CONDITION_Q | DUALRDM_CONDITION_G,
        confirm: d.confirm,
    }
}

fn conditions(bits: u32) -> Result<ConditionSet, (DualrdmStatus, String)> {
    let all = DUALRDM_CONDITION_P | DUALRDM_CONDITION_Q | DUALRDM_CONDITION_G;
    if bits & !all != 0 || bits & DUALRDM_CONDITION_P == 0 {
        return Err((DualrdmStatus::InvalidInput, format!("invalid condition bits {bits:#x}; P is required")));
    }
    Ok(ConditionSet { p: true, q: bits & DUALRDM_CONDITION_Q != 0, g: bits & DUALRDM_CONDITION_G != 0 })
}

fn config(opts: &DualrdmSolveOptions) -> Result<NewtonConfig, (DualrdmStatus, String)> {
    let d = NewtonConfig::default();
    let cfg = NewtonConfig {
        mu0: opts.has_mu0.then_some(opts.mu0),
        damping: opts.damping,
        epsilon: opts.epsilon,
        max_outer: opts.max_outer,
        projection: ProjectionOptions {
            tol_g: (opts.tol_g > 0.0).then_some(opts.tol_g),
            max_inner: opts.max_inner,
            memory: opts.memory,
            conditions: conditions(opts.conditions)?,
            ..d.projection
        },
        confirm: opts.confirm,
        ..d
    };
    cfg.validate().map_err(lib_err)?;
    Ok(cfg)
}

/// Computes the lower bound. `options` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_solve(
    system: *const DualrdmSystem,
    options: *const DualrdmSolveOptions,
    out: *mut DualrdmSolution,
) -> DualrdmStatus {
    guard(|| {
        let system = system.as_ref().ok_or_else(|| null("system"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let opts = options.as_ref().copied().unwrap_or_else(|| dualrdm_solve_options_default());
        let cfg = config(&opts)?;
        let (_, trace) = solve_system(&system.spin, &cfg).map_err(lib_err)?;
        *out = DualrdmSolution {
            energy: trace.energy.unwrap_or(f64::NAN),
            mu_star: trace.mu_star.unwrap_or(f64::NAN),
            outer_iterations: trace.outer_iterations(),
            refinements: trace.refinements(),
            inner_iterations: trace.total_inner_iterations(),
            stop: match trace.stop {
                Some(StopReason::ZeroDistance) => DualrdmStop::ZeroDistance,
                Some(StopReason::StartAtZero) => DualrdmStop::StartAtZero,
                _ => DualrdmStop::SlopeTest,
            } as u32,
        };
        Ok(())
    })
}

/// Full-CI ground-state energy, core energy included.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_fci_energy(system: *const DualrdmSystem, out: *mut f64) -> DualrdmStatus {
    guard(|| {
        let system = system.as_ref().ok_or_else(|| null("system"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = solve_fci(&system.spin, DEFAULT_DETERMINANT_CAP).map_err(lib_err)?.energy();
        Ok(())
    })
}

/// Samples `δ` and `δ′` at `n` shifts. Points whose projection failed are written as NaN;
/// the call still returns OK when at least one point succeeded.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_sample_curve(
    system: *const DualrdmSystem,
    options: *const DualrdmSolveOptions,
    mu: *const f64,
    n: usize,
    delta_out: *mut f64,
    derivative_out: *mut f64,
) -> DualrdmStatus {
    guard(|| {
        let system = system.as_ref().ok_or_else(|| null("system"))?;
        if n == 0 {
            return Ok(());
        }
        if mu.is_null() || delta_out.is_null() || derivative_out.is_null() {
            return Err(null("buffer"));
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| dualrdm_solve_options_default());
        let cfg = config(&opts)?;
        let grid = std::slice::from_raw_parts(mu, n);
        let points = sample_delta_curve(&system.k, grid, &cfg.projection).map_err(lib_err)?;
        let deltas = std::slice::from_raw_parts_mut(delta_out, n);
        let derivatives = std::slice::from_raw_parts_mut(derivative_out, n);
        let mut ok = 0;
        for (i, p) in points.iter().enumerate() {
            if p.error.is_none() {
                ok += 1;
                deltas[i] = p.delta.unwrap_or(f64::NAN);
                derivatives[i] = p.derivative.unwrap_or(f64::NAN);
            } else {
                deltas[i] = f64::NAN;
                derivatives[i] = f64::NAN;
            }
        }
        if ok == 0 {
            return Err((DualrdmStatus::NotConverged, "no grid point converged".into()));
        }
        Ok(())
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`) and returns the length needed including the terminator. `buf` may be null to
/// query the length.
#[no_mangle]
pub unsafe extern "C" fn dualrdm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dualrdm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
