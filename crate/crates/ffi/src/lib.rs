//! C interface to `sse-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`SseStatus`]; the message of the most recent failure on the
//! calling thread is available from [`sse_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sse_core::analysis::{strong_error, Reference, Resolution};
use sse_core::fem1d::{assemble, FemSystem, Mesh};
use sse_core::noise::{coarsen, sample_path, NoiseSpec, PathTable};
use sse_core::schemes::{run_final, ModelProblem};
use sse_core::{spectral, Error};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SseStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument violated a precondition.
    InvalidArgument = 2,
    /// The computation failed or produced non-finite values.
    Numerical = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

/// Assembled P1 system on a uniform mesh.
pub struct SseFemSystem(FemSystem);

/// Sampled truncated Wiener path.
pub struct SsePath(PathTable);

/// Model problem with its noise description.
pub struct SseProblem(ModelProblem);

/// Statistics returned by [`sse_strong_error`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SseStrongError {
    pub rms_re: f64,
    pub rms_im: f64,
    pub rms: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub excluded: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> SseStatus {
    match e {
        Error::Domain(_) | Error::Config(_) => SseStatus::InvalidArgument,
        _ => SseStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SseStatus, String)>) -> SseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SseStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sse");
            SseStatus::Panic
        }
    }
}

fn core<T>(r: sse_core::Result<T>) -> Result<T, (SseStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (SseStatus, String) {
    (SseStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (SseStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_slot<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (SseStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, name: &str) -> Result<&'a mut [f64], (SseStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    if len < need {
        return Err((SseStatus::InvalidArgument, format!("{name} holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

/// Message of the last failed call on this thread, or an empty string.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn sse_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Continuous Dirichlet eigenvalue `(jπ)²`, `j ≥ 1`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn sse_eigenvalue(j: usize, out: *mut f64) -> SseStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        *slot = core(spectral::eigenvalue(j))?;
        Ok(())
    })
}

/// Hilbert–Schmidt norm of `A^{θ/2} Q^{1/2}` truncated to `num_modes`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn sse_hs_norm(theta: f64, s: f64, num_modes: usize, out: *mut f64) -> SseStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        if !theta.is_finite() || !s.is_finite() {
            return Err((SseStatus::InvalidArgument, "theta and s must be finite".into()));
        }
        *slot = spectral::hs_norm(theta, s, num_modes);
        Ok(())
    })
}

/// Assembles the system on a mesh with `num_cells` cells.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer. On
/// success it receives a handle to release with [`sse_fem_system_free`].
#[no_mangle]
pub unsafe extern "C" fn sse_fem_system_new(num_cells: usize, out: *mut *mut SseFemSystem) -> SseStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let sys = core(Mesh::new(num_cells).and_then(|m| assemble(&m)))?;
        *slot = Box::into_raw(Box::new(SseFemSystem(sys)));
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `system` must be null or a handle from [`sse_fem_system_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn sse_fem_system_free(system: *mut SseFemSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of interior nodes, which is also the number of eigenvalues.
///
/// # Safety
/// `system` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sse_fem_system_num_dofs(system: *const SseFemSystem) -> usize {
    system.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the discrete eigenvalues in increasing order into `out`.
///
/// # Safety
/// `system` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sse_fem_system_eigenvalues(system: *const SseFemSystem, out: *mut f64, len: usize) -> SseStatus {
    guard(|| {
        let sys = &deref(system, "system")?.0;
        let dst = out_slice(out, len, sys.dim(), "out")?;
        dst.copy_from_slice(sys.eig_values());
        Ok(())
    })
}

/// Samples a path with `num_steps` steps on `[0, final_time]`.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer. On
/// success it receives a handle to release with [`sse_path_free`].
#[no_mangle]
pub unsafe extern "C" fn sse_path_sample(
    s: f64,
    num_modes: usize,
    final_time: f64,
    num_steps: usize,
    seed: u64,
    sample_index: u64,
    out: *mut *mut SsePath,
) -> SseStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let spec = core(NoiseSpec::new(s, num_modes))?;
        let path = core(sample_path(&spec, final_time, num_steps, seed, sample_index))?;
        *slot = Box::into_raw(Box::new(SsePath(path)));
        Ok(())
    })
}

/// New path whose steps are sums of `factor` consecutive steps of `path`.
///
/// # Safety
/// `path` must be a live handle; `out` as for [`sse_path_sample`].
#[no_mangle]
pub unsafe extern "C" fn sse_path_coarsen(path: *const SsePath, factor: usize, out: *mut *mut SsePath) -> SseStatus {
    guard(|| {
        let src = &deref(path, "path")?.0;
        let slot = out_slot(out, "out")?;
        let coarse = core(coarsen(src, factor))?;
        *slot = Box::into_raw(Box::new(SsePath(coarse)));
        Ok(())
    })
}

/// Number of steps and modes of a path. Either output may be null.
///
/// # Safety
/// `path` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sse_path_shape(path: *const SsePath, num_steps: *mut usize, num_modes: *mut usize) -> SseStatus {
    guard(|| {
        let p = &deref(path, "path")?.0;
        if let Some(n) = num_steps.as_mut() {
            *n = p.num_steps();
        }
        if let Some(j) = num_modes.as_mut() {
            *j = p.num_modes();
        }
        Ok(())
    })
}

/// Copies the increments of step `step` of both processes.
///
/// # Safety
/// `path` must be a live handle; `dw1` and `dw2` must each hold `len`
/// doubles, with `len` at least the number of modes.
#[no_mangle]
pub unsafe extern "C" fn sse_path_increments(
    path: *const SsePath,
    step: usize,
    dw1: *mut f64,
    dw2: *mut f64,
    len: usize,
) -> SseStatus {
    guard(|| {
        let p = &deref(path, "path")?.0;
        let inc = p
            .increments()
            .get(step)
            .ok_or_else(|| (SseStatus::InvalidArgument, format!("step {step} out of range")))?;
        out_slice(dw1, len, inc.dw1.len(), "dw1")?.copy_from_slice(&inc.dw1);
        out_slice(dw2, len, inc.dw2.len(), "dw2")?.copy_from_slice(&inc.dw2);
        Ok(())
    })
}

/// Releases a path. Null is ignored.
///
/// # Safety
/// `path` must be null or a live handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sse_path_free(path: *mut SsePath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Model problem with the built-in data, semilinear when `semilinear` is
/// non-zero and linear additive otherwise.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer. On
/// success it receives a handle to release with [`sse_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn sse_problem_new(
    s: f64,
    num_modes: usize,
    final_time: f64,
    semilinear: i32,
    out: *mut *mut SseProblem,
) -> SseStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let noise = core(NoiseSpec::new(s, num_modes))?;
        let problem = if semilinear != 0 {
            ModelProblem::paper(noise, final_time)
        } else {
            ModelProblem::linear(noise, final_time)
        };
        *slot = Box::into_raw(Box::new(SseProblem(core(problem)?)));
        Ok(())
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `problem` must be null or a live handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sse_problem_free(problem: *mut SseProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs the scheme along `path` and writes the interior nodal values of
/// the final state into `re` and `im`.
///
/// # Safety
/// All handles must be live; `re` and `im` must each hold `len` doubles,
/// with `len` at least the number of interior nodes.
#[no_mangle]
pub unsafe extern "C" fn sse_run_final(
    problem: *const SseProblem,
    system: *const SseFemSystem,
    path: *const SsePath,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SseStatus {
    guard(|| {
        let problem = &deref(problem, "problem")?.0;
        let sys = &deref(system, "system")?.0;
        let path = &deref(path, "path")?.0;
        let re = out_slice(re, len, sys.dim(), "re")?;
        let im = out_slice(im, len, sys.dim(), "im")?;
        let state = core(run_final(problem, sys, path))?;
        re.copy_from_slice(&state.pair.re.nodal_values);
        im.copy_from_slice(&state.pair.im.nodal_values);
        Ok(())
    })
}

/// Monte Carlo strong error at `T` of the `(n_cells, n_steps)` scheme
/// against the scheme at `(ref_cells, ref_steps)`, over coupled paths.
///
/// # Safety
/// `problem` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sse_strong_error(
    problem: *const SseProblem,
    n_cells: usize,
    n_steps: usize,
    ref_cells: usize,
    ref_steps: usize,
    n_samples: usize,
    seed: u64,
    out: *mut SseStrongError,
) -> SseStatus {
    guard(|| {
        let problem = &deref(problem, "problem")?.0;
        let slot = out_slot(out, "out")?;
        let reference = Reference::Numerical(Resolution::new(ref_cells, ref_steps));
        let e = core(strong_error(problem, Resolution::new(n_cells, n_steps), reference, n_samples, seed))?;
        *slot = SseStrongError {
            rms_re: e.rms_re,
            rms_im: e.rms_im,
            rms: e.rms,
            std_error: e.stderr,
            n_samples: e.n_samples,
            excluded: e.excluded,
        };
        Ok(())
    })
}
