//! C ABI for the oscillator-flow library: opaque handles, plain error
//! codes, and flat structs, so other languages can drive profile
//! construction, integration, phase extraction and cyclic-window
//! verdicts.
//!
//! Conventions:
//! - every constructor writes its handle through an out-pointer and
//!   returns a [`TdhoStatus`]; handles are freed with the matching
//!   `*_free` function (null-safe);
//! - numerical failures map to status codes; the human-readable detail of
//!   the most recent failure on the current thread is available through
//!   [`tdho_last_error`];
//! - all values are `double`s in the library's dimensionless units.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tdho::cyclic::{self, CyclicVerdictKind};
use tdho::model::{
    family_profile, profile_samples_from_csv, tabulated_profile, Family, FamilySpec, PhaseFn,
    Profile,
};
use tdho::propagate::{integrate, uniform_grid, IntegrateOptions, PropagateError, Trajectory};
use tdho::so21::{param_to_vec, HVec3, HyperParam};

/// ABI revision; bump on any breaking change to this header.
pub const TDHO_ABI_VERSION: u32 = 1;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdhoStatus {
    TdhoOk = 0,
    TdhoNullPointer = 1,
    TdhoInvalidArgument = 2,
    TdhoNumericalFailure = 3,
    TdhoInternalPanic = 4,
}

/// Breadth of the cyclic-solution set in a window.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdhoCyclicKind {
    TdhoCyclicNone = 0,
    TdhoCyclicDenumerable = 1,
    TdhoCyclicAllDefiniteParity = 2,
    TdhoCyclicAllStates = 3,
}

/// One stored trajectory node: time, invariant vector, the 3x3 evolution
/// matrix (row-major), the 2x2 quadrature matrix (row-major), and the two
/// phase accumulators.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TdhoNode {
    pub t: f64,
    pub e: [f64; 3],
    pub e_mat: [f64; 9],
    pub q_mat: [f64; 4],
    pub a1: f64,
    pub a2: f64,
}

/// Phase functionals of a window for a state with `u(0) = u0 e0`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TdhoPhases {
    pub alpha_tau: f64,
    pub hannay: f64,
    pub dynamical: f64,
    pub total: f64,
    pub geometric: f64,
    pub u0: f64,
}

/// Cyclic-window verdict: kind, the window phase (NaN when not defined),
/// the special-window integer (i64::MIN when absent), the fixed vector
/// and its scale-free square, and the boundary flag.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TdhoVerdict {
    pub kind: TdhoCyclicKind,
    pub alpha_tau: f64,
    pub n_special: i64,
    pub eta: [f64; 3],
    pub eta_sq: f64,
    pub boundary: bool,
}

/// Opaque Hamiltonian profile handle.
pub struct TdhoProfile {
    inner: Profile,
}

/// Opaque trajectory handle.
pub struct TdhoTrajectory {
    inner: Trajectory,
    profile: Profile,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

fn status_of(err: &PropagateError) -> TdhoStatus {
    match err {
        PropagateError::DriftExceeded { .. }
        | PropagateError::GroupViolation { .. }
        | PropagateError::StepBudgetExceeded { .. } => TdhoStatus::TdhoNumericalFailure,
        _ => TdhoStatus::TdhoInvalidArgument,
    }
}

fn guarded(body: impl FnOnce() -> TdhoStatus) -> TdhoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TdhoStatus::TdhoInternalPanic
        }
    }
}

/// ABI revision of this library.
#[no_mangle]
pub extern "C" fn tdho_abi_version() -> u32 {
    TDHO_ABI_VERSION
}

/// Copies the most recent error message of the current thread into `buf`
/// (NUL-terminated, truncated to `cap`); returns the full message length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes (or be null to query the
/// length only).
#[no_mangle]
pub unsafe extern "C" fn tdho_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds an analytic-family profile. `family` is the ASCII letter
/// 'A'..'D'; the modulation phase is linear with the given rate; `t_max`
/// bounds the integration window.
///
/// # Safety
/// `out` must be a valid pointer; the handle must be released with
/// [`tdho_profile_free`].
#[no_mangle]
pub unsafe extern "C" fn tdho_profile_new_family(
    family: c_char,
    n1: f64,
    n3: f64,
    lambda: f64,
    rate: f64,
    t_max: f64,
    out: *mut *mut TdhoProfile,
) -> TdhoStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return TdhoStatus::TdhoNullPointer;
        }
        let fam = match (family as u8 as char).to_ascii_uppercase() {
            'A' => Family::A,
            'B' => Family::B,
            'C' => Family::C,
            'D' => Family::D,
            other => {
                set_error(format!("unknown family '{other}'"));
                return TdhoStatus::TdhoInvalidArgument;
            }
        };
        let spec = FamilySpec::new(fam, n1, n3, lambda, PhaseFn::linear(rate), t_max);
        match family_profile(spec) {
            Ok(profile) => {
                *out = Box::into_raw(Box::new(TdhoProfile { inner: profile }));
                TdhoStatus::TdhoOk
            }
            Err(e) => {
                set_error(e.to_string());
                TdhoStatus::TdhoInvalidArgument
            }
        }
    })
}

/// Builds a tabulated profile from CSV text with header
/// `t,omega,n1,n2,n3`.
///
/// # Safety
/// `csv_text` must be a NUL-terminated UTF-8 string; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn tdho_profile_new_csv(
    csv_text: *const c_char,
    out: *mut *mut TdhoProfile,
) -> TdhoStatus {
    guarded(|| {
        if csv_text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TdhoStatus::TdhoNullPointer;
        }
        let text = match CStr::from_ptr(csv_text).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("csv text is not valid UTF-8");
                return TdhoStatus::TdhoInvalidArgument;
            }
        };
        let build = profile_samples_from_csv(text).and_then(|s| tabulated_profile(&s));
        match build {
            Ok(profile) => {
                *out = Box::into_raw(Box::new(TdhoProfile { inner: profile }));
                TdhoStatus::TdhoOk
            }
            Err(e) => {
                set_error(e.to_string());
                TdhoStatus::TdhoInvalidArgument
            }
        }
    })
}

/// Releases a profile handle (null-safe).
///
/// # Safety
/// `profile` must come from a `tdho_profile_new_*` call and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn tdho_profile_free(profile: *mut TdhoProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// End of the profile's valid time range.
///
/// # Safety
/// `profile` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdho_profile_t_max(profile: *const TdhoProfile) -> f64 {
    if profile.is_null() {
        return f64::NAN;
    }
    (*profile).inner.t_max()
}

/// Integrates the flow over `[0, t_end]` on a uniform grid of `nodes`
/// points from the initial chart `(xi0, phi0)`. `step_target` <= 0 picks
/// the default step policy.
///
/// # Safety
/// `profile` must be a live handle; `out` must be valid; the trajectory
/// must be released with [`tdho_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn tdho_integrate(
    profile: *const TdhoProfile,
    xi0: f64,
    phi0: f64,
    t_end: f64,
    nodes: usize,
    step_target: f64,
    out: *mut *mut TdhoTrajectory,
) -> TdhoStatus {
    guarded(|| {
        if profile.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TdhoStatus::TdhoNullPointer;
        }
        let profile = &(*profile).inner;
        let mut opts = IntegrateOptions::default();
        if step_target > 0.0 {
            opts.step_target = step_target;
        }
        let e0 = param_to_vec(HyperParam::new(xi0, phi0));
        match integrate(profile, e0, &uniform_grid(t_end, nodes.max(2)), &opts) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(TdhoTrajectory {
                    inner: traj,
                    profile: profile.clone(),
                }));
                TdhoStatus::TdhoOk
            }
            Err(e) => {
                let status = status_of(&e);
                set_error(e.to_string());
                status
            }
        }
    })
}

/// Releases a trajectory handle (null-safe).
///
/// # Safety
/// `traj` must come from [`tdho_integrate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tdho_trajectory_free(traj: *mut TdhoTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored nodes.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdho_trajectory_len(traj: *const TdhoTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    (*traj).inner.len()
}

/// Copies node `index` into `out`.
///
/// # Safety
/// `traj` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tdho_trajectory_node(
    traj: *const TdhoTrajectory,
    index: usize,
    out: *mut TdhoNode,
) -> TdhoStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TdhoStatus::TdhoNullPointer;
        }
        let t = &(*traj).inner;
        if index >= t.len() {
            set_error(format!(
                "node index {index} out of range ({} nodes)",
                t.len()
            ));
            return TdhoStatus::TdhoInvalidArgument;
        }
        let node = t.node(index);
        *out = TdhoNode {
            t: node.t,
            e: node.e.as_array(),
            e_mat: node.e_mat.0,
            q_mat: node.q_mat.0,
            a1: node.a1,
            a2: node.a2,
        };
        TdhoStatus::TdhoOk
    })
}

/// Phase functionals at the final node for a state with `u(0) = u0 e0`.
///
/// # Safety
/// `traj` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tdho_phases(
    traj: *const TdhoTrajectory,
    u0: f64,
    out: *mut TdhoPhases,
) -> TdhoStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TdhoStatus::TdhoNullPointer;
        }
        let t = &(*traj).inner;
        match t.phases(u0, t.len() - 1) {
            Ok(ph) => {
                *out = TdhoPhases {
                    alpha_tau: ph.alpha_tau,
                    hannay: ph.hannay,
                    dynamical: ph.dynamical,
                    total: ph.total,
                    geometric: ph.geometric,
                    u0: ph.u0,
                };
                TdhoStatus::TdhoOk
            }
            Err(e) => {
                set_error(e.to_string());
                TdhoStatus::TdhoInvalidArgument
            }
        }
    })
}

/// Cyclic-window verdict at the final node of the trajectory. The window
/// phase `alpha_tau` is recomputed by re-integration where the verdict
/// needs it; it is NaN for windows without cyclic solutions.
///
/// # Safety
/// `traj` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tdho_cyclic_verdict(
    traj: *const TdhoTrajectory,
    out: *mut TdhoVerdict,
) -> TdhoStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TdhoStatus::TdhoNullPointer;
        }
        let handle = &*traj;
        let t = &handle.inner;
        let last = t.len() - 1;
        let tau = t.time(last);
        let alpha_fn = |e0: HVec3| -> Result<f64, PropagateError> {
            let sub = integrate(
                &handle.profile,
                e0,
                &uniform_grid(tau, t.len().max(9)),
                &IntegrateOptions::default(),
            )?;
            Ok(sub.a1(sub.len() - 1) - sub.a2(sub.len() - 1))
        };
        match cyclic::verdict(t.e_mat(last), t.q_mat(last), alpha_fn) {
            Ok(v) => {
                *out = TdhoVerdict {
                    kind: match v.kind {
                        CyclicVerdictKind::NoneExist => TdhoCyclicKind::TdhoCyclicNone,
                        CyclicVerdictKind::Denumerable => TdhoCyclicKind::TdhoCyclicDenumerable,
                        CyclicVerdictKind::AllDefiniteParity => {
                            TdhoCyclicKind::TdhoCyclicAllDefiniteParity
                        }
                        CyclicVerdictKind::AllStates => TdhoCyclicKind::TdhoCyclicAllStates,
                    },
                    alpha_tau: v.alpha_tau.unwrap_or(f64::NAN),
                    n_special: v.n_special.unwrap_or(i64::MIN),
                    eta: v.fixed.eta.as_array(),
                    eta_sq: v.fixed.eta_sq,
                    boundary: v.boundary,
                };
                TdhoStatus::TdhoOk
            }
            Err(e) => {
                set_error(e.to_string());
                TdhoStatus::TdhoNumericalFailure
            }
        }
    })
}
