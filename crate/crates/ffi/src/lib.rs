//! C ABI over [`armpc`].
//!
//! A controller lives behind an opaque `ArmpcController*`. Every call returns
//! an [`ArmpcStatus`]; on failure a message for the calling thread is kept
//! until the next failing call and can be read with
//! [`armpc_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use armpc::config::{ControllerKind, ExperimentConfig};
use armpc::controller::Controller;
use armpc::sim::Experiment;
use armpc::Error;
use nalgebra::DVector;

/// Use the controller named in the config's `[run]` table.
pub const ARMPC_KIND_FROM_CONFIG: i32 = 0;
pub const ARMPC_KIND_CE: i32 = 1;
pub const ARMPC_KIND_BENCHMARK: i32 = 2;
pub const ARMPC_KIND_NAIVE: i32 = 3;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Dimension = 4,
    InvalidArgument = 5,
    /// The robust program has no solution at this state; nothing was written.
    Infeasible = 6,
    Solver = 7,
    Internal = 8,
    Panic = 9,
}

/// Opaque handle: an experiment (plant and sets) plus its live controller.
pub struct ArmpcController {
    experiment: Experiment,
    controller: Controller,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(ArmpcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => ArmpcStatus::Config,
            Error::DimensionMismatch { .. } => ArmpcStatus::Dimension,
            Error::InvalidArgument(_) | Error::NonFinite(_) => ArmpcStatus::InvalidArgument,
            Error::Solver(_) | Error::Lp(_) => ArmpcStatus::Solver,
            _ => ArmpcStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ArmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArmpcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            ArmpcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ArmpcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a>(ptr: *mut ArmpcController) -> Result<&'a mut ArmpcController, Failure> {
    ptr.as_mut().ok_or_else(|| null("controller"))
}

unsafe fn vector(ptr: *const f64, len: usize, what: &str) -> Result<DVector<f64>, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(ptr, len)))
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), Failure> {
    if expected == got {
        Ok(())
    } else {
        Err(Failure(
            ArmpcStatus::Dimension,
            format!("{what}: expected length {expected}, got {got}"),
        ))
    }
}

fn kind_from(code: i32, config: &ExperimentConfig) -> Result<ControllerKind, Failure> {
    match code {
        ARMPC_KIND_FROM_CONFIG => Ok(config.run.controller),
        ARMPC_KIND_CE => Ok(ControllerKind::Ce),
        ARMPC_KIND_BENCHMARK => Ok(ControllerKind::Benchmark),
        ARMPC_KIND_NAIVE => Ok(ControllerKind::Naive),
        other => Err(Failure(
            ArmpcStatus::InvalidArgument,
            format!("unknown controller kind {other}"),
        )),
    }
}

/// Message of the last failing call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn armpc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Build a controller from TOML or JSON config text. The warm-start data
/// and all randomness derive from `seed`.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_new(
    config: *const c_char,
    kind: i32,
    seed: u64,
    out: *mut *mut ArmpcController,
) -> ArmpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if config.is_null() {
            return Err(null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| Failure(ArmpcStatus::InvalidUtf8, e.to_string()))?;
        let cfg = ExperimentConfig::parse(text)?;
        let kind = kind_from(kind, &cfg)?;
        let experiment = Experiment::from_config(&cfg)?;
        let controller = experiment.controller(kind, seed)?;
        *out = Box::into_raw(Box::new(ArmpcController {
            experiment,
            controller,
        }));
        Ok(())
    })
}

/// # Safety
/// `ctrl` must come from [`armpc_controller_new`] and not be used again.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_free(ctrl: *mut ArmpcController) {
    if !ctrl.is_null() {
        drop(Box::from_raw(ctrl));
    }
}

/// State and input dimensions.
///
/// # Safety
/// `ctrl` must be a live handle; `n` and `m` writable.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_dims(
    ctrl: *mut ArmpcController,
    n: *mut usize,
    m: *mut usize,
) -> ArmpcStatus {
    guard(|| {
        let h = handle(ctrl)?;
        if n.is_null() || m.is_null() {
            return Err(null("dimension output"));
        }
        *n = h.controller.mpc().n();
        *m = h.controller.mpc().m();
        Ok(())
    })
}

/// Applied input at state `x`. Returns `ARMPC_STATUS_INFEASIBLE` (and
/// leaves `u` untouched) when the robust program has no solution.
///
/// # Safety
/// `x` must hold `n` doubles and `u` room for `m`.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_act(
    ctrl: *mut ArmpcController,
    x: *const f64,
    n: usize,
    u: *mut f64,
    m: usize,
) -> ArmpcStatus {
    guard(|| {
        let h = handle(ctrl)?;
        check_len("state", h.controller.mpc().n(), n)?;
        check_len("input", h.controller.mpc().m(), m)?;
        if u.is_null() {
            return Err(null("input output"));
        }
        let x = vector(x, n, "state")?;
        let decision = h.controller.act(&x)?;
        let input = decision.input.ok_or_else(|| {
            Failure(
                ArmpcStatus::Infeasible,
                "robust program infeasible at this state".into(),
            )
        })?;
        std::slice::from_raw_parts_mut(u, m).copy_from_slice(input.as_slice());
        Ok(())
    })
}

/// Feed one observed transition to the estimator.
///
/// # Safety
/// `x` and `x_next` must hold `n` doubles, `u` must hold `m`.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_observe(
    ctrl: *mut ArmpcController,
    x: *const f64,
    u: *const f64,
    x_next: *const f64,
    n: usize,
    m: usize,
) -> ArmpcStatus {
    guard(|| {
        let h = handle(ctrl)?;
        check_len("state", h.controller.mpc().n(), n)?;
        check_len("input", h.controller.mpc().m(), m)?;
        let x = vector(x, n, "state")?;
        let u = vector(u, m, "input")?;
        let x_next = vector(x_next, n, "next state")?;
        h.controller.observe(&x, &u, &x_next)?;
        Ok(())
    })
}

/// Mark an episode boundary (refreshes sets under the `episode` schedule).
///
/// # Safety
/// `ctrl` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_end_episode(ctrl: *mut ArmpcController) -> ArmpcStatus {
    guard(|| {
        handle(ctrl)?.controller.end_episode()?;
        Ok(())
    })
}

/// Radii of the current compound disturbance box.
///
/// # Safety
/// `out` must have room for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_dhat_radii(
    ctrl: *mut ArmpcController,
    out: *mut f64,
    n: usize,
) -> ArmpcStatus {
    guard(|| {
        let h = handle(ctrl)?;
        check_len("radii", h.controller.mpc().n(), n)?;
        if out.is_null() {
            return Err(null("radii output"));
        }
        let radii = h.controller.ingredients().d_hat.radii();
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(radii.as_slice());
        Ok(())
    })
}

/// Run every configured episode against the simulated plant, continuing
/// from the handle's current estimator. Writes the realized cost of the
/// last episode and whether all episodes stayed feasible.
///
/// # Safety
/// `cost` and `feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn armpc_controller_simulate(
    ctrl: *mut ArmpcController,
    seed: u64,
    cost: *mut f64,
    feasible: *mut bool,
) -> ArmpcStatus {
    guard(|| {
        let h = handle(ctrl)?;
        if cost.is_null() || feasible.is_null() {
            return Err(null("simulation output"));
        }
        let runs = h.experiment.run_with(&mut h.controller, seed)?;
        *cost = runs.last().map_or(0.0, |r| r.realized_cost);
        *feasible = runs.iter().all(|r| r.feasible);
        Ok(())
    })
}
