//! C bindings for `mfbandit-core`.
//!
//! Every function returns an [`MfbStatus`]. On failure the message is kept in
//! a thread-local slot readable through [`mfb_last_error_message`]. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mfbandit_core::analysis::{contraction_check_general, contraction_check_linear, ContractionCheck};
use mfbandit_core::export::{write_trace, ExportOptions};
use mfbandit_core::meanfield::{solve_mfe, MfeOptions};
use mfbandit_core::policy::hedge_probabilities_into;
use mfbandit_core::{cumulative_reward, mean_regret, Error, Game, GameConfig, PolicyParams, RunTrace};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidArgument = 4,
    Numerical = 5,
    NotConverged = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Reward family for [`mfb_contraction_check`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfbReward {
    General = 0,
    Linear = 1,
}

/// A validated game configuration.
pub struct MfbConfig {
    config: GameConfig,
}

/// The record of one simulated run.
pub struct MfbTrace {
    trace: RunTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(error: &Error) -> MfbStatus {
    match error {
        Error::InvalidConfig { .. } | Error::Parse(_) | Error::Serialize(_) => MfbStatus::InvalidConfig,
        Error::InvalidArgument(_)
        | Error::InvalidArm { .. }
        | Error::ShapeMismatch { .. }
        | Error::UndeclaredRewardProperty(_)
        | Error::ThinnedTrace(_)
        | Error::FullExploration => MfbStatus::InvalidArgument,
        Error::NotConverged { .. } => MfbStatus::NotConverged,
        Error::Io { .. } | Error::Csv(_) => MfbStatus::Io,
        _ => MfbStatus::Numerical,
    }
}

struct Failure(MfbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MfbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfbStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside mfbandit".to_owned());
            MfbStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(MfbStatus::NullPointer, format!("null pointer: {name}"))
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(MfbStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_slice<'a>(ptr: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if ptr.is_null() {
        return Err(null("out"));
    }
    if len < needed {
        return Err(Failure(MfbStatus::BufferTooSmall, format!("buffer holds {len} values, {needed} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, needed))
}

unsafe fn write_out<T>(ptr: *mut T, value: T) {
    if !ptr.is_null() {
        *ptr = value;
    }
}

fn checked(config: GameConfig) -> Result<Box<MfbConfig>, Failure> {
    Game::new(config.clone())?;
    Ok(Box::new(MfbConfig { config }))
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn mfb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |m| m.as_ptr()))
}

/// Parses and validates a TOML config.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mfb_config_from_toml(toml: *const c_char, out: *mut *mut MfbConfig) -> MfbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = GameConfig::from_toml_str(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(checked(config)?);
        Ok(())
    })
}

/// Loads and validates a TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mfb_config_load(path: *const c_char, out: *mut *mut MfbConfig) -> MfbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = GameConfig::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(checked(config)?);
        Ok(())
    })
}

/// Releases a config. Null is ignored.
///
/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfb_config_free(config: *mut MfbConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Replaces the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfb_config_set_seed(config: *mut MfbConfig, seed: u64) -> MfbStatus {
    guard(|| {
        let handle = config.as_mut().ok_or_else(|| null("config"))?;
        handle.config.seed = seed;
        Ok(())
    })
}

/// Replaces the horizon.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfb_config_set_horizon(config: *mut MfbConfig, horizon: usize) -> MfbStatus {
    guard(|| {
        let handle = config.as_mut().ok_or_else(|| null("config"))?;
        handle.config.horizon = horizon;
        Ok(())
    })
}

/// Writes the number of agents and arms.
///
/// # Safety
/// `config` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mfb_config_shape(
    config: *const MfbConfig,
    num_agents: *mut usize,
    num_arms: *mut usize,
) -> MfbStatus {
    guard(|| {
        let c = &ref_arg(config, "config")?.config;
        write_out(num_agents, c.num_agents);
        write_out(num_arms, c.num_arms);
        Ok(())
    })
}

/// Simulates one run.
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mfb_run(config: *const MfbConfig, out: *mut *mut MfbTrace) -> MfbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let game = Game::new(ref_arg(config, "config")?.config.clone())?;
        let trace = game.run()?;
        *out = Box::into_raw(Box::new(MfbTrace { trace }));
        Ok(())
    })
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfb_trace_free(trace: *mut MfbTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Mean empirical regret over agents.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfb_trace_mean_regret(trace: *const MfbTrace, out: *mut f64) -> MfbStatus {
    guard(|| {
        let value = mean_regret(&ref_arg(trace, "trace")?.trace)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = value;
        Ok(())
    })
}

/// Cumulative reward per agent.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfb_trace_cumulative_reward(trace: *const MfbTrace, out: *mut f64) -> MfbStatus {
    guard(|| {
        let value = cumulative_reward(&ref_arg(trace, "trace")?.trace);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = value;
        Ok(())
    })
}

/// Copies the terminal state, row-major by agent, into `out`.
///
/// # Safety
/// `trace` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfb_trace_terminal_state(trace: *const MfbTrace, out: *mut f64, len: usize) -> MfbStatus {
    guard(|| {
        let values = ref_arg(trace, "trace")?.trace.terminal.values();
        out_slice(out, len, values.len())?.copy_from_slice(values);
        Ok(())
    })
}

/// Writes the CSV trace files into `dir`. A zero `moving_average` disables the smoothed column.
///
/// # Safety
/// `trace` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mfb_trace_write(trace: *const MfbTrace, dir: *const c_char, moving_average: usize) -> MfbStatus {
    guard(|| {
        let trace = &ref_arg(trace, "trace")?.trace;
        let dir = str_arg(dir, "dir")?;
        let options = ExportOptions {
            moving_average: (moving_average > 0).then_some(moving_average),
        };
        write_trace(trace, Path::new(dir), options)?;
        Ok(())
    })
}

/// Solves for the mean-field equilibrium from the given start index.
///
/// The state is written even when the solver does not converge, in which case
/// the status is `NotConverged`.
///
/// # Safety
/// `config` must be a live handle, `out` must hold `len` doubles; `residual`
/// and `iterations` may be null.
#[no_mangle]
pub unsafe extern "C" fn mfb_solve_mfe(
    config: *const MfbConfig,
    start: u64,
    out: *mut f64,
    len: usize,
    residual: *mut f64,
    iterations: *mut usize,
) -> MfbStatus {
    guard(|| {
        let game = Game::new(ref_arg(config, "config")?.config.clone())?;
        let solution = solve_mfe(&game, start, MfeOptions::default())?;
        let values = solution.state.values();
        out_slice(out, len, values.len())?.copy_from_slice(values);
        write_out(residual, solution.residual);
        write_out(iterations, solution.iterations);
        if !solution.converged {
            return Err(Error::NotConverged {
                residual: solution.residual,
                iterations: solution.iterations,
            }
            .into());
        }
        Ok(())
    })
}

/// Evaluates the sufficient contraction condition for a homogeneous game.
///
/// # Safety
/// Output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mfb_contraction_check(
    reward: MfbReward,
    theta: f64,
    beta: f64,
    eta: f64,
    constant: *mut f64,
    satisfied: *mut bool,
) -> MfbStatus {
    guard(|| {
        if ![theta, beta, eta].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("contraction parameters").into());
        }
        let check: ContractionCheck = match reward {
            MfbReward::General => contraction_check_general(theta, beta, eta),
            MfbReward::Linear => contraction_check_linear(theta, beta, eta),
        };
        write_out(constant, check.constant());
        write_out(satisfied, check.satisfied);
        Ok(())
    })
}

/// Hedge probabilities for one agent's state row.
///
/// # Safety
/// `state` must hold `len` doubles and `out` must have room for `len`.
#[no_mangle]
pub unsafe extern "C" fn mfb_hedge_probabilities(
    state: *const f64,
    len: usize,
    beta: f64,
    eta: f64,
    out: *mut f64,
) -> MfbStatus {
    guard(|| {
        if state.is_null() {
            return Err(null("state"));
        }
        let state = std::slice::from_raw_parts(state, len);
        let params = PolicyParams::new(beta, eta)?;
        hedge_probabilities_into(state, params, out_slice(out, len, len)?)?;
        Ok(())
    })
}
