//! C ABI over the teamcredit library.
//!
//! Every function returns a [`TcStatus`]; on failure the message is kept
//! per thread and read back with [`tc_last_error_message`]. Handles are
//! opaque, created by `*_new`/`*_parse`/`tc_run_*`/`tc_verify` and released
//! with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use teamcredit::game::{team_reward, TeamStructure};
use teamcredit::harness::{load_config, run_experiment, ExperimentConfig, MetricsTable};
use teamcredit::oracle::{
    gaussian_reward_entropy, run_verify, theorem1_probability, CheckRow, VerifyBudget, VerifyTarget,
};
use teamcredit::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Numeric = 5,
    OutOfRange = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> TcStatus {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Validation(_) => TcStatus::Config,
        Error::Io { .. } | Error::Csv(_) => TcStatus::Io,
        Error::Index { .. } => TcStatus::OutOfRange,
        Error::Shape { .. } | Error::Domain(_) => TcStatus::InvalidArgument,
        _ => TcStatus::Numeric,
    }
}

fn guard<F: FnOnce() -> Result<(), (TcStatus, String)>>(f: F) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TcStatus::Panic
        }
    }
}

fn lib<T>(r: teamcredit::Result<T>) -> Result<T, (TcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (TcStatus, String) {
    (TcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (TcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Last error message on this thread, or null if none. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tc_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// `1 - zeta^(n-1)`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tc_theorem1_probability(zeta: f64, n: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(theorem1_probability(zeta, n))?;
        Ok(())
    })
}

/// Differential entropy in nats of a Gaussian with the given variance.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tc_gaussian_reward_entropy(variance: f64, out: *mut f64) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(gaussian_reward_entropy(variance))?;
        Ok(())
    })
}

/// Team-mean rewards for `population` agents in contiguous teams of
/// `team_size`.
///
/// # Safety
/// `env_rewards` and `out` must each point to `population` doubles.
#[no_mangle]
pub unsafe extern "C" fn tc_team_reward(
    env_rewards: *const f64,
    population: usize,
    team_size: usize,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        if env_rewards.is_null() {
            return Err(null("env_rewards"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let teams = lib(TeamStructure::uniform(population, team_size))?;
        let env = std::slice::from_raw_parts(env_rewards, population);
        let tr = lib(team_reward(env, &teams))?;
        std::slice::from_raw_parts_mut(out, population).copy_from_slice(&tr);
        Ok(())
    })
}

/// Parsed experiment config.
pub struct TcConfig {
    inner: ExperimentConfig,
}

/// Parses config text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_config_parse(text: *const c_char, out: *mut *mut TcConfig) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(text, "text")?;
        let inner = lib(load_config(text))?;
        *out = Box::into_raw(Box::new(TcConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`tc_config_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_config_free(cfg: *mut TcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Overrides the trial count.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_config_set_trials(cfg: *mut TcConfig, trials: usize) -> TcStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.inner.clone();
        next.trials = trials;
        lib(next.validate())?;
        cfg.inner = next;
        Ok(())
    })
}

/// One metric row without its name.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcMetricRow {
    pub trial: usize,
    pub team_size: usize,
    pub checkpoint: usize,
    pub value: f64,
}

/// Metric rows from a finished experiment.
pub struct TcMetrics {
    table: MetricsTable,
    names: Vec<CString>,
}

/// Runs every team size of the config.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_run_experiment(cfg: *const TcConfig, out: *mut *mut TcMetrics) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let table = lib(run_experiment(&cfg.inner))?;
        let names = table
            .rows()
            .iter()
            .map(|r| CString::new(r.metric.as_str()).expect("metric names have no NUL"))
            .collect();
        *out = Box::into_raw(Box::new(TcMetrics { table, names }));
        Ok(())
    })
}

/// Row count, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_metrics_len(m: *const TcMetrics) -> usize {
    m.as_ref().map_or(0, |m| m.table.len())
}

/// # Safety
/// `m` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_metrics_row(m: *const TcMetrics, index: usize, out: *mut TcMetricRow) -> TcStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("metrics"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = m.table.rows().get(index).ok_or((
            TcStatus::OutOfRange,
            format!("row {index} out of range ({} rows)", m.table.len()),
        ))?;
        *out = TcMetricRow {
            trial: r.trial,
            team_size: r.team_size,
            checkpoint: r.checkpoint,
            value: r.value,
        };
        Ok(())
    })
}

/// Metric name of a row, or null if out of range. Owned by the handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_metrics_name(m: *const TcMetrics, index: usize) -> *const c_char {
    m.as_ref()
        .and_then(|m| m.names.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Writes the rows as CSV with the standard header.
///
/// # Safety
/// `m` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tc_metrics_write_csv(m: *const TcMetrics, path: *const c_char) -> TcStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("metrics"))?;
        let path = read_str(path, "path")?;
        lib(m.table.write_csv_file(Path::new(path)))
    })
}

/// # Safety
/// `m` must come from [`tc_run_experiment`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_metrics_free(m: *mut TcMetrics) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// One verifier row without its check name.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcCheckRow {
    pub n: usize,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verifier output.
pub struct TcVerifyReport {
    rows: Vec<CheckRow>,
    names: Vec<CString>,
}

/// Runs a verifier target: `theorem1`, `lemma1`, `info-convergence`,
/// `joint-oracle` or `all`.
///
/// # Safety
/// `target` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_verify(target: *const c_char, seed: u64, out: *mut *mut TcVerifyReport) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = read_str(target, "target")?;
        let target = VerifyTarget::parse(name)
            .ok_or_else(|| (TcStatus::InvalidArgument, format!("unknown verify target {name:?}")))?;
        let rows = lib(run_verify(target, seed, &VerifyBudget::default()))?;
        let names = rows
            .iter()
            .map(|r| CString::new(r.check.as_str()).expect("check names have no NUL"))
            .collect();
        *out = Box::into_raw(Box::new(TcVerifyReport { rows, names }));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_verify_len(r: *const TcVerifyReport) -> usize {
    r.as_ref().map_or(0, |r| r.rows.len())
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_verify_all_passed(r: *const TcVerifyReport) -> bool {
    r.as_ref().is_some_and(|r| r.rows.iter().all(|c| c.pass))
}

/// # Safety
/// `r` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_verify_row(r: *const TcVerifyReport, index: usize, out: *mut TcCheckRow) -> TcStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = r.rows.get(index).ok_or((
            TcStatus::OutOfRange,
            format!("row {index} out of range ({} rows)", r.rows.len()),
        ))?;
        *out = TcCheckRow {
            n: c.n,
            expected: c.expected,
            observed: c.observed,
            tolerance: c.tolerance,
            pass: c.pass,
        };
        Ok(())
    })
}

/// Check name of a row, or null if out of range. Owned by the handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_verify_name(r: *const TcVerifyReport, index: usize) -> *const c_char {
    r.as_ref()
        .and_then(|r| r.names.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `r` must come from [`tc_verify`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_verify_free(r: *mut TcVerifyReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
