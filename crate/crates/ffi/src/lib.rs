//! C interface to the solvers and the simulator.
//!
//! Every fallible function returns an [`RtlsStatus`]; on failure a
//! description is available from [`rtls_last_error`] on the same thread.
//! Handles are created by `*_new`/`*_load` style functions and released with
//! the matching `*_free`. Passing a null handle to `*_free` is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rtls_core::protocol::anchor_event_cost;
use rtls_core::scheduler::Variant;
use rtls_core::sim::{output, SimConfig, SimStats, Simulation};
use rtls_core::solvers::{
    compute_gdop, larsson_multilaterate, lm_multilaterate, lm_tdoa, MultilaterationProblem,
    SolverConfig, SolverError, SolverResult, TdoaProblem,
};
use rtls_core::Position;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    /// The problem violates a solver precondition.
    SolverPrecondition = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RtlsSolverResult {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub converged: bool,
    pub iterations: u32,
    pub residual_norm: f64,
}

impl From<SolverResult> for RtlsSolverResult {
    fn from(r: SolverResult) -> Self {
        Self {
            x: r.position.x,
            y: r.position.y,
            z: r.position.z,
            converged: r.converged,
            iterations: r.iterations as u32,
            residual_norm: r.residual_norm,
        }
    }
}

/// Opaque simulation config.
pub struct RtlsConfig(SimConfig);

/// Opaque running simulation.
pub struct RtlsSim(Simulation);

/// Opaque statistics of a finished simulation.
pub struct RtlsStats(SimStats);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).unwrap_or_default());
}

fn fail(status: RtlsStatus, message: impl Into<String>) -> RtlsStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> RtlsStatus) -> RtlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == RtlsStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(RtlsStatus::Internal, "internal error"),
    }
}

fn solver_status(e: SolverError) -> RtlsStatus {
    fail(RtlsStatus::SolverPrecondition, e.to_string())
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, RtlsStatus> {
    if s.is_null() {
        return Err(fail(RtlsStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(RtlsStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn points(xyz: *const f64, n: usize) -> Result<Vec<Position>, RtlsStatus> {
    if xyz.is_null() {
        return Err(fail(RtlsStatus::NullPointer, "null coordinate array"));
    }
    let flat: &[f64] = std::slice::from_raw_parts(xyz, 3 * n);
    Ok(flat.chunks_exact(3).map(|c| Position::new(c[0], c[1], c[2])).collect())
}

unsafe fn values(v: *const f64, n: usize) -> Result<Vec<f64>, RtlsStatus> {
    if v.is_null() {
        return Err(fail(RtlsStatus::NullPointer, "null value array"));
    }
    Ok(std::slice::from_raw_parts(v, n).to_vec())
}

fn solver_config(tolerance: f64) -> Result<SolverConfig, RtlsStatus> {
    let config = SolverConfig::default().with_tolerance(tolerance);
    config
        .validate()
        .map_err(|e| fail(RtlsStatus::InvalidArgument, e))?;
    Ok(config)
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Description of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn rtls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rtls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Range multilateration by Levenberg-Marquardt.
///
/// `anchors` holds `3 * n` coordinates, `distances` holds `n`. `initial` is
/// three coordinates or null for the anchor centroid.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rtls_lm_multilaterate(
    anchors: *const f64,
    distances: *const f64,
    n: usize,
    initial: *const f64,
    tolerance: f64,
    out: *mut RtlsSolverResult,
) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        let problem = MultilaterationProblem::new(try_status!(points(anchors, n)), try_status!(values(distances, n)));
        let start = if initial.is_null() {
            problem.centroid()
        } else {
            try_status!(points(initial, 1))[0]
        };
        let config = try_status!(solver_config(tolerance));
        match lm_multilaterate(&problem, start, &config) {
            Ok(r) => {
                *out = r.into();
                RtlsStatus::Ok
            }
            Err(e) => solver_status(e),
        }
    })
}

/// Globally optimal range multilateration. Same layout as
/// [`rtls_lm_multilaterate`] without a starting point.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rtls_larsson_multilaterate(
    anchors: *const f64,
    distances: *const f64,
    n: usize,
    tolerance: f64,
    out: *mut RtlsSolverResult,
) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        let problem = MultilaterationProblem::new(try_status!(points(anchors, n)), try_status!(values(distances, n)));
        let config = try_status!(solver_config(tolerance));
        match larsson_multilaterate(&problem, &config) {
            Ok(r) => {
                *out = r.into();
                RtlsStatus::Ok
            }
            Err(e) => solver_status(e),
        }
    })
}

/// Passive position from range differences to an initiator at `initiator`
/// (three coordinates). `initial` is three coordinates, or null for the
/// closed-form linear estimate.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rtls_lm_tdoa(
    initiator: *const f64,
    anchors: *const f64,
    range_differences: *const f64,
    n: usize,
    initial: *const f64,
    tolerance: f64,
    out: *mut RtlsSolverResult,
) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        let q = try_status!(points(initiator, 1))[0];
        let problem = TdoaProblem::new(q, try_status!(points(anchors, n)), try_status!(values(range_differences, n)));
        let start = if initial.is_null() {
            problem.default_start()
        } else {
            try_status!(points(initial, 1))[0]
        };
        let config = try_status!(solver_config(tolerance));
        match lm_tdoa(&problem, start, &config) {
            Ok(r) => {
                *out = r.into();
                RtlsStatus::Ok
            }
            Err(e) => solver_status(e),
        }
    })
}

/// Geometric dilution of precision at `tag` (three coordinates).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rtls_gdop(anchors: *const f64, n: usize, tag: *const f64, out: *mut f64) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        let tag = try_status!(points(tag, 1))[0];
        match compute_gdop(&try_status!(points(anchors, n)), &tag) {
            Ok(g) => {
                *out = g;
                RtlsStatus::Ok
            }
            Err(e) => solver_status(e),
        }
    })
}

/// Energy (microjoules) and duration (microseconds) of one response by the
/// anchor in 1-based `slot_index`, with the default cost model.
///
/// # Safety
/// `energy_uj` and `duration_us` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn rtls_anchor_event_cost(
    slot_index: u32,
    energy_uj: *mut f64,
    duration_us: *mut f64,
) -> RtlsStatus {
    guard(|| {
        if slot_index == 0 {
            return fail(RtlsStatus::InvalidArgument, "slot_index is 1-based");
        }
        let (e, d) = anchor_event_cost(slot_index, &Default::default(), &Default::default());
        if !energy_uj.is_null() {
            *energy_uj = e.microjoules();
        }
        if !duration_us.is_null() {
            *duration_us = d.as_secs_f64() * 1e6;
        }
        RtlsStatus::Ok
    })
}

/// The bundled config.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_config_bundled(out: *mut *mut RtlsConfig) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        *out = Box::into_raw(Box::new(RtlsConfig(SimConfig::bundled())));
        RtlsStatus::Ok
    })
}

/// Parses and validates a TOML config.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_config_from_toml(toml: *const c_char, out: *mut *mut RtlsConfig) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        match SimConfig::from_toml(try_status!(c_str(toml))) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(RtlsConfig(c)));
                RtlsStatus::Ok
            }
            Err(e) => fail(RtlsStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Reads and validates a config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_config_load(path: *const c_char, out: *mut *mut RtlsConfig) -> RtlsStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        match SimConfig::load(Path::new(try_status!(c_str(path)))) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(RtlsConfig(c)));
                RtlsStatus::Ok
            }
            Err(e @ rtls_core::sim::ConfigError::Io { .. }) => fail(RtlsStatus::Io, e.to_string()),
            Err(e) => fail(RtlsStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Overrides seed, days and the number of random tags. Negative `days` or
/// `tags` leave the value unchanged.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtls_config_set_run(config: *mut RtlsConfig, seed: u64, days: i64, tags: i64) -> RtlsStatus {
    guard(|| {
        let Some(c) = config.as_mut() else {
            return fail(RtlsStatus::NullPointer, "null config");
        };
        let mut next = c.0.clone();
        next.seed = seed;
        if days >= 0 {
            next.days = try_status!(u32::try_from(days).map_err(|_| fail(RtlsStatus::InvalidArgument, "days too large")));
        }
        if tags >= 0 {
            next.world.random_tags.count = tags as usize;
        }
        if let Err(e) = next.validate() {
            return fail(RtlsStatus::InvalidConfig, e.join("; "));
        }
        c.0 = next;
        RtlsStatus::Ok
    })
}

/// Selects the scheduler: "aimd", "bounded_aimd" or "constant_rate".
///
/// # Safety
/// `config` must be a live handle and `variant` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rtls_config_set_scheduler(config: *mut RtlsConfig, variant: *const c_char) -> RtlsStatus {
    guard(|| {
        let Some(c) = config.as_mut() else {
            return fail(RtlsStatus::NullPointer, "null config");
        };
        match try_status!(c_str(variant)).parse::<Variant>() {
            Ok(v) => {
                c.0.scheduler.variant = v;
                RtlsStatus::Ok
            }
            Err(e) => fail(RtlsStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rtls_config_free(config: *mut RtlsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Prepares a simulation. The config is copied.
///
/// # Safety
/// `config` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_sim_new(config: *const RtlsConfig, out: *mut *mut RtlsSim) -> RtlsStatus {
    guard(|| {
        let (Some(c), false) = (config.as_ref(), out.is_null()) else {
            return fail(RtlsStatus::NullPointer, "null argument");
        };
        match Simulation::new(&c.0) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(RtlsSim(s)));
                RtlsStatus::Ok
            }
            Err(e) => fail(RtlsStatus::Io, e),
        }
    })
}

/// Advances the simulation by `minutes` steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtls_sim_step(sim: *mut RtlsSim, minutes: u64) -> RtlsStatus {
    guard(|| {
        let Some(s) = sim.as_mut() else {
            return fail(RtlsStatus::NullPointer, "null simulation");
        };
        for _ in 0..minutes {
            s.0.step_minute();
        }
        RtlsStatus::Ok
    })
}

/// Minutes simulated so far, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtls_sim_minute(sim: *const RtlsSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.0.minute())
}

/// Ends the simulation and returns its statistics. The simulation handle is
/// consumed, even on failure.
///
/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_sim_finish(sim: *mut RtlsSim, out: *mut *mut RtlsStats) -> RtlsStatus {
    guard(|| {
        if sim.is_null() {
            return fail(RtlsStatus::NullPointer, "null simulation");
        }
        let sim = Box::from_raw(sim);
        if out.is_null() {
            return fail(RtlsStatus::NullPointer, "null output");
        }
        *out = Box::into_raw(Box::new(RtlsStats(sim.0.finish())));
        RtlsStatus::Ok
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed or finished.
#[no_mangle]
pub unsafe extern "C" fn rtls_sim_free(sim: *mut RtlsSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs the configured number of days.
///
/// # Safety
/// `config` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_run(config: *const RtlsConfig, out: *mut *mut RtlsStats) -> RtlsStatus {
    let mut sim: *mut RtlsSim = ptr::null_mut();
    let status = rtls_sim_new(config, &mut sim);
    if status != RtlsStatus::Ok {
        return status;
    }
    let days = (*config).0.days;
    let status = rtls_sim_step(sim, u64::from(days) * 1440);
    if status != RtlsStatus::Ok {
        rtls_sim_free(sim);
        return status;
    }
    rtls_sim_finish(sim, out)
}

/// Number of nodes, anchors first.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtls_stats_node_count(stats: *const RtlsStats) -> usize {
    stats.as_ref().map_or(0, |s| s.0.nodes.len())
}

/// Completed days.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtls_stats_days(stats: *const RtlsStats) -> u32 {
    stats.as_ref().map_or(0, |s| s.0.days)
}

/// State of charge of `node` at the end of the last completed day.
///
/// # Safety
/// `stats` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rtls_stats_final_soc(stats: *const RtlsStats, node: usize, out: *mut f64) -> RtlsStatus {
    guard(|| {
        let (Some(s), false) = (stats.as_ref(), out.is_null()) else {
            return fail(RtlsStatus::NullPointer, "null argument");
        };
        if node >= s.0.nodes.len() {
            return fail(RtlsStatus::InvalidArgument, format!("node {node} out of range"));
        }
        *out = s.0.final_soc(node);
        RtlsStatus::Ok
    })
}

/// Mean over tags of total localizations.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtls_stats_mean_localizations_per_tag(stats: *const RtlsStats) -> f64 {
    stats.as_ref().map_or(0.0, |s| s.0.mean_localizations_per_tag())
}

/// Writes the CSV outputs into directory `dir`.
///
/// # Safety
/// `stats` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rtls_stats_write(stats: *const RtlsStats, dir: *const c_char) -> RtlsStatus {
    guard(|| {
        let Some(s) = stats.as_ref() else {
            return fail(RtlsStatus::NullPointer, "null stats");
        };
        let dir = try_status!(c_str(dir));
        match output::write_outputs(&s.0, Path::new(dir)) {
            Ok(_) => RtlsStatus::Ok,
            Err(e) => fail(RtlsStatus::Io, e.to_string()),
        }
    })
}

/// # Safety
/// `stats` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rtls_stats_free(stats: *mut RtlsStats) {
    if !stats.is_null() {
        drop(Box::from_raw(stats));
    }
}
