//! C ABI for gridcascade.
//!
//! Objects cross the boundary as opaque handles created by `gc_*_new`-style
//! functions and released with the matching `gc_*_free`. Every fallible
//! function returns a [`GcStatus`]; on failure a message is available from
//! [`gc_last_error`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use gridcascade::case::{self, fixtures, rts79, CaseData};
use gridcascade::gsdf::{build_gsdf, woodbury_update, GsdfMatrix, SusceptanceSystem};
use gridcascade::report;
use gridcascade::search::line_failure_probability;
use gridcascade::study::{run_study, StudyConfig, StudyReport};
use gridcascade::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Islanded = 6,
    Infeasible = 7,
    Solver = 8,
    Config = 9,
    Panic = 10,
    Other = 11,
}

/// A network case.
pub struct GcCase {
    case: Arc<CaseData>,
    sys: Option<Arc<SusceptanceSystem>>,
}

/// A generalized shift distribution factor matrix (lines × buses).
pub struct GcGsdf {
    gsdf: GsdfMatrix,
}

/// The result of a study run.
pub struct GcStudy {
    report: StudyReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> GcStatus {
    match e {
        Error::Io { .. } => GcStatus::Io,
        Error::Parse(_) => GcStatus::Parse,
        Error::Validation(_) | Error::UnknownId { .. } | Error::Dimension(_) => GcStatus::Validation,
        Error::Islanded(_) => GcStatus::Islanded,
        Error::Infeasible | Error::Unbounded(_) => GcStatus::Infeasible,
        Error::Solver(_) | Error::Degenerate(_) => GcStatus::Solver,
        Error::Config(_) | Error::WindModel(_) | Error::NotPsd | Error::Workload(_) => GcStatus::Config,
        _ => GcStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GcStatus, String)>) -> GcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GcStatus, String) {
    (GcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (GcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (GcStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next gridcascade call on the same thread.
#[no_mangle]
pub extern "C" fn gc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_case(case: CaseData) -> *mut GcCase {
    let case = Arc::new(case);
    let all = vec![true; case.n_lines()];
    let sys = SusceptanceSystem::new(&case, &all).ok().map(Arc::new);
    Box::into_raw(Box::new(GcCase { case, sys }))
}

/// Load a built-in case (`rts79`, `rts79_wind`, `five_bus`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gc_case_builtin(name: *const c_char, out: *mut *mut GcCase) -> GcStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let opts = rts79::Rts79Options::default();
        let case = match name {
            "rts79" => rts79::case(&opts),
            "rts79_wind" => rts79::wind_case(&opts),
            "five_bus" => fixtures::five_bus(),
            other => return Err((GcStatus::InvalidArgument, format!("unknown built-in case `{other}`"))),
        };
        *out = new_case(case);
        Ok(())
    })
}

/// Load a TOML case file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gc_case_load(path: *const c_char, out: *mut *mut GcCase) -> GcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        *out = new_case(case::load_case(Path::new(path)).map_err(lib_err)?);
        Ok(())
    })
}

/// # Safety
/// `case` must come from a `gc_case_*` constructor and not be used after.
#[no_mangle]
pub unsafe extern "C" fn gc_case_free(case: *mut GcCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// # Safety
/// `case` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_case_n_buses(case: *const GcCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.n_buses())
}

/// # Safety
/// `case` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_case_n_lines(case: *const GcCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.n_lines())
}

/// # Safety
/// `case` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_case_n_generators(case: *const GcCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.n_generators())
}

/// Failure probability of line `line` (0-based) carrying `flow` MW.
///
/// # Safety
/// `case` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gc_line_failure_probability(
    case: *const GcCase,
    line: usize,
    flow: f64,
    out: *mut f64,
) -> GcStatus {
    guard(|| {
        let case = handle(case, "case")?;
        let out = out_arg(out, "out")?;
        let l = case
            .case
            .lines
            .get(line)
            .ok_or_else(|| (GcStatus::InvalidArgument, format!("line index {line} out of range")))?;
        *out = line_failure_probability(l, flow);
        Ok(())
    })
}

/// Build the GSDF for a line state (`n_lines` bytes, nonzero = in service).
///
/// # Safety
/// `line_state` must point to `n_lines` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_build(
    case: *const GcCase,
    line_state: *const u8,
    n_lines: usize,
    out: *mut *mut GcGsdf,
) -> GcStatus {
    guard(|| {
        let case = handle(case, "case")?;
        let out = out_arg(out, "out")?;
        if line_state.is_null() {
            return Err(null("line_state"));
        }
        if n_lines != case.case.n_lines() {
            return Err((
                GcStatus::InvalidArgument,
                format!("line state has {n_lines} entries, case has {}", case.case.n_lines()),
            ));
        }
        let state: Vec<bool> = std::slice::from_raw_parts(line_state, n_lines)
            .iter()
            .map(|&b| b != 0)
            .collect();
        let gsdf = build_gsdf(&case.case, &state).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GcGsdf { gsdf }));
        Ok(())
    })
}

/// Remove `n_removed` lines (0-based indices) from `parent` by a low-rank
/// update. Returns `GC_STATUS_ISLANDED` when the removal splits the network.
///
/// # Safety
/// `removed` must point to `n_removed` indices; handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_remove_lines(
    case: *const GcCase,
    parent: *const GcGsdf,
    removed: *const usize,
    n_removed: usize,
    out: *mut *mut GcGsdf,
) -> GcStatus {
    guard(|| {
        let case = handle(case, "case")?;
        let parent = handle(parent, "parent")?;
        let out = out_arg(out, "out")?;
        if removed.is_null() && n_removed > 0 {
            return Err(null("removed"));
        }
        let sys = case
            .sys
            .as_ref()
            .ok_or((GcStatus::Islanded, "base network is not connected".to_string()))?;
        let removed = if n_removed == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(removed, n_removed)
        };
        let gsdf = woodbury_update(sys, &parent.gsdf, removed).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GcGsdf { gsdf }));
        Ok(())
    })
}

/// Entry for `line` and `bus` (both 0-based).
///
/// # Safety
/// `gsdf` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_get(gsdf: *const GcGsdf, line: usize, bus: usize, out: *mut f64) -> GcStatus {
    guard(|| {
        let g = handle(gsdf, "gsdf")?;
        let out = out_arg(out, "out")?;
        if line >= g.gsdf.n_lines() || bus >= g.gsdf.n_buses() {
            return Err((GcStatus::InvalidArgument, format!("({line}, {bus}) out of range")));
        }
        *out = g.gsdf.get(line, bus);
        Ok(())
    })
}

/// Copy the matrix, row-major (lines × buses), into `buf` of `len` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_copy(gsdf: *const GcGsdf, buf: *mut f64, len: usize) -> GcStatus {
    guard(|| {
        let g = handle(gsdf, "gsdf")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = g.gsdf.as_slice();
        if len < values.len() {
            return Err((GcStatus::InvalidArgument, format!("buffer needs {} doubles", values.len())));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Line flows for bus injections `injections` (`n_buses` values, MW).
///
/// # Safety
/// `injections` must hold `n_buses` values and `flows` room for `n_lines`.
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_flows(
    gsdf: *const GcGsdf,
    injections: *const f64,
    n_buses: usize,
    flows: *mut f64,
    n_lines: usize,
) -> GcStatus {
    guard(|| {
        let g = handle(gsdf, "gsdf")?;
        if injections.is_null() || flows.is_null() {
            return Err(null("injections or flows"));
        }
        if n_buses != g.gsdf.n_buses() || n_lines != g.gsdf.n_lines() {
            return Err((GcStatus::InvalidArgument, "dimension mismatch".to_string()));
        }
        let inj = std::slice::from_raw_parts(injections, n_buses);
        let out = std::slice::from_raw_parts_mut(flows, n_lines);
        g.gsdf.apply(inj, out);
        Ok(())
    })
}

/// # Safety
/// `gsdf` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_n_lines(gsdf: *const GcGsdf) -> usize {
    gsdf.as_ref().map_or(0, |g| g.gsdf.n_lines())
}

/// # Safety
/// `gsdf` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_n_buses(gsdf: *const GcGsdf) -> usize {
    gsdf.as_ref().map_or(0, |g| g.gsdf.n_buses())
}

/// # Safety
/// `gsdf` must come from a `gc_gsdf_*` constructor and not be used after.
#[no_mangle]
pub unsafe extern "C" fn gc_gsdf_free(gsdf: *mut GcGsdf) {
    if !gsdf.is_null() {
        drop(Box::from_raw(gsdf));
    }
}

/// Run a study described by TOML text (same keys as the CLI config file;
/// NULL or empty uses the defaults).
///
/// # Safety
/// `config_toml` must be NULL or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gc_study_run(config_toml: *const c_char, out: *mut *mut GcStudy) -> GcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = if config_toml.is_null() {
            StudyConfig::default()
        } else {
            StudyConfig::from_toml(str_arg(config_toml, "config_toml")?).map_err(lib_err)?
        };
        let report = run_study(&config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GcStudy { report }));
        Ok(())
    })
}

/// # Safety
/// `study` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_study_n_hours(study: *const GcStudy) -> usize {
    study.as_ref().map_or(0, |s| s.report.hours.len())
}

/// # Safety
/// `study` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gc_study_n_paths(study: *const GcStudy) -> usize {
    study.as_ref().map_or(0, |s| s.report.n_paths())
}

/// Largest shedding over the paths of hour `hour` (MW).
///
/// # Safety
/// `study` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gc_study_max_shed(study: *const GcStudy, hour: usize, out: *mut f64) -> GcStatus {
    guard(|| {
        let s = handle(study, "study")?;
        let out = out_arg(out, "out")?;
        let h = s
            .report
            .hours
            .get(hour)
            .ok_or_else(|| (GcStatus::InvalidArgument, format!("hour {hour} out of range")))?;
        *out = h.max_shed();
        Ok(())
    })
}

/// Write the report files into directory `dir`.
///
/// # Safety
/// `study` must be a valid handle and `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gc_study_write(study: *const GcStudy, dir: *const c_char) -> GcStatus {
    guard(|| {
        let s = handle(study, "study")?;
        let dir = str_arg(dir, "dir")?;
        report::write_report(&s.report, Path::new(dir)).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `study` must come from [`gc_study_run`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn gc_study_free(study: *mut GcStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}
