//! C ABI for `cgo_core`.
//!
//! Every entry point returns a [`CgoStatus`]; on failure the message is kept
//! per thread and read back with [`cgo_last_error_message`]. Objects cross
//! the boundary as opaque handles owned by the caller and released with the
//! matching `_free` function. Panics never unwind into C; they surface as
//! `CGO_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cgo_core::cli::{self, Outcome};
use cgo_core::config::RunConfig;
use cgo_core::geometry::{CrossSection, CylinderDomain, Line2D};
use cgo_core::numerics::{Axis, ComplexField2, Grid2};
use cgo_core::phase::{eval_amplitude_a0, eval_phase, BoundaryPhase, Branch};
use cgo_core::report::Cell;
use cgo_core::{Error, C64};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Caustic = 4,
    NoConvergence = 5,
    Singular = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgoBranch {
    Direct = 0,
    Mirror = 1,
}

/// Built-in cross-sections.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgoShape {
    /// Unit disk.
    Disk = 0,
    /// [-1/2, 1/2] x [0, 1].
    Square = 1,
}

/// Run configuration.
pub struct CgoConfig(RunConfig);

/// Summary of a finished command: rows of (quantity, value, threshold, status).
pub struct CgoReport(Outcome);

/// Boundary phase with its ray cutoff width.
pub struct CgoPhase(BoundaryPhase);

/// Cylinder cross-section with its inaccessible boundary part.
pub struct CgoDomain(CylinderDomain);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> CgoStatus {
    match e {
        Error::Invalid { .. } => CgoStatus::InvalidArgument,
        Error::Config(_) => CgoStatus::Config,
        Error::Caustic { .. } => CgoStatus::Caustic,
        Error::NoConvergence { .. } => CgoStatus::NoConvergence,
        Error::Singular { .. } => CgoStatus::Singular,
        Error::Numerical { .. } => CgoStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => CgoStatus::Io,
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CgoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgoStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            CgoStatus::NullPointer
        }
        Ok(Err(Failure::Arg(m))) => {
            set_error(m);
            CgoStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CgoStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(v);
    Ok(())
}

/// Copies `s` into `buf` (truncated, always NUL-terminated when `len > 0`)
/// and returns the buffer size needed for the whole string.
unsafe fn copy_out(s: &[u8], buf: *mut c_char, len: usize) -> usize {
    if !buf.is_null() && len > 0 {
        let n = s.len().min(len - 1);
        std::ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    s.len() + 1
}

fn finite(name: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Arg(format!("{name} must be finite")))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cgo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf` and returns the
/// buffer size the full message needs, or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cgo_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(m) => copy_out(m.as_bytes(), buf, len),
        None => 0,
    })
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cgo_config_default(out: *mut *mut CgoConfig) -> CgoStatus {
    guard(|| put(out, Box::into_raw(Box::new(CgoConfig(RunConfig::default()))), "out"))
}

/// Parses and validates a TOML configuration. Relative descriptor paths are
/// resolved against `base_dir` (the working directory when null).
///
/// # Safety
/// `toml` and `base_dir` must be null or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_config_from_toml(
    toml: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut CgoConfig,
) -> CgoStatus {
    guard(|| {
        let t = text(toml, "toml")?;
        let base = if base_dir.is_null() {
            "."
        } else {
            text(base_dir, "base_dir")?
        };
        let cfg = RunConfig::from_toml(t, Path::new(base))?;
        put(out, Box::into_raw(Box::new(CgoConfig(cfg))), "out")
    })
}

/// Writes the configuration as TOML into `buf`; `needed` receives the
/// buffer size for the whole text.
///
/// # Safety
/// `cfg` must come from this library; `buf` must be null or hold `len`
/// bytes; `needed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_config_to_toml(
    cfg: *const CgoConfig,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CgoStatus {
    guard(|| {
        let c = borrow(cfg, "cfg")?;
        let t = c.0.to_toml()?;
        let n = copy_out(t.as_bytes(), buf, len);
        put(needed, n, "needed")
    })
}

/// # Safety
/// `cfg` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cgo_config_free(cfg: *mut CgoConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs a command (as named on the command line) writing its files under
/// `out_dir`. A run whose checks fail still returns `CGO_STATUS_OK`; see
/// [`cgo_report_all_pass`].
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cgo_run(
    cfg: *const CgoConfig,
    command: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut CgoReport,
) -> CgoStatus {
    guard(|| {
        let c = borrow(cfg, "cfg")?;
        let cmd = text(command, "command")?;
        let dir = text(out_dir, "out_dir")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let o = cli::run(cmd, &c.0, Path::new(dir))?;
        put(out, Box::into_raw(Box::new(CgoReport(o))), "out")
    })
}

/// Number of summary rows.
///
/// # Safety
/// `report` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cgo_report_rows(report: *const CgoReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.summary.rows.len())
}

/// True when no summary row failed.
///
/// # Safety
/// `report` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cgo_report_all_pass(report: *const CgoReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.all_pass())
}

unsafe fn row<'a>(report: *const CgoReport, i: usize) -> Result<&'a [Cell], Failure> {
    let r = borrow(report, "report")?;
    r.0.summary
        .rows
        .get(i)
        .map(|v| v.as_slice())
        .ok_or_else(|| Failure::Arg(format!("row {i} out of range ({} rows)", r.0.summary.rows.len())))
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(v) => *v,
        Cell::Text(_) => f64::NAN,
    }
}

/// Value and threshold of row `i` (NaN where the row has none).
///
/// # Safety
/// `report` must come from this library; `value` and `threshold` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_report_value(
    report: *const CgoReport,
    i: usize,
    value: *mut f64,
    threshold: *mut f64,
) -> CgoStatus {
    guard(|| {
        let r = row(report, i)?;
        put(value, num(&r[1]), "value")?;
        put(threshold, num(&r[2]), "threshold")
    })
}

/// Quantity name (`column` 0) or status (`column` 3) of row `i`, copied like
/// [`cgo_last_error_message`]; `needed` receives the size for the whole text.
///
/// # Safety
/// `report` must come from this library; `buf` null or `len` bytes; `needed` valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_report_text(
    report: *const CgoReport,
    i: usize,
    column: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CgoStatus {
    guard(|| {
        let r = row(report, i)?;
        let cell = r
            .get(column)
            .ok_or_else(|| Failure::Arg(format!("column {column} out of range")))?;
        let n = copy_out(cell.render().as_bytes(), buf, len);
        put(needed, n, "needed")
    })
}

/// # Safety
/// `report` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cgo_report_free(report: *mut CgoReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Boundary phase m(x₀) = (κ/2)x₀²χ(x₀) for a section of height `height_k`
/// with ray cutoff half-width `epsilon`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_phase_new(kappa: f64, height_k: f64, epsilon: f64, out: *mut *mut CgoPhase) -> CgoStatus {
    guard(|| {
        let bp = BoundaryPhase::new(kappa, height_k, epsilon)?;
        put(out, Box::into_raw(Box::new(CgoPhase(bp))), "out")
    })
}

fn branch(b: CgoBranch) -> Branch {
    match b {
        CgoBranch::Direct => Branch::Direct,
        CgoBranch::Mirror => Branch::Mirror,
    }
}

/// Eikonal phase at (x1, x2) in ray-frame coordinates.
///
/// # Safety
/// `phase` must come from this library; `psi` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_phase_eval(
    phase: *const CgoPhase,
    which: CgoBranch,
    x1: f64,
    x2: f64,
    psi: *mut f64,
) -> CgoStatus {
    guard(|| {
        let p = borrow(phase, "phase")?;
        finite("x1", x1)?;
        finite("x2", x2)?;
        put(psi, eval_phase([x1, x2], &p.0, branch(which))?, "psi")
    })
}

/// Transport amplitude a₀ at (x1, x2).
///
/// # Safety
/// `phase` must come from this library; `a0` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_phase_amplitude(
    phase: *const CgoPhase,
    which: CgoBranch,
    x1: f64,
    x2: f64,
    a0: *mut f64,
) -> CgoStatus {
    guard(|| {
        let p = borrow(phase, "phase")?;
        finite("x1", x1)?;
        finite("x2", x2)?;
        put(a0, eval_amplitude_a0([x1, x2], &p.0, branch(which))?, "a0")
    })
}

/// # Safety
/// `phase` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cgo_phase_free(phase: *mut CgoPhase) {
    if !phase.is_null() {
        drop(Box::from_raw(phase));
    }
}

/// Cylinder of the given cross-section and height whose inaccessible part
/// is `n_arcs` arc-length intervals stored as (start, end) pairs in `gamma0`.
///
/// # Safety
/// `gamma0` must hold `2 * n_arcs` values (may be null when `n_arcs` is 0);
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_domain_new(
    shape: CgoShape,
    height: f64,
    gamma0: *const f64,
    n_arcs: usize,
    out: *mut *mut CgoDomain,
) -> CgoStatus {
    guard(|| {
        let arcs: Vec<(f64, f64)> = if n_arcs == 0 {
            Vec::new()
        } else {
            if gamma0.is_null() {
                return Err(Failure::Null("gamma0"));
            }
            std::slice::from_raw_parts(gamma0, 2 * n_arcs)
                .chunks(2)
                .map(|c| (c[0], c[1]))
                .collect()
        };
        let section = match shape {
            CgoShape::Disk => CrossSection::unit_disk(),
            CgoShape::Square => CrossSection::unit_square(),
        };
        let d = CylinderDomain::new(section, height, &arcs)?;
        put(out, Box::into_raw(Box::new(CgoDomain(d))), "out")
    })
}

/// Whether (x1, x2) lies in the cross-section but outside the hull of the
/// inaccessible boundary part.
///
/// # Safety
/// `domain` must come from this library; `reachable` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_domain_reachable(
    domain: *const CgoDomain,
    x1: f64,
    x2: f64,
    reachable: *mut bool,
) -> CgoStatus {
    guard(|| {
        let d = borrow(domain, "domain")?;
        put(reachable, d.0.in_reachable([x1, x2]), "reachable")
    })
}

/// Area of the convex hull of the inaccessible boundary part.
///
/// # Safety
/// `domain` must come from this library; `area` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_domain_hull_area(domain: *const CgoDomain, area: *mut f64) -> CgoStatus {
    guard(|| {
        let d = borrow(domain, "domain")?;
        put(area, d.0.hull.area(), "area")
    })
}

/// # Safety
/// `domain` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cgo_domain_free(domain: *mut CgoDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Exponential Radon transform ∫ f(pω + tω⊥) e^{μt} dt of a grid function
/// on the line with normal angle `theta` and offset `p`.
///
/// `re` and `im` hold `n1 * n2` samples with x1 varying fastest; `im` may be
/// null for real data. `bounds` is (x1_min, x1_max, x2_min, x2_max).
///
/// # Safety
/// `re` (and `im` if not null) must hold `n1 * n2` values, `bounds` four;
/// `out_re` and `out_im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cgo_exp_radon_grid(
    re: *const f64,
    im: *const f64,
    n1: usize,
    n2: usize,
    bounds: *const f64,
    mu: f64,
    theta: f64,
    p: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CgoStatus {
    guard(|| {
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        if bounds.is_null() {
            return Err(Failure::Null("bounds"));
        }
        if n1 < 2 || n2 < 2 {
            return Err(Failure::Arg(format!("grid must be at least 2x2, got {n1}x{n2}")));
        }
        let b = std::slice::from_raw_parts(bounds, 4);
        if !(b.iter().all(|v| v.is_finite()) && b[1] > b[0] && b[3] > b[2]) {
            return Err(Failure::Arg("bounds must be finite and increasing".into()));
        }
        for (name, v) in [("mu", mu), ("theta", theta), ("p", p)] {
            finite(name, v)?;
        }
        let n = n1 * n2;
        let re = std::slice::from_raw_parts(re, n);
        let values = if im.is_null() {
            re.iter().map(|&r| C64::new(r, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, n);
            re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect()
        };
        let f = ComplexField2 {
            grid: Grid2::new(Axis::new(b[0], b[1], n1), Axis::new(b[2], b[3], n2)),
            values,
        };
        let v = cgo_core::radon::exp_radon(&f, mu, &Line2D::from_angle(theta, p), f64::INFINITY);
        put(out_re, v.re, "out_re")?;
        put(out_im, v.im, "out_im")
    })
}
