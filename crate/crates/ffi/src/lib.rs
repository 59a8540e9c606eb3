//! C ABI over `lorhol`.
//!
//! Charts are opaque handles created by `lh_chart_from_demo` or
//! `lh_chart_from_toml` and released with `lh_chart_free`. Every call returns
//! an [`LhStatus`]; on failure `lh_last_error` holds a message for the calling
//! thread. Strings handed out by the library are freed with `lh_string_free`.
//! Tensors are written row-major into caller buffers whose length is checked.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lorhol::cli::{self, CliError, Command, Config, Loaded};
use lorhol::expr::Point;
use lorhol::metric::MetricChart;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Parse, configuration or invalid-input error.
    Config = 3,
    /// A mathematical validation failed (signature, Walker structure, ...).
    Validation = 4,
    /// Step underflow, singular metric or another numerical failure.
    Numerical = 5,
    /// Output buffer shorter than required; nothing was written.
    BufferTooSmall = 6,
    /// Point has the wrong number of coordinates.
    DimensionMismatch = 7,
    Panic = 8,
}

/// Opaque chart handle.
pub struct LhChart {
    config: Config,
    loaded: Loaded,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: LhStatus, msg: impl Into<String>) -> LhStatus {
    set_error(msg);
    status
}

fn from_cli(e: CliError) -> LhStatus {
    let status = match e.code {
        cli::EXIT_VALIDATION => LhStatus::Validation,
        cli::EXIT_NUMERICAL => LhStatus::Numerical,
        _ => LhStatus::Config,
    };
    fail(status, e.message)
}

fn from_core(e: lorhol::Error) -> LhStatus {
    from_cli(e.into())
}

/// Runs `f`, converting a panic into `LhStatus::Panic`.
fn guard(f: impl FnOnce() -> LhStatus) -> LhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(LhStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, LhStatus> {
    if s.is_null() {
        return Err(fail(LhStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(LhStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn chart_ref<'a>(chart: *const LhChart) -> Result<&'a LhChart, LhStatus> {
    chart.as_ref().ok_or_else(|| fail(LhStatus::NullPointer, "null chart"))
}

unsafe fn read_point(m: &MetricChart, point: *const f64, len: usize) -> Result<Point, LhStatus> {
    if point.is_null() {
        return Err(fail(LhStatus::NullPointer, "null point"));
    }
    if len != m.dim() {
        return Err(fail(LhStatus::DimensionMismatch, format!("point has {len} coordinates, chart has {}", m.dim())));
    }
    Ok(Point::new(std::slice::from_raw_parts(point, len).to_vec()))
}

unsafe fn write_out(values: &[f64], out: *mut f64, out_len: usize) -> LhStatus {
    if out.is_null() {
        return fail(LhStatus::NullPointer, "null output buffer");
    }
    if out_len < values.len() {
        return fail(LhStatus::BufferTooSmall, format!("output needs {} values, buffer has {out_len}", values.len()));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    LhStatus::Ok
}

unsafe fn write_string(s: String, out: *mut *mut c_char) -> LhStatus {
    if out.is_null() {
        return fail(LhStatus::NullPointer, "null output pointer");
    }
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            LhStatus::Ok
        }
        Err(_) => fail(LhStatus::Panic, "output contained a NUL byte"),
    }
}

unsafe fn make_chart(config: Config, out: *mut *mut LhChart) -> LhStatus {
    if out.is_null() {
        return fail(LhStatus::NullPointer, "null output pointer");
    }
    match cli::load_metric(&config.metric) {
        Ok(loaded) => {
            *out = Box::into_raw(Box::new(LhChart { config, loaded }));
            LhStatus::Ok
        }
        Err(e) => from_cli(e),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds one of the named demo charts (`flat`, `toric-ppwave`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lh_chart_from_demo(name: *const c_char, out: *mut *mut LhChart) -> LhStatus {
    guard(|| match read_str(name) {
        Ok(name) => make_chart(Config::demo(name), out),
        Err(s) => s,
    })
}

/// Builds a chart from a TOML document in the CLI config format.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lh_chart_from_toml(toml: *const c_char, out: *mut *mut LhChart) -> LhStatus {
    guard(|| {
        let src = match read_str(toml) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Config::from_toml(src) {
            Ok(cfg) => make_chart(cfg, out),
            Err(e) => from_cli(e),
        }
    })
}

/// Releases a chart. NULL is ignored.
///
/// # Safety
/// `chart` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lh_chart_free(chart: *mut LhChart) {
    if !chart.is_null() {
        drop(Box::from_raw(chart));
    }
}

/// Manifold dimension `n + 2`, or 0 for NULL.
///
/// # Safety
/// `chart` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lh_chart_dim(chart: *const LhChart) -> usize {
    chart.as_ref().map_or(0, |c| c.loaded.chart.dim())
}

/// Writes the chart box: `lo` and `hi`, `dim` values each.
///
/// # Safety
/// `chart` must be a live handle and the buffers must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn lh_chart_domain(chart: *const LhChart, lo: *mut f64, hi: *mut f64, len: usize) -> LhStatus {
    guard(|| {
        let c = match chart_ref(chart) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let d = c.loaded.chart.domain();
        match write_out(&d.lo, lo, len) {
            LhStatus::Ok => write_out(&d.hi, hi, len),
            s => s,
        }
    })
}

/// `g_ij` at `point`, row-major, `dim²` values.
///
/// # Safety
/// `point` must hold `point_len` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn lh_metric(
    chart: *const LhChart,
    point: *const f64,
    point_len: usize,
    out: *mut f64,
    out_len: usize,
) -> LhStatus {
    guard(|| {
        let c = match chart_ref(chart) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let m = &c.loaded.chart;
        let p = match read_point(m, point, point_len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match m.metric_at(&p) {
            Ok(g) => write_out(g.transpose().as_slice(), out, out_len),
            Err(e) => from_core(e),
        }
    })
}

/// `Γ^k_ij` at `point`, laid out `[k][i][j]`, `dim³` values.
///
/// # Safety
/// `point` must hold `point_len` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn lh_christoffel(
    chart: *const LhChart,
    point: *const f64,
    point_len: usize,
    out: *mut f64,
    out_len: usize,
) -> LhStatus {
    guard(|| {
        let c = match chart_ref(chart) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let m = &c.loaded.chart;
        let p = match read_point(m, point, point_len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match m.christoffel(&p) {
            Ok(gam) => {
                let d = gam.dim();
                let mut v = Vec::with_capacity(d * d * d);
                for k in 0..d {
                    for i in 0..d {
                        for j in 0..d {
                            v.push(gam.get(k, i, j));
                        }
                    }
                }
                write_out(&v, out, out_len)
            }
            Err(e) => from_core(e),
        }
    })
}

/// `R^l_ijk` at `point`, laid out `[l][i][j][k]`, `dim⁴` values.
///
/// # Safety
/// `point` must hold `point_len` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn lh_riemann(
    chart: *const LhChart,
    point: *const f64,
    point_len: usize,
    out: *mut f64,
    out_len: usize,
) -> LhStatus {
    guard(|| {
        let c = match chart_ref(chart) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let m = &c.loaded.chart;
        let p = match read_point(m, point, point_len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match m.riemann(&p) {
            Ok(r) => {
                let d = r.dim();
                let mut v = Vec::with_capacity(d.pow(4));
                for l in 0..d {
                    for i in 0..d {
                        for j in 0..d {
                            for k in 0..d {
                                v.push(r.get(l, i, j, k));
                            }
                        }
                    }
                }
                write_out(&v, out, out_len)
            }
            Err(e) => from_core(e),
        }
    })
}

/// Counts of negative and positive eigenvalues of `g` at `point`.
///
/// # Safety
/// `point` must hold `point_len` values; `neg` and `pos` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lh_signature(
    chart: *const LhChart,
    point: *const f64,
    point_len: usize,
    neg: *mut usize,
    pos: *mut usize,
) -> LhStatus {
    guard(|| {
        let c = match chart_ref(chart) {
            Ok(c) => c,
            Err(s) => return s,
        };
        if neg.is_null() || pos.is_null() {
            return fail(LhStatus::NullPointer, "null output pointer");
        }
        let m = &c.loaded.chart;
        let p = match read_point(m, point, point_len) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match m.signature_at(&p) {
            Ok((n, q)) => {
                *neg = n;
                *pos = q;
                LhStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

fn run_json(command: Command, cfg: &Config, seed: u64, out: *mut *mut c_char) -> LhStatus {
    match cli::run(command, cfg, seed, None) {
        Ok(report) => match unsafe { write_string(report.json(), out) } {
            LhStatus::Ok => match report.code {
                cli::EXIT_OK => LhStatus::Ok,
                cli::EXIT_VALIDATION => fail(LhStatus::Validation, "report failed validation"),
                _ => fail(LhStatus::Numerical, "report contains numerical failures"),
            },
            s => s,
        },
        Err(e) => from_cli(e),
    }
}

/// Holonomy report of the chart as JSON, same document as
/// `lorhol holonomy --format json`. Free the result with `lh_string_free`.
///
/// # Safety
/// `chart` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lh_holonomy_json(chart: *const LhChart, seed: u64, out: *mut *mut c_char) -> LhStatus {
    guard(|| match chart_ref(chart) {
        Ok(c) => run_json(Command::Holonomy, &c.config, seed, out),
        Err(s) => s,
    })
}

/// Runs a CLI command (`check`, `holonomy`, `geodesic`, `structure`,
/// `complete`) on the chart's configuration and returns the JSON report.
/// Non-zero report codes map to `LH_STATUS_VALIDATION` or
/// `LH_STATUS_NUMERICAL`, but the report is still written to `out`.
///
/// # Safety
/// `chart` must be a live handle, `command` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lh_run_json(
    chart: *const LhChart,
    command: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> LhStatus {
    guard(|| {
        let c = match chart_ref(chart) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let name = match read_str(command) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let cmd = match name {
            "check" => Command::Check,
            "holonomy" => Command::Holonomy,
            "geodesic" => Command::Geodesic,
            "structure" => Command::Structure,
            "complete" => Command::Complete,
            other => return fail(LhStatus::Config, format!("unknown command {other:?}")),
        };
        run_json(cmd, &c.config, seed, out)
    })
}
