//! C ABI for wittenlab.
//!
//! Every fallible function returns a [`WlStatus`]; on failure the message is
//! available from [`wl_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wittenlab::complexes::{build_icosphere, build_torus_grid, InnerProductComplex};
use wittenlab::config::{parse_config, ExperimentConfig};
use wittenlab::derham::{betti_numbers, spectral_package};
use wittenlab::experiments::{run, Command};
use wittenlab::io::Artifacts;
use wittenlab::linalg::EigenOptions;
use wittenlab::torsion::log_torsion;
use wittenlab::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    InvalidArgument = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Parsed and validated experiment configuration.
pub struct WlConfig(ExperimentConfig);

/// In-memory outputs of one experiment run.
pub struct WlArtifacts {
    inner: Artifacts,
    names: Vec<CString>,
}

/// Cell complex with its Hodge inner products.
pub struct WlComplex(InnerProductComplex);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: &Error) -> WlStatus {
    set_error(&e.to_string());
    match e.root() {
        Error::Config { .. } => WlStatus::Config,
        Error::InvalidArgument(_) => WlStatus::InvalidArgument,
        Error::Io(_) => WlStatus::Io,
        _ => WlStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), WlStatus>) -> WlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            WlStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, WlStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(WlStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        WlStatus::InvalidArgument
    })
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, WlStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        WlStatus::NullPointer
    })
}

fn out_ptr<T>(p: *mut T) -> Result<(), WlStatus> {
    if p.is_null() {
        set_error("null output pointer");
        return Err(WlStatus::NullPointer);
    }
    Ok(())
}

/// Message of the last failure on this thread; empty if none. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn wl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wl_config_parse(json: *const c_char, out: *mut *mut WlConfig) -> WlStatus {
    guard(|| {
        out_ptr(out)?;
        let cfg = parse_config(text(json)?).map_err(|e| fail(&e))?;
        *out = Box::into_raw(Box::new(WlConfig(cfg)));
        Ok(())
    })
}

/// Overrides `solver.seed`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wl_config_set_seed(cfg: *mut WlConfig, seed: u64) -> WlStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| {
            set_error("null handle");
            WlStatus::NullPointer
        })?;
        c.0.solver.seed = seed;
        Ok(())
    })
}

/// Writes the 64-character hex config hash plus NUL into `buf` (at least 65 bytes).
///
/// # Safety
/// `cfg` must be a live handle and `buf` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wl_config_hash(cfg: *const WlConfig, buf: *mut c_char, len: usize) -> WlStatus {
    guard(|| {
        let c = handle(cfg)?;
        out_ptr(buf)?;
        let h = c.0.hash();
        if len < h.len() + 1 {
            set_error("buffer too small for config hash");
            return Err(WlStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(h.as_ptr().cast(), buf, h.len());
        *buf.add(h.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`wl_config_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wl_config_free(cfg: *mut WlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs an experiment (`"spectra"`, `"branches"`, `"morse"`, `"torsion-check"`, `"oscillator-tables"`).
///
/// # Safety
/// `cfg` must be a live handle, `command` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wl_run(cfg: *const WlConfig, command: *const c_char, out: *mut *mut WlArtifacts) -> WlStatus {
    guard(|| {
        out_ptr(out)?;
        let c = handle(cfg)?;
        let cmd: Command = text(command)?.parse().map_err(|e| fail(&e))?;
        let inner = run(cmd, &c.0).map_err(|e| fail(&e))?;
        let names = inner.names().map(|n| CString::new(n).unwrap_or_default()).collect();
        *out = Box::into_raw(Box::new(WlArtifacts { inner, names }));
        Ok(())
    })
}

/// Number of artifacts.
///
/// # Safety
/// `art` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wl_artifacts_count(art: *const WlArtifacts) -> usize {
    art.as_ref().map_or(0, |a| a.names.len())
}

/// Name of artifact `index`, or null if out of range. Owned by the handle.
///
/// # Safety
/// `art` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wl_artifacts_name(art: *const WlArtifacts, index: usize) -> *const c_char {
    art.as_ref().and_then(|a| a.names.get(index)).map_or(ptr::null(), |n| n.as_ptr())
}

/// Borrowed bytes of the named artifact. The pointer lives as long as the handle.
///
/// # Safety
/// `art` must be a live handle, `name` a NUL-terminated string, `data` and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn wl_artifacts_get(art: *const WlArtifacts, name: *const c_char, data: *mut *const u8, len: *mut usize) -> WlStatus {
    guard(|| {
        let a = handle(art)?;
        out_ptr(data)?;
        out_ptr(len)?;
        let n = text(name)?;
        let bytes = a.inner.get(n).ok_or_else(|| {
            set_error(&format!("no artifact named {n}"));
            WlStatus::InvalidArgument
        })?;
        *data = bytes.as_ptr();
        *len = bytes.len();
        Ok(())
    })
}

/// Writes every artifact into `dir`, creating it if needed.
///
/// # Safety
/// `art` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn wl_artifacts_write(art: *const WlArtifacts, dir: *const c_char) -> WlStatus {
    guard(|| {
        let a = handle(art)?;
        a.inner.write(Path::new(text(dir)?)).map_err(|e| fail(&e))?;
        Ok(())
    })
}

/// # Safety
/// `art` must be null or a handle from [`wl_run`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wl_artifacts_free(art: *mut WlArtifacts) {
    if !art.is_null() {
        drop(Box::from_raw(art));
    }
}

/// Cubical torus of dimension `dim` (1 to 3) with `resolution` cells per period.
/// `periods` may be null for unit periods, otherwise it holds `dim` values.
///
/// # Safety
/// `periods` must be null or readable for `dim` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wl_complex_torus(dim: usize, resolution: usize, periods: *const f64, out: *mut *mut WlComplex) -> WlStatus {
    guard(|| {
        out_ptr(out)?;
        if !(1..=3).contains(&dim) {
            set_error("torus dimension must be 1, 2 or 3");
            return Err(WlStatus::InvalidArgument);
        }
        let p = if periods.is_null() { vec![1.0; dim] } else { std::slice::from_raw_parts(periods, dim).to_vec() };
        let cx = build_torus_grid(dim, resolution, &p).map_err(|e| fail(&e))?;
        let ipc = InnerProductComplex::from_cell_complex(&cx).map_err(|e| fail(&e))?;
        *out = Box::into_raw(Box::new(WlComplex(ipc)));
        Ok(())
    })
}

/// Icosphere triangulation of the unit sphere after `subdivisions` refinements.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wl_complex_icosphere(subdivisions: usize, out: *mut *mut WlComplex) -> WlStatus {
    guard(|| {
        out_ptr(out)?;
        let cx = build_icosphere(subdivisions).map_err(|e| fail(&e))?;
        let ipc = InnerProductComplex::from_cell_complex(&cx).map_err(|e| fail(&e))?;
        *out = Box::into_raw(Box::new(WlComplex(ipc)));
        Ok(())
    })
}

fn write_counts(values: &[usize], out: *mut usize, cap: usize, len: *mut usize) -> Result<(), WlStatus> {
    out_ptr(len)?;
    unsafe { *len = values.len() };
    if cap < values.len() {
        set_error("buffer too small");
        return Err(WlStatus::BufferTooSmall);
    }
    out_ptr(out)?;
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    Ok(())
}

/// Cell counts per degree. `*len` receives the top degree plus one even when `cap` is too small.
///
/// # Safety
/// `cx` must be a live handle, `out` writable for `cap` values, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn wl_complex_dims(cx: *const WlComplex, out: *mut usize, cap: usize, len: *mut usize) -> WlStatus {
    guard(|| write_counts(&handle(cx)?.0.dims(), out, cap, len))
}

/// Betti numbers from the Hodge Laplacian kernels.
///
/// # Safety
/// As for [`wl_complex_dims`].
#[no_mangle]
pub unsafe extern "C" fn wl_complex_betti(cx: *const WlComplex, out: *mut usize, cap: usize, len: *mut usize) -> WlStatus {
    guard(|| {
        let b = betti_numbers(&handle(cx)?.0, &EigenOptions::default()).map_err(|e| fail(&e))?;
        write_counts(&b, out, cap, len)
    })
}

/// The `count` lowest eigenvalues of the degree-`q` Hodge Laplacian, ascending.
///
/// # Safety
/// `cx` must be a live handle and `out` writable for `count` values.
#[no_mangle]
pub unsafe extern "C" fn wl_complex_spectrum(cx: *const WlComplex, q: usize, count: usize, out: *mut f64) -> WlStatus {
    guard(|| {
        let c = &handle(cx)?.0;
        out_ptr(out)?;
        if q > c.top() || count == 0 || count > c.dim(q) {
            set_error(&format!("need q <= {} and 1 <= count <= dim", c.top()));
            return Err(WlStatus::InvalidArgument);
        }
        let pkg = spectral_package(c, q, count, 1e-8, &EigenOptions::default()).map_err(|e| fail(&e))?;
        ptr::copy_nonoverlapping(pkg.values.as_ptr(), out, count.min(pkg.values.len()));
        Ok(())
    })
}

/// Natural log of the analytic torsion of the complex.
///
/// # Safety
/// `cx` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wl_complex_log_torsion(cx: *const WlComplex, out: *mut f64) -> WlStatus {
    guard(|| {
        let c = &handle(cx)?.0;
        out_ptr(out)?;
        *out = log_torsion(c).map_err(|e| fail(&e))?;
        Ok(())
    })
}

/// # Safety
/// `cx` must be null or a handle from a `wl_complex_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wl_complex_free(cx: *mut WlComplex) {
    if !cx.is_null() {
        drop(Box::from_raw(cx));
    }
}
