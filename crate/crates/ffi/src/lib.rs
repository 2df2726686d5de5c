//! C ABI over the structfactor library.
//!
//! Objects cross the boundary as opaque handles created by `sf_*` functions
//! and released with the matching `*_free`. Every fallible call returns an
//! [`SfStatus`]; on failure, [`sf_last_error_message`] describes the error
//! for the calling thread. Matrices are exchanged as row-major buffers with
//! one row per series.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use structfactor::cca_factor::{self, FactorConfig, FactorModel};
use structfactor::detrend::{self, Decomposition, OrderGrid, OrderSpec};
use structfactor::{Error, TimePanel};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    InsufficientSample = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A validated `p x T` panel.
pub struct SfPanel(TimePanel);

/// Trend, seasonal and irregular components with the selected order.
pub struct SfDecomposition(Decomposition);

/// Whitener, loadings, eigenvalues and extracted factors.
pub struct SfFactorModel(FactorModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SfStatus {
    match err {
        Error::MissingFile(_) | Error::Io(_) => SfStatus::Io,
        Error::Parse { .. } | Error::RaggedRows { .. } | Error::Json(_) => SfStatus::Parse,
        Error::InsufficientSample(_) => SfStatus::InsufficientSample,
        e if e.is_numeric() => SfStatus::Numeric,
        _ => SfStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> SfStatus
where
    F: FnOnce() -> Result<(), (SfStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (SfStatus, String) {
    (SfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SfStatus, String)> {
    p.as_ref().ok_or_else(|| null_err(what))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (SfStatus, String)> {
    if out.is_null() {
        return Err(null_err("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copy a matrix row-major into a caller buffer of `len` doubles.
unsafe fn copy_matrix(m: &DMatrix<f64>, buf: *mut f64, len: usize) -> Result<(), (SfStatus, String)> {
    let need = m.nrows() * m.ncols();
    if need == 0 {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null_err("buffer"));
    }
    if len < need {
        return Err((
            SfStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} needed"),
        ));
    }
    let out = std::slice::from_raw_parts_mut(buf, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[i * m.ncols() + j] = m[(i, j)];
        }
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Read a wide CSV panel (time-label column, then one column per series).
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_panel_read_csv(path: *const c_char, period: usize, out: *mut *mut SfPanel) -> SfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null_err("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SfStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let panel = structfactor::panel::read_csv(path, period).map_err(lib_err)?;
        write_out(out, SfPanel(panel))
    })
}

/// Build a panel from `p * t` row-major values (row `i` = series `i`).
///
/// # Safety
/// `values` must point to `p * t` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_panel_from_values(
    values: *const f64,
    p: usize,
    t: usize,
    period: usize,
    out: *mut *mut SfPanel,
) -> SfStatus {
    guard(|| {
        if values.is_null() {
            return Err(null_err("values"));
        }
        let n = p
            .checked_mul(t)
            .ok_or_else(|| (SfStatus::InvalidArgument, "p * t overflows".to_string()))?;
        let data = std::slice::from_raw_parts(values, n);
        let m = DMatrix::from_row_slice(p, t, data);
        let panel = TimePanel::from_matrix(m, period).map_err(lib_err)?;
        write_out(out, SfPanel(panel))
    })
}

/// Number of series, or 0 for a null handle.
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_panel_n_series(panel: *const SfPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.0.n_series())
}

/// Number of time points, or 0 for a null handle.
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_panel_len(panel: *const SfPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `panel` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_panel_free(panel: *mut SfPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Fit trend and seasonal parts. Negative `k` or `d` means "select by BIC"
/// (over `0..=ceil(s/2)-1` harmonics and degrees `0..=2`).
///
/// # Safety
/// `panel` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_decompose(
    panel: *const SfPanel,
    k: i64,
    d: i64,
    out: *mut *mut SfDecomposition,
) -> SfStatus {
    guard(|| {
        let panel = &deref(panel, "panel")?.0;
        let s = panel.periodicity();
        let dec = if k >= 0 && d >= 0 {
            detrend::fit(panel, OrderSpec::new(d as usize, k as usize, s))
        } else {
            let mut grid = OrderGrid::default_for_period(s);
            if k >= 0 {
                grid.k_min = k as usize;
                grid.k_max = k as usize;
            }
            if d >= 0 {
                grid.d_min = d as usize;
                grid.d_max = d as usize;
            }
            detrend::select_orders(panel, grid, None).and_then(|t| detrend::fit(panel, t.selected_order(s)))
        }
        .map_err(lib_err)?;
        write_out(out, SfDecomposition(dec))
    })
}

/// Selected number of harmonic pairs and trend degree.
///
/// # Safety
/// `dec` must be a live handle; `k` and `d` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_decomposition_order(dec: *const SfDecomposition, k: *mut usize, d: *mut usize) -> SfStatus {
    guard(|| {
        let dec = &deref(dec, "decomposition")?.0;
        if k.is_null() || d.is_null() {
            return Err(null_err("output pointer"));
        }
        *k = dec.order.k;
        *d = dec.order.d;
        Ok(())
    })
}

/// Copy the `p x T` irregular component into `buf` (row-major).
///
/// # Safety
/// `dec` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_decomposition_irregular(
    dec: *const SfDecomposition,
    buf: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| copy_matrix(&deref(dec, "decomposition")?.0.irregular, buf, len))
}

/// Copy the `p x (d+1+2k)` coefficient matrix into `buf` (row-major).
///
/// # Safety
/// `dec` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_decomposition_theta(dec: *const SfDecomposition, buf: *mut f64, len: usize) -> SfStatus {
    guard(|| copy_matrix(&deref(dec, "decomposition")?.0.theta, buf, len))
}

/// # Safety
/// `dec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_decomposition_free(dec: *mut SfDecomposition) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Canonical-correlation factor analysis of the irregular component with
/// `m` lags. A negative `r` selects the factor count by the sequential
/// test at level `alpha`.
///
/// # Safety
/// `dec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_factors(
    dec: *const SfDecomposition,
    m: usize,
    alpha: f64,
    r: i64,
    out: *mut *mut SfFactorModel,
) -> SfStatus {
    guard(|| {
        let dec = &deref(dec, "decomposition")?.0;
        let config = FactorConfig {
            m,
            alpha,
            ..FactorConfig::default()
        };
        let r = (r >= 0).then_some(r as usize);
        let (model, _) = cca_factor::analyze(&dec.irregular, &config, r).map_err(lib_err)?;
        write_out(out, SfFactorModel(model))
    })
}

/// Number of factors, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_factor_model_r(model: *const SfFactorModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.r)
}

/// Copy the `p x r` factor loadings into `buf` (row-major).
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_factor_model_loadings(model: *const SfFactorModel, buf: *mut f64, len: usize) -> SfStatus {
    guard(|| copy_matrix(&deref(model, "factor model")?.0.factor_loadings(), buf, len))
}

/// Copy the `p` squared canonical correlations (descending) into `buf`.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_factor_model_eigenvalues(
    model: *const SfFactorModel,
    buf: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        let e = &deref(model, "factor model")?.0.eigenvalues;
        copy_matrix(&DMatrix::from_row_slice(1, e.len(), e.as_slice()), buf, len)
    })
}

/// Copy the `r x T` factor series into `buf` (row-major).
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_factor_model_factors(model: *const SfFactorModel, buf: *mut f64, len: usize) -> SfStatus {
    guard(|| copy_matrix(&deref(model, "factor model")?.0.factors, buf, len))
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_factor_model_free(model: *mut SfFactorModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
