//! C ABI over the gatedvol library.
//!
//! Models and fits are opaque heap handles released with their `_free`
//! function. Every call returns a [`GvStatus`]; on failure the message is
//! available from [`gv_last_error`] on the same thread. Panics are caught at
//! the boundary and reported as [`GvStatus::Panic`].
//!
//! Feature inputs are row-major `n × k` arrays of standardized gate inputs
//! (`NaN` marks an unavailable value); pass `NULL` with `k = 0` for none.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gatedvol::estimation::{fit_qmle, local_whittle, FitOptions, FitResult};
use gatedvol::evaluation::var_es_forecast;
use gatedvol::features::FeatureMatrix;
use gatedvol::models::{filter_variance, forecast_next, simulate_path, Family, FeatureGenerator, ModelSpec, Params};
use gatedvol::Error;

/// Call outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericalError = 4,
    Panic = 5,
}

/// A model family with its gate wiring and current parameters.
pub struct GvModel {
    spec: ModelSpec,
    params: Params,
}

/// Result of [`gv_fit`].
pub struct GvFit {
    result: FitResult,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: GvStatus, msg: &str) -> GvStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> GvStatus {
    let status = match (&e, e.exit_code()) {
        (Error::InvalidInput(_) | Error::Config(_), _) | (_, 1) => GvStatus::InvalidArgument,
        (_, 2) => GvStatus::DataError,
        _ => GvStatus::NumericalError,
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), GvStatus>) -> GvStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GvStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(GvStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: gatedvol::Result<T>) -> Result<T, GvStatus> {
    r.map_err(from_error)
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], GvStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(GvStatus::NullPointer, &format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for `len` writes.
unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], GvStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(GvStatus::NullPointer, &format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// # Safety
/// `p` must be null or a live handle from this library.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, GvStatus> {
    p.as_ref().ok_or_else(|| fail(GvStatus::NullPointer, &format!("{what} is null")))
}

/// # Safety
/// `features` must be null or valid for `n * k` reads.
unsafe fn features(features: *const f64, n: usize, k: usize) -> Result<FeatureMatrix, GvStatus> {
    if k == 0 {
        return Ok(FeatureMatrix::empty(n));
    }
    let flat = slice(features, n * k, "features")?;
    let cols = (0..k).map(|j| (0..n).map(|t| flat[t * k + j]).collect()).collect();
    check(FeatureMatrix::from_columns((0..k).map(|j| format!("z{j}")).collect(), cols))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a model of `family` (e.g. `"GARCH"`, `"TGVOL"`) whose active
/// gates read all `n_features` inputs. `lags` sets the fractional truncation
/// (0 keeps the default). Parameters start at the reference values.
///
/// # Safety
/// `family` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gv_model_new(family: *const c_char, n_features: usize, lags: usize, out: *mut *mut GvModel) -> GvStatus {
    guard(|| {
        if family.is_null() || out.is_null() {
            return Err(fail(GvStatus::NullPointer, "family or out is null"));
        }
        let name = CStr::from_ptr(family).to_str().map_err(|_| fail(GvStatus::InvalidArgument, "family is not UTF-8"))?;
        let fam: Family = name.parse().map_err(|e: Error| fail(GvStatus::InvalidArgument, &e.to_string()))?;
        let mut spec = ModelSpec::new(fam, n_features);
        if lags > 0 {
            spec = spec.with_lags(lags);
        }
        check(spec.validate(n_features))?;
        let params = check(gatedvol::estimation::reference_params(&spec, 1.0))?;
        *out = Box::into_raw(Box::new(GvModel { spec, params }));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`gv_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gv_model_free(m: *mut GvModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of natural parameters; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gv_model_num_params(m: *const GvModel) -> usize {
    m.as_ref().map_or(0, |m| m.spec.layout().len)
}

/// Copies the parameters (layout order: ω, α, γ_lev, β, β_low, β_high,
/// γ_p…, κ, η…, d̄, γ_d…, active entries only) into `out[len]`.
///
/// # Safety
/// `m` must be a live model handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gv_model_get_params(m: *const GvModel, out: *mut f64, len: usize) -> GvStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let v = m.params.to_vec(&m.spec);
        if len != v.len() {
            return Err(fail(GvStatus::InvalidArgument, &format!("expected {} parameters, got buffer of {len}", v.len())));
        }
        slice_mut(out, len, "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// # Safety
/// `m` must be a live model handle; `values` valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn gv_model_set_params(m: *mut GvModel, values: *const f64, len: usize) -> GvStatus {
    guard(|| {
        let m = m.as_mut().ok_or_else(|| fail(GvStatus::NullPointer, "model is null"))?;
        let v = slice(values, len, "values")?;
        m.params = check(Params::from_vec(&m.spec, v))?;
        Ok(())
    })
}

/// Filters `returns[n]` and writes `h_out[n]`; `loglik_out` (optional)
/// receives the post-burn-in quasi log-likelihood.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `loglik_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn gv_filter(
    m: *const GvModel,
    returns: *const f64,
    n: usize,
    feats: *const f64,
    k: usize,
    h_out: *mut f64,
    loglik_out: *mut f64,
) -> GvStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let r = slice(returns, n, "returns")?;
        let f = features(feats, n, k)?;
        let (vp, _) = check(filter_variance(&m.spec, &m.params, r, &f))?;
        slice_mut(h_out, n, "h_out")?.copy_from_slice(&vp.h);
        if !loglik_out.is_null() {
            *loglik_out = vp.loglik();
        }
        Ok(())
    })
}

/// One-step-ahead variance after the last observation.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn gv_forecast_next(
    m: *const GvModel,
    returns: *const f64,
    n: usize,
    feats: *const f64,
    k: usize,
    h_next: *mut f64,
) -> GvStatus {
    guard(|| {
        let m = handle(m, "model")?;
        if h_next.is_null() {
            return Err(fail(GvStatus::NullPointer, "h_next is null"));
        }
        let r = slice(returns, n, "returns")?;
        let f = features(feats, n, k)?;
        let (vp, _) = check(filter_variance(&m.spec, &m.params, r, &f))?;
        *h_next = check(forecast_next(&m.spec, &m.params, r, &f, &vp))?;
        Ok(())
    })
}

/// Simulates `n` returns with i.i.d. standard normal gate inputs; writes
/// `returns_out[n]` and `h_out[n]`. Deterministic in `seed`.
///
/// # Safety
/// Output pointers must be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn gv_simulate(m: *const GvModel, n: usize, seed: u64, returns_out: *mut f64, h_out: *mut f64) -> GvStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let cols = m.spec.p_features.len().max(m.spec.d_features.len()).max(m.spec.clock_features.len());
        let s = check(simulate_path(&m.spec, &m.params, n, seed, &FeatureGenerator::Iid { columns: cols }))?;
        slice_mut(returns_out, n, "returns_out")?.copy_from_slice(&s.returns);
        slice_mut(h_out, n, "h_out")?.copy_from_slice(&s.variance);
        Ok(())
    })
}

/// Gaussian QMLE with `starts` multi-starts (0 keeps the default). On
/// success `*out` receives a fit handle and the model's parameters are
/// replaced by the estimate.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gv_fit(
    m: *mut GvModel,
    returns: *const f64,
    n: usize,
    feats: *const f64,
    k: usize,
    seed: u64,
    starts: usize,
    out: *mut *mut GvFit,
) -> GvStatus {
    guard(|| {
        let m = m.as_mut().ok_or_else(|| fail(GvStatus::NullPointer, "model is null"))?;
        if out.is_null() {
            return Err(fail(GvStatus::NullPointer, "out is null"));
        }
        let r = slice(returns, n, "returns")?;
        let f = features(feats, n, k)?;
        let mut opts = FitOptions { seed, ..FitOptions::default() };
        if starts > 0 {
            opts.starts = starts;
        }
        let result = check(fit_qmle(&m.spec, r, &f, &opts))?;
        let json = serde_json::to_string(&result).map_err(|e| fail(GvStatus::NumericalError, &e.to_string()))?;
        m.params = result.params.clone();
        let json = CString::new(json).unwrap_or_default();
        *out = Box::into_raw(Box::new(GvFit { result, json }));
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from [`gv_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gv_fit_free(f: *mut GvFit) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Quasi log-likelihood at the estimate; `NaN` for a null handle.
///
/// # Safety
/// `f` must be null or a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn gv_fit_loglik(f: *const GvFit) -> f64 {
    f.as_ref().map_or(f64::NAN, |f| f.result.loglik)
}

/// Whether a stopping rule was met.
///
/// # Safety
/// `f` must be null or a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn gv_fit_converged(f: *const GvFit) -> bool {
    f.as_ref().is_some_and(|f| f.result.converged)
}

/// Sandwich standard errors into `out[len]`; `NumericalError` when the
/// covariance could not be formed.
///
/// # Safety
/// `f` must be a live fit handle; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gv_fit_std_errors(f: *const GvFit, out: *mut f64, len: usize) -> GvStatus {
    guard(|| {
        let f = handle(f, "fit")?;
        let se = f.result.std_errors.as_ref().ok_or_else(|| {
            fail(GvStatus::NumericalError, f.result.cov_error.as_deref().unwrap_or("covariance unavailable"))
        })?;
        if len != se.len() {
            return Err(fail(GvStatus::InvalidArgument, &format!("expected {} entries, got buffer of {len}", se.len())));
        }
        slice_mut(out, len, "out")?.copy_from_slice(se);
        Ok(())
    })
}

/// Full fit report as JSON, owned by the handle.
///
/// # Safety
/// `f` must be null or a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn gv_fit_json(f: *const GvFit) -> *const c_char {
    f.as_ref().map_or(ptr::null(), |f| f.json.as_ptr())
}

/// Local Whittle estimate of the memory order of `x[n]` (`n ≥ 256`).
///
/// # Safety
/// `x` valid for `n` reads; `d_out` writable.
#[no_mangle]
pub unsafe extern "C" fn gv_local_whittle(x: *const f64, n: usize, band_fraction: f64, d_out: *mut f64) -> GvStatus {
    guard(|| {
        if d_out.is_null() {
            return Err(fail(GvStatus::NullPointer, "d_out is null"));
        }
        *d_out = check(local_whittle(slice(x, n, "x")?, band_fraction))?.d;
        Ok(())
    })
}

/// Gaussian VaR and ES (positive loss magnitudes) for variance `h` at
/// tail `level` in (0, 0.5).
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gv_var_es(h: f64, level: f64, var_out: *mut f64, es_out: *mut f64) -> GvStatus {
    guard(|| {
        if var_out.is_null() || es_out.is_null() {
            return Err(fail(GvStatus::NullPointer, "output is null"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(fail(GvStatus::InvalidArgument, "variance must be positive and finite"));
        }
        let v = check(var_es_forecast(h, level))?;
        *var_out = v.var;
        *es_out = v.es;
        Ok(())
    })
}
