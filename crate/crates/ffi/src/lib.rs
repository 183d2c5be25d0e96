//! C interface to the inference toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `_free` function. Every fallible call returns an
//! [`AbinferStatus`]; on failure a message is kept per thread and can be read
//! with [`abinfer_last_error`]. Panics are caught and reported as
//! [`AbinferStatus::Panic`] rather than unwinding into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use abinfer::abi::{self, AbiConfig, AbiResult};
use abinfer::gmm::{self, FitConfig, GaussianMixture};
use abinfer::models::{self, SimulatorBundle};
use abinfer::msw::{self, MswConfig};
use abinfer::seed::rng_from_seed;
use abinfer::{baselines, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbinferStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Io = 5,
    Parse = 6,
    Runtime = 7,
    Panic = 8,
}

/// A fitted Gaussian mixture.
pub struct AbinferMixture(GaussianMixture);

/// A registered simulator model.
pub struct AbinferModel(SimulatorBundle);

/// The outcome of an inference run.
pub struct AbinferResult(AbiResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(AbinferStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::ShapeMismatch(_) => {
                AbinferStatus::DimensionMismatch
            }
            Error::InvalidArgument(_)
            | Error::EmptySample
            | Error::CapExceeded { .. }
            | Error::UnknownModel { .. } => AbinferStatus::InvalidArgument,
            Error::NonFinite(_) | Error::Numerical(_) => AbinferStatus::Numerical,
            Error::Io(_) => AbinferStatus::Io,
            Error::Parse(_) | Error::Json(_) => AbinferStatus::Parse,
            _ => AbinferStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: AbinferStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AbinferStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbinferStatus::Ok,
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
            AbinferStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return fail(AbinferStatus::NullPointer, format!("{what} is null"));
    }
    Ok(())
}

/// Borrows a handle, rejecting null.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    non_null(p, what)?;
    Ok(&*p)
}

/// Copies `n` rows of width `d` out of a row-major buffer.
unsafe fn rows(data: *const f64, n: usize, d: usize, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    if n == 0 || d == 0 {
        return fail(
            AbinferStatus::InvalidArgument,
            format!("{what} has zero size"),
        );
    }
    non_null(data, what)?;
    let flat = std::slice::from_raw_parts(data, n * d);
    Ok(flat.chunks_exact(d).map(<[f64]>::to_vec).collect())
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(data, what)?;
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out_buffer<'a>(
    data: *mut f64,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [f64], Failure> {
    if len < need {
        return fail(
            AbinferStatus::DimensionMismatch,
            format!("{what} holds {len} values, need {need}"),
        );
    }
    if need == 0 {
        return Ok(&mut []);
    }
    non_null(data, what)?;
    Ok(std::slice::from_raw_parts_mut(data, need))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(s, what)?;
    CStr::from_ptr(s).to_str().or_else(|_| {
        fail(
            AbinferStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

fn write_flat(out: &mut [f64], points: &[Vec<f64>]) {
    for (dst, p) in out
        .chunks_exact_mut(points.first().map_or(1, Vec::len))
        .zip(points)
    {
        dst.copy_from_slice(p);
    }
}

/// The message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn abinfer_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn abinfer_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn abinfer_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fits a Gaussian mixture to `n` row-major points of dimension `d`,
/// choosing among 1 to `max_components` components by BIC.
///
/// # Safety
/// `points` must hold `n * d` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_fit(
    points: *const f64,
    n: usize,
    d: usize,
    max_components: usize,
    seed: u64,
    out: *mut *mut AbinferMixture,
) -> AbinferStatus {
    guard(|| {
        non_null(out, "out")?;
        let pts = rows(points, n, d, "points")?;
        let cfg = FitConfig {
            component_range: (1, max_components),
            seed,
            ..FitConfig::default()
        };
        let model = gmm::fit(&pts, &cfg)?;
        *out = Box::into_raw(Box::new(AbinferMixture(model)));
        Ok(())
    })
}

/// Builds a mixture from its JSON form (`weights`, `means`, `covariances`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_from_json(
    json: *const c_char,
    out: *mut *mut AbinferMixture,
) -> AbinferStatus {
    guard(|| {
        non_null(out, "out")?;
        let model = GaussianMixture::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(AbinferMixture(model)));
        Ok(())
    })
}

/// Serializes a mixture to JSON; release the result with
/// [`abinfer_string_free`].
///
/// # Safety
/// `mixture` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_to_json(
    mixture: *const AbinferMixture,
    out: *mut *mut c_char,
) -> AbinferStatus {
    guard(|| {
        non_null(out, "out")?;
        let json = handle(mixture, "mixture")?.0.to_json()?;
        *out = CString::new(json)
            .or_else(|_| fail(AbinferStatus::Runtime, "json contains NUL"))?
            .into_raw();
        Ok(())
    })
}

/// Dimension of the mixture, or 0 for a null handle.
///
/// # Safety
/// `mixture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_dim(mixture: *const AbinferMixture) -> usize {
    mixture.as_ref().map_or(0, |m| m.0.dim())
}

/// Number of components, or 0 for a null handle.
///
/// # Safety
/// `mixture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_num_components(mixture: *const AbinferMixture) -> usize {
    mixture.as_ref().map_or(0, |m| m.0.num_components())
}

/// Log density at a point of length `d`.
///
/// # Safety
/// `point` must hold `d` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_log_density(
    mixture: *const AbinferMixture,
    point: *const f64,
    d: usize,
    out: *mut f64,
) -> AbinferStatus {
    guard(|| {
        let m = &handle(mixture, "mixture")?.0;
        non_null(out, "out")?;
        if d != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                got: d,
            }
            .into());
        }
        *out = gmm::log_density(m, slice(point, d, "point")?);
        Ok(())
    })
}

/// Draws `count` points into a row-major buffer of `out_len >= count * d`.
///
/// # Safety
/// `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_sample(
    mixture: *const AbinferMixture,
    count: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> AbinferStatus {
    guard(|| {
        let m = &handle(mixture, "mixture")?.0;
        let buf = out_buffer(out, out_len, count * m.dim(), "out")?;
        let draws = gmm::sample(m, count, &mut rng_from_seed(seed));
        write_flat(buf, &draws);
        Ok(())
    })
}

/// Releases a mixture handle.
///
/// # Safety
/// `mixture` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn abinfer_mixture_free(mixture: *mut AbinferMixture) {
    if !mixture.is_null() {
        drop(Box::from_raw(mixture));
    }
}

/// Trimmed MSW distance between two row-major point sets in `R^d`, using
/// `num_slices` random directions drawn from `seed`.
///
/// # Safety
/// `a` must hold `na * d` values, `b` must hold `nb * d`, and `out` must be
/// writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn abinfer_msw_distance(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    d: usize,
    p: f64,
    delta: f64,
    lambda: f64,
    num_slices: usize,
    seed: u64,
    out: *mut f64,
) -> AbinferStatus {
    guard(|| {
        non_null(out, "out")?;
        let pa = rows(a, na, d, "a")?;
        let pb = rows(b, nb, d, "b")?;
        let cfg = MswConfig {
            p,
            delta,
            lambda,
            num_slices,
            ..MswConfig::default()
        };
        cfg.validate()?;
        let proj = msw::sample_projections(d, num_slices, &mut rng_from_seed(seed))?;
        *out = msw::msw_empirical(&pa, &pb, &cfg, &proj)?;
        Ok(())
    })
}

/// Exact empirical W1 between two equal-size row-major point sets.
///
/// # Safety
/// `a` and `b` must each hold `n * d` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_exact_w1(
    a: *const f64,
    b: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> AbinferStatus {
    guard(|| {
        non_null(out, "out")?;
        let pa = rows(a, n, d, "a")?;
        let pb = rows(b, n, d, "b")?;
        *out = baselines::exact_w1(&pa, &pb)?;
        Ok(())
    })
}

/// Looks up a registered model by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_model_new(
    name: *const c_char,
    out: *mut *mut AbinferModel,
) -> AbinferStatus {
    guard(|| {
        non_null(out, "out")?;
        let bundle = models::by_name(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(AbinferModel(bundle)));
        Ok(())
    })
}

/// Parameter dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abinfer_model_theta_dim(model: *const AbinferModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.theta_dim())
}

/// Length of one simulated data vector, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abinfer_model_data_dim(model: *const AbinferModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.data_dim)
}

/// Writes the model's default observation into `out`, which must hold at
/// least the data dimension.
///
/// # Safety
/// `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn abinfer_model_observation(
    model: *const AbinferModel,
    out: *mut f64,
    out_len: usize,
) -> AbinferStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let x = m.observation()?;
        out_buffer(out, out_len, x.len(), "out")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Releases a model handle.
///
/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn abinfer_model_free(model: *mut AbinferModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs adaptive inference for `model` given the observation `x_star`.
///
/// `config_json` holds an inference config with omitted keys defaulted;
/// pass null for all defaults.
///
/// # Safety
/// `x_star` must hold `x_len` values, `config_json` must be null or a
/// NUL-terminated string, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_run(
    model: *const AbinferModel,
    x_star: *const f64,
    x_len: usize,
    config_json: *const c_char,
    out: *mut *mut AbinferResult,
) -> AbinferStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        non_null(out, "out")?;
        let cfg: AbiConfig = if config_json.is_null() {
            AbiConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?).map_err(Error::from)?
        };
        let x = slice(x_star, x_len, "x_star")?;
        let result = abi::run_abi(m, x, &cfg)?;
        *out = Box::into_raw(Box::new(AbinferResult(result)));
        Ok(())
    })
}

/// Number of completed iterations, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abinfer_result_iterations(result: *const AbinferResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.reports.len())
}

/// Parameter dimension of the posterior, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abinfer_result_theta_dim(result: *const AbinferResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.posterior.transform.dim())
}

/// Tolerance chosen at iteration `index` (0-based).
///
/// # Safety
/// `result` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_result_epsilon(
    result: *const AbinferResult,
    index: usize,
    out: *mut f64,
) -> AbinferStatus {
    guard(|| {
        let r = &handle(result, "result")?.0;
        non_null(out, "out")?;
        let Some(rep) = r.reports.get(index) else {
            return fail(
                AbinferStatus::InvalidArgument,
                format!("iteration {index} out of range ({})", r.reports.len()),
            );
        };
        *out = rep.epsilon;
        Ok(())
    })
}

/// Per-iteration reports as a JSON array; release with
/// [`abinfer_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abinfer_result_reports_json(
    result: *const AbinferResult,
    out: *mut *mut c_char,
) -> AbinferStatus {
    guard(|| {
        let r = &handle(result, "result")?.0;
        non_null(out, "out")?;
        let json = serde_json::to_string(&r.reports).map_err(Error::from)?;
        *out = CString::new(json)
            .or_else(|_| fail(AbinferStatus::Runtime, "json contains NUL"))?
            .into_raw();
        Ok(())
    })
}

/// Draws `count` parameters from the fitted posterior, in the original
/// parameter space, into a row-major buffer of `out_len >= count * dim`.
///
/// # Safety
/// `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn abinfer_result_sample(
    result: *const AbinferResult,
    count: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> AbinferStatus {
    guard(|| {
        let post = &handle(result, "result")?.0.posterior;
        let buf = out_buffer(out, out_len, count * post.transform.dim(), "out")?;
        let draws = post.sample(count, &mut rng_from_seed(seed));
        write_flat(buf, &draws);
        Ok(())
    })
}

/// Releases a result handle.
///
/// # Safety
/// `result` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn abinfer_result_free(result: *mut AbinferResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
