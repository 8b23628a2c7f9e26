//! C ABI over `sqp_core`.
//!
//! Objects cross the boundary as opaque handles created by `sqp_*_load` /
//! `sqp_select` and released with the matching `sqp_*_free`. Every fallible
//! call returns an [`SqpStatus`]; on failure the message is available from
//! [`sqp_last_error`] on the same thread. Strings returned to the caller are
//! owned by the caller and released with [`sqp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sqp_core::data::{ConfigurationId, EffectivenessMatrix, QueryId, ScoreSource};
use sqp_core::harness::paired_t_test;
use sqp_core::matcher::{QueryFeatureVector, TrainedModel};
use sqp_core::selection::{select_configurations, Objective, RiskParams, SelectedPool};
use sqp_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqpStatus {
    Ok = 0,
    /// Unreadable or malformed input.
    Input = 2,
    /// Valid input that violates an operation's preconditions.
    Contract = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqpObjective {
    Effectiveness = 0,
    QueryCount = 1,
}

/// Opaque effectiveness matrix.
pub struct SqpMatrix {
    inner: EffectivenessMatrix,
}

/// Opaque selected pool.
pub struct SqpPool {
    inner: SelectedPool,
}

/// Opaque matching model.
pub struct SqpModel {
    inner: TrainedModel,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SqpStep {
    pub risk: f64,
    pub reward: f64,
    pub gain: f64,
    pub envelope_mean_after: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(SqpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            3 => SqpStatus::Contract,
            _ => SqpStatus::Input,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SqpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SqpStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    // SAFETY: callers pass either null or a pointer obtained from this library
    unsafe { p.as_ref() }.ok_or_else(|| Failure(SqpStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    // SAFETY: as above, for a caller-owned output slot
    unsafe { p.as_mut() }.ok_or_else(|| Failure(SqpStatus::NullPointer, format!("{what} is null")))
}

fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(SqpStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null, and the caller guarantees NUL termination
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(SqpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn owned_c(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn boxed<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    *out_ptr(out, "output handle")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Free with
/// `sqp_string_free`.
#[no_mangle]
pub extern "C" fn sqp_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sqp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn sqp_version() -> *mut c_char {
    owned_c(env!("CARGO_PKG_VERSION"))
}

/// Loads a matrix TSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sqp_matrix_load(path: *const c_char, out: *mut *mut SqpMatrix) -> SqpStatus {
    guard(|| {
        let inner = EffectivenessMatrix::load(text(path, "path")?)?;
        boxed(out, SqpMatrix { inner })
    })
}

/// Parses matrix TSV text held in memory.
///
/// # Safety
/// As for `sqp_matrix_load`.
#[no_mangle]
pub unsafe extern "C" fn sqp_matrix_parse(tsv: *const c_char, out: *mut *mut SqpMatrix) -> SqpStatus {
    guard(|| {
        let inner = EffectivenessMatrix::parse_tsv(text(tsv, "tsv")?.as_bytes(), "<memory>")?;
        boxed(out, SqpMatrix { inner })
    })
}

/// # Safety
/// `m` must be NULL or a live handle from `sqp_matrix_load`/`sqp_matrix_parse`.
#[no_mangle]
pub unsafe extern "C" fn sqp_matrix_free(m: *mut SqpMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be NULL or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn sqp_matrix_num_configs(m: *const SqpMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.configs().len())
}

/// # Safety
/// `m` must be NULL or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn sqp_matrix_num_queries(m: *const SqpMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.queries().len())
}

/// # Safety
/// `m` a live matrix handle, ids NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_matrix_score(
    m: *const SqpMatrix,
    config_id: *const c_char,
    query_id: *const c_char,
    out: *mut f64,
) -> SqpStatus {
    guard(|| {
        let m = non_null(m, "matrix")?;
        *out_ptr(out, "out")? = m.inner.score(text(config_id, "config_id")?, text(query_id, "query_id")?)?;
        Ok(())
    })
}

/// Greedy selection of `k` configurations over every query of the matrix.
///
/// # Safety
/// `m` a live matrix handle, `baseline` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_select(
    m: *const SqpMatrix,
    baseline: *const c_char,
    objective: SqpObjective,
    beta: f64,
    k: usize,
    out: *mut *mut SqpPool,
) -> SqpStatus {
    guard(|| {
        let m = non_null(m, "matrix")?;
        let baseline = ConfigurationId::new(text(baseline, "baseline")?)?;
        let objective = match objective {
            SqpObjective::Effectiveness => Objective::Effectiveness,
            SqpObjective::QueryCount => Objective::QueryCount,
        };
        let params = RiskParams::new(objective, beta, k, baseline);
        let inner = select_configurations(&m.inner, m.inner.queries(), m.inner.configs(), &params)?;
        boxed(out, SqpPool { inner })
    })
}

/// # Safety
/// `p` must be NULL or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn sqp_pool_free(p: *mut SqpPool) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be NULL or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn sqp_pool_len(p: *const SqpPool) -> usize {
    p.as_ref().map_or(0, |p| p.inner.len())
}

/// Configuration id chosen at step `i`; free with `sqp_string_free`.
///
/// # Safety
/// `p` a live pool handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_pool_config_id(p: *const SqpPool, i: usize, out: *mut *mut c_char) -> SqpStatus {
    guard(|| {
        let step = pool_step(p, i)?;
        *out_ptr(out, "out")? = owned_c(step.config_id.as_str());
        Ok(())
    })
}

/// # Safety
/// `p` a live pool handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_pool_step(p: *const SqpPool, i: usize, out: *mut SqpStep) -> SqpStatus {
    guard(|| {
        let s = pool_step(p, i)?;
        *out_ptr(out, "out")? = SqpStep {
            risk: s.risk,
            reward: s.reward,
            gain: s.gain,
            envelope_mean_after: s.envelope_mean_after,
        };
        Ok(())
    })
}

fn pool_step<'a>(p: *const SqpPool, i: usize) -> FfiResult<&'a sqp_core::selection::SelectionStep> {
    let p = non_null(p, "pool")?;
    p.inner
        .steps
        .get(i)
        .ok_or_else(|| Failure(SqpStatus::OutOfRange, format!("step {i} out of range (len {})", p.inner.len())))
}

/// Pool serialized as JSON; free with `sqp_string_free`.
///
/// # Safety
/// `p` a live pool handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_pool_to_json(p: *const SqpPool, out: *mut *mut c_char) -> SqpStatus {
    guard(|| {
        let json = non_null(p, "pool")?.inner.to_json()?;
        *out_ptr(out, "out")? = owned_c(&json);
        Ok(())
    })
}

/// Loads a model JSON file written by `sqp train`.
///
/// # Safety
/// `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_model_load(path: *const c_char, out: *mut *mut SqpModel) -> SqpStatus {
    guard(|| {
        let inner = TrainedModel::load(text(path, "path")?)?;
        boxed(out, SqpModel { inner })
    })
}

/// # Safety
/// `m` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn sqp_model_free(m: *mut SqpModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of features the model expects, in `sqp_model_feature_name` order.
///
/// # Safety
/// `m` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn sqp_model_num_features(m: *const SqpModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.schema.len())
}

/// # Safety
/// `m` a live model handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_model_feature_name(m: *const SqpModel, i: usize, out: *mut *mut c_char) -> SqpStatus {
    guard(|| {
        let m = non_null(m, "model")?;
        let name = m.inner.schema.get(i).ok_or_else(|| {
            Failure(SqpStatus::OutOfRange, format!("feature {i} out of range (len {})", m.inner.schema.len()))
        })?;
        *out_ptr(out, "out")? = owned_c(name);
        Ok(())
    })
}

/// Assigns a configuration to one query given its aggregated feature values
/// in schema order. `config_out` is freed with `sqp_string_free`;
/// `similarity_out` may be NULL.
///
/// # Safety
/// `m` a live model handle, `values` readable for `n` doubles, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_model_match(
    m: *const SqpModel,
    query_id: *const c_char,
    values: *const f64,
    n: usize,
    config_out: *mut *mut c_char,
    similarity_out: *mut f64,
) -> SqpStatus {
    guard(|| {
        let m = non_null(m, "model")?;
        let qid = QueryId::new(text(query_id, "query_id")?)?;
        non_null(values, "values")?;
        let values = std::slice::from_raw_parts(values, n).to_vec();
        let v = QueryFeatureVector::new(qid, m.inner.schema.clone(), values)?;
        let a = m.inner.best_match(&v)?;
        let slot = out_ptr(config_out, "config_out")?;
        if let Some(s) = similarity_out.as_mut() {
            *s = a.similarity;
        }
        *slot = owned_c(a.config_id.as_str());
        Ok(())
    })
}

/// Two-tailed paired t-test on `a - b`.
///
/// # Safety
/// `a` and `b` readable for `n` doubles; `t_out`, `p_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqp_paired_t_test(
    a: *const f64,
    b: *const f64,
    n: usize,
    t_out: *mut f64,
    p_out: *mut f64,
) -> SqpStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        let a = std::slice::from_raw_parts(a, n);
        let b = std::slice::from_raw_parts(b, n);
        let r = paired_t_test(a, b)?;
        *out_ptr(t_out, "t_out")? = r.t;
        *out_ptr(p_out, "p_out")? = r.p;
        Ok(())
    })
}
