//! C interface to `tnvae`.
//!
//! Objects cross the boundary as opaque handles created by a `*_new`/`*_load`
//! style function and released with the matching `*_free`. Every fallible
//! function returns a [`TnvaeStatus`]; on failure a message is kept per
//! thread and can be read with [`tnvae_last_error`]. Matrices are row-major
//! `double` buffers. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tnvae::data::{gen_hmm, gen_spiral, split_series, HmmConfig, SeriesMatrix, SeriesMeta, SpiralConfig};
use tnvae::metrics::{neighbor_loss, procrustes_distance, random_walk_loglik, silhouette, spearman, EncodingMatrix};
use tnvae::nn::Matrix;
use tnvae::vae::{train, Hyperparams, TrainConfig, Variant, VaeModel};
use tnvae::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnvaeStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Bad argument or configuration.
    InvalidArgument = 2,
    /// Malformed or inconsistent data.
    Data = 3,
    /// File system failure.
    Io = 4,
    /// Non-finite values or divergence.
    Numeric = 5,
    /// Input without enough structure, e.g. a constant matrix.
    Degenerate = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Model variant for [`TnvaeHyperparams`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnvaeVariant {
    Standard = 0,
    TimeNeighbor = 1,
}

/// One training configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TnvaeHyperparams {
    pub variant: TnvaeVariant,
    pub n_layers: usize,
    pub hidden_width: usize,
    pub latent_dim: usize,
    pub beta: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
}

/// A time series, optionally labelled.
pub struct TnvaeSeries {
    inner: SeriesMatrix,
}

/// A trained model.
pub struct TnvaeModel {
    inner: VaeModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

fn status_of(err: &Error) -> TnvaeStatus {
    match err {
        Error::Usage(_) | Error::Config(_) | Error::Shape(_) => TnvaeStatus::InvalidArgument,
        Error::Data(_) | Error::Ingest { .. } => TnvaeStatus::Data,
        Error::Io { .. } => TnvaeStatus::Io,
        Error::NonFinite { .. } | Error::Numeric(_) | Error::Diverged { .. } => TnvaeStatus::Numeric,
        Error::Degenerate(_) => TnvaeStatus::Degenerate,
    }
}

/// Runs `f`, turning errors and panics into a status plus the thread's message.
fn guard(f: impl FnOnce() -> Result<(), (TnvaeStatus, String)>) -> TnvaeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TnvaeStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TnvaeStatus::Internal
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (TnvaeStatus, String)>;
}

impl<T> OrStatus<T> for tnvae::Result<T> {
    fn or_status(self) -> Result<T, (TnvaeStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (TnvaeStatus, String) {
    (TnvaeStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (TnvaeStatus, String) {
    (TnvaeStatus::InvalidArgument, msg.into())
}

/// Copies a `rows × cols` buffer into a matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles.
unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize) -> Result<Matrix, (TnvaeStatus, String)> {
    if data.is_null() {
        return Err(null("data"));
    }
    let len = rows.checked_mul(cols).ok_or_else(|| invalid("matrix size overflows"))?;
    let slice = std::slice::from_raw_parts(data, len);
    Matrix::from_vec(rows, cols, slice.to_vec()).or_status()
}

/// Copies up to `capacity - 1` bytes of the calling thread's last error
/// message into `buf` and NUL-terminates it. Returns the full message length
/// in bytes, so a return value `>= capacity` means the copy was truncated.
/// Passing a null `buf` only queries the length.
///
/// # Safety
/// `buf` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tnvae_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = e.len().min(capacity - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Builds a series from a row-major `rows × cols` buffer. `labels` may be
/// null, otherwise it holds one label per row.
///
/// # Safety
/// `data` must hold `rows * cols` doubles, `labels` null or `rows` integers,
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    labels: *const i64,
    out: *mut *mut TnvaeSeries,
) -> TnvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let values = read_matrix(data, rows, cols)?;
        let labels = (!labels.is_null()).then(|| std::slice::from_raw_parts(labels, rows).to_vec());
        let inner = SeriesMatrix::new(values, labels, SeriesMeta::default()).or_status()?;
        *out = Box::into_raw(Box::new(TnvaeSeries { inner }));
        Ok(())
    })
}

/// Generates the noisy embedded spiral; labels are 100-row segments.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_spiral(
    n_points: usize,
    noise_sigma: f64,
    seed: u64,
    out: *mut *mut TnvaeSeries,
) -> TnvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SpiralConfig {
            n_points,
            noise_sigma,
            seed,
            ..Default::default()
        };
        let inner = gen_spiral(&cfg).or_status()?.series;
        *out = Box::into_raw(Box::new(TnvaeSeries { inner }));
        Ok(())
    })
}

/// Samples the three-state Gaussian HMM; labels are the hidden states.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_hmm(
    dim: usize,
    n_points: usize,
    param_seed: u64,
    seed: u64,
    out: *mut *mut TnvaeSeries,
) -> TnvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = gen_hmm(&HmmConfig::sleep_like(dim, n_points, param_seed, seed)).or_status()?;
        *out = Box::into_raw(Box::new(TnvaeSeries { inner }));
        Ok(())
    })
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_rows(series: *const TnvaeSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// Number of features; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_cols(series: *const TnvaeSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.dim())
}

/// Copies the values (row-major) into `out`, which holds `rows * cols` doubles.
///
/// # Safety
/// `series` must be a live handle and `out` writable for the full matrix.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_values(series: *const TnvaeSeries, out: *mut f64) -> TnvaeStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = s.inner.values().as_slice();
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// Copies the labels into `out` (`rows` integers). Fails with `Data` if the
/// series is unlabelled.
///
/// # Safety
/// `series` must be a live handle and `out` writable for `rows` integers.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_labels(series: *const TnvaeSeries, out: *mut i64) -> TnvaeStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let labels = s
            .inner
            .labels()
            .ok_or_else(|| (TnvaeStatus::Data, "series has no labels".to_string()))?;
        ptr::copy_nonoverlapping(labels.as_ptr(), out, labels.len());
        Ok(())
    })
}

/// Releases a series. Null is ignored.
///
/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tnvae_series_free(series: *mut TnvaeSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Trains one model with the given seed and validation/test fractions.
/// A run that diverges returns `Numeric`.
///
/// # Safety
/// `series` must be a live handle, `hp` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_train(
    series: *const TnvaeSeries,
    hp: *const TnvaeHyperparams,
    seed: u64,
    val_fraction: f64,
    test_fraction: f64,
    out: *mut *mut TnvaeModel,
) -> TnvaeStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let hp = hp.as_ref().ok_or_else(|| null("hp"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let hp = Hyperparams {
            variant: match hp.variant {
                TnvaeVariant::Standard => Variant::Standard,
                TnvaeVariant::TimeNeighbor => Variant::TimeNeighbor,
            },
            n_layers: hp.n_layers,
            hidden_width: hp.hidden_width,
            latent_dim: hp.latent_dim,
            beta: hp.beta,
            batch_size: hp.batch_size,
            lr: hp.lr,
            epochs: hp.epochs,
        };
        hp.validate_domain().or_status()?;
        let split = split_series(s.inner.len(), seed, val_fraction, test_fraction).or_status()?;
        let cfg = TrainConfig::from_hyperparams(&hp, seed, val_fraction, test_fraction);
        let outcome = train(&hp, &s.inner, &split, &cfg).or_status()?;
        if outcome.record.failed {
            let why = outcome.record.failure.unwrap_or_else(|| "training failed".into());
            return Err((TnvaeStatus::Numeric, why));
        }
        *out = Box::into_raw(Box::new(TnvaeModel { inner: outcome.model }));
        Ok(())
    })
}

/// Loads a checkpoint written by the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_load(path: *const c_char, out: *mut *mut TnvaeModel) -> TnvaeStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let text = std::fs::read_to_string(Path::new(path)).map_err(|e| (TnvaeStatus::Io, format!("{path}: {e}")))?;
        let inner = VaeModel::from_checkpoint(&text).or_status()?;
        *out = Box::into_raw(Box::new(TnvaeModel { inner }));
        Ok(())
    })
}

/// Writes the model's checkpoint to `path`.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_save(model: *const TnvaeModel, path: *const c_char) -> TnvaeStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        std::fs::write(path, m.inner.to_checkpoint()).map_err(|e| (TnvaeStatus::Io, format!("{path}: {e}")))
    })
}

/// Latent dimension; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_latent_dim(model: *const TnvaeModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.latent_dim())
}

/// Input dimension; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_input_dim(model: *const TnvaeModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.input_dim())
}

/// Posterior means of `rows` inputs of width `cols` into `out_mean`
/// (`rows × latent_dim`). `out_log_var` may be null; otherwise it receives the
/// log-variances in the same layout.
///
/// # Safety
/// Buffers must match the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_encode(
    model: *const TnvaeModel,
    data: *const f64,
    rows: usize,
    cols: usize,
    out_mean: *mut f64,
    out_log_var: *mut f64,
) -> TnvaeStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out_mean.is_null() {
            return Err(null("out_mean"));
        }
        let x = read_matrix(data, rows, cols)?;
        let (mean, log_var) = m.inner.encode_batch(&x).or_status()?;
        ptr::copy_nonoverlapping(mean.as_slice().as_ptr(), out_mean, mean.as_slice().len());
        if !out_log_var.is_null() {
            ptr::copy_nonoverlapping(log_var.as_slice().as_ptr(), out_log_var, log_var.as_slice().len());
        }
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tnvae_model_free(model: *mut TnvaeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Neighbor loss of a time-ordered `rows × dim` trajectory.
///
/// # Safety
/// `z` must hold `rows * dim` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_neighbor_loss(z: *const f64, rows: usize, dim: usize, out: *mut f64) -> TnvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let enc = EncodingMatrix::sequential(read_matrix(z, rows, dim)?).or_status()?;
        *out = neighbor_loss(&enc).or_status()?.total;
        Ok(())
    })
}

/// Gaussian random-walk log-likelihood of a trajectory with step scale `sigma`.
///
/// # Safety
/// `z` must hold `rows * dim` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_random_walk_loglik(
    z: *const f64,
    rows: usize,
    dim: usize,
    sigma: f64,
    out: *mut f64,
) -> TnvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let enc = EncodingMatrix::sequential(read_matrix(z, rows, dim)?).or_status()?;
        *out = random_walk_loglik(&enc, sigma).or_status()?;
        Ok(())
    })
}

/// Mean silhouette of `rows` points under `labels`.
///
/// # Safety
/// `points` must hold `rows * dim` doubles, `labels` `rows` integers, and
/// `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_silhouette(
    points: *const f64,
    rows: usize,
    dim: usize,
    labels: *const i64,
    out: *mut f64,
) -> TnvaeStatus {
    guard(|| {
        if labels.is_null() {
            return Err(null("labels"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let m = read_matrix(points, rows, dim)?;
        *out = silhouette(&m, std::slice::from_raw_parts(labels, rows)).or_status()?;
        Ok(())
    })
}

/// Procrustes disparity between two `rows × dim` configurations.
///
/// # Safety
/// `a` and `b` must each hold `rows * dim` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_procrustes_distance(
    a: *const f64,
    b: *const f64,
    rows: usize,
    dim: usize,
    out: *mut f64,
) -> TnvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = read_matrix(a, rows, dim)?;
        let b = read_matrix(b, rows, dim)?;
        *out = procrustes_distance(&a, &b).or_status()?;
        Ok(())
    })
}

/// Spearman rank correlation of two length-`n` samples.
///
/// # Safety
/// `x` and `y` must each hold `n` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tnvae_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> TnvaeStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return Err(null("x or y"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let (x, y) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        *out = spearman(x, y).or_status()?;
        Ok(())
    })
}
