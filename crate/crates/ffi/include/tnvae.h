#ifndef TNVAE_H
#define TNVAE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum TnvaeStatus {
  TNVAE_STATUS_OK = 0,
  // A required pointer was null.
  TNVAE_STATUS_NULL_POINTER = 1,
  // Bad argument or configuration.
  TNVAE_STATUS_INVALID_ARGUMENT = 2,
  // Malformed or inconsistent data.
  TNVAE_STATUS_DATA = 3,
  // File system failure.
  TNVAE_STATUS_IO = 4,
  // Non-finite values or divergence.
  TNVAE_STATUS_NUMERIC = 5,
  // Input without enough structure, e.g. a constant matrix.
  TNVAE_STATUS_DEGENERATE = 6,
  // A Rust panic was caught at the boundary.
  TNVAE_STATUS_INTERNAL = 7,
} TnvaeStatus;

// Model variant for [`TnvaeHyperparams`].
typedef enum TnvaeVariant {
  TNVAE_VARIANT_STANDARD = 0,
  TNVAE_VARIANT_TIME_NEIGHBOR = 1,
} TnvaeVariant;

// A trained model.
typedef struct TnvaeModel TnvaeModel;

// A time series, optionally labelled.
typedef struct TnvaeSeries TnvaeSeries;

// One training configuration.
typedef struct TnvaeHyperparams {
  enum TnvaeVariant variant;
  size_t n_layers;
  size_t hidden_width;
  size_t latent_dim;
  double beta;
  size_t batch_size;
  double lr;
  size_t epochs;
} TnvaeHyperparams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies up to `capacity - 1` bytes of the calling thread's last error
// message into `buf` and NUL-terminates it. Returns the full message length
// in bytes, so a return value `>= capacity` means the copy was truncated.
// Passing a null `buf` only queries the length.
//
// # Safety
// `buf` must be null or point to `capacity` writable bytes.
size_t tnvae_last_error(char *buf, size_t capacity);

// Builds a series from a row-major `rows × cols` buffer. `labels` may be
// null, otherwise it holds one label per row.
//
// # Safety
// `data` must hold `rows * cols` doubles, `labels` null or `rows` integers,
// and `out` must be writable.
enum TnvaeStatus tnvae_series_new(const double *data,
                                  size_t rows,
                                  size_t cols,
                                  const int64_t *labels,
                                  struct TnvaeSeries **out);

// Generates the noisy embedded spiral; labels are 100-row segments.
//
// # Safety
// `out` must be writable.
enum TnvaeStatus tnvae_series_spiral(size_t n_points,
                                     double noise_sigma,
                                     uint64_t seed,
                                     struct TnvaeSeries **out);

// Samples the three-state Gaussian HMM; labels are the hidden states.
//
// # Safety
// `out` must be writable.
enum TnvaeStatus tnvae_series_hmm(size_t dim,
                                  size_t n_points,
                                  uint64_t param_seed,
                                  uint64_t seed,
                                  struct TnvaeSeries **out);

// Number of rows; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t tnvae_series_rows(const struct TnvaeSeries *series);

// Number of features; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t tnvae_series_cols(const struct TnvaeSeries *series);

// Copies the values (row-major) into `out`, which holds `rows * cols` doubles.
//
// # Safety
// `series` must be a live handle and `out` writable for the full matrix.
enum TnvaeStatus tnvae_series_values(const struct TnvaeSeries *series, double *out);

// Copies the labels into `out` (`rows` integers). Fails with `Data` if the
// series is unlabelled.
//
// # Safety
// `series` must be a live handle and `out` writable for `rows` integers.
enum TnvaeStatus tnvae_series_labels(const struct TnvaeSeries *series, int64_t *out);

// Releases a series. Null is ignored.
//
// # Safety
// `series` must be null or a handle not yet freed.
void tnvae_series_free(struct TnvaeSeries *series);

// Trains one model with the given seed and validation/test fractions.
// A run that diverges returns `Numeric`.
//
// # Safety
// `series` must be a live handle, `hp` readable and `out` writable.
enum TnvaeStatus tnvae_model_train(const struct TnvaeSeries *series,
                                   const struct TnvaeHyperparams *hp,
                                   uint64_t seed,
                                   double val_fraction,
                                   double test_fraction,
                                   struct TnvaeModel **out);

// Loads a checkpoint written by the CLI.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum TnvaeStatus tnvae_model_load(const char *path, struct TnvaeModel **out);

// Writes the model's checkpoint to `path`.
//
// # Safety
// `model` must be a live handle and `path` a NUL-terminated string.
enum TnvaeStatus tnvae_model_save(const struct TnvaeModel *model, const char *path);

// Latent dimension; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t tnvae_model_latent_dim(const struct TnvaeModel *model);

// Input dimension; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t tnvae_model_input_dim(const struct TnvaeModel *model);

// Posterior means of `rows` inputs of width `cols` into `out_mean`
// (`rows × latent_dim`). `out_log_var` may be null; otherwise it receives the
// log-variances in the same layout.
//
// # Safety
// Buffers must match the stated sizes.
enum TnvaeStatus tnvae_model_encode(const struct TnvaeModel *model,
                                    const double *data,
                                    size_t rows,
                                    size_t cols,
                                    double *out_mean,
                                    double *out_log_var);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void tnvae_model_free(struct TnvaeModel *model);

// Neighbor loss of a time-ordered `rows × dim` trajectory.
//
// # Safety
// `z` must hold `rows * dim` doubles and `out` be writable.
enum TnvaeStatus tnvae_neighbor_loss(const double *z, size_t rows, size_t dim, double *out);

// Gaussian random-walk log-likelihood of a trajectory with step scale `sigma`.
//
// # Safety
// `z` must hold `rows * dim` doubles and `out` be writable.
enum TnvaeStatus tnvae_random_walk_loglik(const double *z,
                                          size_t rows,
                                          size_t dim,
                                          double sigma,
                                          double *out);

// Mean silhouette of `rows` points under `labels`.
//
// # Safety
// `points` must hold `rows * dim` doubles, `labels` `rows` integers, and
// `out` be writable.
enum TnvaeStatus tnvae_silhouette(const double *points,
                                  size_t rows,
                                  size_t dim,
                                  const int64_t *labels,
                                  double *out);

// Procrustes disparity between two `rows × dim` configurations.
//
// # Safety
// `a` and `b` must each hold `rows * dim` doubles and `out` be writable.
enum TnvaeStatus tnvae_procrustes_distance(const double *a,
                                           const double *b,
                                           size_t rows,
                                           size_t dim,
                                           double *out);

// Spearman rank correlation of two length-`n` samples.
//
// # Safety
// `x` and `y` must each hold `n` doubles and `out` be writable.
enum TnvaeStatus tnvae_spearman(const double *x, const double *y, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TNVAE_H */
