#ifndef TOPOWIND_H
#define TOPOWIND_H

/* Generated by cbindgen from the topowind-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define TW_OK 0

/**
 * A required pointer argument was null.
 */
#define TW_ERR_NULL_ARGUMENT 1

/**
 * A string argument was not valid UTF-8.
 */
#define TW_ERR_INVALID_UTF8 2

/**
 * File could not be read or parsed as the expected artifact.
 */
#define TW_ERR_IO 3

/**
 * Input lengths or values violate the callee's contract.
 */
#define TW_ERR_BAD_INPUT 4

/**
 * Internal invariant failure; report this as a bug.
 */
#define TW_ERR_INTERNAL 5

/**
 * Number of winding classes the probe distinguishes (labels -5..=+5).
 */
#define TW_CLASSES 11

/**
 * Opaque trained-autoencoder handle.
 */
typedef struct TwAutoencoder TwAutoencoder;

/**
 * Opaque trained-probe handle.
 */
typedef struct TwProbe TwProbe;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *tw_last_error(void);

/**
 * Winding number of a closed complex-valued lattice configuration.
 *
 * `re` and `im` each hold `len` samples of one period. On success writes
 * the rounded integer winding to `out_n` and the raw (pre-rounding) value
 * to `out_raw`; either out pointer may be null to skip that result.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles.
 */
int32_t tw_winding_number(const double *re,
                          const double *im,
                          size_t len,
                          int64_t *out_n,
                          double *out_raw);

/**
 * Loads an autoencoder checkpoint file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t tw_autoencoder_load(const char *path, struct TwAutoencoder **out);

/**
 * Releases a handle from `tw_autoencoder_load`. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer this library returned, freed once.
 */
void tw_autoencoder_free(struct TwAutoencoder *handle);

/**
 * Number of lattice sites the model consumes (L).
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
int32_t tw_autoencoder_input_len(const struct TwAutoencoder *handle, size_t *out);

/**
 * Total feature-map length the encoder emits (4 filters x L/8 sites).
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
int32_t tw_autoencoder_feature_len(const struct TwAutoencoder *handle, size_t *out);

/**
 * Encodes one configuration into its feature map, written filter-major to
 * `out_features` (length `tw_autoencoder_feature_len`).
 *
 * # Safety
 * `re`/`im` must hold `len` doubles; `out_features` must hold
 * `out_len` writable doubles.
 */
int32_t tw_autoencoder_encode(const struct TwAutoencoder *handle,
                              const double *re,
                              const double *im,
                              size_t len,
                              double *out_features,
                              size_t out_len);

/**
 * Reconstructs one configuration through the bottleneck; writes L doubles
 * to each of `out_re` and `out_im`.
 *
 * # Safety
 * `re`/`im` must hold `len` doubles; `out_re`/`out_im` must hold
 * `out_len` writable doubles each.
 */
int32_t tw_autoencoder_reconstruct(const struct TwAutoencoder *handle,
                                   const double *re,
                                   const double *im,
                                   size_t len,
                                   double *out_re,
                                   double *out_im,
                                   size_t out_len);

/**
 * Loads a probe checkpoint file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t tw_probe_load(const char *path, struct TwProbe **out);

/**
 * Releases a handle from `tw_probe_load`. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer this library returned, freed once.
 */
void tw_probe_free(struct TwProbe *handle);

/**
 * Full feature-map length the probe expects (4 filters x sites, even when
 * it reads fewer filters).
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
int32_t tw_probe_feature_len(const struct TwProbe *handle, size_t *out);

/**
 * Class probabilities for one feature map; writes `TW_CLASSES` doubles.
 * Class c corresponds to winding number c - 5.
 *
 * # Safety
 * `features` must hold `len` doubles; `out_probs` must hold `out_len`
 * writable doubles.
 */
int32_t tw_probe_predict(const struct TwProbe *handle,
                         const double *features,
                         size_t len,
                         double *out_probs,
                         size_t out_len);

/**
 * Rank (1 = top) of the true winding number `n_w` among the probe's
 * predictions for one feature map.
 *
 * # Safety
 * `features` must hold `len` doubles; `out_rank` must be writable.
 */
int32_t tw_probe_rank(const struct TwProbe *handle,
                      const double *features,
                      size_t len,
                      int64_t n_w,
                      size_t *out_rank);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOWIND_H */
