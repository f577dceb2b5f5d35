#ifndef WITTENLAB_H
#define WITTENLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_NULL_POINTER = 1,
  WL_STATUS_CONFIG = 2,
  WL_STATUS_INVALID_ARGUMENT = 3,
  WL_STATUS_NUMERICAL = 4,
  WL_STATUS_IO = 5,
  WL_STATUS_BUFFER_TOO_SMALL = 6,
  WL_STATUS_PANIC = 7,
} WlStatus;

/**
 * In-memory outputs of one experiment run.
 */
typedef struct WlArtifacts WlArtifacts;

/**
 * Cell complex with its Hodge inner products.
 */
typedef struct WlComplex WlComplex;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct WlConfig WlConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until the next call on this thread.
 */
const char *wl_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *wl_version(void);

/**
 * Parses a JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WlStatus wl_config_parse(const char *json, struct WlConfig **out);

/**
 * Overrides `solver.seed`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum WlStatus wl_config_set_seed(struct WlConfig *cfg, uint64_t seed);

/**
 * Writes the 64-character hex config hash plus NUL into `buf` (at least 65 bytes).
 *
 * # Safety
 * `cfg` must be a live handle and `buf` writable for `len` bytes.
 */
enum WlStatus wl_config_hash(const struct WlConfig *cfg, char *buf, size_t len);

/**
 * # Safety
 * `cfg` must be null or a handle from [`wl_config_parse`], not yet freed.
 */
void wl_config_free(struct WlConfig *cfg);

/**
 * Runs an experiment (`"spectra"`, `"branches"`, `"morse"`, `"torsion-check"`, `"oscillator-tables"`).
 *
 * # Safety
 * `cfg` must be a live handle, `command` a NUL-terminated string, `out` writable.
 */
enum WlStatus wl_run(const struct WlConfig *cfg,
                     const char *command,
                     struct WlArtifacts **out);

/**
 * Number of artifacts.
 *
 * # Safety
 * `art` must be null or a live handle.
 */
size_t wl_artifacts_count(const struct WlArtifacts *art);

/**
 * Name of artifact `index`, or null if out of range. Owned by the handle.
 *
 * # Safety
 * `art` must be null or a live handle.
 */
const char *wl_artifacts_name(const struct WlArtifacts *art, size_t index);

/**
 * Borrowed bytes of the named artifact. The pointer lives as long as the handle.
 *
 * # Safety
 * `art` must be a live handle, `name` a NUL-terminated string, `data` and `len` writable.
 */
enum WlStatus wl_artifacts_get(const struct WlArtifacts *art,
                               const char *name,
                               const uint8_t **data,
                               size_t *len);

/**
 * Writes every artifact into `dir`, creating it if needed.
 *
 * # Safety
 * `art` must be a live handle and `dir` a NUL-terminated path.
 */
enum WlStatus wl_artifacts_write(const struct WlArtifacts *art, const char *dir);

/**
 * # Safety
 * `art` must be null or a handle from [`wl_run`], not yet freed.
 */
void wl_artifacts_free(struct WlArtifacts *art);

/**
 * Cubical torus of dimension `dim` (1 to 3) with `resolution` cells per period.
 * `periods` may be null for unit periods, otherwise it holds `dim` values.
 *
 * # Safety
 * `periods` must be null or readable for `dim` values; `out` writable.
 */
enum WlStatus wl_complex_torus(size_t dim,
                               size_t resolution,
                               const double *periods,
                               struct WlComplex **out);

/**
 * Icosphere triangulation of the unit sphere after `subdivisions` refinements.
 *
 * # Safety
 * `out` must be writable.
 */
enum WlStatus wl_complex_icosphere(size_t subdivisions, struct WlComplex **out);

/**
 * Cell counts per degree. `*len` receives the top degree plus one even when `cap` is too small.
 *
 * # Safety
 * `cx` must be a live handle, `out` writable for `cap` values, `len` writable.
 */
enum WlStatus wl_complex_dims(const struct WlComplex *cx, size_t *out, size_t cap, size_t *len);

/**
 * Betti numbers from the Hodge Laplacian kernels.
 *
 * # Safety
 * As for [`wl_complex_dims`].
 */
enum WlStatus wl_complex_betti(const struct WlComplex *cx, size_t *out, size_t cap, size_t *len);

/**
 * The `count` lowest eigenvalues of the degree-`q` Hodge Laplacian, ascending.
 *
 * # Safety
 * `cx` must be a live handle and `out` writable for `count` values.
 */
enum WlStatus wl_complex_spectrum(const struct WlComplex *cx, size_t q, size_t count, double *out);

/**
 * Natural log of the analytic torsion of the complex.
 *
 * # Safety
 * `cx` must be a live handle and `out` writable.
 */
enum WlStatus wl_complex_log_torsion(const struct WlComplex *cx, double *out);

/**
 * # Safety
 * `cx` must be null or a handle from a `wl_complex_*` constructor, not yet freed.
 */
void wl_complex_free(struct WlComplex *cx);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WITTENLAB_H */
