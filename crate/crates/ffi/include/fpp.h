#ifndef FPP_H
#define FPP_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum FppStatus {
  FPP_STATUS_OK = 0,
  FPP_STATUS_NULL_POINTER = 1,
  FPP_STATUS_INVALID_ARGUMENT = 2,
  FPP_STATUS_PARSE = 3,
  FPP_STATUS_CONFIG = 4,
  FPP_STATUS_DOMAIN = 5,
  FPP_STATUS_RESOURCE = 6,
  FPP_STATUS_UNREACHABLE = 7,
  FPP_STATUS_NUMERIC = 8,
  FPP_STATUS_PANIC = 9,
} FppStatus;

/**
 * An i.i.d. weight environment.
 */
typedef struct FppEnvironment FppEnvironment;

/**
 * A group with its generating set; the combing analysis is computed on
 * first use.
 */
typedef struct FppModel FppModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fpp_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the full message length
 * in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fpp_last_error_message(char *buf, size_t len);

/**
 * Builds a model from config text.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FppStatus fpp_model_new(const char *config, struct FppModel **out);

/**
 * Builds the free group of the given rank with its standard generators.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FppStatus fpp_model_new_free(uint32_t rank, struct FppModel **out);

/**
 * # Safety
 * `model` must be null or a handle from `fpp_model_new*` not yet freed.
 */
void fpp_model_free(struct FppModel *model);

/**
 * Word distance `d(x, y)`.
 *
 * # Safety
 * Pointers must be valid; `x`, `y` NUL-terminated.
 */
enum FppStatus fpp_distance(const struct FppModel *model,
                            const char *x,
                            const char *y,
                            uint64_t *out);

/**
 * Growth rate λ of the geodesic automaton.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FppStatus fpp_lambda(const struct FppModel *model, double *out);

/**
 * Boundary measure of the cone of `g`.
 *
 * # Safety
 * Pointers must be valid; `g` NUL-terminated.
 */
enum FppStatus fpp_cone_measure(const struct FppModel *model, const char *g, double *out);

/**
 * Gromov product `⟨x, y⟩_o`.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum FppStatus fpp_gromov_product(const struct FppModel *model,
                                  const char *x,
                                  const char *y,
                                  const char *o,
                                  double *out);

/**
 * Builds an environment from the `[distribution]` table of config text.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FppStatus fpp_environment_new(const char *config, uint64_t seed, struct FppEnvironment **out);

/**
 * # Safety
 * `env` must be null or a handle from `fpp_environment_new` not yet freed.
 */
void fpp_environment_free(struct FppEnvironment *env);

/**
 * Passage time from `x` to `y` inside the cylinder of the given radius
 * around the word geodesic `[x, y]`. `edges` may be null; otherwise it
 * receives the number of edges on the ω-geodesic.
 *
 * # Safety
 * Handles must be valid; strings NUL-terminated; `time` valid.
 */
enum FppStatus fpp_passage_time(const struct FppModel *model,
                                const struct FppEnvironment *env,
                                const char *x,
                                const char *y,
                                uint64_t radius,
                                double *time,
                                uint64_t *edges);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPP_H */
