#ifndef SUBLIN_H
#define SUBLIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SL_OK 0

#define SL_ERR_NEGATIVE_WEIGHT 1

#define SL_ERR_WEIGHT_SUM 2

#define SL_ERR_OFF_LATTICE 3

#define SL_ERR_EMPTY_SET 4

#define SL_ERR_INVALID_ARGUMENT 5

#define SL_ERR_UNBOUNDED_EVAL 6

#define SL_ERR_UNBOUNDED_FUNCTION 7

#define SL_ERR_STATE_BUDGET_EXCEEDED 8

#define SL_ERR_UNSUPPORTED_EVENT 9

#define SL_ERR_POLICY_GAP 10

#define SL_ERR_ENUMERATION_BUDGET_EXCEEDED 11

#define SL_ERR_BAD_INTERVAL 12

#define SL_ERR_TRUNCATION_TOO_SMALL 13

#define SL_ERR_NULL_POINTER 100

#define SL_ERR_PANIC 101

#define SL_SIDE_UPPER 0

#define SL_SIDE_LOWER 1

#define SL_EVENT_FINAL_ABS_GE 0

#define SL_EVENT_FINAL_ABS_LT 1

#define SL_EVENT_FINAL_GT 2

#define SL_EVENT_FINAL_LT 3

#define SL_EVENT_MAX_PARTIAL_ABS_GE 4

#define SL_EVENT_MAX_INCREMENT_ABS_GE 5

#define SL_EVENT_TAIL_SUM_ABS_GE 6

/**
 * Test function.
 */
typedef struct SlFunction SlFunction;

/**
 * Finitely generated ambiguity set.
 */
typedef struct SlSet SlSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; valid until the next call that fails.
 */
const char *sl_last_error_message(void);

/**
 * Builds a set from `n_generators` generators. Generator `g` owns the next
 * `atom_counts[g]` entries of `points` and `weights`.
 * `atom_counts` must hold `n_generators` entries and `points`/`weights` their sum.
 */
int32_t sl_set_new(double step,
                   size_t n_generators,
                   const size_t *atom_counts,
                   const double *points,
                   const double *weights,
                   struct SlSet **out);

/**
 * `set` must come from `sl_set_new` and not be used afterwards; null is ignored.
 */
void sl_set_free(struct SlSet *set);

/**
 * Number of generators, or 0 for null.
 * `set` must be null or a live handle.
 */
size_t sl_set_len(const struct SlSet *set);

/**
 * Continuous piecewise-linear function through `len` breakpoints, constant beyond the ends.
 * `xs` and `ys` must hold `len` entries.
 */
int32_t sl_function_piecewise_linear(const double *xs,
                                     const double *ys,
                                     size_t len,
                                     struct SlFunction **out);

int32_t sl_function_tent(double center, double halfwidth, struct SlFunction **out);

/**
 * Clamp `(−n ∨ x) ∧ n`.
 */
int32_t sl_function_clamp(double n, struct SlFunction **out);

/**
 * Tail surrogate `ψ_n`.
 */
int32_t sl_function_psi(uint64_t n, struct SlFunction **out);

/**
 * `|x|`; unbounded, so only usable where unbounded functions are accepted.
 */
int32_t sl_function_abs(struct SlFunction **out);

/**
 * `f` must come from an `sl_function_*` constructor and not be used afterwards; null is ignored.
 */
void sl_function_free(struct SlFunction *f);

/**
 * `f(x)`, or NaN for null.
 * `f` must be null or a live handle.
 */
double sl_function_eval(const struct SlFunction *f, double x);

/**
 * `ψ_n(x) = n·min(1, max(0, |x| − (n − 1)))`.
 */
double sl_psi(uint64_t n, double x);

/**
 * One-step `E[f(X)]` and `−E[−f(X)]`.
 * Handles must be live; `upper` and `lower` writable.
 */
int32_t sl_sublinear_expect(const struct SlSet *set,
                            const struct SlFunction *f,
                            double *upper,
                            double *lower);

/**
 * `E[f(S_n/n)]` for `SL_SIDE_UPPER`, `−E[−f(S_n/n)]` for `SL_SIDE_LOWER`.
 * Handles must be live; `value` writable.
 */
int32_t sl_robust_value(const struct SlSet *set,
                        size_t n,
                        const struct SlFunction *f,
                        int32_t side_code,
                        double *value);

/**
 * Upper or lower capacity of a path event over `n` steps. `from_index` is
 * read only for `SL_EVENT_TAIL_SUM_ABS_GE`.
 * `set` must be live; `value` writable.
 */
int32_t sl_capacity(const struct SlSet *set,
                    size_t n,
                    int32_t event_kind,
                    double threshold,
                    size_t from_index,
                    int32_t side_code,
                    double *value);

/**
 * `E_K[φ(S_n/n)]` with `φ(x) = 1 ∧ (1 − x)⁺` over the `K`-truncated HEAVY family.
 */
int32_t sl_heavy_lln_value(uint64_t truncation, size_t n, uint64_t state_budget, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBLIN_H */
