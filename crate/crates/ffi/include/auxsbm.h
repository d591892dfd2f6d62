#ifndef AUXSBM_H
#define AUXSBM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AuxsbmStatus {
  AUXSBM_STATUS_OK = 0,
  AUXSBM_STATUS_NULL_POINTER = 1,
  /**
   * Arguments violate a precondition.
   */
  AUXSBM_STATUS_DOMAIN = 2,
  AUXSBM_STATUS_INVALID_JSON = 3,
  AUXSBM_STATUS_INVALID_UTF8 = 4,
  AUXSBM_STATUS_IO = 5,
  AUXSBM_STATUS_BUFFER_TOO_SMALL = 6,
  AUXSBM_STATUS_PANIC = 7,
} AuxsbmStatus;

typedef enum AuxsbmScenario {
  AUXSBM_SCENARIO_SBM_KNOWN_Y = 0,
  AUXSBM_SCENARIO_SBM_UNKNOWN_Y = 1,
  AUXSBM_SCENARIO_CBM_KNOWN_Y = 2,
  AUXSBM_SCENARIO_CBM_UNKNOWN_Y = 3,
} AuxsbmScenario;

/**
 * Labelled graph.
 */
typedef struct AuxsbmGraph AuxsbmGraph;

/**
 * Binary model parameters.
 */
typedef struct AuxsbmParams AuxsbmParams;

/**
 * SDP solution together with the certificate outcome, if requested.
 */
typedef struct AuxsbmSolution AuxsbmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *auxsbm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *auxsbm_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void auxsbm_string_free(char *s);

/**
 * Binary parameters; pass `xi = NaN` for an uncensored model.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AuxsbmStatus auxsbm_params_new(double q0,
                                    double q1,
                                    double q2,
                                    double q3,
                                    double rho,
                                    double xi,
                                    struct AuxsbmParams **out);

/**
 * Binary parameters from JSON (`{"q0":..,"q1":..,"q2":..,"q3":..,"rho":..,"xi":..}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_params_from_json(const char *json, struct AuxsbmParams **out);

/**
 * # Safety
 * `p` must be null or a handle from this library that has not been freed.
 */
void auxsbm_params_free(struct AuxsbmParams *p);

/**
 * Sample a graph with balanced `x`.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_sample(const struct AuxsbmParams *params,
                                size_t n,
                                uint64_t seed,
                                struct AuxsbmGraph **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_graph_from_json(const char *json, struct AuxsbmGraph **out);

/**
 * Graph JSON; release the string with [`auxsbm_string_free`].
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_graph_to_json(const struct AuxsbmGraph *graph, char **out);

/**
 * Node count, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t auxsbm_graph_n(const struct AuxsbmGraph *graph);

/**
 * Edge count, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t auxsbm_graph_num_edges(const struct AuxsbmGraph *graph);

/**
 * # Safety
 * `g` must be null or a handle from this library that has not been freed.
 */
void auxsbm_graph_free(struct AuxsbmGraph *g);

/**
 * Chernoff-Hellinger divergence of two rate vectors of length `len`.
 *
 * # Safety
 * `a` and `b` must point to `len` doubles; `value` and `t_star` must be
 * valid pointers (`t_star` may be null).
 */
enum AuxsbmStatus auxsbm_ch_divergence(const double *a,
                                       const double *b,
                                       size_t len,
                                       double *value,
                                       double *t_star);

/**
 * Known-`y` exponent `η₁` of the parameters.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_eta1(const struct AuxsbmParams *params, double *out);

/**
 * Unknown-`y` exponent `η₂` of the parameters.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_eta2(const struct AuxsbmParams *params, double *out);

/**
 * Binary SDP threshold; `exact_recovery` is set when it exceeds 1.
 *
 * # Safety
 * `params` must be a live handle; `value` must be valid and
 * `exact_recovery` valid or null.
 */
enum AuxsbmStatus auxsbm_sdp_threshold(const struct AuxsbmParams *params,
                                       bool known_y,
                                       double *value,
                                       bool *exact_recovery);

/**
 * Solve the relaxation of `scenario` on `graph`. `params` may be null for
 * `SBM_UNKNOWN_Y`; with `certify` the dual certificate is also checked.
 *
 * # Safety
 * `graph` must be a live handle, `params` null or live, `out` valid.
 */
enum AuxsbmStatus auxsbm_solve(const struct AuxsbmGraph *graph,
                               const struct AuxsbmParams *params,
                               enum AuxsbmScenario scenario,
                               uint64_t seed,
                               bool certify,
                               struct AuxsbmSolution **out);

/**
 * Copy the `±1` labels into `buf`, which must hold at least `len` entries.
 *
 * # Safety
 * `solution` must be a live handle and `buf` must point to `len` writable
 * bytes.
 */
enum AuxsbmStatus auxsbm_solution_labels(const struct AuxsbmSolution *solution,
                                         int8_t *buf,
                                         size_t len);

/**
 * Number of labels, or 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t auxsbm_solution_len(const struct AuxsbmSolution *solution);

/**
 * `⟨Z, C⟩` at the solver's optimum, NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
double auxsbm_solution_objective(const struct AuxsbmSolution *solution);

/**
 * 1 if certified, 0 if the certificate failed, -1 if it was not requested.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
int32_t auxsbm_solution_certified(const struct AuxsbmSolution *solution);

/**
 * Full solution JSON (without the factor); release with
 * [`auxsbm_string_free`].
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum AuxsbmStatus auxsbm_solution_to_json(const struct AuxsbmSolution *solution, char **out);

/**
 * # Safety
 * `s` must be null or a handle from this library that has not been freed.
 */
void auxsbm_solution_free(struct AuxsbmSolution *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUXSBM_H */
