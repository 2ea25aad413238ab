#ifndef XTELE_H
#define XTELE_H

#include <stdbool.h>
#include <stdint.h>

typedef enum XteleMethod {
  XTELE_METHOD_CLOSED_FORM = 0,
  XTELE_METHOD_QUADRATURE = 1,
  XTELE_METHOD_MONTE_CARLO = 2,
} XteleMethod;

// Which outcomes an average is taken over.
typedef enum XteleSelection {
  // Plain teleportation, no extraction.
  XTELE_SELECTION_PLAIN = 0,
  // Teleportation followed by extraction, all outcomes.
  XTELE_SELECTION_USE_TOTAL = 1,
  // Successful extraction only.
  XTELE_SELECTION_USE_SUCCESS = 2,
  // Failed extraction only.
  XTELE_SELECTION_USE_FAILURE = 3,
} XteleSelection;

// Result code of every fallible call.
typedef enum XteleStatus {
  XTELE_STATUS_OK = 0,
  XTELE_STATUS_NULL_POINTER = 1,
  // Parameters do not describe a valid channel.
  XTELE_STATUS_INVALID_CHANNEL = 2,
  // `r11 = 0` or `alpha = 0`: no extraction unitary exists.
  XTELE_STATUS_EXTRACTION_IMPOSSIBLE = 3,
  XTELE_STATUS_INVALID_ARGUMENT = 4,
  // The selected outcomes never occur, so their fidelity is undefined.
  XTELE_STATUS_UNDEFINED_FIDELITY = 5,
  XTELE_STATUS_INTERNAL = 6,
  XTELE_STATUS_PANIC = 7,
} XteleStatus;

typedef enum XteleVerdict {
  XTELE_VERDICT_CLASSICAL = 0,
  XTELE_VERDICT_QUANTUM = 1,
  XTELE_VERDICT_BOUNDARY = 2,
} XteleVerdict;

// Opaque pure channel `alpha|00> + beta|11>`.
typedef struct XtelePureChannel XtelePureChannel;

// Opaque X-state channel.
typedef struct XteleXState XteleXState;

typedef struct XteleConcurrence {
  double c14;
  double c23;
  double concurrence;
} XteleConcurrence;

// Thresholds are NaN and verdicts `Classical` when `r11 = 0`, except for
// the plain threshold, which is always defined.
typedef struct XteleThresholds {
  double c14;
  double c_x_th;
  double c_x_use_th;
  double c_x_use_0_th;
  enum XteleVerdict quantum_plain;
  enum XteleVerdict quantum_use_total;
  enum XteleVerdict quantum_use_filtered;
} XteleThresholds;

typedef struct XteleFidelities {
  double f_x;
  double f_x_use;
  double f_x_use_0;
  double f_x_use_1;
  double p_qext;
} XteleFidelities;

typedef struct XteleEstimate {
  double value;
  // Zero for deterministic methods.
  double std_error;
  uint64_t n_samples;
} XteleEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *xtele_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *xtele_version(void);

// Validates an X-state and stores a new handle in `*out`. With `strict`
// the principal-subspace condition `r11·r44 > r22·r33` is enforced.
//
// # Safety
// `out` must be valid for writing one pointer.
enum XteleStatus xtele_x_state_new(double r11,
                                   double r22,
                                   double r33,
                                   double r44,
                                   double r14,
                                   double r23,
                                   bool strict,
                                   struct XteleXState **out);

// # Safety
// `x` must be null or a handle from this library that has not been freed.
void xtele_x_state_free(struct XteleXState *x);

// # Safety
// `out` must be valid for writing one pointer.
enum XteleStatus xtele_pure_channel_new(double alpha, struct XtelePureChannel **out);

// # Safety
// `ch` must be null or a handle from this library that has not been freed.
void xtele_pure_channel_free(struct XtelePureChannel *ch);

// Embeds a pure channel as the X-state `(α², 0, 0, β², αβ, 0)`.
//
// # Safety
// `ch` must be a live handle and `out` valid for writing one pointer.
enum XteleStatus xtele_pure_channel_to_x_state(const struct XtelePureChannel *ch,
                                               struct XteleXState **out);

// # Safety
// `x` must be a live handle and `out` valid for writes.
enum XteleStatus xtele_x_state_concurrence(const struct XteleXState *x,
                                           struct XteleConcurrence *out);

// # Safety
// `x` must be a live handle and `out` valid for writes.
enum XteleStatus xtele_x_state_thresholds(const struct XteleXState *x, struct XteleThresholds *out);

// Closed-form average fidelities.
//
// # Safety
// `x` must be a live handle and `out` valid for writes.
enum XteleStatus xtele_x_state_fidelities(const struct XteleXState *x, struct XteleFidelities *out);

// Average fidelity of the outcomes in `selection`, by quadrature over
// the Bloch sphere or by Monte Carlo with `samples` Haar states drawn from
// `seed`. `ClosedForm` returns the analytic value. Results are identical
// for identical arguments.
//
// # Safety
// `x` must be a live handle and `out` valid for writes.
enum XteleStatus xtele_x_state_average_fidelity(const struct XteleXState *x,
                                                enum XteleMethod method,
                                                enum XteleSelection selection,
                                                uint64_t samples,
                                                uint64_t seed,
                                                struct XteleEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XTELE_H */
