#include <math.h>
#include <stdio.h>
#include "xtele.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, \
              #cond);                                            \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  XteleXState *x = NULL;
  CHECK(xtele_x_state_new(0.3, 0.15, 0.05, 0.5, 0.35, 0.0, false, &x) ==
        XTELE_STATUS_OK);

  XteleFidelities f;
  CHECK(xtele_x_state_fidelities(x, &f) == XTELE_STATUS_OK);
  CHECK(fabs(f.f_x - 5.0 / 6.0) < 1e-12);
  CHECK(fabs(f.f_x_use_0 - 0.847845796607675) < 1e-12);

  XteleThresholds t;
  CHECK(xtele_x_state_thresholds(x, &t) == XTELE_STATUS_OK);
  CHECK(t.c_x_use_0_th < t.c_x_th);
  CHECK(t.quantum_plain == XTELE_VERDICT_QUANTUM);

  XteleEstimate e;
  CHECK(xtele_x_state_average_fidelity(x, XTELE_METHOD_QUADRATURE,
                                       XTELE_SELECTION_USE_SUCCESS, 0, 0,
                                       &e) == XTELE_STATUS_OK);
  CHECK(fabs(e.value - f.f_x_use_0) < 1e-10);
  xtele_x_state_free(x);

  XteleXState *bad = NULL;
  CHECK(xtele_x_state_new(0.6, 0.1, 0.1, 0.2, 0.0, 0.0, false, &bad) ==
        XTELE_STATUS_INVALID_CHANNEL);
  CHECK(bad == NULL);
  CHECK(xtele_last_error_message() != NULL);

  printf("ok %s\n", xtele_version());
  return 0;
}
