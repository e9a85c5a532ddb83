#include <math.h>
#include <stdio.h>
#include "petz.h"

#define CHECK(call)                                                   \
  do {                                                                \
    PetzStatus s_ = (call);                                           \
    if (s_ != PETZ_STATUS_OK) {                                       \
      fprintf(stderr, "%s -> %d: %s\n", #call, s_, petz_last_error()); \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  PetzChannel *ad = NULL, *rec = NULL;
  PetzState *one = NULL, *damped = NULL, *back = NULL;
  double re[2] = {0.0, 1.0}, im[2] = {0.0, 0.0};
  double p = 0.4, eps = 0.5, f = 0.0;

  CHECK(petz_channel_amplitude_damping(p, &ad));
  CHECK(petz_channel_recovery(PETZ_FAMILY_AMPLITUDE_DAMPING, p, eps, &rec));
  CHECK(petz_state_pure(2, re, im, &one));
  CHECK(petz_channel_apply(ad, one, &damped));
  CHECK(petz_channel_apply(rec, damped, &back));
  CHECK(petz_fidelity(back, one, &f));

  double want = (1.0 - p) + p * p * eps / (1.0 - (1.0 - p) * eps);
  if (fabs(f - want) > 1e-12) {
    fprintf(stderr, "fidelity %.15f, expected %.15f\n", f, want);
    return 1;
  }
  if (petz_channel_amplitude_damping(2.0, &ad) != PETZ_STATUS_INVALID_ARGUMENT ||
      petz_last_error() == NULL) {
    return 1;
  }
  petz_state_free(one);
  petz_state_free(damped);
  petz_state_free(back);
  petz_channel_free(ad);
  petz_channel_free(rec);
  printf("ok %.10f\n", f);
  return 0;
}
