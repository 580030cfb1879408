/* The header must compile as C; run the smallest end-to-end path. */
#include <math.h>
#include <stdio.h>

#include "twistgreen/twistgreen.h"

int main(void) {
  tg_twist* t = NULL;
  tg_orbit* o = NULL;
  tg_green* g = NULL;
  const int rot = 0;
  double sum = 0.0;
  if (tg_twist_standard(1.0, &t) != TG_OK) return 1;
  if (tg_minimize(t, &rot, 1, &o) != TG_OK) return 2;
  if (tg_green_periodic(t, o, 1000, 1e-12, &g) != TG_OK) return 3;
  if (tg_green_exponent_sum(g, &sum) != TG_OK) return 4;
  if (fabs(sum - log((3.0 + sqrt(5.0)) / 2.0)) > 1e-10) return 5;
  tg_green_free(g);
  tg_orbit_free(o);
  tg_twist_free(t);
  printf("twistgreen %s ok\n", tg_version());
  return 0;
}
