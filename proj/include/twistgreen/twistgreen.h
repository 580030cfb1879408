#ifndef TWISTGREEN_TWISTGREEN_H
#define TWISTGREEN_TWISTGREEN_H

/* C interface to twistgreen. All handles are opaque and owned by the caller
 * once returned; release them with the matching *_free function. Functions
 * returning tg_status leave a message for tg_last_error() on failure. Matrices
 * are dim x dim, row-major. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(TG_BUILDING_LIBRARY)
#define TG_API __declspec(dllexport)
#else
#define TG_API __declspec(dllimport)
#endif
#else
#define TG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tg_status {
  TG_OK = 0,
  TG_INVALID_ARGUMENT = 1,
  TG_DIMENSION_MISMATCH = 2,
  TG_CONJUGATE_POINT = 3,
  TG_NO_POSITIVE_EIGENVALUE = 4,
  TG_RANK_DEFICIENT = 5,
  TG_NEWTON_DIVERGENCE = 6,
  TG_SINGULAR_TWIST = 7,
  TG_NON_CONVERGENCE = 8,
  TG_SADDLE_DETECTED = 9,
  TG_MONOTONICITY_VIOLATION = 10,
  TG_NON_PD_DENOMINATOR = 11,
  TG_STEP_SIZE_UNDERFLOW = 12,
  TG_DEGENERATE_COCYCLE = 13,
  TG_NO_GAP = 14,
  TG_NO_POSITIVE_EXPONENT = 15,
  TG_CONFIG = 16,
  TG_IO = 17,
  TG_INTERNAL = 18
} tg_status;

typedef enum tg_row_status { TG_ROW_PASS = 0, TG_ROW_FAIL = 1, TG_ROW_SKIPPED = 2 } tg_row_status;

typedef struct tg_result tg_result;
typedef struct tg_twist tg_twist;
typedef struct tg_orbit tg_orbit;
typedef struct tg_green tg_green;
typedef struct tg_hamiltonian tg_hamiltonian;

TG_API const char* tg_version(void);
TG_API const char* tg_status_string(tg_status status);
/* Message of the last failed call on this thread; empty if none. */
TG_API const char* tg_last_error(void);

/* ---- experiment runner ---- */

/* task: "verify", "scan", "green", "lyapunov" or "minimize". The seed
 * overrides the config when use_seed is nonzero. A config error returns
 * TG_CONFIG; numeric failures are reported through the result. */
TG_API tg_status tg_run(const char* config_json, const char* task, int use_seed, uint64_t seed, int jobs,
                        tg_result** out);
TG_API void tg_result_free(tg_result* r);
/* 0 when every row passed, 1 otherwise. */
TG_API int tg_result_exit_code(const tg_result* r);
TG_API size_t tg_result_artifact_count(const tg_result* r);
TG_API const char* tg_result_artifact_name(const tg_result* r, size_t i);
TG_API const char* tg_result_artifact_content(const tg_result* r, size_t i);

typedef struct tg_row {
  const char* scenario;
  const char* theorem;
  double lhs, rhs, slack, tolerance; /* NaN when not applicable */
  tg_row_status status;
  const char* reason; /* why a row failed or was skipped; may be empty */
  long n_steps, k_used;
  double wall_ms;
} tg_row;

TG_API size_t tg_result_row_count(const tg_result* r);
/* String fields stay valid until tg_result_free. */
TG_API tg_status tg_result_row(const tg_result* r, size_t i, tg_row* out);

/* ---- twist maps ---- */

/* Phi(q, Q) = (Q - q)^2 / 2 + (K / 4 pi^2) cos(2 pi q). */
TG_API tg_status tg_twist_standard(double k, tg_twist** out);
/* Phi(q, Q) = |Q - q|^2 / 2 + sum_j amplitude_j cos(2 pi <wave_j, q> + phase_j).
 * waves holds n_terms * dim integers; phases may be NULL. */
TG_API tg_status tg_twist_trig(int dim, size_t n_terms, const int* waves, const double* amplitudes,
                               const double* phases, tg_twist** out);
TG_API void tg_twist_free(tg_twist* t);
TG_API int tg_twist_dim(const tg_twist* t);
TG_API tg_status tg_twist_forward(const tg_twist* t, const double* q, const double* p, double* q_out, double* p_out);

/* Minimizing periodic orbit of type rotation/period. On TG_NON_CONVERGENCE or
 * TG_SADDLE_DETECTED *out still receives the best uncertified iterate. */
TG_API tg_status tg_minimize(const tg_twist* t, const int* rotation, int period, tg_orbit** out);
/* A given configuration, certified but not optimized. points is period * dim. */
TG_API tg_status tg_orbit_from_points(const tg_twist* t, const int* rotation, int period, const double* points,
                                      tg_orbit** out);
TG_API void tg_orbit_free(tg_orbit* o);
TG_API int tg_orbit_period(const tg_orbit* o);
TG_API int tg_orbit_certified(const tg_orbit* o);
TG_API double tg_orbit_residual(const tg_orbit* o);
TG_API double tg_orbit_action(const tg_orbit* o);
/* Writes period * dim lifted points. */
TG_API tg_status tg_orbit_points(const tg_orbit* o, double* points);

/* Green bundles over one period. On TG_NON_CONVERGENCE *out holds the last iterates. */
TG_API tg_status tg_green_periodic(const tg_twist* t, const tg_orbit* o, int k_max, double tol, tg_green** out);
TG_API void tg_green_free(tg_green* g);
TG_API size_t tg_green_size(const tg_green* g);
TG_API int tg_green_k_used(const tg_green* g);
TG_API int tg_green_converged(const tg_green* g);
TG_API tg_status tg_green_slopes(const tg_green* g, size_t i, double* s_minus, double* s_plus);
TG_API tg_status tg_green_exponent_sum(const tg_green* g, double* out);
/* Uniform weights and the default eigenvalue threshold. */
TG_API tg_status tg_green_lower_bound(const tg_green* g, double* bound_qplus, double* bound_conorm);

/* Spectrum of the periodic tangent cocycle; exponents receives 2 * dim values,
 * descending. zero_threshold < 0 selects the default. */
TG_API tg_status tg_lyapunov_periodic(const tg_twist* t, const tg_orbit* o, long n, long transient,
                                      double zero_threshold, double* exponents);

/* ---- Tonelli Hamiltonians ---- */

/* H = p^2 / 2 + (c^2 / 4 pi^2) cos(2 pi q). */
TG_API tg_status tg_hamiltonian_pendulum(double c, tg_hamiltonian** out);
TG_API tg_status tg_hamiltonian_flat(int dim, tg_hamiltonian** out);
/* H = |p|^2 / 2 + V(q), V as in tg_twist_trig. */
TG_API tg_status tg_hamiltonian_mechanical(int dim, size_t n_terms, const int* waves, const double* amplitudes,
                                           const double* phases, tg_hamiltonian** out);
TG_API void tg_hamiltonian_free(tg_hamiltonian* h);
TG_API int tg_hamiltonian_dim(const tg_hamiltonian* h);

/* Slopes of G- (s) and G+ (u) at (q, p). The convergence estimate is written
 * even when the call returns TG_NON_CONVERGENCE. */
TG_API tg_status tg_green_flow(const tg_hamiltonian* h, const double* q, const double* p, double t_warm, double tol,
                               double* s, double* u, double* estimate);
TG_API tg_status tg_lyapunov_flow(const tg_hamiltonian* h, const double* q, const double* p, double t,
                                  double transient, double* exponents);
/* 1/2 average of tr(H_pp (U - S)) over `samples` points spanning `window`. */
TG_API tg_status tg_flow_exponent_sum(const tg_hamiltonian* h, const double* q, const double* p, double window,
                                      int samples, double t_warm, double* out);

#ifdef __cplusplus
}
#endif

#endif
