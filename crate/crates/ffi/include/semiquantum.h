#ifndef SEMIQUANTUM_H
#define SEMIQUANTUM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_DOMAIN = 3,
  SQ_STATUS_CONFIG = 4,
  SQ_STATUS_IO = 5,
  SQ_STATUS_RUNTIME = 6,
  SQ_STATUS_OUT_OF_RANGE = 7,
  SQ_STATUS_PANIC = 8,
} SqStatus;

// How an integration ended.
typedef enum SqTermination {
  SQ_TERMINATION_COMPLETED = 0,
  SQ_TERMINATION_ABORTED_SINGULARITY = 1,
  SQ_TERMINATION_ABORTED_STEP_FAILURE = 2,
} SqTermination;

// Opaque scenario handle.
typedef struct SqScenario SqScenario;

// Opaque trajectory handle.
typedef struct SqTrajectory SqTrajectory;

typedef struct SqParams {
  double m;
  double e;
  double hbar;
} SqParams;

// Second moments `<x^2>`, `<p^2>`, `<(xp+px)/2>` of a Gaussian state.
typedef struct SqMoments {
  double x2;
  double p2;
  double c;
} SqMoments;

// Annihilation-operator family `e^{i theta} ((w + i sigma) x + i p) / sqrt(2 hbar w)`.
typedef struct SqBasis {
  double w;
  double sigma;
  double theta;
} SqBasis;

// One time-series row; same fields and order as the CSV columns.
typedef struct SqRecord {
  double t;
  double a;
  double adot;
  double rho;
  double rhodot;
  double omega_eff;
  double omega_eff_dot;
  double omega;
  double omegadot;
  double x2;
  double p2;
  double c;
  double n_ours;
  double n_cdms;
  double dn_leading;
  double hx;
  double etot;
  double corr;
} SqRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *sq_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sq_version(void);

// `omega = sqrt(m^2 + e^2 A^2)` and its time derivative.
//
// # Safety
// Pointers must be null or valid for the duration of the call.
enum SqStatus sq_frequency(const struct SqParams *p,
                           double a,
                           double adot,
                           double *omega,
                           double *omegadot);

// Moments of the vacuum of the invariant basis with effective frequency `Omega`.
//
// # Safety
// `result` must be null or valid for writes.
enum SqStatus sq_vacuum_moments(double omega_eff,
                                double omega_eff_dot,
                                double hbar,
                                struct SqMoments *result);

// `<c^dagger c>` for the operator family `b` in a state with the given moments.
//
// # Safety
// Pointers must be null or valid for the duration of the call.
enum SqStatus sq_quanta_expectation(const struct SqMoments *moments,
                                    const struct SqBasis *b,
                                    double hbar,
                                    double *result);

// Static-basis quanta in the invariant vacuum, from `Omega`, `Omega'` and `omega`.
//
// # Safety
// `result` must be null or valid for writes.
enum SqStatus sq_occupation_closed_form(double omega_eff,
                                        double omega_eff_dot,
                                        double omega,
                                        double *result);

// Exact difference between the static-basis and sheared-basis counts in the
// invariant vacuum.
//
// # Safety
// `result` must be null or valid for writes.
enum SqStatus sq_occupation_difference(double omega_eff,
                                       double omega_eff_dot,
                                       double omega,
                                       double omegadot,
                                       double *result);

// `|alpha|^2` and `|beta|^2` of the map from basis `a` to basis `b`.
//
// # Safety
// Pointers must be null or valid for the duration of the call.
enum SqStatus sq_bogoliubov(const struct SqBasis *a,
                            const struct SqBasis *b,
                            double *alpha2,
                            double *beta2);

// Parses a scenario from `key = value` text.
//
// # Safety
// `text` must be null or a NUL-terminated string; `scenario` null or valid for writes.
enum SqStatus sq_scenario_from_text(const char *text, struct SqScenario **scenario);

// Loads a bundled scenario: `free`, `vacuum-kick`, `adiabatic` or `strong`.
//
// # Safety
// `name` must be null or a NUL-terminated string; `scenario` null or valid for writes.
enum SqStatus sq_scenario_bundled(const char *name, struct SqScenario **scenario);

// Overrides the end time of a scenario.
//
// # Safety
// `scenario` must be null or a live handle.
enum SqStatus sq_scenario_set_t_end(struct SqScenario *scenario, double t_end);

// # Safety
// `scenario` must be null or a live handle; `result` null or valid for writes.
enum SqStatus sq_scenario_params(const struct SqScenario *scenario, struct SqParams *result);

// # Safety
// `scenario` must be null or a handle from this library, freed at most once.
void sq_scenario_free(struct SqScenario *scenario);

// Integrates a scenario. An aborted run still succeeds here; check
// [`sq_trajectory_status`].
//
// # Safety
// `scenario` must be null or a live handle; `trajectory` null or valid for writes.
enum SqStatus sq_integrate(const struct SqScenario *scenario, struct SqTrajectory **trajectory);

// Number of sampled rows; 0 for a null handle.
//
// # Safety
// `trajectory` must be null or a live handle.
size_t sq_trajectory_len(const struct SqTrajectory *trajectory);

// # Safety
// `trajectory` must be null or a live handle; `result` null or valid for writes.
enum SqStatus sq_trajectory_record(const struct SqTrajectory *trajectory,
                                   size_t index,
                                   struct SqRecord *result);

// # Safety
// `trajectory` must be null or a live handle; `result` null or valid for writes.
enum SqStatus sq_trajectory_status(const struct SqTrajectory *trajectory,
                                   enum SqTermination *result);

// Writes the time series as CSV.
//
// # Safety
// `trajectory` must be null or a live handle; `path` null or a NUL-terminated string.
enum SqStatus sq_trajectory_write_csv(const struct SqTrajectory *trajectory, const char *path);

// # Safety
// `trajectory` must be null or a handle from this library, freed at most once.
void sq_trajectory_free(struct SqTrajectory *trajectory);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMIQUANTUM_H */
