#ifndef REPCUT_H
#define REPCUT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RepcutStatus {
  REPCUT_STATUS_OK = 0,
  REPCUT_STATUS_NULL_POINTER = 1,
  REPCUT_STATUS_INVALID_INPUT = 2,
  REPCUT_STATUS_COMPUTATION_FAILED = 3,
  REPCUT_STATUS_PANIC = 4,
} RepcutStatus;

/*
 Opaque model handle.
 */
typedef struct RepcutScenario RepcutScenario;

typedef struct RepcutSolution {
  /*
   Canonical cutoff; `±inf` at a corner.
   */
  double cutoff;
  double pi_success;
  double pi_failure;
  double pi_safe;
  double success_prob_at_cutoff;
  double experimentation_rate;
  double residual;
  uint32_t n_roots;
  bool interior;
  bool off_path;
} RepcutSolution;

typedef struct RepcutCalibration {
  double rho_star;
  double cutoff;
  double p_h;
  double beta1;
  bool ll_violation;
} RepcutCalibration;

typedef struct RepcutSimulation {
  double cutoff;
  uint64_t n_episodes;
  double rate_high;
  double post_success;
  double martingale;
  /*
   Largest |z| across the analytic-vs-empirical checks.
   */
  double max_abs_z;
} RepcutSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Baseline model `(0, 1, 1, 1.7)`, `α = π = 0.5`, `V = π²`, no transfers.
 */
struct RepcutScenario *repcut_scenario_baseline(void);

/*
 Build a power-payoff scenario. `*out` is set only on success.

 # Safety
 `out` must be null or point to writable storage for one pointer.
 */
enum RepcutStatus repcut_scenario_new(double mu0,
                                      double mu1,
                                      double sigma_h,
                                      double sigma_l,
                                      double pi,
                                      double alpha,
                                      double k,
                                      struct RepcutScenario **out);

/*
 # Safety
 `scenario` must be null or a handle from this library not yet freed.
 */
void repcut_scenario_free(struct RepcutScenario *scenario);

/*
 # Safety
 `scenario` must be null or a live handle.
 */
enum RepcutStatus repcut_scenario_set_beliefs(struct RepcutScenario *scenario,
                                              double pi,
                                              double alpha);

/*
 # Safety
 `scenario` must be null or a live handle.
 */
enum RepcutStatus repcut_scenario_set_payoff_power(struct RepcutScenario *scenario,
                                                   double k,
                                                   double phi,
                                                   double kappa);

/*
 # Safety
 `scenario` must be null or a live handle.
 */
enum RepcutStatus repcut_scenario_set_transfers(struct RepcutScenario *scenario,
                                                double beta1,
                                                double beta0,
                                                bool limited_liability);

/*
 # Safety
 `scenario` must be null or a live handle.
 */
enum RepcutStatus repcut_scenario_set_frictions(struct RepcutScenario *scenario,
                                                double lambda,
                                                double eps,
                                                double eta);

/*
 # Safety
 `scenario` must be null or a live handle; `out` null or writable.
 */
enum RepcutStatus repcut_solve(const struct RepcutScenario *scenario, struct RepcutSolution *out);

/*
 Implementing bonus for a target high-type experimentation rate. The
 handle's own transfers are ignored.

 # Safety
 `scenario` must be null or a live handle; `out` null or writable.
 */
enum RepcutStatus repcut_calibrate(const struct RepcutScenario *scenario,
                                   double rho_star,
                                   struct RepcutCalibration *out);

/*
 Simulate `episodes` draws at `cutoff`, or at the equilibrium cutoff when
 `cutoff` is NaN. Deterministic in `seed`.

 # Safety
 `scenario` must be null or a live handle; `out` null or writable.
 */
enum RepcutStatus repcut_simulate(const struct RepcutScenario *scenario,
                                  double cutoff,
                                  uint64_t episodes,
                                  uint64_t seed,
                                  struct RepcutSimulation *out);

/*
 Probability that `member`'s yes vote is pivotal for a `k`-of-`n` vote in
 state `omega` (0 or 1). `yes_bad[i]` and `yes_good[i]` are member `i`'s
 yes probabilities in the bad and good state.

 # Safety
 `yes_bad` and `yes_good` must each be null or point to `n` readable
 doubles; `out` null or writable.
 */
enum RepcutStatus repcut_pivotality(size_t k,
                                    size_t n,
                                    const double *yes_bad,
                                    const double *yes_good,
                                    size_t member,
                                    uint32_t omega,
                                    double *out);

/*
 Standard normal CDF.
 */
double repcut_normal_cdf(double x);

/*
 Message for the last failed call on this thread, or null. Valid until the
 next library call on the same thread.
 */
const char *repcut_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *repcut_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPCUT_H */
