#ifndef HIV_LATENCY_H
#define HIV_LATENCY_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum HivEquilibrium {
  HIV_EQUILIBRIUM_NON_INFECTIVE = 0,
  HIV_EQUILIBRIUM_ENDEMIC = 1,
} HivEquilibrium;

typedef enum HivMetric {
  /**
   * Three-compartment model.
   */
  HIV_METRIC_P = 0,
  /**
   * Latent model.
   */
  HIV_METRIC_Q = 1,
} HivMetric;

typedef enum HivStatus {
  HIV_STATUS_OK = 0,
  HIV_STATUS_NULL_POINTER = 1,
  HIV_STATUS_INVALID_ARGUMENT = 2,
  HIV_STATUS_ENDEMIC_ABSENT = 3,
  HIV_STATUS_NUMERIC = 4,
  HIV_STATUS_PANIC = 5,
} HivStatus;

typedef enum HivVerdict {
  HIV_VERDICT_LOCALLY_STABLE = 0,
  HIV_VERDICT_UNSTABLE = 1,
  HIV_VERDICT_MARGINAL = 2,
} HivVerdict;

/**
 * Latent model with fixed therapy.
 */
typedef struct HivModel HivModel;

typedef struct HivTrajectory HivTrajectory;

/**
 * Model constants; rates per day, densities per ml.
 */
typedef struct HivParams {
  double lambda;
  double d_t;
  double d_i;
  double d_v;
  double k;
  double n;
  double p;
  double alpha;
  double d_l;
} HivParams;

typedef struct HivState {
  double t;
  double i;
  double l;
  double v;
} HivState;

typedef struct HivEfficacy {
  double rt;
  double pi;
} HivEfficacy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *hiv_last_error_message(void);

/**
 * Reference parameter set.
 */
struct HivParams hiv_params_table1(void);

/**
 * T = 4e5, I = 0, L = 0, V = 1e5.
 */
struct HivState hiv_default_initials(void);

/**
 * # Safety
 * `params` and `efficacy` must be valid or null; `out` must be writable or null.
 */
enum HivStatus hiv_model_new(const struct HivParams *params,
                             const struct HivEfficacy *efficacy,
                             struct HivModel **out);

/**
 * # Safety
 * `model` must come from [`hiv_model_new`] and not have been freed; null is ignored.
 */
void hiv_model_free(struct HivModel *model);

/**
 * Treated reproduction number of the three-compartment model.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_model_r0(const struct HivModel *model, double *out);

/**
 * Treated reproduction number of the latent model.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_model_r_l(const struct HivModel *model, double *out);

/**
 * Endemic steady state; `HIV_STATUS_ENDEMIC_ABSENT` when `R_L <= 1`.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_model_endemic_state(const struct HivModel *model, struct HivState *out);

/**
 * Local stability of an equilibrium, checked both by Routh–Hurwitz and by
 * the eigenvalues of the Jacobian.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_model_classify(const struct HivModel *model,
                                  enum HivEquilibrium which,
                                  enum HivVerdict *out);

/**
 * Integrates the latent model over `[0, t_max]` with default tolerances.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_simulate(const struct HivModel *model,
                            const struct HivState *initial,
                            double t_max,
                            struct HivTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`hiv_simulate`] and not have been freed; null is ignored.
 */
void hiv_trajectory_free(struct HivTrajectory *traj);

/**
 * Number of stored solver points, including the initial state; 0 for null.
 *
 * # Safety
 * `traj` must be valid or null.
 */
uintptr_t hiv_trajectory_len(const struct HivTrajectory *traj);

/**
 * Stored point `index` and its time.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_trajectory_point(const struct HivTrajectory *traj,
                                    uintptr_t index,
                                    double *time,
                                    struct HivState *state);

/**
 * Dense-output value at time `t`, clamped to the integrated interval.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_trajectory_eval(const struct HivTrajectory *traj,
                                   double t,
                                   struct HivState *out);

/**
 * Days until the viral load first drops to `10^-n` when protease inhibition
 * pins the model's reproduction number at `r`. Writes `INFINITY` when that
 * does not happen within `t_max` days.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum HivStatus hiv_threshold_time(const struct HivParams *params,
                                  const struct HivState *initial,
                                  enum HivMetric metric,
                                  uint32_t n,
                                  double r,
                                  double t_max,
                                  double *out_days);

/**
 * Library version, NUL-terminated.
 */
const char *hiv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HIV_LATENCY_H */
