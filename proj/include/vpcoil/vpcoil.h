/* Public C interface of the coil-current schedule solver.
 *
 * The library steers a collisionless charge cloud with a fixed set of
 * external coils: it simulates the regularized characteristic flow, solves
 * the adjoint system, optimizes bounded per-coil current schedules against a
 * desired final density, and runs the first- and second-order optimality
 * check suites. All heavy state lives behind the opaque scenario handle;
 * every call reports failure through a negative status code and a
 * thread-local message.
 */
#ifndef VPCOIL_H
#define VPCOIL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef VP_API
#if defined(_WIN32)
#define VP_API __declspec(dllexport)
#else
#define VP_API __attribute__((visibility("default")))
#endif
#endif

typedef enum vp_status {
  VP_OK = 0,
  VP_ERR_INVALID = -1,   /* bad parameters or validation failure */
  VP_ERR_IO = -2,        /* file access or parse problem */
  VP_ERR_NUMERICAL = -3, /* blow-up, singular system, failed line search */
  VP_ERR_STATE = -4,     /* operation sequencing */
  VP_ERR_INTERNAL = -5   /* unexpected condition */
} vp_status;

/* opaque problem instance: coils, initial and desired densities, control
 * space, discretization, check parameters */
typedef struct vp_scenario vp_scenario;

/* message for the calling thread's most recent failure; never NULL */
VP_API const char* vp_last_error(void);

VP_API const char* vp_version(void);

/* bound internal parallelism; n <= 0 selects the hardware count. Returns
 * the effective worker count. Results do not depend on it. */
VP_API int vp_set_workers(int n);

/* ---- scenario lifecycle ---- */

/* parse + validate a config file (sections [coils] [initial] [target]
 * [control] [discretization] [tolerances]) */
VP_API vp_status vp_scenario_load(const char* path, vp_scenario** out);

/* the built-in instance: mirror loop pair, centered unit bump, stored
 * generating control as the desired state */
VP_API vp_status vp_scenario_default(vp_scenario** out);

/* canonical re-emission; loading the written file reproduces the scenario */
VP_API vp_status vp_scenario_save(const vp_scenario* sc, const char* path);

/* override the seed used by every randomized check in later runs */
VP_API vp_status vp_scenario_set_seed(vp_scenario* sc, uint64_t seed);

VP_API void vp_scenario_free(vp_scenario* sc);

/* ---- run drivers ----
 *
 * Artifacts are written into out_dir (created if missing); report lines
 * mirror to stdout. exit_code (may be NULL) receives the suggested process
 * exit status: 0 when every gate in the run passed, 1 otherwise. The return
 * value only signals errors in performing the run itself. */

/* field table on a uniform grid over [box_lo, box_hi] plus per-coil norm
 * and source-freeness report */
VP_API vp_status vp_run_fields(const char* coil_file, const double box_lo[3],
                               const double box_hi[3], double spacing,
                               int n_samples, uint64_t seed,
                               const char* out_dir, int* exit_code);

/* forward run of the scenario's start control with transport diagnostics */
VP_API vp_status vp_run_simulate(const vp_scenario* sc, const char* out_dir,
                                 int* exit_code);

/* solve for the optimal schedules; use_fixed_point selects the projection
 * fixed-point iteration instead of projected descent */
VP_API vp_status vp_run_optimize(const vp_scenario* sc, int use_fixed_point,
                                 const char* out_dir, int* exit_code);

/* the full verification suite (transport, adjoint, first-order conditions) */
VP_API vp_status vp_run_verify(const vp_scenario* sc, const char* out_dir,
                               int* exit_code);

/* multistart cross-agreement probe for the computed optimum */
VP_API vp_status vp_run_probe_uniqueness(const vp_scenario* sc,
                                         const char* out_dir, int* exit_code);

/* sampled second-order condition on the critical cone at the optimum */
VP_API vp_status vp_run_ssc(const vp_scenario* sc, const char* out_dir,
                            int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* VPCOIL_H */
