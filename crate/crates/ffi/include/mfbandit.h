#ifndef MFBANDIT_H
#define MFBANDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum MfbStatus {
  MFB_STATUS_OK = 0,
  MFB_STATUS_NULL_POINTER = 1,
  MFB_STATUS_INVALID_UTF8 = 2,
  MFB_STATUS_INVALID_CONFIG = 3,
  MFB_STATUS_INVALID_ARGUMENT = 4,
  MFB_STATUS_NUMERICAL = 5,
  MFB_STATUS_NOT_CONVERGED = 6,
  MFB_STATUS_IO = 7,
  MFB_STATUS_BUFFER_TOO_SMALL = 8,
  MFB_STATUS_PANIC = 9,
} MfbStatus;

// Reward family for [`mfb_contraction_check`].
typedef enum MfbReward {
  MFB_REWARD_GENERAL = 0,
  MFB_REWARD_LINEAR = 1,
} MfbReward;

// A validated game configuration.
typedef struct MfbConfig MfbConfig;

// The record of one simulated run.
typedef struct MfbTrace MfbTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next failing call.
const char *mfb_last_error_message(void);

// Parses and validates a TOML config.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a writable pointer.
enum MfbStatus mfb_config_from_toml(const char *toml, struct MfbConfig **out);

// Loads and validates a TOML config file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum MfbStatus mfb_config_load(const char *path, struct MfbConfig **out);

// Releases a config. Null is ignored.
//
// # Safety
// `config` must come from this library and not be used afterwards.
void mfb_config_free(struct MfbConfig *config);

// Replaces the master seed.
//
// # Safety
// `config` must be a live handle.
enum MfbStatus mfb_config_set_seed(struct MfbConfig *config, uint64_t seed);

// Replaces the horizon.
//
// # Safety
// `config` must be a live handle.
enum MfbStatus mfb_config_set_horizon(struct MfbConfig *config, size_t horizon);

// Writes the number of agents and arms.
//
// # Safety
// `config` must be a live handle; output pointers may be null.
enum MfbStatus mfb_config_shape(const struct MfbConfig *config,
                                size_t *num_agents,
                                size_t *num_arms);

// Simulates one run.
//
// # Safety
// `config` must be a live handle and `out` a writable pointer.
enum MfbStatus mfb_run(const struct MfbConfig *config, struct MfbTrace **out);

// Releases a trace. Null is ignored.
//
// # Safety
// `trace` must come from this library and not be used afterwards.
void mfb_trace_free(struct MfbTrace *trace);

// Mean empirical regret over agents.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum MfbStatus mfb_trace_mean_regret(const struct MfbTrace *trace, double *out);

// Cumulative reward per agent.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum MfbStatus mfb_trace_cumulative_reward(const struct MfbTrace *trace, double *out);

// Copies the terminal state, row-major by agent, into `out`.
//
// # Safety
// `trace` must be a live handle and `out` must hold `len` doubles.
enum MfbStatus mfb_trace_terminal_state(const struct MfbTrace *trace, double *out, size_t len);

// Writes the CSV trace files into `dir`. A zero `moving_average` disables the smoothed column.
//
// # Safety
// `trace` must be a live handle and `dir` a NUL-terminated string.
enum MfbStatus mfb_trace_write(const struct MfbTrace *trace,
                               const char *dir,
                               size_t moving_average);

// Solves for the mean-field equilibrium from the given start index.
//
// The state is written even when the solver does not converge, in which case
// the status is `NotConverged`.
//
// # Safety
// `config` must be a live handle, `out` must hold `len` doubles; `residual`
// and `iterations` may be null.
enum MfbStatus mfb_solve_mfe(const struct MfbConfig *config,
                             uint64_t start,
                             double *out,
                             size_t len,
                             double *residual,
                             size_t *iterations);

// Evaluates the sufficient contraction condition for a homogeneous game.
//
// # Safety
// Output pointers may be null.
enum MfbStatus mfb_contraction_check(enum MfbReward reward,
                                     double theta,
                                     double beta,
                                     double eta,
                                     double *constant,
                                     bool *satisfied);

// Hedge probabilities for one agent's state row.
//
// # Safety
// `state` must hold `len` doubles and `out` must have room for `len`.
enum MfbStatus mfb_hedge_probabilities(const double *state,
                                       size_t len,
                                       double beta,
                                       double eta,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFBANDIT_H */
