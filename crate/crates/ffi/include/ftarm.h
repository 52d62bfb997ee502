#ifndef FTARM_H
#define FTARM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FTARM_OBS_DIM 23

#define FTARM_ACTION_DIM 9

#define FTARM_ARM_JOINTS 7

typedef enum FtarmStatus {
  FTARM_STATUS_OK = 0,
  FTARM_STATUS_NULL_POINTER = 1,
  FTARM_STATUS_INVALID_ARGUMENT = 2,
  FTARM_STATUS_CONFIG = 3,
  FTARM_STATUS_IO = 4,
  FTARM_STATUS_CHECKPOINT = 5,
  FTARM_STATUS_EPISODE_DONE = 6,
  FTARM_STATUS_NON_FINITE = 7,
  FTARM_STATUS_PANIC = 8,
  FTARM_STATUS_INTERNAL = 9,
} FtarmStatus;

/**
 * Drawer environment handle.
 */
typedef struct FtarmEnv FtarmEnv;

/**
 * Actor network loaded from a checkpoint.
 */
typedef struct FtarmPolicy FtarmPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in bytes,
 * excluding the terminator.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
size_t ftarm_last_error_message(char *buf, size_t len);

/**
 * Creates an environment. `config_text` holds optional `key = value` lines
 * for environment settings and `fault` an optional scenario string such as
 * `broken:2`; either may be null. The handle is written to `out`.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_env_new(const char *config_text,
                               const char *fault,
                               uint64_t seed,
                               struct FtarmEnv **out);

/**
 * Releases an environment handle.
 *
 * # Safety
 * `env` must be null or a live handle from `ftarm_env_new`; it is invalid
 * afterwards.
 */
void ftarm_env_free(struct FtarmEnv *env);

/**
 * Starts a new episode; writes `FTARM_OBS_DIM` values to `obs_out`.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_env_reset(struct FtarmEnv *env, uint64_t seed, double *obs_out);

/**
 * Applies `FTARM_ACTION_DIM` normalized targets. `obs_out` receives the next
 * observation; `reward_out`, `done_out` and `success_out` may be null.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_env_step(struct FtarmEnv *env,
                                const double *action,
                                double *obs_out,
                                double *reward_out,
                                bool *done_out,
                                bool *success_out);

/**
 * Current drawer opening in meters.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_env_drawer_position(const struct FtarmEnv *env, double *out);

/**
 * Loads the actor (and critic, if present) from a checkpoint file.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_policy_load(const char *path, struct FtarmPolicy **out);

/**
 * Releases a policy handle.
 *
 * # Safety
 * `policy` must be null or a live handle from `ftarm_policy_load`; it is
 * invalid afterwards.
 */
void ftarm_policy_free(struct FtarmPolicy *policy);

/**
 * Deterministic action (policy mean clamped to [-1, 1]) for one
 * observation.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_policy_act(const struct FtarmPolicy *policy,
                                  const double *obs,
                                  double *action_out);

/**
 * End-effector pose of the default arm as a row-major 4x4 homogeneous
 * matrix (16 values).
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_forward_kinematics(const double *joints, double *pose_out);

/**
 * Pseudo-inverse IK on the default arm. `target` is a row-major 4x4
 * homogeneous pose; `locked_joint` < 0 locks nothing. Writes the solution
 * to `joints_out` (7 values); `residual_out` and `converged_out` may be null.
 *
 * # Safety
 * Non-null pointer arguments must be valid for the documented lengths, and
 * handles must be live handles created by this library.
 */
enum FtarmStatus ftarm_ik_solve(const double *initial,
                                const double *target,
                                int32_t locked_joint,
                                double step,
                                double tolerance,
                                uint32_t max_iters,
                                double *joints_out,
                                double *residual_out,
                                bool *converged_out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ftarm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FTARM_H */
