#pragma once

/// C interface to the vectorized market-making environment.
///
/// Buffers are caller-allocated, contiguous and row-major with one row per
/// trajectory. Functions never throw; they return an mbt_status and record a
/// message retrievable through mbt_last_error() on the calling thread.

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MBT_API __declspec(dllexport)
#else
#define MBT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef uint64_t mbt_handle;

typedef enum mbt_status
{
  MBT_OK = 0,
  MBT_ERROR_CONFIG = 1,
  MBT_ERROR_STALE_HANDLE = 2,
  MBT_ERROR_STATE = 3,
  MBT_ERROR_ARGUMENT = 4,
  MBT_ERROR_NUMERICAL = 5,
  MBT_ERROR_INTERNAL = 6
} mbt_status;

typedef struct mbt_dims
{
  size_t num_trajectories;
  size_t obs_dim;
  size_t action_dim;
  size_t n_steps;
} mbt_dims;

/// Build an environment from TOML text. On success `*handle` is a fresh,
/// never-reused identifier.
MBT_API mbt_status mbt_create(const char *config_toml, mbt_handle *handle);

MBT_API mbt_status mbt_get_dims(mbt_handle handle, mbt_dims *dims);

/// Start the next episode and write num_trajectories x obs_dim observations.
MBT_API mbt_status mbt_reset(mbt_handle handle, double *obs, size_t obs_len);

/// Advance one step. `actions` holds num_trajectories x action_dim values;
/// `rewards` and `dones` hold num_trajectories values each.
MBT_API mbt_status mbt_step(mbt_handle handle, const double *actions, size_t actions_len, double *obs,
                            size_t obs_len, double *rewards, size_t rewards_len, uint8_t *dones, size_t dones_len);

/// Release the environment. A second call reports MBT_ERROR_STALE_HANDLE.
MBT_API mbt_status mbt_destroy(mbt_handle handle);

/// Message of the last failing call on this thread, or "" if none.
MBT_API const char *mbt_last_error(void);

#ifdef __cplusplus
}
#endif
