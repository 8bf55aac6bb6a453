#include "mbt/mbt.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "mbt/config_io.hpp"
#include "mbt/environment.hpp"
#include "mbt/errors.hpp"

namespace
{
  thread_local std::string last_error;

  /// Live environments keyed by handle. Handles are never reused.
  class Registry
  {
  public:
    mbt_handle add(std::shared_ptr<mbt::Environment> env)
    {
      std::lock_guard lock(mutex_);
      const mbt_handle id = ++next_;
      envs_.emplace(id, std::move(env));
      return id;
    }

    std::shared_ptr<mbt::Environment> find(mbt_handle id)
    {
      std::lock_guard lock(mutex_);
      auto it = envs_.find(id);
      return it == envs_.end() ? nullptr : it->second;
    }

    bool remove(mbt_handle id)
    {
      std::lock_guard lock(mutex_);
      return envs_.erase(id) == 1;
    }

  private:
    std::mutex mutex_;
    mbt_handle next_ = 0;
    std::unordered_map<mbt_handle, std::shared_ptr<mbt::Environment>> envs_;
  };

  Registry &registry()
  {
    static Registry r;
    return r;
  }

  mbt_status fail(mbt_status status, std::string message)
  {
    last_error = std::move(message);
    return status;
  }

  mbt_status stale(mbt_handle h)
  {
    return fail(MBT_ERROR_STALE_HANDLE, "handle " + std::to_string(h) + " is not a live environment");
  }

  template <class F>
  mbt_status guarded(F &&body)
  {
    try {
      last_error.clear();
      return body();
    } catch ( const mbt::ConfigError &e ) {
      return fail(MBT_ERROR_CONFIG, e.what());
    } catch ( const mbt::StateError &e ) {
      return fail(MBT_ERROR_STATE, e.what());
    } catch ( const mbt::NumericalError &e ) {
      return fail(MBT_ERROR_NUMERICAL, e.what());
    } catch ( const std::invalid_argument &e ) {
      return fail(MBT_ERROR_ARGUMENT, e.what());
    } catch ( const std::out_of_range &e ) {
      return fail(MBT_ERROR_ARGUMENT, e.what());
    } catch ( const std::exception &e ) {
      return fail(MBT_ERROR_INTERNAL, e.what());
    } catch ( ... ) {
      return fail(MBT_ERROR_INTERNAL, "unknown exception");
    }
  }

  mbt_status check_len(const char *what, const void *ptr, size_t got, size_t expected)
  {
    if ( !ptr )
      return fail(MBT_ERROR_ARGUMENT, std::string(what) + " buffer is null");
    if ( got != expected )
      return fail(MBT_ERROR_ARGUMENT, std::string(what) + " buffer has " + std::to_string(got) + " elements, expected " +
                                          std::to_string(expected));
    return MBT_OK;
  }
} // namespace

extern "C" {

mbt_status mbt_create(const char *config_toml, mbt_handle *handle)
{
  return guarded([&] {
    if ( !config_toml || !handle )
      return fail(MBT_ERROR_ARGUMENT, "config text and handle pointer must be non-null");
    auto rc = mbt::parse_config(config_toml, "config");
    *handle = registry().add(std::make_shared<mbt::Environment>(rc.env));
    return MBT_OK;
  });
}

mbt_status mbt_get_dims(mbt_handle handle, mbt_dims *dims)
{
  return guarded([&] {
    auto env = registry().find(handle);
    if ( !env )
      return stale(handle);
    if ( !dims )
      return fail(MBT_ERROR_ARGUMENT, "dims pointer is null");
    dims->num_trajectories = env->width();
    dims->obs_dim = env->obs_dim();
    dims->action_dim = env->action_dim();
    dims->n_steps = static_cast<size_t>(env->config().n_steps);
    return MBT_OK;
  });
}

mbt_status mbt_reset(mbt_handle handle, double *obs, size_t obs_len)
{
  return guarded([&] {
    auto env = registry().find(handle);
    if ( !env )
      return stale(handle);
    if ( auto s = check_len("observation", obs, obs_len, env->width() * env->obs_dim()); s != MBT_OK )
      return s;
    const auto o = env->reset();
    std::copy(o.begin(), o.end(), obs);
    return MBT_OK;
  });
}

mbt_status mbt_step(mbt_handle handle, const double *actions, size_t actions_len, double *obs, size_t obs_len,
                    double *rewards, size_t rewards_len, uint8_t *dones, size_t dones_len)
{
  return guarded([&] {
    auto env = registry().find(handle);
    if ( !env )
      return stale(handle);
    const size_t n = env->width();
    if ( auto s = check_len("action", actions, actions_len, n * env->action_dim()); s != MBT_OK )
      return s;
    if ( auto s = check_len("observation", obs, obs_len, n * env->obs_dim()); s != MBT_OK )
      return s;
    if ( auto s = check_len("reward", rewards, rewards_len, n); s != MBT_OK )
      return s;
    if ( auto s = check_len("done", dones, dones_len, n); s != MBT_OK )
      return s;
    const auto view = env->step(std::span<const double>(actions, actions_len));
    std::copy(view.observations.begin(), view.observations.end(), obs);
    std::copy(view.rewards.begin(), view.rewards.end(), rewards);
    std::copy(view.done.begin(), view.done.end(), dones);
    return MBT_OK;
  });
}

mbt_status mbt_destroy(mbt_handle handle)
{
  return guarded([&] { return registry().remove(handle) ? MBT_OK : stale(handle); });
}

const char *mbt_last_error(void) { return last_error.c_str(); }

} // extern "C"
