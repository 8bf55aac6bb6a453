#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <random>
#include <string>
#include <thread>

#include "mbt/config_io.hpp"
#include "mbt/environment.hpp"
#include "mbt/mbt.h"

namespace
{
  std::string benchmark_text(std::size_t n)
  {
    return "[env]\nterminal_time = 1.0\nn_steps = 200\nnum_trajectories = " + std::to_string(n) +
           "\ninitial_inventory = 0\nmax_inventory = 10\naction_type = \"limit\"\nseed = 7\n"
           "[arrival]\nmodel = \"poisson\"\nlambda_bid = 140.0\nlambda_ask = 140.0\n"
           "[midprice]\nmodel = \"brownian\"\ninitial_price = 100.0\nvolatility = 2.0\n"
           "[fill]\nmodel = \"exponential\"\nfill_exponent = 1.5\n"
           "[reward]\ntype = \"running_inventory_penalty\"\nper_step_inventory_aversion = 0.5\n"
           "terminal_inventory_aversion = 1.0\n";
  }

  struct Buffers
  {
    std::vector<double> obs, actions, rewards;
    std::vector<std::uint8_t> done;

    explicit Buffers(const mbt_dims &d)
        : obs(d.num_trajectories * d.obs_dim), actions(d.num_trajectories * d.action_dim),
          rewards(d.num_trajectories), done(d.num_trajectories)
    {
    }

    mbt_status step(mbt_handle h)
    {
      return mbt_step(h, actions.data(), actions.size(), obs.data(), obs.size(), rewards.data(), rewards.size(),
                      done.data(), done.size());
    }
  };

  mbt_handle create(const std::string &text)
  {
    mbt_handle h = 0;
    REQUIRE(mbt_create(text.c_str(), &h) == MBT_OK);
    return h;
  }

  bool same_bits(std::span<const double> a, const std::vector<double> &b)
  {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), b.size() * sizeof(double)) == 0;
  }
} // namespace

TEST_CASE("C API matches the native environment bit for bit")
{
  for ( std::size_t n : {std::size_t{1}, std::size_t{1000}} ) {
    CAPTURE(n);
    const auto text = benchmark_text(n);
    const mbt_handle h = create(text);
    mbt_dims d{};
    REQUIRE(mbt_get_dims(h, &d) == MBT_OK);
    CHECK(d.num_trajectories == n);
    CHECK(d.obs_dim == 4);
    CHECK(d.action_dim == 2);
    CHECK(d.n_steps == 200);

    mbt::Environment native(mbt::parse_config(text).env);
    Buffers buf(d);
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for ( int episode = 0; episode < 2; ++episode ) {
      REQUIRE(mbt_reset(h, buf.obs.data(), buf.obs.size()) == MBT_OK);
      CHECK(same_bits(native.reset(), buf.obs));
      bool identical = true;
      for ( std::size_t k = 0; k < d.n_steps; ++k ) {
        for ( auto &a : buf.actions )
          a = u(rng);
        REQUIRE(buf.step(h) == MBT_OK);
        const auto view = native.step(buf.actions);
        identical = identical && same_bits(view.observations, buf.obs) && same_bits(view.rewards, buf.rewards) &&
                    std::equal(view.done.begin(), view.done.end(), buf.done.begin());
      }
      CHECK(identical);
      CHECK(buf.done[0] == 1);
    }
    CHECK(mbt_destroy(h) == MBT_OK);
  }
}

TEST_CASE("stale handles")
{
  const mbt_handle h = create(benchmark_text(2));
  CHECK(mbt_destroy(h) == MBT_OK);
  CHECK(mbt_destroy(h) == MBT_ERROR_STALE_HANDLE);
  CHECK(std::string(mbt_last_error()).find("not a live environment") != std::string::npos);
  double obs[14];
  CHECK(mbt_reset(h, obs, 14) == MBT_ERROR_STALE_HANDLE);
  CHECK(mbt_destroy(0) == MBT_ERROR_STALE_HANDLE);
  // A new environment never reuses the old identifier.
  const mbt_handle g = create(benchmark_text(2));
  CHECK(g != h);
  CHECK(mbt_reset(h, obs, 14) == MBT_ERROR_STALE_HANDLE);
  CHECK(mbt_destroy(g) == MBT_OK);
}

TEST_CASE("lifecycle errors")
{
  const mbt_handle h = create("[env]\nnum_trajectories = 2\nn_steps = 3\n");
  mbt_dims d{};
  REQUIRE(mbt_get_dims(h, &d) == MBT_OK);
  Buffers buf(d);
  CHECK(buf.step(h) == MBT_ERROR_STATE);
  REQUIRE(mbt_reset(h, buf.obs.data(), buf.obs.size()) == MBT_OK);
  for ( int k = 0; k < 3; ++k )
    REQUIRE(buf.step(h) == MBT_OK);
  CHECK(buf.step(h) == MBT_ERROR_STATE);
  CHECK(std::string(mbt_last_error()).size() > 0);
  REQUIRE(mbt_reset(h, buf.obs.data(), buf.obs.size()) == MBT_OK);
  CHECK(std::string(mbt_last_error()).empty());
  CHECK(buf.step(h) == MBT_OK);
  CHECK(mbt_destroy(h) == MBT_OK);
}

TEST_CASE("buffer arguments are checked")
{
  const mbt_handle h = create(benchmark_text(4));
  mbt_dims d{};
  REQUIRE(mbt_get_dims(h, &d) == MBT_OK);
  Buffers buf(d);
  CHECK(mbt_reset(h, buf.obs.data(), buf.obs.size() - 1) == MBT_ERROR_ARGUMENT);
  CHECK(mbt_reset(h, nullptr, buf.obs.size()) == MBT_ERROR_ARGUMENT);
  REQUIRE(mbt_reset(h, buf.obs.data(), buf.obs.size()) == MBT_OK);
  CHECK(mbt_step(h, buf.actions.data(), buf.actions.size() + 1, buf.obs.data(), buf.obs.size(), buf.rewards.data(),
                 buf.rewards.size(), buf.done.data(), buf.done.size()) == MBT_ERROR_ARGUMENT);
  CHECK(std::string(mbt_last_error()).find("action") != std::string::npos);
  CHECK(mbt_step(h, buf.actions.data(), buf.actions.size(), buf.obs.data(), buf.obs.size(), buf.rewards.data(), 3,
                 buf.done.data(), buf.done.size()) == MBT_ERROR_ARGUMENT);
  CHECK(mbt_get_dims(h, nullptr) == MBT_ERROR_ARGUMENT);
  CHECK(mbt_destroy(h) == MBT_OK);
}

TEST_CASE("invalid configs")
{
  mbt_handle h = 99;
  CHECK(mbt_create("[env]\nn_steps = 0\n", &h) == MBT_ERROR_CONFIG);
  CHECK(std::string(mbt_last_error()).find("config:2:") != std::string::npos);
  CHECK(mbt_create("[env\n", &h) == MBT_ERROR_CONFIG);
  CHECK(mbt_create(nullptr, &h) == MBT_ERROR_ARGUMENT);
  CHECK(mbt_create("[env]\n", nullptr) == MBT_ERROR_ARGUMENT);
  CHECK(h == 99);
}

TEST_CASE("last error is per thread")
{
  mbt_handle h = 0;
  CHECK(mbt_create("[env]\nn_steps = 0\n", &h) == MBT_ERROR_CONFIG);
  std::string other = "unset";
  std::thread([&] { other = mbt_last_error(); }).join();
  CHECK(other.empty());
  CHECK(std::string(mbt_last_error()).size() > 0);
}
