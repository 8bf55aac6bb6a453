#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mbt/processes.hpp"
#include "mbt/rewards.hpp"

namespace mbt
{

  enum class ActionType
  {
    limit,
    limit_and_market,
    touch,
  };

  std::string_view to_string(ActionType type);
  /// Throws std::invalid_argument for an unknown name.
  ActionType action_type_from_string(std::string_view name);

  /// Number of action components per trajectory: (bid depth, ask depth
  /// [, market buy, market sell]) or (post bid, post ask).
  std::size_t action_dim(ActionType type);

  /// Initial inventory drawn uniformly from the integers in [lo, hi].
  struct InventoryRange
  {
    int lo = 0;
    int hi = 0;
  };

  using InitialInventory = std::variant<int, InventoryRange>;

  inline constexpr int kDefaultMaxInventory = 100;

  struct EnvironmentConfig
  {
    double terminal_time = 1.0;
    int n_steps = 200;
    std::size_t num_trajectories = 1;
    double initial_cash = 0.0;
    InitialInventory initial_inventory = 0;
    int max_inventory = kDefaultMaxInventory;
    ArrivalSpec arrival = PoissonArrival{};
    MidpriceSpec midprice = BrownianMidprice{};
    FillSpec fill = ExponentialFill{};
    ActionType action_type = ActionType::limit;
    double minimum_tick_size = 0.0;
    RewardSpec reward = PnlReward{};
    std::uint64_t master_seed = 0;
    /// When false the observation carries only cash, inventory, time and midprice.
    bool observe_auxiliaries = true;

    double step_size() const { return terminal_time / n_steps; }
  };

  /// Every violated constraint, one message each; empty when valid.
  std::vector<std::string> validation_errors(const EnvironmentConfig &config);

  /// Throws ConfigError listing every violated constraint.
  void validate(const EnvironmentConfig &config);

  /// The benchmark used throughout the tests: Poisson arrivals at 140/unit
  /// time per side, Brownian midprice (S0 = 100, sigma = 2), exponential fills
  /// with kappa = 1.5, running inventory penalty phi = 0.5, a = 1, inventory
  /// bound 10, T = 1 over 200 steps.
  EnvironmentConfig cj_benchmark_config(std::size_t num_trajectories = 1000, std::uint64_t seed = 0);

} // namespace mbt
