#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbt/config.hpp"
#include "mbt/processes.hpp"
#include "mbt/random.hpp"

namespace mbt
{

  struct FieldDescriptor
  {
    std::string name;
    std::size_t index;
    std::string units;
  };

  /// Observation columns for a config: cash, inventory, time, midprice, then
  /// alpha (drift models) and lambda_bid, lambda_ask (Hawkes arrivals) unless
  /// auxiliaries are masked.
  std::vector<FieldDescriptor> observation_layout(const EnvironmentConfig &config);

  /// Index of the named column; throws std::invalid_argument if absent.
  std::size_t field_index(std::span<const FieldDescriptor> layout, std::string_view name);

  /// Per-trajectory event record of the last step. Execution prices are NaN
  /// on sides without a limit fill.
  struct StepInfo
  {
    std::vector<std::uint8_t> arrival_bid;
    std::vector<std::uint8_t> arrival_ask;
    std::vector<std::uint8_t> fill_bid;
    std::vector<std::uint8_t> fill_ask;
    std::vector<std::uint8_t> market_buy;
    std::vector<std::uint8_t> market_sell;
    std::vector<double> exec_price_bid;
    std::vector<double> exec_price_ask;

    void resize(std::size_t n);
  };

  struct StepView
  {
    std::span<const double> observations; // row-major, width x obs_dim
    std::span<const double> rewards;
    std::span<const std::uint8_t> done;
    const StepInfo &info;
  };

  struct AdmissibleOrders
  {
    bool bid_fill;
    bool ask_fill;
    bool market_buy;
    bool market_sell;
  };

  /// Suppress executions that would take |Q| past `max_inventory`. Buy-side
  /// units (bid fill, then market buy) are admitted while Q + buys stays within
  /// the bound, sell-side units likewise, both measured from `inventory`.
  AdmissibleOrders inventory_guard(int inventory, int max_inventory, AdmissibleOrders proposed);

  /// Batch-vectorized trading environment with gym-style reset/step.
  ///
  /// Trajectory slot i draws exclusively from random substream
  /// `first_stream + i`, so a width-N environment reproduces N width-1
  /// environments constructed with `first_stream = 0..N-1`.
  class Environment
  {
  public:
    /// Throws ConfigError on an invalid config.
    explicit Environment(EnvironmentConfig config, std::size_t first_stream = 0);

    /// Start the next episode (0, 1, 2, ... on successive calls).
    std::span<const double> reset();
    /// Start the given episode; the random streams depend only on
    /// (master_seed, episode, stream index).
    std::span<const double> reset(std::uint64_t episode);

    /// Advance every trajectory one step. `actions` is row-major
    /// width x action_dim. Throws StateError before reset or after the last
    /// step and std::invalid_argument for a malformed action buffer.
    StepView step(std::span<const double> actions);

    const EnvironmentConfig &config() const { return config_; }
    std::size_t width() const { return config_.num_trajectories; }
    std::size_t obs_dim() const { return layout_.size(); }
    std::size_t action_dim() const { return mbt::action_dim(config_.action_type); }
    const std::vector<FieldDescriptor> &layout() const { return layout_; }
    double dt() const { return dt_; }
    double max_depth() const { return max_depth_; }

    bool started() const { return started_; }
    bool finished() const { return step_index_ == config_.n_steps; }
    int step_index() const { return step_index_; }
    double time() const { return time_; }
    std::uint64_t episode() const { return episode_; }

    std::span<const double> observations() const { return observations_; }
    std::span<const double> cash() const { return cash_; }
    std::span<const int> inventory() const { return inventory_; }
    std::span<const double> midprice() const { return midprice_.price(); }
    std::span<const double> initial_value() const { return initial_value_; }
    const StepInfo &info() const { return info_; }
    const ArrivalProcess &arrivals() const { return arrivals_; }
    const MidpriceProcess &midprice_process() const { return midprice_; }

  private:
    void write_observations();

    EnvironmentConfig config_;
    std::vector<FieldDescriptor> layout_;
    double dt_;
    double max_depth_;
    RandomSource rng_;
    ArrivalProcess arrivals_;
    MidpriceProcess midprice_;

    bool started_ = false;
    int step_index_ = 0;
    double time_ = 0.0;
    std::uint64_t episode_ = 0;
    std::uint64_t next_episode_ = 0;

    std::vector<double> cash_;
    std::vector<int> inventory_;
    std::vector<double> initial_value_;
    std::vector<double> observations_;
    std::vector<double> rewards_;
    std::vector<std::uint8_t> done_;
    StepInfo info_;

    std::vector<double> depth_bid_;
    std::vector<double> depth_ask_;
    std::vector<double> prev_midprice_;
    std::vector<double> prev_cash_;
    std::vector<int> prev_inventory_;
  };

} // namespace mbt
