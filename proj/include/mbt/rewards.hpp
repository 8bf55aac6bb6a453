#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace mbt
{

  /// Change in mark-to-market value Y = X + Q S.
  struct PnlReward
  {
  };

  /// Y_T - Y_0 - a Q_T^2 - phi * sum_k Q_k^2 dt (post-step inventory).
  struct RunningInventoryPenalty
  {
    double per_step_inventory_aversion = 0.0;
    double terminal_inventory_aversion = 0.0;
  };

  /// -exp(-gamma (Y_T - Y_0)), paid entirely at the terminal step.
  struct ExponentialUtility
  {
    double risk_aversion = 1.0;
  };

  using RewardSpec = std::variant<PnlReward, RunningInventoryPenalty, ExponentialUtility>;

  /// Cash, inventory and midprice of one trajectory at one instant.
  struct MarkState
  {
    double cash = 0.0;
    double inventory = 0.0;
    double midprice = 0.0;

    double value() const { return cash + inventory * midprice; }
  };

  /// Reward for the transition prev -> next. `initial_value` is Y_0 of the
  /// episode; only the exponential utility reads it.
  double step_reward(const RewardSpec &spec, const MarkState &prev, const MarkState &next, double dt,
                     bool is_terminal, double initial_value);

  /// A complete episode: `states[0]` is the state after reset, `states[k]`
  /// the state after step k.
  struct EpisodeTrace
  {
    std::vector<MarkState> states;
    double dt = 0.0;
    std::size_t n_steps = 0;
  };

  /// The episode functional computed directly from the trace. Throws
  /// std::invalid_argument when the trace does not hold n_steps + 1 states.
  double episode_objective(const RewardSpec &spec, const EpisodeTrace &trace);

} // namespace mbt
