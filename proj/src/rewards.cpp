#include "mbt/rewards.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mbt
{

  double step_reward(const RewardSpec &spec, const MarkState &prev, const MarkState &next, double dt,
                     bool is_terminal, double initial_value)
  {
    if ( const auto *p = std::get_if<RunningInventoryPenalty>(&spec) ) {
      double r = next.value() - prev.value() - p->per_step_inventory_aversion * next.inventory * next.inventory * dt;
      if ( is_terminal )
        r -= p->terminal_inventory_aversion * next.inventory * next.inventory;
      return r;
    }
    if ( const auto *u = std::get_if<ExponentialUtility>(&spec) ) {
      if ( !is_terminal )
        return 0.0;
      return -std::exp(-u->risk_aversion * (next.value() - initial_value));
    }
    return next.value() - prev.value();
  }

  double episode_objective(const RewardSpec &spec, const EpisodeTrace &trace)
  {
    if ( trace.n_steps == 0 || trace.states.size() != trace.n_steps + 1 )
      throw std::invalid_argument("incomplete trajectory: expected " + std::to_string(trace.n_steps + 1) +
                                  " states, got " + std::to_string(trace.states.size()));
    const double pnl = trace.states.back().value() - trace.states.front().value();
    if ( const auto *p = std::get_if<RunningInventoryPenalty>(&spec) ) {
      double running = 0.0;
      for ( std::size_t k = 1; k < trace.states.size(); ++k )
        running += trace.states[k].inventory * trace.states[k].inventory * trace.dt;
      const double q_final = trace.states.back().inventory;
      return pnl - p->terminal_inventory_aversion * q_final * q_final - p->per_step_inventory_aversion * running;
    }
    if ( const auto *u = std::get_if<ExponentialUtility>(&spec) )
      return -std::exp(-u->risk_aversion * pnl);
    return pnl;
  }

} // namespace mbt
