#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mbt/cartea_jaimungal.hpp"

namespace mbt
{

  /// Backward induction on the discrete-time market-making MDP the
  /// environment simulates: per step each side sees an order with
  /// probability 1 - exp(-lambda dt), a quote at depth d fills it with
  /// probability exp(-kappa d), inventory is bounded by max_inventory and the
  /// reward is the running/terminal quadratic penalty. Midprice moves drop
  /// out of the expectation (martingale midprice).
  struct DpSolution
  {
    std::vector<double> times;  // decision times t_0 .. t_{n-1}, plus T
    int max_inventory = 0;
    std::vector<double> value;      // (n + 1) x levels
    std::vector<double> depth_bid;  // n x levels, NaN where the bid is suppressed
    std::vector<double> depth_ask;  // n x levels, NaN where the ask is suppressed

    std::size_t levels() const { return static_cast<std::size_t>(2 * max_inventory + 1); }
    std::size_t index(std::size_t k, int q) const { return k * levels() + static_cast<std::size_t>(q + max_inventory); }
  };

  /// `time_grid` must be strictly increasing from 0 to T. Depth pairs are
  /// searched exhaustively over `depth_grid`; ties go to the smallest grid
  /// index (bid index first, then ask).
  DpSolution dp_solve(const CjParams &params, std::span<const double> depth_grid, std::span<const double> time_grid);

  /// `count` evenly spaced depths over [0, hi].
  std::vector<double> uniform_grid(double hi, std::size_t count);

} // namespace mbt
