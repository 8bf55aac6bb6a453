#include "mbt/dp_oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mbt/processes.hpp"

namespace mbt
{

  std::vector<double> uniform_grid(double hi, std::size_t count)
  {
    std::vector<double> out(count);
    for ( std::size_t i = 0; i < count; ++i )
      out[i] = count == 1 ? 0.0 : hi * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
  }

  DpSolution dp_solve(const CjParams &p, std::span<const double> depth_grid, std::span<const double> time_grid)
  {
    if ( depth_grid.empty() || time_grid.size() < 2 )
      throw std::invalid_argument("dp_solve: need a non-empty depth grid and at least two time points");
    for ( std::size_t k = 1; k < time_grid.size(); ++k )
      if ( !(time_grid[k] > time_grid[k - 1]) )
        throw std::invalid_argument("dp_solve: time grid must be strictly increasing");

    const int qmax = p.max_inventory;
    const std::size_t n = time_grid.size() - 1;
    const std::size_t m = depth_grid.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    DpSolution s;
    s.times.assign(time_grid.begin(), time_grid.end());
    s.max_inventory = qmax;
    const std::size_t levels = s.levels();
    s.value.assign((n + 1) * levels, 0.0);
    s.depth_bid.assign(n * levels, nan);
    s.depth_ask.assign(n * levels, nan);

    for ( int q = -qmax; q <= qmax; ++q )
      s.value[s.index(n, q)] = -p.terminal_penalty * q * q;

    std::vector<double> fill(m);
    for ( std::size_t j = 0; j < m; ++j )
      fill[j] = std::exp(-p.fill_exponent * depth_grid[j]);

    std::vector<double> pa(m), pb(m), next(levels);
    for ( std::size_t k = n; k-- > 0; ) {
      const double dt = time_grid[k + 1] - time_grid[k];
      const double arrive_bid = arrival_probability(p.lambda_bid, dt);
      const double arrive_ask = arrival_probability(p.lambda_ask, dt);
      // W(q') = reward for landing on q' plus continuation value
      for ( int q = -qmax; q <= qmax; ++q )
        next[static_cast<std::size_t>(q + qmax)] = -p.running_penalty * q * q * dt + s.value[s.index(k + 1, q)];

      for ( int q = -qmax; q <= qmax; ++q ) {
        const auto i = static_cast<std::size_t>(q + qmax);
        const bool can_buy = q < qmax;
        const bool can_sell = q > -qmax;
        const double w_stay = next[i];
        const double w_down = can_sell ? next[i - 1] : w_stay;
        const double w_up = can_buy ? next[i + 1] : w_stay;
        for ( std::size_t j = 0; j < m; ++j ) {
          pa[j] = can_sell ? arrive_ask * fill[j] : 0.0;
          pb[j] = can_buy ? arrive_bid * fill[j] : 0.0;
        }
        // E = W(q) + pa (d_a + W(q-1) - W(q)) + pb (d_b + W(q+1) - W(q))
        //     + pa pb (2 W(q) - W(q-1) - W(q+1))
        const double cross = 2.0 * w_stay - w_down - w_up;
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_b = 0;
        std::size_t best_a = 0;
        const std::size_t bid_count = can_buy ? m : 1;
        const std::size_t ask_count = can_sell ? m : 1;
        for ( std::size_t b = 0; b < bid_count; ++b ) {
          const double bid_term = pb[b] * (depth_grid[b] + w_up - w_stay);
          const double ask_shift = w_down - w_stay + pb[b] * cross;
          for ( std::size_t a = 0; a < ask_count; ++a ) {
            const double e = w_stay + bid_term + pa[a] * (depth_grid[a] + ask_shift);
            if ( e > best ) {
              best = e;
              best_b = b;
              best_a = a;
            }
          }
        }
        s.value[s.index(k, q)] = best;
        if ( can_buy )
          s.depth_bid[s.index(k, q)] = depth_grid[best_b];
        if ( can_sell )
          s.depth_ask[s.index(k, q)] = depth_grid[best_a];
      }
    }
    return s;
  }

} // namespace mbt
