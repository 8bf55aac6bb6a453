#include "mbt/config.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "mbt/errors.hpp"

namespace mbt
{

  namespace
  {
    std::string join(const std::vector<std::string> &parts)
    {
      std::string out;
      for ( const auto &p : parts ) {
        if ( !out.empty() )
          out += "; ";
        out += p;
      }
      return out;
    }

    void require(std::vector<std::string> &errs, bool ok, std::string message)
    {
      if ( !ok )
        errs.push_back(std::move(message));
    }

    bool positive(double v) { return std::isfinite(v) && v > 0.0; }
    bool nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }
  } // namespace

  ConfigError::ConfigError(std::vector<std::string> problems)
      : std::runtime_error("invalid configuration: " + join(problems)), problems_(std::move(problems))
  {
  }

  std::string_view to_string(ActionType type)
  {
    switch ( type ) {
      case ActionType::limit: return "limit";
      case ActionType::limit_and_market: return "limit_and_market";
      case ActionType::touch: return "touch";
    }
    return "unknown";
  }

  ActionType action_type_from_string(std::string_view name)
  {
    if ( name == "limit" )
      return ActionType::limit;
    if ( name == "limit_and_market" )
      return ActionType::limit_and_market;
    if ( name == "touch" )
      return ActionType::touch;
    throw std::invalid_argument("unknown action type '" + std::string(name) +
                                "' (expected limit, limit_and_market or touch)");
  }

  std::size_t action_dim(ActionType type)
  {
    return type == ActionType::limit_and_market ? 4 : 2;
  }

  std::vector<std::string> validation_errors(const EnvironmentConfig &c)
  {
    std::vector<std::string> errs;
    require(errs, positive(c.terminal_time), "env.terminal_time must be > 0");
    require(errs, c.n_steps >= 1, "env.n_steps must be >= 1");
    require(errs, c.num_trajectories >= 1, "env.num_trajectories must be >= 1");
    require(errs, std::isfinite(c.initial_cash), "env.initial_cash must be finite");
    require(errs, c.max_inventory >= 1, "env.max_inventory must be >= 1");
    require(errs, nonnegative(c.minimum_tick_size), "env.minimum_tick_size must be >= 0");

    if ( const auto *q = std::get_if<int>(&c.initial_inventory) ) {
      require(errs, std::abs(*q) <= c.max_inventory, "env.initial_inventory must satisfy |q| <= max_inventory");
    } else {
      const auto &r = std::get<InventoryRange>(c.initial_inventory);
      require(errs, r.lo <= r.hi, "env.initial_inventory interval must have lo <= hi");
      require(errs, std::abs(r.lo) <= c.max_inventory && std::abs(r.hi) <= c.max_inventory,
              "env.initial_inventory interval must lie within [-max_inventory, max_inventory]");
    }

    if ( c.action_type == ActionType::touch )
      require(errs, c.minimum_tick_size > 0.0, "touch action requires env.minimum_tick_size > 0");

    if ( const auto *p = std::get_if<PoissonArrival>(&c.arrival) ) {
      require(errs, nonnegative(p->lambda_bid), "arrival.lambda_bid must be >= 0");
      require(errs, nonnegative(p->lambda_ask), "arrival.lambda_ask must be >= 0");
    } else {
      const auto &h = std::get<HawkesArrival>(c.arrival);
      require(errs, positive(h.baseline), "arrival.baseline must be > 0");
      require(errs, positive(h.reversion), "arrival.reversion must be > 0");
      require(errs, nonnegative(h.jump), "arrival.jump must be >= 0");
      require(errs, nonnegative(h.initial_intensity), "arrival.initial_intensity must be >= 0");
    }

    std::visit(
        [&](const auto &m) {
          using T = std::decay_t<decltype(m)>;
          require(errs, std::isfinite(m.initial_price), "midprice.initial_price must be finite");
          require(errs, nonnegative(m.volatility), "midprice.volatility must be >= 0");
          if constexpr ( std::is_same_v<T, BrownianMidprice> || std::is_same_v<T, GeometricBrownianMidprice> )
            require(errs, std::isfinite(m.drift), "midprice.drift must be finite");
          if constexpr ( std::is_same_v<T, GeometricBrownianMidprice> )
            require(errs, m.initial_price > 0.0, "midprice.initial_price must be > 0 for geometric Brownian motion");
          if constexpr ( std::is_same_v<T, OuMidprice> || std::is_same_v<T, OuJumpMidprice> ) {
            require(errs, nonnegative(m.reversion), "midprice.reversion must be >= 0");
            require(errs, std::isfinite(m.mean_price), "midprice.mean_price must be finite");
          }
          if constexpr ( std::is_same_v<T, OuDriftMidprice> || std::is_same_v<T, OuJumpDriftMidprice> ) {
            require(errs, nonnegative(m.alpha_reversion), "midprice.alpha_reversion must be >= 0");
            require(errs, nonnegative(m.alpha_volatility), "midprice.alpha_volatility must be >= 0");
            require(errs, std::isfinite(m.alpha_mean) && std::isfinite(m.alpha_initial),
                    "midprice.alpha_mean and midprice.alpha_initial must be finite");
          }
          if constexpr ( requires { m.impact_bid; } ) {
            require(errs, nonnegative(m.impact_bid), "midprice.impact_bid must be >= 0");
            require(errs, nonnegative(m.impact_ask), "midprice.impact_ask must be >= 0");
          }
        },
        c.midprice);

    std::visit(
        [&](const auto &f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr ( std::is_same_v<T, ExponentialFill> )
            require(errs, positive(f.fill_exponent), "fill.fill_exponent must be > 0");
          if constexpr ( std::is_same_v<T, TriangularFill> )
            require(errs, positive(f.max_fill_depth), "fill.max_fill_depth must be > 0");
          if constexpr ( std::is_same_v<T, PowerFill> ) {
            require(errs, positive(f.fill_exponent), "fill.fill_exponent must be > 0");
            require(errs, positive(f.fill_multiplier), "fill.fill_multiplier must be > 0");
          }
        },
        c.fill);

    if ( const auto *p = std::get_if<RunningInventoryPenalty>(&c.reward) ) {
      require(errs, nonnegative(p->per_step_inventory_aversion), "reward.per_step_inventory_aversion must be >= 0");
      require(errs, nonnegative(p->terminal_inventory_aversion), "reward.terminal_inventory_aversion must be >= 0");
    }
    if ( const auto *u = std::get_if<ExponentialUtility>(&c.reward) )
      require(errs, positive(u->risk_aversion), "reward.risk_aversion must be > 0");
    return errs;
  }

  void validate(const EnvironmentConfig &config)
  {
    auto errs = validation_errors(config);
    if ( !errs.empty() )
      throw ConfigError(std::move(errs));
  }

  EnvironmentConfig cj_benchmark_config(std::size_t num_trajectories, std::uint64_t seed)
  {
    EnvironmentConfig c;
    c.terminal_time = 1.0;
    c.n_steps = 200;
    c.num_trajectories = num_trajectories;
    c.initial_cash = 0.0;
    c.initial_inventory = 0;
    c.max_inventory = 10;
    c.arrival = PoissonArrival{140.0, 140.0};
    c.midprice = BrownianMidprice{100.0, 0.0, 2.0};
    c.fill = ExponentialFill{1.5};
    c.action_type = ActionType::limit;
    c.reward = RunningInventoryPenalty{0.5, 1.0};
    c.master_seed = seed;
    return c;
  }

} // namespace mbt
