#include "mbt/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mbt/errors.hpp"
#include "mbt/rewards.hpp"

namespace mbt
{

  std::vector<FieldDescriptor> observation_layout(const EnvironmentConfig &config)
  {
    std::vector<FieldDescriptor> out;
    auto add = [&out](std::string name, std::string units) {
      out.push_back({std::move(name), out.size(), std::move(units)});
    };
    add("cash", "currency");
    add("inventory", "units");
    add("time", "time");
    add("midprice", "currency");
    if ( config.observe_auxiliaries ) {
      if ( has_alpha(config.midprice) )
        add("alpha", "currency/time");
      if ( std::holds_alternative<HawkesArrival>(config.arrival) ) {
        add("lambda_bid", "events/time");
        add("lambda_ask", "events/time");
      }
    }
    return out;
  }

  std::size_t field_index(std::span<const FieldDescriptor> layout, std::string_view name)
  {
    for ( const auto &f : layout )
      if ( f.name == name )
        return f.index;
    throw std::invalid_argument("observation layout has no field '" + std::string(name) + "'");
  }

  void StepInfo::resize(std::size_t n)
  {
    for ( auto *v : {&arrival_bid, &arrival_ask, &fill_bid, &fill_ask, &market_buy, &market_sell} )
      v->assign(n, 0);
    exec_price_bid.assign(n, std::numeric_limits<double>::quiet_NaN());
    exec_price_ask.assign(n, std::numeric_limits<double>::quiet_NaN());
  }

  AdmissibleOrders inventory_guard(int inventory, int max_inventory, AdmissibleOrders proposed)
  {
    AdmissibleOrders out{false, false, false, false};
    int buys = 0;
    int sells = 0;
    if ( proposed.bid_fill && inventory + buys + 1 <= max_inventory ) {
      out.bid_fill = true;
      ++buys;
    }
    if ( proposed.market_buy && inventory + buys + 1 <= max_inventory ) {
      out.market_buy = true;
      ++buys;
    }
    if ( proposed.ask_fill && inventory - sells - 1 >= -max_inventory ) {
      out.ask_fill = true;
      ++sells;
    }
    if ( proposed.market_sell && inventory - sells - 1 >= -max_inventory ) {
      out.market_sell = true;
      ++sells;
    }
    return out;
  }

  namespace
  {
    EnvironmentConfig validated(EnvironmentConfig config)
    {
      validate(config);
      return config;
    }
  } // namespace

  Environment::Environment(EnvironmentConfig config, std::size_t first_stream)
      : config_(validated(std::move(config))),
        layout_(observation_layout(config_)),
        dt_(config_.step_size()),
        max_depth_(mbt::max_depth(config_.fill)),
        rng_(config_.master_seed, config_.num_trajectories, first_stream),
        arrivals_(config_.arrival, dt_, config_.num_trajectories),
        midprice_(config_.midprice, dt_, config_.num_trajectories)
  {
    const std::size_t n = config_.num_trajectories;
    cash_.resize(n);
    inventory_.resize(n);
    initial_value_.resize(n);
    observations_.resize(n * layout_.size());
    rewards_.resize(n);
    done_.resize(n);
    info_.resize(n);
    depth_bid_.resize(n);
    depth_ask_.resize(n);
    prev_midprice_.resize(n);
    prev_cash_.resize(n);
    prev_inventory_.resize(n);
  }

  std::span<const double> Environment::reset()
  {
    return reset(next_episode_);
  }

  std::span<const double> Environment::reset(std::uint64_t episode)
  {
    episode_ = episode;
    next_episode_ = episode + 1;
    rng_.reseed(episode);
    arrivals_.reset();
    midprice_.reset();
    info_.resize(width());
    std::fill(rewards_.begin(), rewards_.end(), 0.0);
    std::fill(done_.begin(), done_.end(), 0);
    std::fill(cash_.begin(), cash_.end(), config_.initial_cash);

    if ( const auto *q = std::get_if<int>(&config_.initial_inventory) ) {
      std::fill(inventory_.begin(), inventory_.end(), *q);
    } else {
      const auto &r = std::get<InventoryRange>(config_.initial_inventory);
      for ( std::size_t i = 0; i < width(); ++i )
        inventory_[i] = rng_.uniform_int(i, r.lo, r.hi);
    }

    const auto price = midprice_.price();
    for ( std::size_t i = 0; i < width(); ++i )
      initial_value_[i] = cash_[i] + inventory_[i] * price[i];

    step_index_ = 0;
    time_ = 0.0;
    started_ = true;
    write_observations();
    return observations_;
  }

  StepView Environment::step(std::span<const double> actions)
  {
    if ( !started_ )
      throw StateError("step called before reset");
    if ( finished() )
      throw StateError("episode finished after " + std::to_string(config_.n_steps) + " steps; call reset");

    const std::size_t n = width();
    const std::size_t d = action_dim();
    if ( actions.size() != n * d )
      throw std::invalid_argument("action buffer has " + std::to_string(actions.size()) + " values, expected " +
                                  std::to_string(n) + " x " + std::to_string(d));
    for ( double a : actions )
      if ( !std::isfinite(a) )
        throw std::invalid_argument("action buffer contains a non-finite value");

    const auto price = midprice_.price();
    std::copy(price.begin(), price.end(), prev_midprice_.begin());
    std::copy(cash_.begin(), cash_.end(), prev_cash_.begin());
    std::copy(inventory_.begin(), inventory_.end(), prev_inventory_.begin());

    // (1) order flow
    arrivals_.sample(rng_, info_.arrival_bid, info_.arrival_ask);

    // (2)-(3) fills against the pre-step midprice
    const bool touch = config_.action_type == ActionType::touch;
    if ( touch ) {
      const double tick = config_.minimum_tick_size;
      for ( std::size_t i = 0; i < n; ++i ) {
        const bool post_bid = actions[i * d] >= 0.5;
        const bool post_ask = actions[i * d + 1] >= 0.5;
        depth_bid_[i] = tick;
        depth_ask_[i] = tick;
        info_.fill_bid[i] = post_bid && info_.arrival_bid[i];
        info_.fill_ask[i] = post_ask && info_.arrival_ask[i];
      }
    } else {
      for ( std::size_t i = 0; i < n; ++i ) {
        depth_bid_[i] = std::clamp(actions[i * d], 0.0, max_depth_);
        depth_ask_[i] = std::clamp(actions[i * d + 1], 0.0, max_depth_);
      }
      sample_fills(config_.fill, depth_bid_, depth_ask_, info_.arrival_bid, info_.arrival_ask, rng_, info_.fill_bid,
                   info_.fill_ask);
    }

    // (4)-(5) market orders, inventory bound and accounting
    const bool with_market = config_.action_type == ActionType::limit_and_market;
    const double tick = config_.minimum_tick_size;
    for ( std::size_t i = 0; i < n; ++i ) {
      const double s = prev_midprice_[i];
      AdmissibleOrders proposed{info_.fill_bid[i] != 0, info_.fill_ask[i] != 0,
                                with_market && actions[i * d + 2] >= 0.5, with_market && actions[i * d + 3] >= 0.5};
      const auto ok = inventory_guard(inventory_[i], config_.max_inventory, proposed);
      info_.fill_bid[i] = ok.bid_fill;
      info_.fill_ask[i] = ok.ask_fill;
      info_.market_buy[i] = ok.market_buy;
      info_.market_sell[i] = ok.market_sell;
      info_.exec_price_bid[i] = std::numeric_limits<double>::quiet_NaN();
      info_.exec_price_ask[i] = std::numeric_limits<double>::quiet_NaN();
      if ( ok.bid_fill ) {
        const double px = s - depth_bid_[i];
        cash_[i] -= px;
        inventory_[i] += 1;
        info_.exec_price_bid[i] = px;
      }
      if ( ok.ask_fill ) {
        const double px = s + depth_ask_[i];
        cash_[i] += px;
        inventory_[i] -= 1;
        info_.exec_price_ask[i] = px;
      }
      if ( ok.market_buy ) {
        cash_[i] -= s + tick;
        inventory_[i] += 1;
      }
      if ( ok.market_sell ) {
        cash_[i] += s - tick;
        inventory_[i] -= 1;
      }
    }

    // (6) market state: midprice diffusion and impact, then intensities
    midprice_.update(rng_, info_.arrival_bid, info_.arrival_ask);
    arrivals_.update(info_.arrival_bid, info_.arrival_ask);

    // (7) clock; computed from the index so the last step lands on T exactly
    ++step_index_;
    time_ = config_.terminal_time * step_index_ / config_.n_steps;
    const bool terminal = finished();

    // (8) rewards
    const auto new_price = midprice_.price();
    for ( std::size_t i = 0; i < n; ++i ) {
      const MarkState prev{prev_cash_[i], static_cast<double>(prev_inventory_[i]), prev_midprice_[i]};
      const MarkState next{cash_[i], static_cast<double>(inventory_[i]), new_price[i]};
      rewards_[i] = step_reward(config_.reward, prev, next, dt_, terminal, initial_value_[i]);
    }

    // (9) done
    std::fill(done_.begin(), done_.end(), terminal ? 1 : 0);
    write_observations();
    return StepView{observations_, rewards_, done_, info_};
  }

  void Environment::write_observations()
  {
    const std::size_t n = width();
    const std::size_t dim = layout_.size();
    const auto price = midprice_.price();
    const bool alpha = config_.observe_auxiliaries && midprice_.has_alpha();
    const bool hawkes = config_.observe_auxiliaries && arrivals_.stochastic_intensity();
    const auto alpha_values = midprice_.alpha();
    const auto lambda_bid = arrivals_.intensity_bid();
    const auto lambda_ask = arrivals_.intensity_ask();
    for ( std::size_t i = 0; i < n; ++i ) {
      double *row = observations_.data() + i * dim;
      std::size_t c = 0;
      row[c++] = cash_[i];
      row[c++] = inventory_[i];
      row[c++] = time_;
      row[c++] = price[i];
      if ( alpha )
        row[c++] = alpha_values[i];
      if ( hawkes ) {
        row[c++] = lambda_bid[i];
        row[c++] = lambda_ask[i];
      }
    }
  }

} // namespace mbt
