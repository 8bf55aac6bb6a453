#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mbt/agents.hpp"
#include "mbt/cartea_jaimungal.hpp"
#include "mbt/config_io.hpp"
#include "mbt/dp_oracle.hpp"
#include "mbt/environment.hpp"
#include "mbt/errors.hpp"
#include "mbt/learn.hpp"
#include "mbt/processes.hpp"
#include "mbt/random.hpp"

using namespace mbt;

namespace
{
  using Clock = std::chrono::steady_clock;

  double seconds_since(Clock::time_point start)
  {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }

  struct Outcome
  {
    bool pass = true;
    std::vector<std::string> details;

    void require(bool ok, const std::string &what)
    {
      pass = pass && ok;
      details.push_back(std::string(ok ? "ok: " : "FAILED: ") + what);
    }
  };

  std::string fmt(const char *pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0)
  {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
  }

  struct MeanSe
  {
    double mean;
    double var;
    double se;
  };

  MeanSe mean_se(std::span<const double> xs)
  {
    const double n = static_cast<double>(xs.size());
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double s = 0.0;
    for ( double x : xs )
      s += (x - m) * (x - m);
    const double var = s / (n - 1.0);
    return {m, var, std::sqrt(var / n)};
  }

  /// Actions keyed by (trajectory, step) so batched and looped runs see the same inputs.
  void keyed_actions(const Environment &env, std::size_t first_trajectory, std::span<double> actions)
  {
    const std::size_t d = env.action_dim();
    const bool touch = env.config().action_type == ActionType::touch;
    for ( std::size_t i = 0; i < env.width(); ++i ) {
      std::seed_seq seq{static_cast<std::uint64_t>(first_trajectory + i), static_cast<std::uint64_t>(env.step_index())};
      std::mt19937_64 g(seq);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for ( std::size_t j = 0; j < d; ++j ) {
        const bool binary = touch || j >= 2;
        actions[i * d + j] = binary ? (u(g) < (touch ? 0.5 : 0.1) ? 1.0 : 0.0) : u(g) * env.max_depth();
      }
    }
  }

  // --- 1 -----------------------------------------------------------------------

  EnvironmentConfig random_config(std::mt19937_64 &g)
  {
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); };
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(g); };
    EnvironmentConfig c;
    c.terminal_time = u(0.5, 2.0);
    c.n_steps = std::uniform_int_distribution<int>(10, 200)(g);
    c.num_trajectories = 1;
    c.initial_cash = u(-100.0, 100.0);
    c.max_inventory = std::uniform_int_distribution<int>(5, 30)(g);
    if ( pick(2) == 0 )
      c.initial_inventory = std::uniform_int_distribution<int>(-5, 5)(g);
    else
      c.initial_inventory = InventoryRange{-4, 4};

    if ( pick(2) == 0 )
      c.arrival = PoissonArrival{u(0.0, 200.0), u(0.0, 200.0)};
    else {
      const double base = u(1.0, 50.0), rev = u(5.0, 50.0);
      c.arrival = HawkesArrival{base, rev, u(0.0, 0.9) * rev, base};
    }
    const double s0 = u(50.0, 150.0);
    switch ( pick(7) ) {
    case 0: c.midprice = BrownianMidprice{s0, u(-1.0, 1.0), u(0.0, 3.0)}; break;
    case 1: c.midprice = GeometricBrownianMidprice{s0, u(-0.2, 0.2), u(0.0, 0.5)}; break;
    case 2: c.midprice = BrownianJumpMidprice{s0, u(0.0, 3.0), u(0.0, 0.05), u(0.0, 0.05)}; break;
    case 3: c.midprice = OuMidprice{s0, u(0.1, 5.0), u(50.0, 150.0), u(0.0, 3.0)}; break;
    case 4: c.midprice = OuJumpMidprice{s0, u(0.1, 5.0), u(50.0, 150.0), u(0.0, 3.0), u(0.0, 0.05), u(0.0, 0.05)}; break;
    case 5: c.midprice = OuDriftMidprice{s0, u(0.0, 1.0), u(-1.0, 1.0), u(1.0, 60.0), 0.0, u(0.0, 1.0)}; break;
    default:
      c.midprice = OuJumpDriftMidprice{s0, u(0.0, 1.0), u(-1.0, 1.0), u(1.0, 60.0), 0.0, u(0.0, 1.0),
                                       u(0.0, 0.1), u(0.0, 0.1)};
    }
    switch ( pick(3) ) {
    case 0: c.fill = ExponentialFill{u(0.5, 3.0)}; break;
    case 1: c.fill = TriangularFill{u(0.5, 3.0)}; break;
    default: c.fill = PowerFill{u(0.5, 3.0), u(0.5, 2.0)};
    }
    switch ( pick(3) ) {
    case 0: c.action_type = ActionType::limit; break;
    case 1: c.action_type = ActionType::touch; break;
    default: c.action_type = ActionType::limit_and_market;
    }
    if ( c.action_type != ActionType::limit )
      c.minimum_tick_size = u(0.01, 0.1);
    switch ( pick(3) ) {
    case 0: c.reward = PnlReward{}; break;
    case 1: c.reward = RunningInventoryPenalty{u(0.0, 1.0), u(0.0, 2.0)}; break;
    default: c.reward = ExponentialUtility{u(0.001, 0.05)};
    }
    return c;
  }

  Outcome telescoping()
  {
    Outcome o;
    std::mt19937_64 g(20240601);
    double worst = 0.0;
    std::size_t episodes = 0, invalid = 0;
    for ( int k = 0; k < 100; ++k ) {
      auto c = random_config(g);
      for ( std::uint64_t seed = 0; seed < 100; ++seed ) {
        c.master_seed = seed;
        std::unique_ptr<Environment> env;
        try {
          env = std::make_unique<Environment>(c);
        } catch ( const ConfigError & ) {
          ++invalid;
          break;
        }
        env->reset();
        const double y0 = env->initial_value()[0];
        std::vector<double> actions(env->action_dim());
        double sum = 0.0, sum_q2 = 0.0;
        while ( !env->finished() ) {
          keyed_actions(*env, seed, actions);
          const auto view = env->step(actions);
          sum += view.rewards[0];
          const double q = env->inventory()[0];
          sum_q2 += q * q * env->dt();
        }
        const double q = env->inventory()[0];
        const double pnl = env->cash()[0] + q * env->midprice()[0] - y0;
        double objective = pnl;
        if ( const auto *r = std::get_if<RunningInventoryPenalty>(&c.reward) )
          objective = pnl - r->per_step_inventory_aversion * sum_q2 - r->terminal_inventory_aversion * q * q;
        else if ( const auto *e = std::get_if<ExponentialUtility>(&c.reward) )
          objective = -std::exp(-e->risk_aversion * pnl);
        const double rel = std::abs(sum - objective) / std::max(std::abs(objective), 1e-300);
        worst = std::max(worst, sum == objective ? 0.0 : rel);
        ++episodes;
      }
    }
    o.require(invalid == 0, fmt("%.0f random configs rejected by validation", static_cast<double>(invalid)));
    o.require(episodes == 10000, fmt("%.0f episodes over 100 configs x 100 seeds", static_cast<double>(episodes)));
    o.require(worst <= 1e-9, fmt("max relative error %.3g (bound 1e-9)", worst));
    return o;
  }

  // --- 2 -----------------------------------------------------------------------

  struct Tape
  {
    std::vector<double> observations;
    std::vector<double> rewards;
    std::vector<std::uint8_t> events;
  };

  /// Run one episode and append per-trajectory records in trajectory-major order.
  std::vector<Tape> record(Environment &env, std::size_t first_trajectory)
  {
    std::vector<Tape> tapes(env.width());
    const std::size_t d = env.obs_dim();
    std::vector<double> actions(env.width() * env.action_dim());
    const auto obs0 = env.reset(0);
    for ( std::size_t i = 0; i < env.width(); ++i )
      tapes[i].observations.insert(tapes[i].observations.end(), obs0.begin() + i * d, obs0.begin() + (i + 1) * d);
    while ( !env.finished() ) {
      keyed_actions(env, first_trajectory, actions);
      const auto view = env.step(actions);
      for ( std::size_t i = 0; i < env.width(); ++i ) {
        auto &t = tapes[i];
        t.observations.insert(t.observations.end(), view.observations.begin() + i * d,
                              view.observations.begin() + (i + 1) * d);
        t.rewards.push_back(view.rewards[i]);
        for ( const auto *v : {&view.info.arrival_bid, &view.info.arrival_ask, &view.info.fill_bid,
                               &view.info.fill_ask, &view.info.market_buy, &view.info.market_sell} )
          t.events.push_back((*v)[i]);
        t.events.push_back(view.done[i]);
      }
    }
    return tapes;
  }

  bool bit_equal(const std::vector<double> &a, const std::vector<double> &b)
  {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
  }

  bool same(const std::vector<Tape> &a, const std::vector<Tape> &b)
  {
    if ( a.size() != b.size() )
      return false;
    for ( std::size_t i = 0; i < a.size(); ++i )
      if ( !bit_equal(a[i].observations, b[i].observations) || !bit_equal(a[i].rewards, b[i].rewards) ||
           a[i].events != b[i].events )
        return false;
    return true;
  }

  Outcome determinism()
  {
    Outcome o;
    std::vector<std::pair<std::string, EnvironmentConfig>> cases{{"benchmark", cj_benchmark_config(1000, 3)}};
    for ( const char *name : {"cjr14.toml", "execution-limit-and-market.toml", "market-making-touch.toml"} ) {
      auto c = load_config_file(std::filesystem::path(MBT_CONFIG_DIR) / name).env;
      c.num_trajectories = 1000;
      c.initial_inventory = InventoryRange{-3, 3};
      cases.emplace_back(name, c);
    }
    for ( const auto &[name, c] : cases ) {
      Environment a(c), b(c);
      const auto first = record(a, 0), second = record(b, 0);
      o.require(same(first, second), name + ": rerun bit-identical at N = 1000");
      std::vector<Tape> looped;
      auto single = c;
      single.num_trajectories = 1;
      for ( std::size_t i = 0; i < c.num_trajectories; ++i ) {
        Environment e(single, i);
        looped.push_back(std::move(record(e, i).front()));
      }
      o.require(same(first, looped), name + ": batch equals looped width-1 runs with matched substreams");
    }
    return o;
  }

  // --- 3 -----------------------------------------------------------------------

  Outcome process_statistics()
  {
    Outcome o;
    const std::size_t n = 100000;
    std::vector<std::uint8_t> bid(n), ask(n), none(n, 0);

    {
      // Per-step Bernoulli arrivals: counts over 200 steps are Binomial(200, 1 - e^{-lambda dt}).
      const double lambda = 140.0, dt = 0.005;
      RandomSource rng(1, n);
      rng.reseed(0);
      ArrivalProcess proc(PoissonArrival{lambda, lambda}, dt, n);
      std::vector<double> counts(n, 0.0);
      for ( int k = 0; k < 200; ++k ) {
        proc.sample(rng, bid, ask);
        for ( std::size_t i = 0; i < n; ++i )
          counts[i] += bid[i];
      }
      const double p = 1.0 - std::exp(-lambda * dt);
      const auto ms = mean_se(counts);
      const double mean = 200 * p, var = 200 * p * (1 - p);
      o.require(std::abs(ms.mean - mean) <= 4 * std::sqrt(var / n),
                fmt("arrival count mean %.4f vs %.4f (4 SE = %.4f)", ms.mean, mean, 4 * std::sqrt(var / n)));
      o.require(std::abs(ms.var - var) <= 4 * var * std::sqrt(2.0 / n),
                fmt("arrival count variance %.4f vs %.4f", ms.var, var));
    }
    {
      const double dt = 0.1, x0 = 101.0, k = 2.0, m = 100.0, s = 1.5;
      RandomSource rng(2, n);
      rng.reseed(0);
      MidpriceProcess mid(OuMidprice{x0, k, m, s}, dt, n);
      mid.update(rng, none, none);
      const auto ms = mean_se(mid.price());
      const double mean = x0 * std::exp(-k * dt) + m * (1 - std::exp(-k * dt));
      const double var = s * s * (1 - std::exp(-2 * k * dt)) / (2 * k);
      o.require(std::abs(ms.mean - mean) <= 4 * std::sqrt(var / n), fmt("OU one-step mean %.6f vs %.6f", ms.mean, mean));
      o.require(std::abs(ms.var - var) <= 4 * var * std::sqrt(2.0 / n),
                fmt("OU one-step variance %.6f vs %.6f", ms.var, var));
    }
    {
      RandomSource rng(3, n);
      rng.reseed(0);
      MidpriceProcess mid(GeometricBrownianMidprice{100.0, 0.1, 0.3}, 0.01, n);
      for ( int k = 0; k < 100; ++k )
        mid.update(rng, none, none);
      const auto ms = mean_se(mid.price());
      const double mean = 100.0 * std::exp(0.1);
      o.require(std::abs(ms.mean - mean) <= 4 * ms.se, fmt("GBM mean %.4f vs %.4f (SE %.4f)", ms.mean, mean, ms.se));
    }
    {
      RandomSource rng(4, n);
      rng.reseed(0);
      MidpriceProcess mid(BrownianMidprice{100.0, 0.0, 2.0}, 0.005, n);
      std::vector<double> first;
      for ( int k = 0; k < 200; ++k ) {
        mid.update(rng, none, none);
        if ( k == 99 )
          first.assign(mid.price().begin(), mid.price().end());
      }
      std::vector<double> increment(n);
      for ( std::size_t i = 0; i < n; ++i )
        increment[i] = mid.price()[i] - first[i];
      const auto end = mean_se(mid.price()), inc = mean_se(increment);
      o.require(std::abs(end.mean - 100.0) <= 4 * end.se, fmt("BM terminal mean %.4f vs 100 (SE %.4f)", end.mean, end.se));
      o.require(std::abs(inc.mean) <= 4 * inc.se, fmt("BM increment mean %.5f (SE %.5f)", inc.mean, inc.se));
    }
    {
      const HawkesArrival h{10.0, 20.0, 5.0, 10.0};
      const double dt = 2.5e-4;
      RandomSource rng(5, n);
      rng.reseed(0);
      ArrivalProcess proc(h, dt, n);
      for ( int k = 0; k < 3200; ++k ) {
        proc.sample(rng, bid, ask);
        proc.update(bid, ask);
      }
      const auto ms = mean_se(proc.intensity_bid());
      const double target = h.stationary_intensity();
      o.require(std::abs(ms.mean - target) <= 4 * ms.se,
                fmt("Hawkes intensity %.4f vs k*base/(k-jump) = %.4f (SE %.4f, dt %.0e)", ms.mean, target, ms.se, dt));
    }
    return o;
  }

  // --- 4 -----------------------------------------------------------------------

  MeanSe fixed_spread_pnl(int n_steps, std::size_t episodes, double delta)
  {
    auto c = cj_benchmark_config(episodes, 4);
    c.n_steps = n_steps;
    c.reward = PnlReward{};
    c.max_inventory = 100000;
    FixedSpreadAgent agent(delta, ActionType::limit);
    std::vector<double> totals;
    const std::size_t chunk = 1000;
    for ( std::size_t offset = 0; offset < episodes; offset += chunk ) {
      auto part = c;
      part.num_trajectories = std::min(chunk, episodes - offset);
      Environment env(part, offset);
      const auto r = episode_returns(env, agent, 0);
      totals.insert(totals.end(), r.begin(), r.end());
    }
    return mean_se(totals);
  }

  Outcome fixed_spread_expectation()
  {
    Outcome o;
    const double kappa = 1.5, lambda = 140.0, delta = 1.0 / kappa, T = 1.0;
    const double continuous = T * 2 * lambda * std::exp(-kappa * delta) * delta;

    const auto bench = fixed_spread_pnl(200, 100000, delta);
    o.require(std::abs(bench.mean - continuous) <= 3 * bench.se,
              fmt("benchmark grid (n_steps 200): mean %.3f vs T*sum lambda e^{-k d} d = %.3f (3 SE = %.3f)", bench.mean,
                  continuous, 3 * bench.se));
    const double discrete = 200 * 2 * (1 - std::exp(-lambda * T / 200)) * std::exp(-kappa * delta) * delta;
    o.require(std::abs(bench.mean - discrete) <= 3 * bench.se,
              fmt("benchmark grid: mean %.3f vs per-step expectation n(1-e^{-lambda dt}) e^{-k d} d = %.3f (3 SE = %.3f)",
                  bench.mean, discrete, 3 * bench.se));
    const auto fine = fixed_spread_pnl(20000, 4000, delta);
    o.require(std::abs(fine.mean - continuous) <= 3 * fine.se,
              fmt("refined grid (n_steps 20000): mean %.3f vs %.3f (3 SE = %.3f)", fine.mean, continuous, 3 * fine.se));
    return o;
  }

  // --- 5 -----------------------------------------------------------------------

  Outcome closed_form_vs_dp()
  {
    Outcome o;
    const auto c = cj_benchmark_config();
    const double cap = max_depth(c.fill);
    const auto depths = uniform_grid(cap, 200);
    const double spacing = depths[1] - depths[0];
    auto p = cj_params_from_config(c);
    p.n_steps = 10 * c.n_steps;
    std::vector<double> times(static_cast<std::size_t>(p.n_steps) + 1);
    for ( std::size_t k = 0; k < times.size(); ++k )
      times[k] = c.terminal_time * static_cast<double>(k) / p.n_steps;
    const auto cj = cj_solve(p);
    const auto dp = dp_solve(p, depths, times);

    double worst = 0.0, worst_half = 0.0, worst_t = 0.0;
    int worst_q = 0;
    bool nan_pattern = true;
    for ( std::size_t k = 0; k + 1 < times.size(); ++k )
      for ( int q = -p.max_inventory; q <= p.max_inventory; ++q ) {
        const auto quotes = cj_quotes(cj, q, times[k]);
        const double pairs[2][2] = {{quotes.bid, dp.depth_bid[dp.index(k, q)]}, {quotes.ask, dp.depth_ask[dp.index(k, q)]}};
        for ( const auto &pair : pairs ) {
          if ( std::isnan(pair[0]) || std::isnan(pair[1]) ) {
            nan_pattern = nan_pattern && std::isnan(pair[0]) && std::isnan(pair[1]);
            continue;
          }
          const double diff = std::abs(std::clamp(pair[0], 0.0, cap) - pair[1]);
          if ( diff > worst ) {
            worst = diff;
            worst_t = times[k];
            worst_q = q;
          }
          if ( times[k] <= 0.5 * c.terminal_time )
            worst_half = std::max(worst_half, diff);
        }
      }
    o.require(nan_pattern, "suppressed sides coincide");
    o.require(worst <= spacing, fmt("max |d_CJ - d_DP| = %.4f at t = %.4f, q = %.0f (spacing %.4f)", worst, worst_t,
                                    static_cast<double>(worst_q), spacing));
    o.details.push_back(fmt("info: over t <= T/2 the max difference is %.4f (spacing %.4f)", worst_half, spacing));
    return o;
  }

  // --- 6 -----------------------------------------------------------------------

  Outcome agent_ordering()
  {
    Outcome o;
    const auto c = cj_benchmark_config();
    const std::size_t n = 100000;
    const auto seed = evaluation_seed(c);
    auto cj = make_agent(CarteaJaimungalSpec{}, c, 0);
    const auto r_cj = evaluate(c, *cj, n, seed);
    EvalReport best;
    double best_h = 0.0;
    best.mean = -std::numeric_limits<double>::infinity();
    for ( double h : fixed_spread_grid(c) ) {
      FixedSpreadAgent agent(h, c.action_type);
      const auto r = evaluate(c, agent, n, seed);
      if ( r.mean > best.mean ) {
        best = r;
        best_h = h;
      }
    }
    auto random = make_agent(RandomSpec{}, c, 1);
    const auto r_random = evaluate(c, *random, n, seed);
    const double se1 = std::hypot(r_cj.std_error, best.std_error), se2 = std::hypot(best.std_error, r_random.std_error);
    o.require(r_cj.mean - best.mean > 3 * se1, fmt("CJ %.3f > best fixed spread %.3f (h = %.3f), 3 SE = %.3f", r_cj.mean,
                                                   best.mean, best_h, 3 * se1));
    o.require(best.mean - r_random.mean > 3 * se2,
              fmt("best fixed spread %.3f > random %.3f, 3 SE = %.3f", best.mean, r_random.mean, 3 * se2));
    return o;
  }

  // --- 7 -----------------------------------------------------------------------

  Outcome vectorization()
  {
    Outcome o;
    const auto c = cj_benchmark_config(1000);
    FixedSpreadAgent agent(1.0, c.action_type);
    double batch = std::numeric_limits<double>::infinity();
    for ( int rep = 0; rep < 3; ++rep ) {
      Environment env(c);
      const auto start = Clock::now();
      episode_returns(env, agent, 0);
      batch = std::min(batch, seconds_since(start));
    }
    auto single = c;
    single.num_trajectories = 1;
    double looped = std::numeric_limits<double>::infinity();
    for ( int rep = 0; rep < 3; ++rep ) {
      const auto start = Clock::now();
      for ( std::size_t i = 0; i < c.num_trajectories; ++i ) {
        Environment env(single, i);
        episode_returns(env, agent, 0);
      }
      looped = std::min(looped, seconds_since(start));
    }
    o.require(batch < 2.0, fmt("batch N = 1000 x 200 steps: %.4f s (bound 2 s)", batch));
    o.require(looped / batch >= 20.0, fmt("looped width-1 mode %.4f s, speedup %.2fx (bound 20x)", looped, looped / batch));
    return o;
  }

  // --- 8 -----------------------------------------------------------------------

  /// Half the mean squared change between consecutive learning-curve points.
  double curve_variance(const std::vector<LearningCurvePoint> &curve)
  {
    double s = 0.0;
    for ( std::size_t k = 1; k < curve.size(); ++k ) {
      const double d = curve[k].mean_reward - curve[k - 1].mean_reward;
      s += d * d;
    }
    return s / (2.0 * static_cast<double>(curve.size() - 1));
  }

  Outcome learning()
  {
    Outcome o;
    const auto run = load_config_file(std::filesystem::path(MBT_CONFIG_DIR) / "cj-benchmark-v1.toml");
    const auto &c = run.env;
    const auto eval_seed = evaluation_seed(c);
    const auto ref = reference_scores(c, run.train.eval_episodes, eval_seed);
    const double mid = 0.5 * c.terminal_time;

    int good = 0;
    bool skew = true;
    std::vector<LearningCurvePoint> curve_1000;
    for ( std::uint64_t seed = 0; seed < 4; ++seed ) {
      auto tc = run.train;
      tc.seed = seed;
      const auto start = Clock::now();
      const auto result = train(c, tc);
      const double wall = seconds_since(start);
      PolicyAgent greedy(result.policy, 0, true);
      const double score = normalized_score(evaluate(c, greedy, tc.eval_episodes, eval_seed).mean, ref);
      const bool ok = score >= 0.8 && wall <= 900.0 && !result.diverged;
      good += ok;
      bool monotone = true;
      const auto depth = [&](int q, std::size_t j) { return std::clamp(result.policy.mean(q, mid, j), 0.0, result.policy.max_action()); };
      for ( int q = -c.max_inventory; q < c.max_inventory; ++q )
        monotone = monotone && depth(q + 1, 0) >= depth(q, 0) && depth(q + 1, 1) <= depth(q, 1);
      monotone = monotone && depth(c.max_inventory, 0) > depth(-c.max_inventory, 0) &&
                 depth(c.max_inventory, 1) < depth(-c.max_inventory, 1);
      skew = skew && monotone;
      o.details.push_back(fmt("info: seed %.0f: normalized score %.4f after %.1f s, skew ", static_cast<double>(seed),
                              score, wall) +
                          (monotone ? "as expected" : "wrong"));
      if ( seed == 0 )
        curve_1000 = result.curve;
    }
    o.require(good >= 3, fmt("%.0f of 4 seeds reach score >= 0.8 within 15 min", static_cast<double>(good)));
    o.require(skew, "mid-horizon depths: bid increasing and ask decreasing in inventory");

    auto tc = run.train;
    tc.num_trajectories = 10;
    tc.divergence_patience = std::numeric_limits<int>::max();
    const auto small = train(c, tc);
    const double v10 = curve_variance(small.curve), v1000 = curve_variance(curve_1000);
    o.require(v10 > v1000, fmt("learning-curve variance N = 10: %.4g > N = 1000: %.4g", v10, v1000));
    return o;
  }

  struct Criterion
  {
    int id;
    const char *title;
    std::function<Outcome()> run;
  };
} // namespace

int main(int argc, char **argv)
{
  const std::vector<Criterion> criteria{
    {1, "telescoping reward identity", telescoping},
    {2, "seeded determinism, batch vs looped", determinism},
    {3, "process statistics at N = 1e5", process_statistics},
    {4, "fixed-spread analytic expected PnL", fixed_spread_expectation},
    {5, "closed form vs dynamic programming oracle", closed_form_vs_dp},
    {6, "agent ordering CJ > best fixed spread > random", agent_ordering},
    {7, "vectorization speed", vectorization},
    {8, "policy-gradient learning", learning},
  };
  std::set<int> selected;
  for ( int i = 1; i < argc; ++i )
    selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for ( const auto &c : criteria ) {
    if ( !selected.empty() && !selected.count(c.id) )
      continue;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch ( const std::exception &e ) {
      outcome.require(false, std::string("exception: ") + e.what());
    }
    failures += !outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " ("
              << fmt("%.1f s", seconds_since(start)) << ")\n";
    for ( const auto &d : outcome.details )
      std::cout << "    " << d << '\n';
    std::cout << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
