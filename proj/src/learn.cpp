#include "mbt/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mbt/errors.hpp"

namespace mbt
{

  // --- GaussianPolicy --------------------------------------------------------

  GaussianPolicy::GaussianPolicy(std::size_t action_dim, double terminal_time, double max_action, double initial_mean,
                                 double initial_log_std)
      : terminal_time_(terminal_time),
        max_action_(max_action),
        weights_(action_dim * kFeatures, 0.0),
        log_std_(action_dim, std::clamp(initial_log_std, kMinLogStd, kMaxLogStd))
  {
    for ( std::size_t j = 0; j < action_dim; ++j )
      weights_[j * kFeatures] = initial_mean;
  }

  std::array<double, GaussianPolicy::kFeatures> GaussianPolicy::features(double inventory, double t) const
  {
    const double remaining = terminal_time_ - t;
    return {1.0, inventory, remaining, inventory * remaining};
  }

  double GaussianPolicy::mean(double inventory, double t, std::size_t component) const
  {
    const auto f = features(inventory, t);
    double m = 0.0;
    for ( std::size_t k = 0; k < kFeatures; ++k )
      m += weights_[component * kFeatures + k] * f[k];
    return m;
  }

  double GaussianPolicy::log_density(double inventory, double t, std::span<const double> action) const
  {
    constexpr double half_log_two_pi = 0.91893853320467274178;
    double out = 0.0;
    for ( std::size_t j = 0; j < action_dim(); ++j ) {
      const double z = (action[j] - mean(inventory, t, j)) * std::exp(-log_std_[j]);
      out += -0.5 * z * z - log_std_[j] - half_log_two_pi;
    }
    return out;
  }

  void GaussianPolicy::add_log_density_gradient(double inventory, double t, std::span<const double> action,
                                                double scale, std::span<double> out) const
  {
    const auto f = features(inventory, t);
    const std::size_t std_offset = weights_.size();
    for ( std::size_t j = 0; j < action_dim(); ++j ) {
      const double inv_var = std::exp(-2.0 * log_std_[j]);
      const double diff = action[j] - mean(inventory, t, j);
      const double dmean = scale * diff * inv_var;
      for ( std::size_t k = 0; k < kFeatures; ++k )
        out[j * kFeatures + k] += dmean * f[k];
      out[std_offset + j] += scale * (diff * diff * inv_var - 1.0);
    }
  }

  std::vector<double> GaussianPolicy::parameters() const
  {
    std::vector<double> out(weights_);
    out.insert(out.end(), log_std_.begin(), log_std_.end());
    return out;
  }

  void GaussianPolicy::set_parameters(std::span<const double> values)
  {
    if ( values.size() != parameter_count() )
      throw std::invalid_argument("policy expects " + std::to_string(parameter_count()) + " parameters");
    std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(weights_.size()), weights_.begin());
    for ( std::size_t j = 0; j < log_std_.size(); ++j )
      log_std_[j] = std::clamp(values[weights_.size() + j], kMinLogStd, kMaxLogStd);
  }

  std::string policy_to_json(const GaussianPolicy &policy)
  {
    nlohmann::json j;
    j["kind"] = "linear_gaussian";
    j["features"] = {"1", "q", "T-t", "q*(T-t)"};
    j["action_dim"] = policy.action_dim();
    j["terminal_time"] = policy.terminal_time();
    j["max_action"] = policy.max_action();
    j["parameters"] = policy.parameters();
    return j.dump(2);
  }

  GaussianPolicy policy_from_json(const std::string &text)
  {
    const auto j = nlohmann::json::parse(text);
    if ( j.value("kind", "") != "linear_gaussian" )
      throw std::invalid_argument("policy record is not a linear_gaussian policy");
    GaussianPolicy p(j.at("action_dim").get<std::size_t>(), j.at("terminal_time").get<double>(),
                     j.at("max_action").get<double>(), 0.0, 0.0);
    p.set_parameters(j.at("parameters").get<std::vector<double>>());
    return p;
  }

  // --- PolicyAgent -----------------------------------------------------------

  PolicyAgent::PolicyAgent(const GaussianPolicy &policy, std::uint64_t seed, bool deterministic)
      : policy_(&policy), engine_(seed), deterministic_(deterministic)
  {
  }

  void PolicyAgent::act(const ObservationBatch &obs, std::span<double> actions)
  {
    const std::size_t d = policy_->action_dim();
    if ( actions.size() != obs.width * d )
      throw std::invalid_argument("policy action buffer has the wrong size");
    const std::size_t qi = field_index(obs.layout, "inventory");
    const std::size_t ti = field_index(obs.layout, "time");
    for ( std::size_t i = 0; i < obs.width; ++i ) {
      const double q = obs.at(i, qi);
      const double t = obs.at(i, ti);
      for ( std::size_t j = 0; j < d; ++j ) {
        const double m = policy_->mean(q, t, j);
        actions[i * d + j] = deterministic_ ? std::clamp(m, 0.0, policy_->max_action())
                                            : m + std::exp(policy_->log_std(j)) * gauss_(engine_);
      }
    }
  }

  // --- rollouts --------------------------------------------------------------

  RolloutBatch rollout(Environment &env, Agent &actor, std::optional<std::uint64_t> episode)
  {
    RolloutBatch b;
    b.width = env.width();
    b.n_steps = static_cast<std::size_t>(env.config().n_steps);
    b.obs_dim = env.obs_dim();
    b.action_dim = env.action_dim();
    b.layout = env.layout();
    b.observations.resize(b.n_steps * b.width * b.obs_dim);
    b.actions.resize(b.n_steps * b.width * b.action_dim);
    b.rewards.resize(b.n_steps * b.width);
    b.total_rewards.assign(b.width, 0.0);

    if ( episode )
      env.reset(*episode);
    else
      env.reset();
    for ( std::size_t k = 0; k < b.n_steps; ++k ) {
      const auto obs = env.observations();
      std::copy(obs.begin(), obs.end(), b.observations.begin() + static_cast<std::ptrdiff_t>(k * b.width * b.obs_dim));
      std::span<double> act(b.actions.data() + k * b.width * b.action_dim, b.width * b.action_dim);
      actor.act(observe(env), act);
      const auto result = env.step(act);
      for ( std::size_t i = 0; i < b.width; ++i ) {
        b.rewards[k * b.width + i] = result.rewards[i];
        b.total_rewards[i] += result.rewards[i];
      }
    }
    return b;
  }

  std::vector<double> episode_returns(Environment &env, Agent &actor, std::optional<std::uint64_t> episode)
  {
    std::vector<double> totals(env.width(), 0.0);
    std::vector<double> act(env.width() * env.action_dim());
    if ( episode )
      env.reset(*episode);
    else
      env.reset();
    while ( !env.finished() ) {
      actor.act(observe(env), act);
      const auto result = env.step(act);
      for ( std::size_t i = 0; i < totals.size(); ++i )
        totals[i] += result.rewards[i];
    }
    return totals;
  }

  // --- policy gradient -------------------------------------------------------

  void RewardNormalizer::observe(std::span<const double> returns)
  {
    for ( double r : returns ) {
      ++count_;
      const double delta = r - mean_;
      mean_ += delta / static_cast<double>(count_);
      m2_ += delta * (r - mean_);
    }
  }

  double RewardNormalizer::scale() const
  {
    if ( count_ < 2 )
      return 1.0;
    const double sd = std::sqrt(m2_ / static_cast<double>(count_ - 1));
    return sd > 1e-8 ? sd : 1.0;
  }

  PgUpdate policy_gradient(const GaussianPolicy &policy, const RolloutBatch &batch, RewardNormalizer *normalizer)
  {
    PgUpdate u;
    u.gradient.assign(policy.parameter_count(), 0.0);
    if ( batch.width == 0 )
      return u;
    if ( batch.action_dim != policy.action_dim() )
      throw std::invalid_argument("rollout batch action dimension does not match the policy");

    double sum = 0.0;
    for ( double r : batch.total_rewards )
      sum += r;
    u.baseline = sum / static_cast<double>(batch.width);
    if ( normalizer ) {
      normalizer->observe(batch.total_rewards);
      u.scale = normalizer->scale();
    }

    const std::size_t qi = field_index(batch.layout, "inventory");
    const std::size_t ti = field_index(batch.layout, "time");
    const double inv_n = 1.0 / static_cast<double>(batch.width);
    for ( std::size_t i = 0; i < batch.width; ++i ) {
      const double advantage = (batch.total_rewards[i] - u.baseline) / u.scale;
      if ( advantage == 0.0 )
        continue;
      for ( std::size_t k = 0; k < batch.n_steps; ++k )
        policy.add_log_density_gradient(batch.observation(k, i, qi), batch.observation(k, i, ti), batch.action(k, i),
                                        advantage * inv_n, u.gradient);
    }
    for ( std::size_t p = 0; p < u.gradient.size(); ++p ) {
      if ( !std::isfinite(u.gradient[p]) ) {
        std::ostringstream msg;
        msg << "policy gradient component " << p << " is " << u.gradient[p] << " (baseline " << u.baseline
            << ", reward scale " << u.scale << ")";
        throw NumericalError(msg.str());
      }
    }
    return u;
  }

  PgUpdate pg_update(GaussianPolicy &policy, const RolloutBatch &batch, double learning_rate,
                     RewardNormalizer *normalizer, AdamState *adam)
  {
    auto u = policy_gradient(policy, batch, normalizer);
    if ( learning_rate == 0.0 )
      return u;
    auto params = policy.parameters();
    if ( adam ) {
      if ( adam->first.size() != params.size() ) {
        adam->first.assign(params.size(), 0.0);
        adam->second.assign(params.size(), 0.0);
        adam->steps = 0;
      }
      ++adam->steps;
      const double c1 = 1.0 - std::pow(adam->beta1, static_cast<double>(adam->steps));
      const double c2 = 1.0 - std::pow(adam->beta2, static_cast<double>(adam->steps));
      for ( std::size_t p = 0; p < params.size(); ++p ) {
        const double g = u.gradient[p];
        adam->first[p] = adam->beta1 * adam->first[p] + (1.0 - adam->beta1) * g;
        adam->second[p] = adam->beta2 * adam->second[p] + (1.0 - adam->beta2) * g * g;
        params[p] += learning_rate * (adam->first[p] / c1) / (std::sqrt(adam->second[p] / c2) + adam->epsilon);
      }
    } else {
      for ( std::size_t p = 0; p < params.size(); ++p )
        params[p] += learning_rate * u.gradient[p];
    }
    policy.set_parameters(params);
    return u;
  }

  // --- training --------------------------------------------------------------

  namespace
  {
    constexpr std::uint64_t kTrainEnvTag = 0x747261696e656e76ull; // "trainenv"
    constexpr std::uint64_t kTrainPolicyTag = 0x747261696e706f6cull;
    constexpr std::uint64_t kEvalTag = 0x6576616c75617465ull;

    double mean_of(std::span<const double> xs)
    {
      double s = 0.0;
      for ( double x : xs )
        s += x;
      return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
    }

    double stddev_of(std::span<const double> xs, double mean)
    {
      if ( xs.size() < 2 )
        return 0.0;
      double s = 0.0;
      for ( double x : xs )
        s += (x - mean) * (x - mean);
      return std::sqrt(s / static_cast<double>(xs.size() - 1));
    }
  } // namespace

  TrainResult train(const EnvironmentConfig &env_config, const TrainConfig &tc)
  {
    if ( env_config.action_type != ActionType::limit )
      throw ConfigError({"policy-gradient training supports the limit action type only"});
    if ( tc.num_trajectories < 1 || tc.num_updates < 1 || !(tc.learning_rate > 0.0) )
      throw ConfigError({"train.num_trajectories and train.num_updates must be >= 1 and train.learning_rate > 0"});

    EnvironmentConfig cfg = env_config;
    cfg.num_trajectories = tc.num_trajectories;
    cfg.master_seed = derive_seed(tc.seed, kTrainEnvTag);
    if ( tc.initial_inventory )
      cfg.initial_inventory = *tc.initial_inventory;
    Environment env(cfg);

    const double depth_cap = env.max_depth();
    TrainResult result;
    result.policy = GaussianPolicy(env.action_dim(), cfg.terminal_time, depth_cap, 0.5 * depth_cap, tc.initial_log_std);

    {
      std::vector<double> lower, upper;
      default_action_bounds(cfg, lower, upper);
      RandomAgent random(lower, upper, derive_seed(tc.seed, kTrainPolicyTag + 1));
      const auto totals = episode_returns(env, random, std::numeric_limits<std::uint64_t>::max());
      result.random_baseline = mean_of(totals);
    }

    PolicyAgent actor(result.policy, derive_seed(tc.seed, kTrainPolicyTag), false);
    RewardNormalizer normalizer;
    AdamState adam;
    int below_random = 0;
    const auto start = std::chrono::steady_clock::now();
    for ( int u = 0; u < tc.num_updates; ++u ) {
      const auto batch = rollout(env, actor, static_cast<std::uint64_t>(u));
      const double m = mean_of(batch.total_rewards);
      pg_update(result.policy, batch, tc.learning_rate, tc.normalize_rewards ? &normalizer : nullptr,
                tc.use_adam ? &adam : nullptr);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.curve.push_back({u, seconds, m, stddev_of(batch.total_rewards, m), std::nullopt});
      if ( tc.eval_every > 0 && (u + 1) % tc.eval_every == 0 ) {
        PolicyAgent greedy(result.policy, 0, true);
        result.curve.back().eval_mean =
            evaluate(env_config, greedy, tc.eval_episodes, evaluation_seed(env_config)).mean;
      }

      below_random = m < result.random_baseline ? below_random + 1 : 0;
      if ( tc.divergence_patience > 0 && below_random >= tc.divergence_patience ) {
        result.diverged = true;
        result.message = "mean reward stayed below the random agent (" + std::to_string(result.random_baseline) +
                         ") for " + std::to_string(below_random) + " consecutive updates";
        break;
      }
      if ( tc.time_budget_seconds > 0.0 && seconds > tc.time_budget_seconds ) {
        result.message = "time budget reached after " + std::to_string(u + 1) + " updates";
        break;
      }
    }
    return result;
  }

  // --- evaluation ------------------------------------------------------------

  std::uint64_t evaluation_seed(const EnvironmentConfig &config)
  {
    return derive_seed(config.master_seed, kEvalTag);
  }

  EvalReport evaluate(const EnvironmentConfig &config, Agent &actor, std::size_t n_episodes, std::uint64_t eval_seed,
                      std::size_t batch_width)
  {
    if ( n_episodes < 1 )
      throw std::invalid_argument("evaluate needs at least one episode");
    batch_width = std::max<std::size_t>(batch_width, 1);
    std::vector<double> totals;
    totals.reserve(n_episodes);
    for ( std::size_t offset = 0; offset < n_episodes; offset += batch_width ) {
      EnvironmentConfig cfg = config;
      cfg.num_trajectories = std::min(batch_width, n_episodes - offset);
      cfg.master_seed = eval_seed;
      Environment env(cfg, offset);
      const auto r = episode_returns(env, actor, 0);
      totals.insert(totals.end(), r.begin(), r.end());
    }
    EvalReport rep;
    rep.episodes = totals.size();
    rep.mean = mean_of(totals);
    rep.std_error = stddev_of(totals, rep.mean) / std::sqrt(static_cast<double>(totals.size()));
    return rep;
  }

  std::vector<double> fixed_spread_grid(const EnvironmentConfig &config, std::size_t count)
  {
    const double hi = max_depth(config.fill);
    std::vector<double> out(count);
    for ( std::size_t k = 0; k < count; ++k )
      out[k] = hi * static_cast<double>(k + 1) / static_cast<double>(count);
    return out;
  }

  ReferenceScores reference_scores(const EnvironmentConfig &config, std::size_t n_episodes, std::uint64_t eval_seed)
  {
    ReferenceScores ref;
    auto cj = make_agent(CarteaJaimungalSpec{}, config, 0);
    ref.cj = evaluate(config, *cj, n_episodes, eval_seed).mean;
    ref.best_fixed = -std::numeric_limits<double>::infinity();
    for ( double h : fixed_spread_grid(config) ) {
      FixedSpreadAgent agent(h, config.action_type);
      const double m = evaluate(config, agent, n_episodes, eval_seed).mean;
      if ( m > ref.best_fixed ) {
        ref.best_fixed = m;
        ref.best_half_spread = h;
      }
    }
    return ref;
  }

  double normalized_score(double mean, const ReferenceScores &ref)
  {
    return (mean - ref.best_fixed) / (ref.cj - ref.best_fixed);
  }

} // namespace mbt
