#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mbt/agents.hpp"
#include "mbt/config.hpp"
#include "mbt/environment.hpp"

namespace mbt
{

  /// Linear-Gaussian policy over depths. Features are [1, q, T - t, q (T - t)];
  /// each action component has its own weight row and log standard deviation.
  class GaussianPolicy
  {
  public:
    static constexpr std::size_t kFeatures = 4;
    static constexpr double kMinLogStd = -5.0;
    static constexpr double kMaxLogStd = 2.0;

    GaussianPolicy() = default;
    GaussianPolicy(std::size_t action_dim, double terminal_time, double max_action, double initial_mean,
                   double initial_log_std);

    std::size_t action_dim() const { return log_std_.size(); }
    std::size_t parameter_count() const { return weights_.size() + log_std_.size(); }
    double terminal_time() const { return terminal_time_; }
    double max_action() const { return max_action_; }

    std::array<double, kFeatures> features(double inventory, double t) const;
    double mean(double inventory, double t, std::size_t component) const;
    double log_std(std::size_t component) const { return log_std_[component]; }

    /// Sum over components of log N(action_j; mean_j, std_j^2), unclipped.
    double log_density(double inventory, double t, std::span<const double> action) const;
    /// Gradient of log_density with respect to parameters() (accumulated into `out`).
    void add_log_density_gradient(double inventory, double t, std::span<const double> action, double scale,
                                  std::span<double> out) const;

    /// Weights row-major (component, feature), then log-stds.
    std::vector<double> parameters() const;
    /// Log-stds are clamped to [kMinLogStd, kMaxLogStd].
    void set_parameters(std::span<const double> values);

  private:
    double terminal_time_ = 1.0;
    double max_action_ = 1.0;
    std::vector<double> weights_;
    std::vector<double> log_std_;
  };

  /// Serialized as a flat JSON record.
  std::string policy_to_json(const GaussianPolicy &policy);
  GaussianPolicy policy_from_json(const std::string &text);

  /// Acts with a GaussianPolicy. Stochastic mode samples unclipped actions
  /// (the environment clips depths); deterministic mode returns the clipped mean.
  class PolicyAgent final : public Agent
  {
  public:
    PolicyAgent(const GaussianPolicy &policy, std::uint64_t seed, bool deterministic);

    void act(const ObservationBatch &obs, std::span<double> actions) override;
    std::size_t action_dim() const override { return policy_->action_dim(); }
    std::string name() const override { return "policy"; }

  private:
    const GaussianPolicy *policy_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> gauss_;
    bool deterministic_;
  };

  /// One full episode for every trajectory of the batch.
  struct RolloutBatch
  {
    std::size_t width = 0;
    std::size_t n_steps = 0;
    std::size_t obs_dim = 0;
    std::size_t action_dim = 0;
    std::vector<FieldDescriptor> layout;
    std::vector<double> observations; // (step, trajectory, obs_dim), observed before acting
    std::vector<double> actions;      // (step, trajectory, action_dim), as emitted by the actor
    std::vector<double> rewards;      // (step, trajectory)
    std::vector<double> total_rewards; // per trajectory

    double observation(std::size_t step, std::size_t traj, std::size_t col) const
    {
      return observations[(step * width + traj) * obs_dim + col];
    }
    std::span<const double> action(std::size_t step, std::size_t traj) const
    {
      return std::span<const double>(actions).subspan((step * width + traj) * action_dim, action_dim);
    }
  };

  /// Reset `env` (next episode, or the given one) and run it to the horizon.
  RolloutBatch rollout(Environment &env, Agent &actor, std::optional<std::uint64_t> episode = std::nullopt);

  /// Total reward per trajectory without retaining the trajectory tensors.
  std::vector<double> episode_returns(Environment &env, Agent &actor, std::optional<std::uint64_t> episode = std::nullopt);

  /// Running standard deviation of episode returns (Welford).
  class RewardNormalizer
  {
  public:
    void observe(std::span<const double> returns);
    double scale() const;

  private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
  };

  /// Adam moments for the policy parameters.
  struct AdamState
  {
    std::vector<double> first;
    std::vector<double> second;
    std::size_t steps = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  struct PgUpdate
  {
    std::vector<double> gradient; // ascent direction before the optimizer
    double baseline = 0.0;
    double scale = 1.0;
  };

  /// REINFORCE estimate mean_i ((R_i - mean R) / scale) sum_t grad log pi(a_it | s_it)
  /// with `scale` from `normalizer` (1 if null). Throws NumericalError on a
  /// non-finite gradient.
  PgUpdate policy_gradient(const GaussianPolicy &policy, const RolloutBatch &batch, RewardNormalizer *normalizer);

  /// Compute the gradient and apply one ascent step: Adam when `adam` is
  /// given, plain gradient ascent otherwise.
  PgUpdate pg_update(GaussianPolicy &policy, const RolloutBatch &batch, double learning_rate,
                     RewardNormalizer *normalizer = nullptr, AdamState *adam = nullptr);

  struct TrainConfig
  {
    std::size_t num_trajectories = 1000;
    int num_updates = 300;
    double learning_rate = 0.05;
    bool use_adam = true;
    bool normalize_rewards = true;
    int eval_every = 0; // 0: never
    std::size_t eval_episodes = 10000;
    std::uint64_t seed = 0;
    double initial_log_std = 0.0;
    std::optional<InventoryRange> initial_inventory; // overrides the env's for training episodes
    int divergence_patience = 50;
    double time_budget_seconds = 0.0; // 0: unlimited
  };

  struct LearningCurvePoint
  {
    int update;
    double seconds;
    double mean_reward;
    double std_reward;
    std::optional<double> eval_mean; // deterministic policy on evaluation episodes
  };

  struct TrainResult
  {
    GaussianPolicy policy;
    std::vector<LearningCurvePoint> curve;
    double random_baseline = 0.0;
    bool diverged = false;
    std::string message;
  };

  TrainResult train(const EnvironmentConfig &env_config, const TrainConfig &train_config);

  struct EvalReport
  {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t episodes = 0;
    std::optional<double> normalized_score;
  };

  /// Scores that anchor the normalized score: the Cartea-Jaimungal agent (1)
  /// and the best of 20 fixed spreads over (0, max_depth] (0).
  struct ReferenceScores
  {
    double cj = 0.0;
    double best_fixed = 0.0;
    double best_half_spread = 0.0;
  };

  /// Seed used for evaluation episodes; disjoint from training streams.
  std::uint64_t evaluation_seed(const EnvironmentConfig &config);

  /// Run `n_episodes` episodes of `actor` on streams 0..n-1 of `eval_seed`,
  /// in batches of at most `batch_width`. Same seed, same episodes.
  EvalReport evaluate(const EnvironmentConfig &config, Agent &actor, std::size_t n_episodes, std::uint64_t eval_seed,
                      std::size_t batch_width = 10000);

  std::vector<double> fixed_spread_grid(const EnvironmentConfig &config, std::size_t count = 20);

  ReferenceScores reference_scores(const EnvironmentConfig &config, std::size_t n_episodes, std::uint64_t eval_seed);

  double normalized_score(double mean, const ReferenceScores &ref);

} // namespace mbt
