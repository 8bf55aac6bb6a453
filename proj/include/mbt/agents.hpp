#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mbt/cartea_jaimungal.hpp"
#include "mbt/config.hpp"
#include "mbt/environment.hpp"

namespace mbt
{

  /// A row-major observation batch together with its column layout.
  struct ObservationBatch
  {
    std::span<const double> values;
    std::size_t width;
    std::span<const FieldDescriptor> layout;

    std::size_t dim() const { return layout.size(); }
    double at(std::size_t row, std::size_t column) const { return values[row * layout.size() + column]; }
  };

  ObservationBatch observe(const Environment &env);

  /// Maps observations to actions for a whole batch.
  class Agent
  {
  public:
    virtual ~Agent() = default;

    /// Write width x action_dim() values into `actions`. Throws
    /// std::invalid_argument when the observation layout lacks a field the
    /// agent reads or the buffer has the wrong size.
    virtual void act(const ObservationBatch &obs, std::span<double> actions) = 0;
    virtual std::size_t action_dim() const = 0;
    virtual std::string name() const = 0;
  };

  class RandomAgent final : public Agent
  {
  public:
    RandomAgent(std::vector<double> lower, std::vector<double> upper, std::uint64_t seed);

    void act(const ObservationBatch &obs, std::span<double> actions) override;
    std::size_t action_dim() const override { return lower_.size(); }
    std::string name() const override { return "random"; }

  private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::mt19937_64 engine_;
  };

  class FixedActionAgent final : public Agent
  {
  public:
    explicit FixedActionAgent(std::vector<double> action);

    void act(const ObservationBatch &obs, std::span<double> actions) override;
    std::size_t action_dim() const override { return action_.size(); }
    std::string name() const override { return "fixed_action"; }

  private:
    std::vector<double> action_;
  };

  /// Quotes both sides at the same distance from the midprice.
  class FixedSpreadAgent final : public Agent
  {
  public:
    FixedSpreadAgent(double half_spread, ActionType action_type);

    void act(const ObservationBatch &obs, std::span<double> actions) override;
    std::size_t action_dim() const override { return mbt::action_dim(action_type_); }
    std::string name() const override { return "fixed_spread"; }
    double half_spread() const { return half_spread_; }

  private:
    double half_spread_;
    ActionType action_type_;
  };

  struct AsParams
  {
    double risk_aversion = 0.1;
    double volatility = 2.0;
    double fill_exponent = 1.5;
    double terminal_time = 1.0;
  };

  /// Reservation price r = S - q gamma sigma^2 (T - t) and total spread
  /// gamma sigma^2 (T - t) + (2 / gamma) ln(1 + gamma / kappa), returned as
  /// depths from S, negative depths clipped to zero.
  Quotes as_quotes(const AsParams &params, double midprice, double inventory, double t);

  class AvellanedaStoikovAgent final : public Agent
  {
  public:
    AvellanedaStoikovAgent(AsParams params, ActionType action_type);

    void act(const ObservationBatch &obs, std::span<double> actions) override;
    std::size_t action_dim() const override { return mbt::action_dim(action_type_); }
    std::string name() const override { return "avellaneda_stoikov"; }

  private:
    AsParams params_;
    ActionType action_type_;
  };

  /// Reads depths off a precomputed omega table. Sides that must not be quoted
  /// and depths outside [0, max_depth] are sent as the nearest admissible depth.
  class CarteaJaimungalAgent final : public Agent
  {
  public:
    CarteaJaimungalAgent(std::shared_ptr<const CjSolution> solution, double max_depth);

    void act(const ObservationBatch &obs, std::span<double> actions) override;
    std::size_t action_dim() const override { return 2; }
    std::string name() const override { return "cj"; }
    const CjSolution &solution() const { return *solution_; }

  private:
    std::shared_ptr<const CjSolution> solution_;
    double max_depth_;
  };

  // ---------------------------------------------------------------------------
  // Declarative agent description, e.g. from the [agent] config section.
  // ---------------------------------------------------------------------------

  struct RandomSpec
  {
    std::vector<double> lower; // empty: derive from the environment
    std::vector<double> upper;
  };
  struct FixedActionSpec
  {
    std::vector<double> action;
  };
  struct FixedSpreadSpec
  {
    double half_spread = 1.0;
  };
  struct AvellanedaStoikovSpec
  {
    AsParams params;
    bool from_env = true; // take sigma, kappa and T from the environment
  };
  struct CarteaJaimungalSpec
  {
  };

  using AgentSpec = std::variant<RandomSpec, FixedActionSpec, FixedSpreadSpec, AvellanedaStoikovSpec,
                                 CarteaJaimungalSpec>;

  /// Default action bounds: [0, max_depth] for depths, [0, 1] for binary flags.
  void default_action_bounds(const EnvironmentConfig &config, std::vector<double> &lower, std::vector<double> &upper);

  /// Build an agent for the given environment. Throws ConfigError when the
  /// agent cannot act in that environment.
  std::unique_ptr<Agent> make_agent(const AgentSpec &spec, const EnvironmentConfig &config, std::uint64_t seed);

} // namespace mbt
