#include "mbt/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbt/errors.hpp"

namespace mbt
{

  namespace
  {
    void check_buffer(const ObservationBatch &obs, std::span<double> actions, std::size_t dim)
    {
      if ( obs.values.size() != obs.width * obs.dim() )
        throw std::invalid_argument("observation buffer does not match its layout");
      if ( actions.size() != obs.width * dim )
        throw std::invalid_argument("action buffer has " + std::to_string(actions.size()) + " values, expected " +
                                    std::to_string(obs.width * dim));
    }
  } // namespace

  ObservationBatch observe(const Environment &env)
  {
    return ObservationBatch{env.observations(), env.width(), env.layout()};
  }

  // --- Random ----------------------------------------------------------------

  RandomAgent::RandomAgent(std::vector<double> lower, std::vector<double> upper, std::uint64_t seed)
      : lower_(std::move(lower)), upper_(std::move(upper)), engine_(seed)
  {
    if ( lower_.size() != upper_.size() || lower_.empty() )
      throw std::invalid_argument("random agent bounds must be non-empty and of equal length");
    for ( std::size_t i = 0; i < lower_.size(); ++i )
      if ( !(lower_[i] <= upper_[i]) )
        throw std::invalid_argument("random agent bounds must satisfy lower <= upper");
  }

  void RandomAgent::act(const ObservationBatch &obs, std::span<double> actions)
  {
    const std::size_t d = lower_.size();
    check_buffer(obs, actions, d);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for ( std::size_t i = 0; i < obs.width; ++i )
      for ( std::size_t j = 0; j < d; ++j )
        actions[i * d + j] = lower_[j] + (upper_[j] - lower_[j]) * unit(engine_);
  }

  // --- FixedAction -----------------------------------------------------------

  FixedActionAgent::FixedActionAgent(std::vector<double> action) : action_(std::move(action))
  {
    if ( action_.empty() )
      throw std::invalid_argument("fixed action must be non-empty");
  }

  void FixedActionAgent::act(const ObservationBatch &obs, std::span<double> actions)
  {
    check_buffer(obs, actions, action_.size());
    for ( std::size_t i = 0; i < obs.width; ++i )
      std::copy(action_.begin(), action_.end(), actions.begin() + static_cast<std::ptrdiff_t>(i * action_.size()));
  }

  // --- FixedSpread -----------------------------------------------------------

  FixedSpreadAgent::FixedSpreadAgent(double half_spread, ActionType action_type)
      : half_spread_(half_spread), action_type_(action_type)
  {
    if ( !(half_spread >= 0.0) )
      throw std::invalid_argument("half_spread must be >= 0");
    if ( action_type == ActionType::touch )
      throw std::invalid_argument("fixed spread agent needs a depth-based action type");
  }

  void FixedSpreadAgent::act(const ObservationBatch &obs, std::span<double> actions)
  {
    const std::size_t d = action_dim();
    check_buffer(obs, actions, d);
    for ( std::size_t i = 0; i < obs.width; ++i ) {
      actions[i * d] = half_spread_;
      actions[i * d + 1] = half_spread_;
      for ( std::size_t j = 2; j < d; ++j )
        actions[i * d + j] = 0.0;
    }
  }

  // --- Avellaneda-Stoikov ----------------------------------------------------

  Quotes as_quotes(const AsParams &p, double /*midprice*/, double inventory, double t)
  {
    const double remaining = std::max(p.terminal_time - t, 0.0);
    const double risk = p.risk_aversion * p.volatility * p.volatility * remaining;
    const double spread = risk + (2.0 / p.risk_aversion) * std::log1p(p.risk_aversion / p.fill_exponent);
    const double skew = inventory * risk;
    return Quotes{std::max(0.5 * spread + skew, 0.0), std::max(0.5 * spread - skew, 0.0)};
  }

  AvellanedaStoikovAgent::AvellanedaStoikovAgent(AsParams params, ActionType action_type)
      : params_(params), action_type_(action_type)
  {
    if ( !(params.risk_aversion > 0.0) || !(params.fill_exponent > 0.0) )
      throw std::invalid_argument("Avellaneda-Stoikov agent needs risk_aversion > 0 and fill_exponent > 0");
    if ( action_type == ActionType::touch )
      throw std::invalid_argument("Avellaneda-Stoikov agent needs a depth-based action type");
  }

  void AvellanedaStoikovAgent::act(const ObservationBatch &obs, std::span<double> actions)
  {
    const std::size_t d = action_dim();
    check_buffer(obs, actions, d);
    const std::size_t qi = field_index(obs.layout, "inventory");
    const std::size_t ti = field_index(obs.layout, "time");
    const std::size_t si = field_index(obs.layout, "midprice");
    for ( std::size_t i = 0; i < obs.width; ++i ) {
      const auto quotes = as_quotes(params_, obs.at(i, si), obs.at(i, qi), obs.at(i, ti));
      actions[i * d] = quotes.bid;
      actions[i * d + 1] = quotes.ask;
      for ( std::size_t j = 2; j < d; ++j )
        actions[i * d + j] = 0.0;
    }
  }

  // --- Cartea-Jaimungal ------------------------------------------------------

  CarteaJaimungalAgent::CarteaJaimungalAgent(std::shared_ptr<const CjSolution> solution, double max_depth)
      : solution_(std::move(solution)), max_depth_(max_depth)
  {
    if ( !solution_ )
      throw std::invalid_argument("Cartea-Jaimungal agent needs a solution");
  }

  void CarteaJaimungalAgent::act(const ObservationBatch &obs, std::span<double> actions)
  {
    check_buffer(obs, actions, 2);
    const std::size_t qi = field_index(obs.layout, "inventory");
    const std::size_t ti = field_index(obs.layout, "time");
    auto admissible = [this](double depth) { return std::isnan(depth) ? max_depth_ : std::clamp(depth, 0.0, max_depth_); };
    for ( std::size_t i = 0; i < obs.width; ++i ) {
      const auto quotes = cj_quotes(*solution_, static_cast<int>(std::lround(obs.at(i, qi))), obs.at(i, ti));
      actions[i * 2] = admissible(quotes.bid);
      actions[i * 2 + 1] = admissible(quotes.ask);
    }
  }

  // --- factory ---------------------------------------------------------------

  void default_action_bounds(const EnvironmentConfig &config, std::vector<double> &lower, std::vector<double> &upper)
  {
    const std::size_t d = action_dim(config.action_type);
    lower.assign(d, 0.0);
    upper.assign(d, 1.0);
    if ( config.action_type != ActionType::touch ) {
      upper[0] = max_depth(config.fill);
      upper[1] = upper[0];
    }
  }

  std::unique_ptr<Agent> make_agent(const AgentSpec &spec, const EnvironmentConfig &config, std::uint64_t seed)
  {
    const std::size_t d = action_dim(config.action_type);
    auto fail = [](std::string msg) -> std::unique_ptr<Agent> { throw ConfigError({std::move(msg)}); };

    if ( const auto *r = std::get_if<RandomSpec>(&spec) ) {
      std::vector<double> lower = r->lower, upper = r->upper;
      if ( lower.empty() && upper.empty() )
        default_action_bounds(config, lower, upper);
      if ( lower.size() != d || upper.size() != d )
        return fail("agent.lower/agent.upper must have " + std::to_string(d) + " entries for this action type");
      return std::make_unique<RandomAgent>(std::move(lower), std::move(upper), seed);
    }
    if ( const auto *f = std::get_if<FixedActionSpec>(&spec) ) {
      if ( f->action.size() != d )
        return fail("agent.action must have " + std::to_string(d) + " entries for this action type");
      return std::make_unique<FixedActionAgent>(f->action);
    }
    if ( const auto *f = std::get_if<FixedSpreadSpec>(&spec) ) {
      if ( config.action_type == ActionType::touch )
        return fail("fixed_spread agent is not available for the touch action type");
      if ( !(f->half_spread >= 0.0) )
        return fail("agent.half_spread must be >= 0");
      return std::make_unique<FixedSpreadAgent>(f->half_spread, config.action_type);
    }
    if ( const auto *a = std::get_if<AvellanedaStoikovSpec>(&spec) ) {
      if ( config.action_type == ActionType::touch )
        return fail("avellaneda_stoikov agent is not available for the touch action type");
      AsParams p = a->params;
      if ( a->from_env ) {
        p.terminal_time = config.terminal_time;
        if ( const auto *fill = std::get_if<ExponentialFill>(&config.fill) )
          p.fill_exponent = fill->fill_exponent;
        std::visit([&p](const auto &m) { p.volatility = m.volatility; }, config.midprice);
      }
      if ( !(p.risk_aversion > 0.0) )
        return fail("agent.risk_aversion must be > 0");
      return std::make_unique<AvellanedaStoikovAgent>(p, config.action_type);
    }
    const auto params = cj_params_from_config(config);
    return std::make_unique<CarteaJaimungalAgent>(std::make_shared<const CjSolution>(cj_solve(params)),
                                                  max_depth(config.fill));
  }

} // namespace mbt
