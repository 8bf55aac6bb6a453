#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mbt/random.hpp"

namespace mbt
{

  // ---------------------------------------------------------------------------
  // Arrival models. "bid" events are sell market orders hitting the bid side
  // (counting process M-), "ask" events are buy orders lifting the ask (M+).
  // ---------------------------------------------------------------------------

  struct PoissonArrival
  {
    double lambda_bid = 140.0;
    double lambda_ask = 140.0;
  };

  /// Self-exciting intensity per side:
  ///   d lambda = reversion * (baseline - lambda) dt + jump * dM.
  /// Both sides share the parameters but evolve independently.
  struct HawkesArrival
  {
    double baseline = 10.0;
    double reversion = 8.0;
    double jump = 2.0;
    double initial_intensity = 10.0;

    /// Long-run mean intensity of the continuous-time process; requires jump < reversion.
    double stationary_intensity() const { return reversion * baseline / (reversion - jump); }
  };

  using ArrivalSpec = std::variant<PoissonArrival, HawkesArrival>;

  /// Probability of at least one event in a step of length `dt` at constant intensity.
  double arrival_probability(double intensity, double dt);

  /// Exact exponential relaxation towards the baseline over `dt`, then the jump
  /// for an event observed in that step.
  double update_hawkes_intensity(const HawkesArrival &spec, double intensity, bool arrival, double dt);

  // ---------------------------------------------------------------------------
  // Midprice models.
  // ---------------------------------------------------------------------------

  struct BrownianMidprice
  {
    double initial_price = 100.0;
    double drift = 0.0;
    double volatility = 2.0;
  };

  struct GeometricBrownianMidprice
  {
    double initial_price = 100.0;
    double drift = 0.0;
    double volatility = 0.2;
  };

  /// Arithmetic Brownian motion with permanent impact from order-flow events.
  struct BrownianJumpMidprice
  {
    double initial_price = 100.0;
    double volatility = 2.0;
    double impact_bid = 0.0;
    double impact_ask = 0.0;
  };

  /// The midprice itself mean-reverts.
  struct OuMidprice
  {
    double initial_price = 100.0;
    double reversion = 1.0;
    double mean_price = 100.0;
    double volatility = 1.0;
  };

  /// Mean-reverting midprice whose level also jumps on order-flow events.
  struct OuJumpMidprice
  {
    double initial_price = 100.0;
    double reversion = 1.0;
    double mean_price = 100.0;
    double volatility = 1.0;
    double impact_bid = 0.0;
    double impact_ask = 0.0;
  };

  /// dS = alpha dt + sigma_S dW_S with an Ornstein-Uhlenbeck alpha signal.
  struct OuDriftMidprice
  {
    double initial_price = 100.0;
    double volatility = 1.0;
    double alpha_initial = 0.0;
    double alpha_reversion = 1.0;
    double alpha_mean = 0.0;
    double alpha_volatility = 1.0;
  };

  /// As OuDriftMidprice, with order-flow jumps applied to alpha.
  struct OuJumpDriftMidprice
  {
    double initial_price = 100.0;
    double volatility = 1.0;
    double alpha_initial = 0.0;
    double alpha_reversion = 1.0;
    double alpha_mean = 0.0;
    double alpha_volatility = 1.0;
    double impact_bid = 0.0;
    double impact_ask = 0.0;
  };

  using MidpriceSpec = std::variant<BrownianMidprice, GeometricBrownianMidprice, BrownianJumpMidprice,
                                    OuMidprice, OuJumpMidprice, OuDriftMidprice, OuJumpDriftMidprice>;

  double initial_price(const MidpriceSpec &spec);
  bool has_alpha(const MidpriceSpec &spec);

  /// Mean and standard deviation of an OU variable after `dt`, starting at `x`.
  struct GaussianMoments
  {
    double mean;
    double stddev;
  };
  GaussianMoments ou_transition(double x, double reversion, double level, double volatility, double dt);

  // ---------------------------------------------------------------------------
  // Fill probability models.
  // ---------------------------------------------------------------------------

  struct ExponentialFill
  {
    double fill_exponent = 1.5;
  };

  struct TriangularFill
  {
    double max_fill_depth = 1.0;
  };

  /// 1 / (1 + (multiplier * depth)^exponent).
  struct PowerFill
  {
    double fill_exponent = 1.0;
    double fill_multiplier = 1.0;
  };

  using FillSpec = std::variant<ExponentialFill, TriangularFill, PowerFill>;

  /// Clamped to 1 for negative depth.
  double fill_probability(const FillSpec &spec, double depth);

  /// Depth at which the fill probability drops to 1%.
  double max_depth(const FillSpec &spec);

  // ---------------------------------------------------------------------------
  // Batched process state.
  // ---------------------------------------------------------------------------

  class ArrivalProcess
  {
  public:
    ArrivalProcess(ArrivalSpec spec, double dt, std::size_t width);

    void reset();

    /// Draws one uniform per side per slot, bid side first.
    void sample(RandomSource &rng, std::span<std::uint8_t> bid, std::span<std::uint8_t> ask) const;

    /// Advance the intensities over the step that produced `bid`/`ask`.
    void update(std::span<const std::uint8_t> bid, std::span<const std::uint8_t> ask);

    bool stochastic_intensity() const { return std::holds_alternative<HawkesArrival>(spec_); }
    std::span<const double> intensity_bid() const { return intensity_bid_; }
    std::span<const double> intensity_ask() const { return intensity_ask_; }
    const ArrivalSpec &spec() const { return spec_; }

  private:
    ArrivalSpec spec_;
    double dt_;
    double poisson_p_bid_ = 0.0;
    double poisson_p_ask_ = 0.0;
    std::vector<double> intensity_bid_;
    std::vector<double> intensity_ask_;
  };

  class MidpriceProcess
  {
  public:
    MidpriceProcess(MidpriceSpec spec, double dt, std::size_t width);

    void reset();

    /// Diffusion over one step followed by the jump impact of this step's
    /// order-flow events (ignored by models without impact terms).
    void update(RandomSource &rng, std::span<const std::uint8_t> arrival_bid,
                std::span<const std::uint8_t> arrival_ask);

    std::span<const double> price() const { return price_; }
    std::span<const double> alpha() const { return alpha_; }
    bool has_alpha() const { return mbt::has_alpha(spec_); }
    const MidpriceSpec &spec() const { return spec_; }

  private:
    struct DriftTransition
    {
      double alpha_decay;
      double alpha_sd;
      double integral_gain; // multiplies (alpha - mean)
      double integral_sd_given_alpha;
      double integral_on_alpha_noise; // regression of integral noise on alpha noise
    };

    MidpriceSpec spec_;
    double dt_;
    std::vector<double> price_;
    std::vector<double> alpha_;
    DriftTransition drift_{};
  };

  /// fill = arrival AND Bernoulli(fill_probability(depth)). Draws one uniform
  /// per side per slot whether or not an arrival occurred.
  void sample_fills(const FillSpec &spec, std::span<const double> depth_bid, std::span<const double> depth_ask,
                    std::span<const std::uint8_t> arrival_bid, std::span<const std::uint8_t> arrival_ask,
                    RandomSource &rng, std::span<std::uint8_t> fill_bid, std::span<std::uint8_t> fill_ask);

} // namespace mbt
