#include "mbt/processes.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace mbt
{

  namespace
  {
    template <class... Ts>
    struct overloaded : Ts...
    {
      using Ts::operator()...;
    };
    template <class... Ts>
    overloaded(Ts...) -> overloaded<Ts...>;

    // x - 2(1 - e^-x) + (1 - e^-2x)/2, the scaled variance of the time
    // integral of an OU process over one step. Series below 1e-4 to avoid
    // cancellation.
    double integrated_ou_variance_factor(double x)
    {
      if ( x < 1e-4 )
        return x * x * x / 3.0 - x * x * x * x / 4.0 + 7.0 * std::pow(x, 5) / 60.0;
      const double one_minus_e = -std::expm1(-x);
      const double one_minus_e2 = -std::expm1(-2.0 * x);
      return x - 2.0 * one_minus_e + 0.5 * one_minus_e2;
    }
  } // namespace

  double arrival_probability(double intensity, double dt)
  {
    if ( intensity <= 0.0 )
      return 0.0;
    return -std::expm1(-intensity * dt);
  }

  double update_hawkes_intensity(const HawkesArrival &spec, double intensity, bool arrival, double dt)
  {
    const double decay = std::exp(-spec.reversion * dt);
    return spec.baseline + (intensity - spec.baseline) * decay + (arrival ? spec.jump : 0.0);
  }

  double initial_price(const MidpriceSpec &spec)
  {
    return std::visit([](const auto &s) { return s.initial_price; }, spec);
  }

  bool has_alpha(const MidpriceSpec &spec)
  {
    return std::holds_alternative<OuDriftMidprice>(spec) || std::holds_alternative<OuJumpDriftMidprice>(spec);
  }

  GaussianMoments ou_transition(double x, double reversion, double level, double volatility, double dt)
  {
    if ( reversion == 0.0 )
      return {x, volatility * std::sqrt(dt)};
    const double decay = std::exp(-reversion * dt);
    const double var = volatility * volatility * (-std::expm1(-2.0 * reversion * dt)) / (2.0 * reversion);
    return {level + (x - level) * decay, std::sqrt(var)};
  }

  double fill_probability(const FillSpec &spec, double depth)
  {
    return std::visit(overloaded{
                          [depth](const ExponentialFill &f) {
                            if ( depth <= 0.0 )
                              return 1.0;
                            return std::exp(-f.fill_exponent * depth);
                          },
                          [depth](const TriangularFill &f) {
                            if ( depth < 0.0 )
                              return 1.0;
                            if ( depth > f.max_fill_depth )
                              return 0.0;
                            return 1.0 - depth / f.max_fill_depth;
                          },
                          [depth](const PowerFill &f) {
                            if ( depth <= 0.0 )
                              return 1.0;
                            return 1.0 / (1.0 + std::pow(f.fill_multiplier * depth, f.fill_exponent));
                          },
                      },
                      spec);
  }

  double max_depth(const FillSpec &spec)
  {
    return std::visit(overloaded{
                          [](const ExponentialFill &f) { return std::log(100.0) / f.fill_exponent; },
                          [](const TriangularFill &f) { return 0.99 * f.max_fill_depth; },
                          [](const PowerFill &f) { return std::pow(99.0, 1.0 / f.fill_exponent) / f.fill_multiplier; },
                      },
                      spec);
  }

  // --- ArrivalProcess --------------------------------------------------------

  ArrivalProcess::ArrivalProcess(ArrivalSpec spec, double dt, std::size_t width)
      : spec_(spec), dt_(dt), intensity_bid_(width), intensity_ask_(width)
  {
    if ( const auto *p = std::get_if<PoissonArrival>(&spec_) ) {
      poisson_p_bid_ = arrival_probability(p->lambda_bid, dt_);
      poisson_p_ask_ = arrival_probability(p->lambda_ask, dt_);
    }
    reset();
  }

  void ArrivalProcess::reset()
  {
    if ( const auto *p = std::get_if<PoissonArrival>(&spec_) ) {
      std::fill(intensity_bid_.begin(), intensity_bid_.end(), p->lambda_bid);
      std::fill(intensity_ask_.begin(), intensity_ask_.end(), p->lambda_ask);
    } else {
      const auto &h = std::get<HawkesArrival>(spec_);
      std::fill(intensity_bid_.begin(), intensity_bid_.end(), h.initial_intensity);
      std::fill(intensity_ask_.begin(), intensity_ask_.end(), h.initial_intensity);
    }
  }

  void ArrivalProcess::sample(RandomSource &rng, std::span<std::uint8_t> bid, std::span<std::uint8_t> ask) const
  {
    const std::size_t n = intensity_bid_.size();
    assert(bid.size() == n && ask.size() == n && rng.width() == n);
    if ( !stochastic_intensity() ) {
      for ( std::size_t i = 0; i < n; ++i ) {
        bid[i] = rng.uniform(i) < poisson_p_bid_;
        ask[i] = rng.uniform(i) < poisson_p_ask_;
      }
      return;
    }
    for ( std::size_t i = 0; i < n; ++i ) {
      bid[i] = rng.uniform(i) < arrival_probability(intensity_bid_[i], dt_);
      ask[i] = rng.uniform(i) < arrival_probability(intensity_ask_[i], dt_);
    }
  }

  void ArrivalProcess::update(std::span<const std::uint8_t> bid, std::span<const std::uint8_t> ask)
  {
    const auto *h = std::get_if<HawkesArrival>(&spec_);
    if ( h == nullptr )
      return;
    const double decay = std::exp(-h->reversion * dt_);
    for ( std::size_t i = 0; i < intensity_bid_.size(); ++i ) {
      intensity_bid_[i] = h->baseline + (intensity_bid_[i] - h->baseline) * decay + (bid[i] ? h->jump : 0.0);
      intensity_ask_[i] = h->baseline + (intensity_ask_[i] - h->baseline) * decay + (ask[i] ? h->jump : 0.0);
    }
  }

  // --- MidpriceProcess -------------------------------------------------------

  MidpriceProcess::MidpriceProcess(MidpriceSpec spec, double dt, std::size_t width)
      : spec_(spec), dt_(dt), price_(width), alpha_(mbt::has_alpha(spec) ? width : 0)
  {
    auto set_drift = [this](double k, double sigma) {
      const double x = k * dt_;
      DriftTransition d{};
      double var_alpha, var_integral, cov;
      if ( x == 0.0 ) {
        d.alpha_decay = 1.0;
        d.integral_gain = dt_;
        var_alpha = sigma * sigma * dt_;
        var_integral = sigma * sigma * dt_ * dt_ * dt_ / 3.0;
        cov = sigma * sigma * dt_ * dt_ / 2.0;
      } else {
        const double one_minus_e = -std::expm1(-x);
        d.alpha_decay = std::exp(-x);
        d.integral_gain = one_minus_e / k;
        var_alpha = sigma * sigma * (-std::expm1(-2.0 * x)) / (2.0 * k);
        var_integral = sigma * sigma * integrated_ou_variance_factor(x) / (k * k * k);
        cov = sigma * sigma * one_minus_e * one_minus_e / (2.0 * k * k);
      }
      d.alpha_sd = std::sqrt(var_alpha);
      d.integral_on_alpha_noise = var_alpha > 0.0 ? cov / var_alpha : 0.0;
      const double residual = var_alpha > 0.0 ? var_integral - cov * cov / var_alpha : 0.0;
      d.integral_sd_given_alpha = std::sqrt(std::max(residual, 0.0));
      drift_ = d;
    };
    if ( const auto *s = std::get_if<OuDriftMidprice>(&spec_) )
      set_drift(s->alpha_reversion, s->alpha_volatility);
    else if ( const auto *s = std::get_if<OuJumpDriftMidprice>(&spec_) )
      set_drift(s->alpha_reversion, s->alpha_volatility);
    reset();
  }

  void MidpriceProcess::reset()
  {
    std::fill(price_.begin(), price_.end(), initial_price(spec_));
    std::visit(overloaded{
                   [this](const OuDriftMidprice &s) { std::fill(alpha_.begin(), alpha_.end(), s.alpha_initial); },
                   [this](const OuJumpDriftMidprice &s) { std::fill(alpha_.begin(), alpha_.end(), s.alpha_initial); },
                   [](const auto &) {},
               },
               spec_);
  }

  void MidpriceProcess::update(RandomSource &rng, std::span<const std::uint8_t> arrival_bid,
                               std::span<const std::uint8_t> arrival_ask)
  {
    const std::size_t n = price_.size();
    const double sqrt_dt = std::sqrt(dt_);

    auto drift_step = [&](double sigma_s, double alpha_mean) {
      const auto &d = drift_;
      for ( std::size_t i = 0; i < n; ++i ) {
        const double z_alpha = rng.normal(i);
        const double z_integral = rng.normal(i);
        const double z_price = rng.normal(i);
        const double alpha_noise = d.alpha_sd * z_alpha;
        const double deviation = alpha_[i] - alpha_mean;
        const double integral = alpha_mean * dt_ + deviation * d.integral_gain +
                                d.integral_on_alpha_noise * alpha_noise + d.integral_sd_given_alpha * z_integral;
        price_[i] += integral + sigma_s * sqrt_dt * z_price;
        alpha_[i] = alpha_mean + deviation * d.alpha_decay + alpha_noise;
      }
    };

    auto apply_jumps = [&](std::vector<double> &target, double impact_bid, double impact_ask) {
      if ( impact_bid == 0.0 && impact_ask == 0.0 )
        return;
      for ( std::size_t i = 0; i < n; ++i )
        target[i] += -impact_bid * arrival_bid[i] + impact_ask * arrival_ask[i];
    };

    std::visit(overloaded{
                   [&](const BrownianMidprice &s) {
                     const double shift = s.drift * dt_;
                     const double scale = s.volatility * sqrt_dt;
                     for ( std::size_t i = 0; i < n; ++i )
                       price_[i] += shift + scale * rng.normal(i);
                   },
                   [&](const GeometricBrownianMidprice &s) {
                     const double shift = (s.drift - 0.5 * s.volatility * s.volatility) * dt_;
                     const double scale = s.volatility * sqrt_dt;
                     for ( std::size_t i = 0; i < n; ++i )
                       price_[i] *= std::exp(shift + scale * rng.normal(i));
                   },
                   [&](const BrownianJumpMidprice &s) {
                     const double scale = s.volatility * sqrt_dt;
                     for ( std::size_t i = 0; i < n; ++i )
                       price_[i] += scale * rng.normal(i);
                     apply_jumps(price_, s.impact_bid, s.impact_ask);
                   },
                   [&](const OuMidprice &s) {
                     const auto m = ou_transition(0.0, s.reversion, 0.0, s.volatility, dt_);
                     const double decay = s.reversion == 0.0 ? 1.0 : std::exp(-s.reversion * dt_);
                     for ( std::size_t i = 0; i < n; ++i )
                       price_[i] = s.mean_price + (price_[i] - s.mean_price) * decay + m.stddev * rng.normal(i);
                   },
                   [&](const OuJumpMidprice &s) {
                     const auto m = ou_transition(0.0, s.reversion, 0.0, s.volatility, dt_);
                     const double decay = s.reversion == 0.0 ? 1.0 : std::exp(-s.reversion * dt_);
                     for ( std::size_t i = 0; i < n; ++i )
                       price_[i] = s.mean_price + (price_[i] - s.mean_price) * decay + m.stddev * rng.normal(i);
                     apply_jumps(price_, s.impact_bid, s.impact_ask);
                   },
                   [&](const OuDriftMidprice &s) { drift_step(s.volatility, s.alpha_mean); },
                   [&](const OuJumpDriftMidprice &s) {
                     drift_step(s.volatility, s.alpha_mean);
                     apply_jumps(alpha_, s.impact_bid, s.impact_ask);
                   },
               },
               spec_);
  }

  void sample_fills(const FillSpec &spec, std::span<const double> depth_bid, std::span<const double> depth_ask,
                    std::span<const std::uint8_t> arrival_bid, std::span<const std::uint8_t> arrival_ask,
                    RandomSource &rng, std::span<std::uint8_t> fill_bid, std::span<std::uint8_t> fill_ask)
  {
    const std::size_t n = fill_bid.size();
    assert(fill_ask.size() == n && depth_bid.size() == n && depth_ask.size() == n);
    for ( std::size_t i = 0; i < n; ++i ) {
      const double u_bid = rng.uniform(i);
      const double u_ask = rng.uniform(i);
      fill_bid[i] = arrival_bid[i] && u_bid < fill_probability(spec, depth_bid[i]);
      fill_ask[i] = arrival_ask[i] && u_ask < fill_probability(spec, depth_ask[i]);
    }
  }

} // namespace mbt
