#include "mbt/cartea_jaimungal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mbt/errors.hpp"

namespace mbt
{

  CjParams cj_params_from_config(const EnvironmentConfig &config)
  {
    std::vector<std::string> errs;
    const auto *arrival = std::get_if<PoissonArrival>(&config.arrival);
    const auto *fill = std::get_if<ExponentialFill>(&config.fill);
    const auto *reward = std::get_if<RunningInventoryPenalty>(&config.reward);
    if ( arrival == nullptr )
      errs.push_back("Cartea-Jaimungal agent requires Poisson arrivals");
    if ( fill == nullptr )
      errs.push_back("Cartea-Jaimungal agent requires exponential fills");
    if ( reward == nullptr )
      errs.push_back("Cartea-Jaimungal agent requires the running inventory penalty reward");
    if ( config.action_type != ActionType::limit )
      errs.push_back("Cartea-Jaimungal agent requires the limit action type");
    if ( !errs.empty() )
      throw ConfigError(std::move(errs));

    CjParams p;
    p.lambda_bid = arrival->lambda_bid;
    p.lambda_ask = arrival->lambda_ask;
    p.fill_exponent = fill->fill_exponent;
    p.running_penalty = reward->per_step_inventory_aversion;
    p.terminal_penalty = reward->terminal_inventory_aversion;
    p.max_inventory = config.max_inventory;
    p.terminal_time = config.terminal_time;
    p.n_steps = config.n_steps;
    return p;
  }

  CjSolution::CjSolution(CjParams params, std::vector<double> times, std::vector<double> omega)
      : params_(params), times_(std::move(times)), omega_(std::move(omega))
  {
  }

  double CjSolution::h(double t, int q) const
  {
    const double kappa = params_.fill_exponent;
    const double pos = std::clamp(t / params_.terminal_time, 0.0, 1.0) * params_.n_steps;
    const auto k0 = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(params_.n_steps));
    const double h0 = std::log(omega(k0, q)) / kappa;
    if ( k0 == static_cast<std::size_t>(params_.n_steps) )
      return h0;
    const double w = pos - static_cast<double>(k0);
    if ( w == 0.0 )
      return h0;
    const double h1 = std::log(omega(k0 + 1, q)) / kappa;
    return h0 + w * (h1 - h0);
  }

  namespace
  {
    // d(omega)/d(tau), tau = T - t.
    void omega_rate(const CjParams &p, std::span<const double> w, std::span<double> out)
    {
      const int qmax = p.max_inventory;
      const double e = std::exp(-1.0);
      const double kappa = p.fill_exponent;
      for ( int q = -qmax; q <= qmax; ++q ) {
        const auto i = static_cast<std::size_t>(q + qmax);
        double r = -p.running_penalty * kappa * q * q * w[i];
        if ( q > -qmax )
          r += e * p.lambda_ask * w[i - 1];
        if ( q < qmax )
          r += e * p.lambda_bid * w[i + 1];
        out[i] = r;
      }
    }
  } // namespace

  std::vector<double> cj_time_derivative(const CjParams &params, std::span<const double> omega)
  {
    if ( omega.size() != static_cast<std::size_t>(2 * params.max_inventory + 1) )
      throw std::invalid_argument("cj_time_derivative: omega row has the wrong length");
    std::vector<double> out(omega.size());
    omega_rate(params, omega, out);
    for ( double &x : out )
      x = -x;
    return out;
  }

  CjSolution cj_solve(const CjParams &p)
  {
    if ( p.max_inventory < 1 || !(p.fill_exponent > 0.0) || p.n_steps < 1 || p.refinement < 1 ||
         !(p.terminal_time > 0.0) )
      throw std::invalid_argument("cj_solve: need max_inventory >= 1, fill_exponent > 0, n_steps >= 1, "
                                  "refinement >= 1 and terminal_time > 0");

    const int qmax = p.max_inventory;
    const auto levels = static_cast<std::size_t>(2 * qmax + 1);
    const auto n = static_cast<std::size_t>(p.n_steps);
    std::vector<double> times(n + 1);
    for ( std::size_t k = 0; k <= n; ++k )
      times[k] = p.terminal_time * static_cast<double>(k) / static_cast<double>(n);

    std::vector<double> omega((n + 1) * levels);
    std::vector<double> w(levels), k1(levels), k2(levels), k3(levels), k4(levels), tmp(levels);
    for ( int q = -qmax; q <= qmax; ++q )
      w[static_cast<std::size_t>(q + qmax)] = std::exp(-p.fill_exponent * p.terminal_penalty * q * q);
    std::copy(w.begin(), w.end(), omega.begin() + static_cast<std::ptrdiff_t>(n * levels));

    const double h = p.terminal_time / static_cast<double>(n * static_cast<std::size_t>(p.refinement));
    for ( std::size_t k = n; k-- > 0; ) {
      for ( int sub = 0; sub < p.refinement; ++sub ) {
        omega_rate(p, w, k1);
        for ( std::size_t i = 0; i < levels; ++i )
          tmp[i] = w[i] + 0.5 * h * k1[i];
        omega_rate(p, tmp, k2);
        for ( std::size_t i = 0; i < levels; ++i )
          tmp[i] = w[i] + 0.5 * h * k2[i];
        omega_rate(p, tmp, k3);
        for ( std::size_t i = 0; i < levels; ++i )
          tmp[i] = w[i] + h * k3[i];
        omega_rate(p, tmp, k4);
        for ( std::size_t i = 0; i < levels; ++i )
          w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      for ( std::size_t i = 0; i < levels; ++i ) {
        if ( !std::isfinite(w[i]) || !(w[i] > 0.0) ) {
          std::ostringstream msg;
          msg << "cj_solve: omega_" << static_cast<int>(i) - qmax << "(" << times[k] << ") = " << w[i]
              << " is not finite and positive (lambda_bid=" << p.lambda_bid << ", lambda_ask=" << p.lambda_ask
              << ", kappa=" << p.fill_exponent << ", phi=" << p.running_penalty << ", a=" << p.terminal_penalty
              << ", max_inventory=" << qmax << ")";
          throw NumericalError(msg.str());
        }
      }
      std::copy(w.begin(), w.end(), omega.begin() + static_cast<std::ptrdiff_t>(k * levels));
    }
    return CjSolution(p, std::move(times), std::move(omega));
  }

  Quotes cj_quotes(const CjSolution &s, int q, double t)
  {
    const int qmax = s.max_inventory();
    if ( q < -qmax || q > qmax )
      throw std::out_of_range("cj_quotes: inventory " + std::to_string(q) + " outside [-" + std::to_string(qmax) +
                              ", " + std::to_string(qmax) + "]");
    const double inv_kappa = 1.0 / s.params().fill_exponent;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double hq = s.h(t, q);
    Quotes out{nan, nan};
    if ( q < qmax )
      out.bid = inv_kappa + hq - s.h(t, q + 1);
    if ( q > -qmax )
      out.ask = inv_kappa + hq - s.h(t, q - 1);
    return out;
  }

  void write_cj_csv(const CjSolution &s, std::ostream &out)
  {
    out << "time,inventory,omega,h,depth_bid,depth_ask\n";
    out.precision(17);
    const auto times = s.times();
    for ( std::size_t k = 0; k < times.size(); ++k ) {
      for ( int q = -s.max_inventory(); q <= s.max_inventory(); ++q ) {
        const auto quotes = cj_quotes(s, q, times[k]);
        out << times[k] << ',' << q << ',' << s.omega(k, q) << ',' << s.h(times[k], q) << ',';
        if ( std::isfinite(quotes.bid) )
          out << quotes.bid;
        out << ',';
        if ( std::isfinite(quotes.ask) )
          out << quotes.ask;
        out << '\n';
      }
    }
  }

} // namespace mbt
