#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mbt/config.hpp"

namespace mbt
{

  /// Market making with limit orders under Poisson order flow, exponential
  /// fills and a running plus terminal quadratic inventory penalty.
  struct CjParams
  {
    double lambda_bid = 140.0;
    double lambda_ask = 140.0;
    double fill_exponent = 1.5;
    double running_penalty = 0.5;  // phi
    double terminal_penalty = 1.0; // a
    int max_inventory = 10;
    double terminal_time = 1.0;
    int n_steps = 200;   // output grid
    int refinement = 10; // integration substeps per output step
  };

  /// Extract the model parameters from an environment config. Throws
  /// ConfigError unless the config uses Poisson arrivals, exponential fills,
  /// limit orders and a running inventory penalty.
  CjParams cj_params_from_config(const EnvironmentConfig &config);

  /// Depths per side; NaN marks a side that must not be quoted.
  struct Quotes
  {
    double bid;
    double ask;
  };

  /// The omega table on the output time grid. With h = ln(omega) / kappa the
  /// optimal depths are
  ///   ask: 1/kappa + h(t, q) - h(t, q - 1),  bid: 1/kappa + h(t, q) - h(t, q + 1).
  class CjSolution
  {
  public:
    CjSolution(CjParams params, std::vector<double> times, std::vector<double> omega);

    const CjParams &params() const { return params_; }
    std::span<const double> times() const { return times_; }
    int max_inventory() const { return params_.max_inventory; }
    std::size_t inventory_levels() const { return static_cast<std::size_t>(2 * params_.max_inventory + 1); }

    /// omega_q at output grid index k.
    double omega(std::size_t k, int q) const { return omega_[k * inventory_levels() + slot(q)]; }
    /// h(t, q), linear in t between grid points.
    double h(double t, int q) const;

  private:
    std::size_t slot(int q) const { return static_cast<std::size_t>(q + params_.max_inventory); }

    CjParams params_;
    std::vector<double> times_;
    std::vector<double> omega_; // row-major (time, inventory)
  };

  /// d(omega)/dt for one row of omega values (2 max_inventory + 1 entries, q ascending).
  std::vector<double> cj_time_derivative(const CjParams &params, std::span<const double> omega);

  /// Integrate the linear system for omega backward from the terminal
  /// condition with classical RK4 on the refined grid. Throws NumericalError
  /// if omega leaves (0, inf).
  CjSolution cj_solve(const CjParams &params);

  /// Unclipped optimal depths; throws std::out_of_range for |q| > max_inventory.
  /// The bid is NaN at q = max_inventory and the ask at q = -max_inventory.
  Quotes cj_quotes(const CjSolution &solution, int q, double t);

  /// CSV with columns time,inventory,omega,h,depth_bid,depth_ask.
  void write_cj_csv(const CjSolution &solution, std::ostream &out);

} // namespace mbt
