#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mbt::cli
{

  inline constexpr const char *kToolVersion = "1.0.0";

  enum ExitCode : int
  {
    exit_ok = 0,
    exit_failure = 1,
    exit_usage = 2,
    exit_numerical = 3,
  };

  /// Bad command-line usage (unknown agent, missing file, ...): exit code 2.
  class UsageError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// Resolved command line of one run. Together with the input snapshots it
  /// fully determines the outputs.
  struct Options
  {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::optional<std::size_t> n_trajectories;
    std::string agent; // empty: the [agent] section
    std::optional<double> half_spread;
    std::vector<double> action;
    std::string policy_path;
    std::string schedule_path;
    std::vector<std::size_t> sizes{1, 10, 100, 1000, 10000};
    bool summary_only = false;
  };

  /// File contents a run depends on, captured in the manifest.
  struct Inputs
  {
    std::string config;
    std::string config_name = "config";
    std::string policy;
    std::string schedule;
  };

  nlohmann::json options_to_json(const Options &options);
  Options options_from_json(const nlohmann::json &j);

  /// Read every file named by `options`.
  Inputs load_inputs(const Options &options);

  /// Execute a command and write its outputs plus manifest.json into
  /// options.out. `in`/`out` serve the interactive mode and progress text.
  int run(const Options &options, const Inputs &inputs, const std::vector<std::string> &argv, std::istream &in,
          std::ostream &out, std::ostream &err);

  /// Re-execute the run recorded in a manifest, writing into `out_dir`.
  int rerun(const std::filesystem::path &manifest, const std::string &out_dir, std::istream &in, std::ostream &out,
            std::ostream &err);

  /// Parse argv and dispatch; returns the process exit code.
  int main(int argc, char **argv, std::istream &in, std::ostream &out, std::ostream &err);

  // --- trajectory CSV ----------------------------------------------------------

  /// Rows are trajectory, step, the observation fields after the step, the
  /// action fields, reward, and the 0/1 event flags arrival_bid, arrival_ask,
  /// fill_bid, fill_ask, mo_buy, mo_sell.
  std::vector<std::string> trajectory_header(const std::vector<std::string> &obs_fields,
                                             const std::vector<std::string> &action_fields);

  /// Column names of the action vector for an action type name.
  std::vector<std::string> action_fields(std::size_t action_dim, bool touch);

  struct TrajectoryTable
  {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string &name) const;
  };

  /// Parse a trajectory CSV. Throws std::runtime_error on a malformed header,
  /// a row with the wrong column count or a non-numeric cell.
  TrajectoryTable read_trajectory_csv(std::istream &in);

  /// Shortest text that reads back to the same double.
  std::string format_number(double x);

} // namespace mbt::cli
