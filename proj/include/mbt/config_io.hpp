#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mbt/agents.hpp"
#include "mbt/config.hpp"
#include "mbt/learn.hpp"

namespace mbt
{

  /// Everything a TOML config file can describe.
  struct RunConfig
  {
    EnvironmentConfig env;
    std::optional<AgentSpec> agent;
    TrainConfig train;
    std::string text; // the source, verbatim
  };

  /// Parse TOML with sections [env], [arrival], [midprice], [fill], [reward],
  /// [agent] and [train]. Unknown sections or keys, wrong value types and
  /// violated constraints are all reported in a single ConfigError whose
  /// messages are anchored as "<source_name>:<line>:<column>: ...".
  RunConfig parse_config(std::string_view text, std::string_view source_name = "config");

  /// Read and parse a file; an unreadable file is a ConfigError.
  RunConfig load_config_file(const std::filesystem::path &path);

} // namespace mbt
