#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mbt
{

  /// Raised when a configuration violates one or more constraints. `what()`
  /// joins every message; `problems()` keeps them separate.
  class ConfigError : public std::runtime_error
  {
  public:
    explicit ConfigError(std::vector<std::string> problems);

    const std::vector<std::string> &problems() const noexcept { return problems_; }

  private:
    std::vector<std::string> problems_;
  };

  /// Operation invoked in the wrong lifecycle state (step before reset,
  /// step after the episode ended).
  class StateError : public std::logic_error
  {
  public:
    using std::logic_error::logic_error;
  };

  /// Non-finite values produced by a numerical routine.
  class NumericalError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

} // namespace mbt
