#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace modeq {

/// Simulation produced a non-finite state, typically because the step size
/// violates the stability threshold. Carries the offending path/step.
class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(std::uint64_t path, std::int64_t step)
      : std::runtime_error("non-finite state at path " + std::to_string(path) +
                           ", step " + std::to_string(step)),
        path_index(path),
        step_index(step) {}
  std::uint64_t path_index;
  std::int64_t step_index;
};

class SingularHessianResolvent : public std::runtime_error {
 public:
  explicit SingularHessianResolvent(const std::string& what)
      : std::runtime_error(what) {}
};

class IncrementsNotRetained : public std::runtime_error {
 public:
  IncrementsNotRetained()
      : std::runtime_error(
            "path was simulated without retaining Gaussian increments") {}
};

class ToleranceNotMet : public std::runtime_error {
 public:
  explicit ToleranceNotMet(const std::string& what)
      : std::runtime_error(what) {}
};

class DegenerateFit : public std::runtime_error {
 public:
  explicit DegenerateFit(const std::string& what)
      : std::runtime_error(what) {}
};

class InvalidRegime : public std::runtime_error {
 public:
  explicit InvalidRegime(const std::string& what)
      : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace modeq
