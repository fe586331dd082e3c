#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modeq/complexity.hpp"
#include "modeq/estimators.hpp"

namespace modeq {

struct SchemeSettings {
  std::optional<double> h;
  std::vector<double> h_grid;
  std::optional<double> horizon;       // "T"
  std::optional<std::int64_t> n_steps; // "N"
  std::int64_t ensemble = 1;           // "M"
  std::uint64_t seed = 0;
  int substeps = 1;
  Vector x0;
  NoiseMode noise_mode = NoiseMode::GaussianIid;

  /// Resolves (h, N) for a single-h command; throws ConfigError when the
  /// combination is inconsistent.
  std::pair<double, std::int64_t> resolve_steps() const;
};

struct TangentCheckSettings {
  double horizon = 2.0;
  double h = 0.1;
  int substeps = 64;
  std::int64_t ensemble = 1000;
  int instances = 20;
  double tol = 1e-10;
};

struct ContractionCheckSettings {
  std::vector<double> horizon_grid;
  std::vector<double> h_grid;
  std::int64_t ensemble = 20000;
  int substeps = 32;
  double c_max = 4.0;
};

struct CheckSettings {
  std::vector<double> h_grid = {0.1};
  int samples = 200;
  double radius = 10.0;
  std::optional<TangentCheckSettings> tangent;
  std::optional<ContractionCheckSettings> contraction;
};

struct ParsedConfig {
  ObjectiveProblem problem;
  DiffusionSpec diffusion;
  std::optional<TestFunction> phi;
  SchemeSettings scheme;
  std::optional<ErrorTarget> sweep_target;
  CheckSettings check;
};

/// Strict parse: unknown keys anywhere are rejected with ConfigError.
ParsedConfig parse_config(const nlohmann::json& doc);

nlohmann::json load_config_file(const std::string& path);

/// Applies a dotted-path override ("scheme.h=0.05"); the value is parsed as a
/// JSON literal when possible, else taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ErrorTarget parse_target(const std::string& name);
Regime parse_regime(const std::string& name, double nu, double alpha);

}  // namespace modeq
