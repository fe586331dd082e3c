#include "modeq/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "modeq/errors.hpp"

namespace modeq {
namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed,
                  const std::set<std::string>& required) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw ConfigError(where + ": missing required key '" + key + "'");
    }
  }
}

double get_number(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.at(key).is_number()) {
    throw ConfigError(where + "." + key + ": expected a number");
  }
  return obj.at(key).get<double>();
}

std::vector<double> get_number_list(const json& obj, const std::string& where,
                                    const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) {
    throw ConfigError(where + "." + key + ": expected a nonempty array");
  }
  std::vector<double> out;
  for (const auto& item : v) {
    if (!item.is_number()) {
      throw ConfigError(where + "." + key + ": expected numbers");
    }
    out.push_back(item.get<double>());
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

ObjectiveProblem parse_problem(const json& obj) {
  require_keys(obj, "problem", {"kind", "diag", "shift", "dim", "epsilon"}, {"kind"});
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "quadratic") {
    require_keys(obj, "problem", {"kind", "diag", "shift"}, {"kind", "diag"});
    const Vector diag = to_vector(get_number_list(obj, "problem", "diag"));
    Vector shift = Vector::Zero(diag.size());
    if (obj.contains("shift")) {
      shift = to_vector(get_number_list(obj, "problem", "shift"));
      if (shift.size() != diag.size()) {
        throw ConfigError("problem: diag and shift must have the same length");
      }
    }
    return quadratic_problem(diag, shift);
  }
  if (kind == "perturbed_quadratic") {
    require_keys(obj, "problem", {"kind", "dim", "epsilon"}, {"kind", "dim", "epsilon"});
    const int dim = obj.at("dim").get<int>();
    return perturbed_quadratic(dim, get_number(obj, "problem", "epsilon"));
  }
  throw ConfigError("problem.kind: unknown kind '" + kind + "'");
}

EnvelopeSchedule parse_envelope(const json& obj) {
  require_keys(obj, "diffusion.envelope", {"kind", "c", "nu", "alpha"}, {"kind", "c"});
  const std::string kind = obj.at("kind").get<std::string>();
  const double c = get_number(obj, "diffusion.envelope", "c");
  if (kind == "constant") {
    require_keys(obj, "diffusion.envelope", {"kind", "c"}, {"kind", "c"});
    return EnvelopeSchedule::constant(c);
  }
  if (kind == "exponential") {
    require_keys(obj, "diffusion.envelope", {"kind", "c", "nu"}, {"kind", "c", "nu"});
    return EnvelopeSchedule::exponential(c, get_number(obj, "diffusion.envelope", "nu"));
  }
  if (kind == "polynomial") {
    require_keys(obj, "diffusion.envelope", {"kind", "c", "alpha"}, {"kind", "c", "alpha"});
    return EnvelopeSchedule::polynomial(c, get_number(obj, "diffusion.envelope", "alpha"));
  }
  throw ConfigError("diffusion.envelope.kind: unknown kind '" + kind + "'");
}

DiffusionSpec parse_diffusion(const json& obj, const ObjectiveProblem& p) {
  require_keys(obj, "diffusion", {"envelope", "shape", "base", "state_gain"},
               {"envelope", "shape"});
  DiffusionSpec spec;
  spec.envelope = parse_envelope(obj.at("envelope"));
  const std::string shape = obj.at("shape").get<std::string>();
  if (shape == "scalar_identity") {
    spec.shape = DiffusionSpec::Shape::ScalarIdentity;
  } else if (shape == "diagonal") {
    spec.shape = DiffusionSpec::Shape::Diagonal;
    if (!obj.contains("base")) {
      throw ConfigError("diffusion: diagonal shape requires 'base'");
    }
    spec.base_diag = to_vector(get_number_list(obj, "diffusion", "base"));
    if (spec.base_diag.size() != p.dim) {
      throw ConfigError("diffusion.base: length must match problem dimension");
    }
  } else if (shape == "state_scaled") {
    spec.shape = DiffusionSpec::Shape::StateScaled;
    if (!obj.contains("state_gain")) {
      throw ConfigError("diffusion: state_scaled shape requires 'state_gain'");
    }
    spec.state_gain = get_number(obj, "diffusion", "state_gain");
    if (spec.state_gain < 0.0) {
      throw ConfigError("diffusion.state_gain: must be >= 0");
    }
  } else {
    throw ConfigError("diffusion.shape: unknown shape '" + shape + "'");
  }
  spec.center = p.minimizer;
  return spec;
}

TestFunction parse_phi(const json& obj, const ObjectiveProblem& p) {
  require_keys(obj, "phi", {"kind", "q_diag"}, {"kind"});
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "objective_residual") {
    require_keys(obj, "phi", {"kind"}, {"kind"});
    return TestFunction::objective_residual();
  }
  if (kind == "quadratic_form") {
    require_keys(obj, "phi", {"kind", "q_diag"}, {"kind", "q_diag"});
    const Vector q = to_vector(get_number_list(obj, "phi", "q_diag"));
    if (q.size() != p.dim) {
      throw ConfigError("phi.q_diag: length must match problem dimension");
    }
    return TestFunction::quadratic_form(q);
  }
  if (kind == "smooth_bounded") {
    require_keys(obj, "phi", {"kind"}, {"kind"});
    return TestFunction::smooth_bounded();
  }
  throw ConfigError("phi.kind: unknown kind '" + kind + "'");
}

SchemeSettings parse_scheme(const json& obj, const ObjectiveProblem& p) {
  require_keys(obj, "scheme",
               {"h", "h_grid", "T", "N", "M", "seed", "substeps", "x0",
                "noise_mode"},
               {"x0"});
  SchemeSettings s;
  if (obj.contains("h")) s.h = get_number(obj, "scheme", "h");
  if (obj.contains("h_grid")) s.h_grid = get_number_list(obj, "scheme", "h_grid");
  if (obj.contains("T")) s.horizon = get_number(obj, "scheme", "T");
  if (obj.contains("N")) s.n_steps = obj.at("N").get<std::int64_t>();
  if (obj.contains("M")) s.ensemble = obj.at("M").get<std::int64_t>();
  if (obj.contains("seed")) s.seed = obj.at("seed").get<std::uint64_t>();
  if (obj.contains("substeps")) s.substeps = obj.at("substeps").get<int>();
  s.x0 = to_vector(get_number_list(obj, "scheme", "x0"));
  if (s.x0.size() != p.dim) {
    throw ConfigError("scheme.x0: length must match problem dimension");
  }
  if (obj.contains("noise_mode")) {
    const std::string mode = obj.at("noise_mode").get<std::string>();
    if (mode == "gaussian_iid") {
      s.noise_mode = NoiseMode::GaussianIid;
    } else if (mode == "brownian_increments") {
      s.noise_mode = NoiseMode::BrownianIncrements;
    } else {
      throw ConfigError("scheme.noise_mode: unknown mode '" + mode + "'");
    }
  }
  if (s.substeps < 1) throw ConfigError("scheme.substeps: must be >= 1");
  if (s.ensemble < 1) throw ConfigError("scheme.M: must be >= 1");
  return s;
}

TangentCheckSettings parse_tangent(const json& obj) {
  require_keys(obj, "check.tangent", {"T", "h", "S", "M", "instances", "tol"}, {});
  TangentCheckSettings t;
  if (obj.contains("T")) t.horizon = get_number(obj, "check.tangent", "T");
  if (obj.contains("h")) t.h = get_number(obj, "check.tangent", "h");
  if (obj.contains("S")) t.substeps = obj.at("S").get<int>();
  if (obj.contains("M")) t.ensemble = obj.at("M").get<std::int64_t>();
  if (obj.contains("instances")) t.instances = obj.at("instances").get<int>();
  if (obj.contains("tol")) t.tol = get_number(obj, "check.tangent", "tol");
  return t;
}

ContractionCheckSettings parse_contraction(const json& obj) {
  require_keys(obj, "check.contraction", {"T_grid", "h_grid", "M", "S", "c_max"},
               {"T_grid", "h_grid"});
  ContractionCheckSettings c;
  c.horizon_grid = get_number_list(obj, "check.contraction", "T_grid");
  c.h_grid = get_number_list(obj, "check.contraction", "h_grid");
  if (obj.contains("M")) c.ensemble = obj.at("M").get<std::int64_t>();
  if (obj.contains("S")) c.substeps = obj.at("S").get<int>();
  if (obj.contains("c_max")) c.c_max = get_number(obj, "check.contraction", "c_max");
  return c;
}

CheckSettings parse_check(const json& obj) {
  require_keys(obj, "check", {"h_grid", "samples", "radius", "tangent", "contraction"},
               {});
  CheckSettings c;
  if (obj.contains("h_grid")) c.h_grid = get_number_list(obj, "check", "h_grid");
  if (obj.contains("samples")) c.samples = obj.at("samples").get<int>();
  if (obj.contains("radius")) c.radius = get_number(obj, "check", "radius");
  if (obj.contains("tangent")) c.tangent = parse_tangent(obj.at("tangent"));
  if (obj.contains("contraction")) c.contraction = parse_contraction(obj.at("contraction"));
  return c;
}

}  // namespace

std::pair<double, std::int64_t> SchemeSettings::resolve_steps() const {
  if (!h.has_value()) throw ConfigError("scheme.h: required for this command");
  if (*h <= 0.0) throw ConfigError("scheme.h: must be > 0");
  if (n_steps.has_value()) {
    if (*n_steps < 0) throw ConfigError("scheme.N: must be >= 0");
    return {*h, *n_steps};
  }
  if (horizon.has_value()) {
    if (*horizon < 0.0) throw ConfigError("scheme.T: must be >= 0");
    const std::int64_t n = std::llround(*horizon / *h);
    return {*h, std::max<std::int64_t>(n, 0)};
  }
  throw ConfigError("scheme: either N or T is required");
}

ParsedConfig parse_config(const nlohmann::json& doc) {
  require_keys(doc, "config", {"problem", "diffusion", "phi", "scheme", "sweep", "check"},
               {"problem", "diffusion", "scheme"});
  ParsedConfig out;
  out.problem = parse_problem(doc.at("problem"));
  out.diffusion = parse_diffusion(doc.at("diffusion"), out.problem);
  if (doc.contains("phi")) out.phi = parse_phi(doc.at("phi"), out.problem);
  out.scheme = parse_scheme(doc.at("scheme"), out.problem);
  if (doc.contains("sweep")) {
    require_keys(doc.at("sweep"), "sweep", {"target"}, {"target"});
    out.sweep_target = parse_target(doc.at("sweep").at("target").get<std::string>());
  }
  if (doc.contains("check")) out.check = parse_check(doc.at("check"));
  return out;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return doc;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects KEY.PATH=VALUE, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (...) {
    parsed = value;  // plain string
  }
  nlohmann::json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (key.empty()) throw ConfigError("--set: empty path segment in '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

ErrorTarget parse_target(const std::string& name) {
  if (name == "vs_minimizer") return ErrorTarget::VsMinimizer;
  if (name == "vs_ode") return ErrorTarget::VsOde;
  if (name == "vs_modified_sde") return ErrorTarget::VsModifiedSde;
  if (name == "vs_plain_sde") return ErrorTarget::VsPlainSde;
  throw ConfigError("unknown sweep target '" + name + "'");
}

Regime parse_regime(const std::string& name, double nu, double alpha) {
  Regime r;
  r.nu = nu;
  r.alpha = alpha;
  if (name == "first-weak") {
    r.order = Regime::Order::First;
    r.error_kind = Regime::ErrorKind::Weak;
  } else if (name == "first-strong") {
    r.order = Regime::Order::First;
    r.error_kind = Regime::ErrorKind::Strong;
  } else if (name == "second-weak-exp") {
    r.order = Regime::Order::Second;
    r.error_kind = Regime::ErrorKind::Weak;
    r.decay = Regime::Decay::Exponential;
  } else if (name == "second-strong-exp") {
    r.order = Regime::Order::Second;
    r.error_kind = Regime::ErrorKind::Strong;
    r.decay = Regime::Decay::Exponential;
  } else if (name == "second-weak-poly") {
    r.order = Regime::Order::Second;
    r.error_kind = Regime::ErrorKind::Weak;
    r.decay = Regime::Decay::Polynomial;
  } else if (name == "second-strong-poly") {
    r.order = Regime::Order::Second;
    r.error_kind = Regime::ErrorKind::Strong;
    r.decay = Regime::Decay::Polynomial;
  } else {
    throw ConfigError("unknown regime '" + name + "'");
  }
  return r;
}

}  // namespace modeq
