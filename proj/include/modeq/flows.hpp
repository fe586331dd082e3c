#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "modeq/diffusion.hpp"
#include "modeq/objective.hpp"

namespace modeq {

struct OdeSolution {
  Vector terminal;
  std::int64_t steps = 0;
  double max_local_error = 0.0;
  bool exact = false;  // quadratic exponential-map fast path
};

/// Integrates dx/dt = -grad F(x) to time T with an embedded Dormand-Prince
/// 5(4) pair at local tolerance tol. Quadratic problems take the exact
/// exponential-map path.
OdeSolution gradient_flow(const ObjectiveProblem& p, const Vector& x0, double T,
                          double tol = 1e-10);

/// Jointly integrates the flow and d eta/dt = -Hess F(X(t)) eta, eta(0) = k;
/// returns eta(T).
Vector tangent_ode(const ObjectiveProblem& p, const Vector& x0, const Vector& k,
                   double T, double tol = 1e-10);

enum class SdeDrift { Plain, Modified, Resolvent, Exponential };

struct SdePathSet {
  Eigen::MatrixXd terminal;  // one row per path
  double h = 0.0;
  int substeps = 1;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  SdeDrift drift = SdeDrift::Plain;
  // Paths are driven by the same counter-based increments as the discrete
  // scheme with matching (seed, path, substeps), so a scheme ensemble with
  // the same parameters is pathwise coupled to this one.
  bool coupled_layout = true;
};

/// Euler-Maruyama on the fine grid h/S for the chosen drift, diffusion
/// sqrt(h) sigma(t, .). T must be an integer multiple of h.
SdePathSet simulate_sde(const ObjectiveProblem& p, const DiffusionSpec& spec,
                        SdeDrift drift, double h, const Vector& x0, double T,
                        int fine_substeps, std::int64_t ensemble,
                        std::uint64_t seed, int threads = 0);

struct TangentSdeMoments {
  double second_moment = 0.0;  // E |eta(T)|^2
  double second_moment_se = 0.0;
  double fourth_moment = 0.0;  // E |eta(T)|^4
  double fourth_moment_se = 0.0;
  std::int64_t ensemble = 0;
};

/// Jointly integrates the modified SDE and its first-variation process and
/// returns Monte Carlo moments of |eta(T)|.
TangentSdeMoments tangent_sde(const ObjectiveProblem& p, const DiffusionSpec& spec,
                              double h, const Vector& x0, const Vector& k,
                              double T, int fine_substeps, std::int64_t ensemble,
                              std::uint64_t seed, int threads = 0);

}  // namespace modeq
