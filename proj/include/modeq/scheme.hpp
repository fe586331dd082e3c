#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "modeq/diffusion.hpp"
#include "modeq/objective.hpp"

namespace modeq {

enum class NoiseMode { GaussianIid, BrownianIncrements };

struct SchemeConfig {
  double h = 0.1;
  std::int64_t n_steps = 1;
  Vector x0;
  std::uint64_t seed = 0;
  NoiseMode noise_mode = NoiseMode::GaussianIid;
  int substeps = 1;  // fine increments per step (BrownianIncrements mode)
  bool retain_increments = false;
};

struct PathRecord {
  std::vector<Vector> states;  // X_0 .. X_N
  std::vector<double> times;   // t_n = n h
  // Unit normals xi_{n,j}, one row per fine substep (row n*S + j), retained
  // only on request; the Brownian increment over a fine interval is
  // sqrt(h/S) * xi.
  Eigen::MatrixXd increments;
  bool has_increments = false;
  double h = 0.0;
  int substeps = 1;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

/// One step of the stochastic gradient scheme:
/// x - h grad F(x) + h sigma(t_n, x) gamma.
Vector scheme_step(const ObjectiveProblem& p, const DiffusionSpec& spec,
                   const Vector& x, double t_n, double h, const Vector& gamma);

/// Iterates scheme_step n_steps times. In BrownianIncrements mode the step
/// Gaussian is S^{-1/2} sum_j xi_{n,j}, sharing the fine increments with the
/// reference SDE integrator; with S = 1 this is bit-identical to GaussianIid.
PathRecord run_scheme(const ObjectiveProblem& p, const DiffusionSpec& spec,
                      const SchemeConfig& cfg, std::uint64_t path_index = 0);

/// The interpolated process
/// X_n - grad F(X_n)(t - t_n) + sqrt(h) sigma(t_n, X_n)(B(t) - B(t_n)),
/// reconstructing B(t) - B(t_n) from the retained fine increments plus a
/// deterministic Brownian-bridge draw inside the straddled fine interval.
Vector interpolate_tilde(const ObjectiveProblem& p, const DiffusionSpec& spec,
                         const PathRecord& path, double t);

/// Exact sequence m_n = E |X_n - x*|^2 for a diagonal quadratic problem with
/// constant scalar noise level sigma0. x0_offset is x_0 - x*. Serves as the
/// analytic oracle for the Monte Carlo estimators.
std::vector<double> quadratic_second_moment_recursion(const Vector& a_diag,
                                                      double sigma0, double h,
                                                      std::int64_t n_steps,
                                                      const Vector& x0_offset);

struct StepThreshold {
  double value = 0.0;
  // True when the constant is explicit (p = 1); higher moments only have an
  // existential constant and the returned value is a heuristic.
  bool explicit_constant = false;
};

/// H_1-style step-size threshold min(1/(2 mu), 2 mu / (L^2 + 2 |varsigma|^2)).
/// Exceeding it is diagnostic, not an error.
StepThreshold step_size_threshold(const ObjectiveProblem& p,
                                  const DiffusionSpec& spec, int moment_order = 1);

}  // namespace modeq
