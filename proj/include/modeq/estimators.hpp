#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "modeq/flows.hpp"
#include "modeq/objective.hpp"
#include "modeq/scheme.hpp"

namespace modeq {

/// C^3 test functions with bounded higher derivatives on the sampled region.
struct TestFunction {
  enum class Kind { ObjectiveResidual, QuadraticForm, SmoothBounded };
  Kind kind = Kind::ObjectiveResidual;
  Vector q_diag;  // QuadraticForm: phi(x) = <Q (x - x*), x - x*>, Q diagonal

  double eval(const ObjectiveProblem& p, const Vector& x) const;
  /// phi(x*), exact.
  double at_minimizer(const ObjectiveProblem& p) const;
  std::string label() const;

  static TestFunction objective_residual();
  static TestFunction quadratic_form(const Vector& q_diag);
  static TestFunction smooth_bounded();
};

enum class ErrorTarget { VsMinimizer, VsOde, VsModifiedSde, VsPlainSde };

std::string target_label(ErrorTarget target);

struct ErrorReport {
  ErrorTarget target = ErrorTarget::VsMinimizer;
  std::string phi;
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t ensemble = 0;
  double h = 0.0;
  std::int64_t n_steps = 0;
  double horizon = 0.0;
  bool coupled = false;
  std::uint64_t seed = 0;
};

/// |E[phi(X_N)] - phi(x*)| with the CLT standard error of the sample mean.
ErrorReport weak_error_vs_minimizer(const ObjectiveProblem& p,
                                    const DiffusionSpec& spec,
                                    const TestFunction& phi,
                                    const SchemeConfig& cfg, std::int64_t ensemble,
                                    int threads = 0);

/// |E[phi(X_N)] - phi(X^0(Nh))| against the gradient flow at tolerance 1e-10.
ErrorReport weak_error_vs_ode(const ObjectiveProblem& p, const DiffusionSpec& spec,
                              const TestFunction& phi, const SchemeConfig& cfg,
                              std::int64_t ensemble, int threads = 0);

/// |E[phi(X_N) - phi(Y^h(Nh))]| with the scheme and the fine modified SDE
/// driven by common Brownian increments; the pathwise mean is an unbiased,
/// low-variance estimator of the difference of means.
ErrorReport weak_error_vs_modified_sde(const ObjectiveProblem& p,
                                       const DiffusionSpec& spec,
                                       const TestFunction& phi,
                                       const SchemeConfig& cfg,
                                       std::int64_t ensemble, int fine_substeps,
                                       int threads = 0);

/// Same coupled estimator against the plain-drift SDE X^h.
ErrorReport weak_error_vs_plain_sde(const ObjectiveProblem& p,
                                    const DiffusionSpec& spec,
                                    const TestFunction& phi,
                                    const SchemeConfig& cfg, std::int64_t ensemble,
                                    int fine_substeps, int threads = 0);

/// Uncoupled variant of the modified-SDE weak error (independent ensembles),
/// kept for the variance-reduction comparison.
ErrorReport weak_error_vs_modified_sde_uncoupled(
    const ObjectiveProblem& p, const DiffusionSpec& spec, const TestFunction& phi,
    const SchemeConfig& cfg, std::int64_t ensemble, int fine_substeps,
    int threads = 0);

/// (E|X_N - x*|^2)^{1/2} (delta-method standard error) and E|X_N - x*|.
std::pair<ErrorReport, ErrorReport> strong_error(const ObjectiveProblem& p,
                                                 const DiffusionSpec& spec,
                                                 const SchemeConfig& cfg,
                                                 std::int64_t ensemble,
                                                 int threads = 0);

/// E[F(X_N) - F(x*)]; phi = objective residual.
ErrorReport residual_error(const ObjectiveProblem& p, const DiffusionSpec& spec,
                           const SchemeConfig& cfg, std::int64_t ensemble,
                           int threads = 0);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (h, error) actually used
};

/// OLS of log(error) on log(h). Throws DegenerateFit on fewer than 3 points,
/// coincident h or nonpositive errors.
OrderFit fit_order(const std::vector<std::pair<double, double>>& points,
                   const std::vector<double>& weights = {});

struct SweepResult {
  std::vector<ErrorReport> reports;
  OrderFit fit;
};

/// Runs the chosen estimator per h with matched horizon (N = round(T/h), the
/// report carries the exact Nh) and fits the convergence order. Points whose
/// error is below 10x their standard error are excluded from the fit.
SweepResult sweep(const ObjectiveProblem& p, const DiffusionSpec& spec,
                  const TestFunction& phi, const std::vector<double>& h_grid,
                  double T, std::int64_t ensemble, ErrorTarget target,
                  const Vector& x0, std::uint64_t seed, int fine_substeps = 1,
                  int threads = 0);

std::string report_csv_header();
std::string report_csv_row(const ErrorReport& report);

}  // namespace modeq
