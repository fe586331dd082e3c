#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace modeq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A strongly convex objective with gradient and Hessian-vector access.
/// Built-in kinds dispatch to closed forms; Custom runs user callbacks.
/// All methods are const and allocation-free on the built-in kinds, so a
/// problem can be shared across any number of workers.
struct ObjectiveProblem {
  enum class Kind { QuadraticDiag, QuadraticDense, PerturbedQuadratic, Custom };

  Kind kind = Kind::QuadraticDiag;
  int dim = 0;
  double mu = 0.0;   // strong-convexity constant
  double lip = 0.0;  // gradient Lipschitz constant, lip >= mu
  Vector minimizer;

  // QuadraticDiag / QuadraticDense data: F(x) = 0.5 <A(x - x*), x - x*>.
  Vector diag;
  Matrix dense;
  // PerturbedQuadratic data: F(x) = ||x||^2 + epsilon * sum_i cos(x_i).
  double epsilon = 0.0;

  // Custom callbacks (third derivative optional).
  std::function<double(const Vector&)> custom_eval;
  std::function<void(const Vector&, Vector&)> custom_grad;
  std::function<void(const Vector&, const Vector&, Vector&)> custom_hess_vec;
  std::function<void(const Vector&, const Vector&, const Vector&, Vector&)>
      custom_third_vec;

  double value(const Vector& x) const;
  void gradient(const Vector& x, Vector& out) const;
  Vector gradient(const Vector& x) const;
  void hess_vec(const Vector& x, const Vector& k, Vector& out) const;
  Vector hess_vec(const Vector& x, const Vector& k) const;

  /// D^3F(x)[k1, k2] as a vector. Built-ins are analytic; Custom falls back
  /// to a central difference of hess_vec unless custom_third_vec is set.
  void third_vec(const Vector& x, const Vector& k1, const Vector& k2,
                 Vector& out) const;

  /// Dense Hessian, assembled column-wise for Custom problems. Intended for
  /// the small-d alternative drifts, not for hot loops.
  Matrix hessian(const Vector& x) const;
};

ObjectiveProblem quadratic_problem(const Vector& diag, const Vector& shift);
ObjectiveProblem quadratic_problem(const Matrix& a, const Vector& shift);
ObjectiveProblem perturbed_quadratic(int dim, double epsilon);

/// F^h(x) = F(x) + (h/4) ||grad F(x)||^2.
double modified_objective(const ObjectiveProblem& p, double h, const Vector& x);

/// grad F^h(x) = (I + (h/2) Hess F(x)) grad F(x).
void modified_gradient(const ObjectiveProblem& p, double h, const Vector& x,
                       Vector& out);
Vector modified_gradient(const ObjectiveProblem& p, double h, const Vector& x);

/// Hess F^h(x) k, using the third derivative of F.
void modified_hess_vec(const ObjectiveProblem& p, double h, const Vector& x,
                       const Vector& k, Vector& out);

enum class DriftVariant { Resolvent, Exponential };

/// The alternative second-order drifts: -(I - (h/2)Hess)^{-1} grad for
/// Resolvent (requires h * lip < 2) and -exp((h/2)Hess) grad for Exponential.
Vector alternative_modified_drift(const ObjectiveProblem& p, double h,
                                  const Vector& x, DriftVariant variant);

struct AssumptionReport {
  struct ModifiedConvexity {
    double h = 0.0;
    double mu_observed = 0.0;
    bool pass = false;
  };
  double lip_observed = 0.0;
  double mu_observed = 0.0;
  bool lip_pass = false;
  bool mu_pass = false;
  std::vector<ModifiedConvexity> modified;
  double box_radius = 0.0;
  int sample_count = 0;

  bool all_pass() const;
};

/// Sampled falsification of the Lipschitz / convexity constants against the
/// declared mu and lip, over the box [x* - R, x* + R]^d. Failures are
/// reported, never thrown.
AssumptionReport check_assumptions(const ObjectiveProblem& p,
                                   const std::vector<double>& h_grid,
                                   int sample_count, std::uint64_t seed,
                                   double box_radius = 10.0);

}  // namespace modeq
