#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modeq/estimators.hpp"

namespace modeq {

struct Regime {
  enum class ErrorKind { Weak, Strong };
  enum class Order { First, Second };
  enum class Decay { Bounded, Exponential, Polynomial };
  ErrorKind error_kind = ErrorKind::Weak;
  Order order = Order::First;
  Decay decay = Decay::Bounded;  // relevant for second order only
  double nu = 0.0;
  double alpha = 0.0;

  std::string label() const;
};

struct ComplexityPlan {
  double epsilon = 0.0;
  double h_star = 0.0;
  std::int64_t n_star = 0;
  double horizon = 0.0;  // h_star * n_star, exactly
  double predicted_cost = 0.0;
  std::string formula_tag;
};

/// epsilon -> (h, N) rule with unit constants and explicit mu only in the
/// horizon. N is rounded up and h recomputed as horizon / N so T = N h holds.
ComplexityPlan plan(const Regime& regime, double epsilon, double mu);

/// Unrounded cost-formula values per epsilon, plus the structural identities
/// between them. Strong-error formulas are the squares of the weak-error
/// formulas, which the paper states as exact for the costs it tracks.
struct RegimeCosts {
  double epsilon = 0.0;
  double n1w = 0.0;
  double n1s = 0.0;
  double n2we = 0.0;
  double n2se = 0.0;
  double n2wp = 0.0;  // populated when alpha > 0
  double n2sp = 0.0;
  double alpha = 0.0;
  double ratio_first_sq = 0.0;   // n1s / n1w^2
  double ratio_exp_sq = 0.0;     // n2se / n2we^2
  double ratio_sqrt = 0.0;       // n2we / sqrt(n1w)
  std::string poly_verdict;      // "reduction" iff alpha > 3/2
};

std::vector<RegimeCosts> compare_regimes(const std::vector<double>& eps_grid,
                                         double mu, double alpha = 0.0);

struct PlanValidation {
  ComplexityPlan main_plan;
  ComplexityPlan pilot_plan;
  double measured_error = 0.0;
  double std_error = 0.0;
  double pilot_error = 0.0;
  double pilot_c = 0.0;  // pilot_error / pilot_epsilon
  bool pass = false;
};

/// Runs the matching estimator at the planned (h, N) and checks the scaling
/// measured <= C eps with C fitted from a pilot run at 2 eps. This validates
/// the epsilon-scaling, not an absolute constant.
PlanValidation validate_plan(const ObjectiveProblem& p, const DiffusionSpec& spec,
                             const TestFunction& phi, const Regime& regime,
                             double epsilon, double mu, const Vector& x0,
                             std::int64_t ensemble, std::uint64_t seed,
                             int threads = 0);

std::string plan_csv_header();
std::string plan_csv_row(const Regime& regime, const ComplexityPlan& plan);
std::string compare_csv_header();
std::string compare_csv_row(const RegimeCosts& costs);

}  // namespace modeq
