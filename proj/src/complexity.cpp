#include "modeq/complexity.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "modeq/errors.hpp"

namespace modeq {
namespace {

std::string decay_label(Regime::Decay d) {
  switch (d) {
    case Regime::Decay::Bounded:
      return "bounded";
    case Regime::Decay::Exponential:
      return "exp";
    case Regime::Decay::Polynomial:
      return "poly";
  }
  return "";
}

}  // namespace

std::string Regime::label() const {
  std::string s = order == Order::First ? "first" : "second";
  s += error_kind == ErrorKind::Weak ? "-weak" : "-strong";
  if (order == Order::Second) s += "-" + decay_label(decay);
  return s;
}

ComplexityPlan plan(const Regime& regime, double epsilon, double mu) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidRegime("plan: epsilon must be in (0, 1)");
  }
  if (mu <= 0.0) throw InvalidRegime("plan: mu must be > 0");
  if (regime.order == Regime::Order::First &&
      regime.decay == Regime::Decay::Polynomial) {
    throw InvalidRegime("plan: no first-order formula under polynomial decay");
  }
  if (regime.order == Regime::Order::Second &&
      regime.decay == Regime::Decay::Bounded) {
    throw InvalidRegime(
        "plan: second-order formulas require decaying noise (exponential or "
        "polynomial)");
  }
  if (regime.order == Regime::Order::Second &&
      regime.decay == Regime::Decay::Polynomial && regime.alpha <= 0.0) {
    throw InvalidRegime("plan: polynomial decay requires alpha > 0");
  }

  const double log_inv = std::log(1.0 / epsilon);
  const bool strong = regime.error_kind == Regime::ErrorKind::Strong;
  double h_rule = 0.0, horizon = 0.0;
  std::string tag;
  if (regime.order == Regime::Order::First) {
    // Weak: h ~ eps, e^{-mu N h} ~ eps. Strong: sqrt(h) ~ eps,
    // e^{-mu N h / 2} ~ eps.
    h_rule = strong ? epsilon * epsilon : epsilon;
    horizon = (strong ? 2.0 : 1.0) * log_inv / mu;
    tag = strong ? "coststrong1" : "costweak1";
  } else if (regime.decay == Regime::Decay::Exponential) {
    h_rule = strong ? epsilon : std::sqrt(epsilon);
    horizon = (strong ? 2.0 : 1.0) * log_inv / mu;
    tag = strong ? "coststrong2e" : "costweak2e";
  } else {
    // Polynomial decay: h / (N h)^{2 alpha} ~ eps^2 (weak) or eps^4 (strong).
    h_rule = strong ? epsilon : std::sqrt(epsilon);
    const double target = strong ? 3.0 : 1.5;  // (N h)^{2 alpha} = eps^{-target}
    horizon = std::pow(epsilon, -target / (2.0 * regime.alpha));
    tag = strong ? "coststrong2p" : "costweak2p";
  }

  ComplexityPlan out;
  out.epsilon = epsilon;
  out.formula_tag = tag;
  out.n_star = static_cast<std::int64_t>(std::ceil(horizon / h_rule));
  if (out.n_star < 1) out.n_star = 1;
  out.h_star = horizon / static_cast<double>(out.n_star);
  out.horizon = out.h_star * static_cast<double>(out.n_star);
  out.predicted_cost = static_cast<double>(out.n_star);
  return out;
}

std::vector<RegimeCosts> compare_regimes(const std::vector<double>& eps_grid,
                                         double mu, double alpha) {
  if (eps_grid.empty()) {
    throw std::invalid_argument("compare_regimes: empty epsilon grid");
  }
  std::vector<RegimeCosts> out;
  out.reserve(eps_grid.size());
  for (const double eps : eps_grid) {
    if (!(eps > 0.0 && eps < 1.0)) {
      throw std::invalid_argument("compare_regimes: epsilon must be in (0, 1)");
    }
    const double log_inv = std::log(1.0 / eps);
    RegimeCosts c;
    c.epsilon = eps;
    c.alpha = alpha;
    c.n1w = log_inv / (mu * eps);
    c.n1s = c.n1w * c.n1w;
    c.n2we = log_inv / (mu * std::sqrt(eps));
    c.n2se = c.n2we * c.n2we;
    if (alpha > 0.0) {
      c.n2wp = std::pow(eps, -0.5 - 3.0 / (4.0 * alpha));
      c.n2sp = c.n2wp * c.n2wp;
      c.poly_verdict = alpha > 1.5 ? "reduction" : "no reduction";
    }
    c.ratio_first_sq = c.n1s / (c.n1w * c.n1w);
    c.ratio_exp_sq = c.n2se / (c.n2we * c.n2we);
    c.ratio_sqrt = c.n2we / std::sqrt(c.n1w);
    out.push_back(c);
  }
  return out;
}

PlanValidation validate_plan(const ObjectiveProblem& p, const DiffusionSpec& spec,
                             const TestFunction& phi, const Regime& regime,
                             double epsilon, double mu, const Vector& x0,
                             std::int64_t ensemble, std::uint64_t seed,
                             int threads) {
  PlanValidation out;
  out.main_plan = plan(regime, epsilon, mu);
  const double eps_pilot = std::min(2.0 * epsilon, 0.5 * (1.0 + epsilon));
  out.pilot_plan = plan(regime, eps_pilot, mu);

  const bool strong = regime.error_kind == Regime::ErrorKind::Strong;
  auto run = [&](const ComplexityPlan& cp, std::uint64_t seed_offset,
                 double* std_err) {
    SchemeConfig cfg;
    cfg.h = cp.h_star;
    cfg.n_steps = cp.n_star;
    cfg.x0 = x0;
    cfg.seed = seed + seed_offset;
    if (strong) {
      const auto [rms, mean_abs] = strong_error(p, spec, cfg, ensemble, threads);
      *std_err = rms.std_error;
      return rms.estimate;
    }
    const ErrorReport r = weak_error_vs_minimizer(p, spec, phi, cfg, ensemble, threads);
    *std_err = r.std_error;
    return r.estimate;
  };

  double se_pilot = 0.0;
  out.pilot_error = run(out.pilot_plan, 1, &se_pilot);
  out.measured_error = run(out.main_plan, 0, &out.std_error);
  out.pilot_c = out.pilot_error / eps_pilot;
  // Scaling check with Monte Carlo allowance on both runs.
  out.pass = out.measured_error <=
             out.pilot_c * epsilon + 4.0 * (out.std_error + se_pilot);
  return out;
}

std::string plan_csv_header() {
  return "epsilon,regime,h_star,n_star,formula_tag,predicted_cost";
}

std::string plan_csv_row(const Regime& regime, const ComplexityPlan& plan) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g,%s,%.17g,%lld,%s,%.17g", plan.epsilon,
                regime.label().c_str(), plan.h_star,
                static_cast<long long>(plan.n_star), plan.formula_tag.c_str(),
                plan.predicted_cost);
  return std::string(buf);
}

std::string compare_csv_header() {
  return "epsilon,n1w,n1s,n2we,n2se,n2wp,n2sp,alpha,ratio_first_sq,ratio_exp_sq,"
         "ratio_sqrt,poly_verdict";
}

std::string compare_csv_row(const RegimeCosts& c) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%s",
                c.epsilon, c.n1w, c.n1s, c.n2we, c.n2se, c.n2wp, c.n2sp, c.alpha,
                c.ratio_first_sq, c.ratio_exp_sq, c.ratio_sqrt,
                c.poly_verdict.c_str());
  return std::string(buf);
}

}  // namespace modeq
