#include "modeq/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "modeq/detail/path_kernels.hpp"
#include "modeq/errors.hpp"
#include "modeq/parallel.hpp"

namespace modeq {
namespace {

constexpr double kOdeTol = 1e-10;
// Disjoint path-index blocks implement per-h (and pilot/main) substreams of
// one master seed.
constexpr std::uint64_t kSubstreamStride = 1ULL << 40;

void validate_cfg(const ObjectiveProblem& p, const SchemeConfig& cfg,
                  std::int64_t ensemble) {
  if (cfg.h <= 0.0) throw std::invalid_argument("estimator: h must be > 0");
  if (cfg.n_steps < 0) throw std::invalid_argument("estimator: n_steps must be >= 0");
  if (cfg.x0.size() != p.dim) throw std::invalid_argument("estimator: x0 dimension mismatch");
  if (ensemble < 1) throw std::invalid_argument("estimator: ensemble must be >= 1");
}

// phi(X_N) (or any per-terminal functional) over a scheme ensemble.
template <typename F>
std::vector<double> scheme_terminal_values(const ObjectiveProblem& p,
                                           const DiffusionSpec& spec,
                                           const SchemeConfig& cfg,
                                           std::int64_t ensemble, int threads,
                                           std::uint64_t path_offset, F&& value) {
  const bool brownian = cfg.noise_mode == NoiseMode::BrownianIncrements;
  std::vector<double> vals(ensemble);
  parallel_for(static_cast<std::size_t>(ensemble), threads,
               [&](std::size_t begin, std::size_t end) {
                 Vector terminal(p.dim);
                 for (std::size_t m = begin; m < end; ++m) {
                   detail::scheme_path(p, spec, cfg.h, cfg.n_steps, cfg.x0,
                                       cfg.seed, path_offset + m, cfg.substeps,
                                       brownian, terminal);
                   vals[m] = value(terminal);
                 }
               });
  return vals;
}

ErrorReport base_report(ErrorTarget target, const std::string& phi,
                        const SchemeConfig& cfg, std::int64_t ensemble) {
  ErrorReport r;
  r.target = target;
  r.phi = phi;
  r.ensemble = ensemble;
  r.h = cfg.h;
  r.n_steps = cfg.n_steps;
  r.horizon = static_cast<double>(cfg.n_steps) * cfg.h;
  r.seed = cfg.seed;
  return r;
}

ErrorReport coupled_weak_error(const ObjectiveProblem& p, const DiffusionSpec& spec,
                               const TestFunction& phi, const SchemeConfig& cfg,
                               std::int64_t ensemble, int fine_substeps,
                               detail::DriftKind drift, ErrorTarget target,
                               int threads, std::uint64_t path_offset) {
  validate_cfg(p, cfg, ensemble);
  if (fine_substeps < 1) throw std::invalid_argument("estimator: S must be >= 1");
  const auto table = detail::envelope_table(spec, cfg.h, cfg.n_steps, fine_substeps);
  std::vector<double> diff(ensemble);
  parallel_for(static_cast<std::size_t>(ensemble), threads,
               [&](std::size_t begin, std::size_t end) {
                 Vector xt(p.dim), yt(p.dim);
                 for (std::size_t m = begin; m < end; ++m) {
                   detail::coupled_path(p, spec, drift, cfg.h, cfg.n_steps,
                                        fine_substeps, cfg.x0, cfg.seed,
                                        path_offset + m, /*want_x=*/true, xt, yt,
                                        &table);
                   diff[m] = phi.eval(p, xt) - phi.eval(p, yt);
                 }
               });
  const MeanStats stats = mean_stats(diff);
  ErrorReport r = base_report(target, phi.label(), cfg, ensemble);
  r.estimate = std::abs(stats.mean);
  r.std_error = stats.std_error;
  r.coupled = true;
  return r;
}

}  // namespace

double TestFunction::eval(const ObjectiveProblem& p, const Vector& x) const {
  switch (kind) {
    case Kind::ObjectiveResidual:
      return p.value(x);
    case Kind::QuadraticForm: {
      const Vector d = x - p.minimizer;
      return d.dot(q_diag.cwiseProduct(d));
    }
    case Kind::SmoothBounded:
      return (x - p.minimizer).array().sin().sum();
  }
  return 0.0;
}

double TestFunction::at_minimizer(const ObjectiveProblem& p) const {
  switch (kind) {
    case Kind::ObjectiveResidual:
      return p.value(p.minimizer);
    case Kind::QuadraticForm:
    case Kind::SmoothBounded:
      return 0.0;
  }
  return 0.0;
}

std::string TestFunction::label() const {
  switch (kind) {
    case Kind::ObjectiveResidual:
      return "objective_residual";
    case Kind::QuadraticForm:
      return "quadratic_form";
    case Kind::SmoothBounded:
      return "smooth_bounded";
  }
  return "";
}

TestFunction TestFunction::objective_residual() {
  TestFunction f;
  f.kind = Kind::ObjectiveResidual;
  return f;
}

TestFunction TestFunction::quadratic_form(const Vector& q_diag) {
  TestFunction f;
  f.kind = Kind::QuadraticForm;
  f.q_diag = q_diag;
  return f;
}

TestFunction TestFunction::smooth_bounded() {
  TestFunction f;
  f.kind = Kind::SmoothBounded;
  return f;
}

std::string target_label(ErrorTarget target) {
  switch (target) {
    case ErrorTarget::VsMinimizer:
      return "vs_minimizer";
    case ErrorTarget::VsOde:
      return "vs_ode";
    case ErrorTarget::VsModifiedSde:
      return "vs_modified_sde";
    case ErrorTarget::VsPlainSde:
      return "vs_plain_sde";
  }
  return "";
}

ErrorReport weak_error_vs_minimizer(const ObjectiveProblem& p,
                                    const DiffusionSpec& spec,
                                    const TestFunction& phi,
                                    const SchemeConfig& cfg, std::int64_t ensemble,
                                    int threads) {
  validate_cfg(p, cfg, ensemble);
  const auto vals = scheme_terminal_values(
      p, spec, cfg, ensemble, threads, 0,
      [&](const Vector& x) { return phi.eval(p, x); });
  const MeanStats stats = mean_stats(vals);
  ErrorReport r = base_report(ErrorTarget::VsMinimizer, phi.label(), cfg, ensemble);
  r.estimate = std::abs(stats.mean - phi.at_minimizer(p));
  r.std_error = stats.std_error;
  return r;
}

ErrorReport weak_error_vs_ode(const ObjectiveProblem& p, const DiffusionSpec& spec,
                              const TestFunction& phi, const SchemeConfig& cfg,
                              std::int64_t ensemble, int threads) {
  validate_cfg(p, cfg, ensemble);
  const auto vals = scheme_terminal_values(
      p, spec, cfg, ensemble, threads, 0,
      [&](const Vector& x) { return phi.eval(p, x); });
  const MeanStats stats = mean_stats(vals);
  const OdeSolution flow =
      gradient_flow(p, cfg.x0, static_cast<double>(cfg.n_steps) * cfg.h, kOdeTol);
  ErrorReport r = base_report(ErrorTarget::VsOde, phi.label(), cfg, ensemble);
  r.estimate = std::abs(stats.mean - phi.eval(p, flow.terminal));
  r.std_error = stats.std_error;
  return r;
}

ErrorReport weak_error_vs_modified_sde(const ObjectiveProblem& p,
                                       const DiffusionSpec& spec,
                                       const TestFunction& phi,
                                       const SchemeConfig& cfg,
                                       std::int64_t ensemble, int fine_substeps,
                                       int threads) {
  return coupled_weak_error(p, spec, phi, cfg, ensemble, fine_substeps,
                            detail::DriftKind::Modified,
                            ErrorTarget::VsModifiedSde, threads, 0);
}

ErrorReport weak_error_vs_plain_sde(const ObjectiveProblem& p,
                                    const DiffusionSpec& spec,
                                    const TestFunction& phi,
                                    const SchemeConfig& cfg, std::int64_t ensemble,
                                    int fine_substeps, int threads) {
  return coupled_weak_error(p, spec, phi, cfg, ensemble, fine_substeps,
                            detail::DriftKind::Plain, ErrorTarget::VsPlainSde,
                            threads, 0);
}

ErrorReport weak_error_vs_modified_sde_uncoupled(
    const ObjectiveProblem& p, const DiffusionSpec& spec, const TestFunction& phi,
    const SchemeConfig& cfg, std::int64_t ensemble, int fine_substeps,
    int threads) {
  validate_cfg(p, cfg, ensemble);
  const auto scheme_vals = scheme_terminal_values(
      p, spec, cfg, ensemble, threads, 0,
      [&](const Vector& x) { return phi.eval(p, x); });
  // Independent fine ensemble on a disjoint substream.
  const auto table = detail::envelope_table(spec, cfg.h, cfg.n_steps, fine_substeps);
  std::vector<double> sde_vals(ensemble);
  parallel_for(static_cast<std::size_t>(ensemble), threads,
               [&](std::size_t begin, std::size_t end) {
                 Vector xt(p.dim), yt(p.dim);
                 for (std::size_t m = begin; m < end; ++m) {
                   detail::coupled_path(p, spec, detail::DriftKind::Modified,
                                        cfg.h, cfg.n_steps, fine_substeps, cfg.x0,
                                        cfg.seed, kSubstreamStride + m,
                                        /*want_x=*/false, xt, yt, &table);
                   sde_vals[m] = phi.eval(p, yt);
                 }
               });
  const MeanStats a = mean_stats(scheme_vals);
  const MeanStats b = mean_stats(sde_vals);
  ErrorReport r = base_report(ErrorTarget::VsModifiedSde, phi.label(), cfg, ensemble);
  r.estimate = std::abs(a.mean - b.mean);
  r.std_error = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  r.coupled = false;
  return r;
}

std::pair<ErrorReport, ErrorReport> strong_error(const ObjectiveProblem& p,
                                                 const DiffusionSpec& spec,
                                                 const SchemeConfig& cfg,
                                                 std::int64_t ensemble,
                                                 int threads) {
  validate_cfg(p, cfg, ensemble);
  const auto sq = scheme_terminal_values(
      p, spec, cfg, ensemble, threads, 0,
      [&](const Vector& x) { return (x - p.minimizer).squaredNorm(); });
  std::vector<double> dist(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) dist[i] = std::sqrt(sq[i]);

  const MeanStats m2 = mean_stats(sq);
  ErrorReport rms = base_report(ErrorTarget::VsMinimizer, "rms_distance", cfg, ensemble);
  rms.estimate = std::sqrt(std::max(0.0, m2.mean));
  // Delta method for sqrt of the estimated second moment.
  rms.std_error = rms.estimate > 0.0 ? m2.std_error / (2.0 * rms.estimate) : 0.0;

  const MeanStats m1 = mean_stats(dist);
  ErrorReport mean_abs = base_report(ErrorTarget::VsMinimizer, "mean_distance", cfg, ensemble);
  mean_abs.estimate = m1.mean;
  mean_abs.std_error = m1.std_error;
  return {rms, mean_abs};
}

ErrorReport residual_error(const ObjectiveProblem& p, const DiffusionSpec& spec,
                           const SchemeConfig& cfg, std::int64_t ensemble,
                           int threads) {
  validate_cfg(p, cfg, ensemble);
  const double fstar = p.value(p.minimizer);
  const auto vals = scheme_terminal_values(
      p, spec, cfg, ensemble, threads, 0,
      [&](const Vector& x) { return p.value(x) - fstar; });
  const MeanStats stats = mean_stats(vals);
  ErrorReport r = base_report(ErrorTarget::VsMinimizer, "objective_residual", cfg, ensemble);
  r.estimate = stats.mean;
  r.std_error = stats.std_error;
  return r;
}

OrderFit fit_order(const std::vector<std::pair<double, double>>& points,
                   const std::vector<double>& weights) {
  if (points.size() < 3) {
    throw DegenerateFit("fit_order: need at least 3 points, got " +
                        std::to_string(points.size()));
  }
  if (!weights.empty() && weights.size() != points.size()) {
    throw DegenerateFit("fit_order: weights size mismatch");
  }
  double wsum = 0.0, mx = 0.0, my = 0.0;
  std::vector<double> lx(points.size()), ly(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].first <= 0.0 || points[i].second <= 0.0) {
      throw DegenerateFit("fit_order: h and error must be positive");
    }
    lx[i] = std::log(points[i].first);
    ly[i] = std::log(points[i].second);
    const double w = weights.empty() ? 1.0 : weights[i];
    wsum += w;
    mx += w * lx[i];
    my += w * ly[i];
  }
  mx /= wsum;
  my /= wsum;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sxx += w * (lx[i] - mx) * (lx[i] - mx);
    sxy += w * (lx[i] - mx) * (ly[i] - my);
    syy += w * (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DegenerateFit("fit_order: all h values coincide");
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = points;
  return fit;
}

SweepResult sweep(const ObjectiveProblem& p, const DiffusionSpec& spec,
                  const TestFunction& phi, const std::vector<double>& h_grid,
                  double T, std::int64_t ensemble, ErrorTarget target,
                  const Vector& x0, std::uint64_t seed, int fine_substeps,
                  int threads) {
  if (h_grid.empty()) throw DegenerateFit("sweep: empty h grid");
  SweepResult out;
  for (std::size_t k = 0; k < h_grid.size(); ++k) {
    const double h = h_grid[k];
    if (h <= 0.0) throw std::invalid_argument("sweep: h must be > 0");
    SchemeConfig cfg;
    cfg.h = h;
    cfg.n_steps = std::max<std::int64_t>(1, std::llround(T / h));
    cfg.x0 = x0;
    cfg.seed = seed;
    cfg.noise_mode = NoiseMode::BrownianIncrements;
    cfg.substeps = target == ErrorTarget::VsModifiedSde ||
                           target == ErrorTarget::VsPlainSde
                       ? fine_substeps
                       : 1;
    const std::uint64_t offset = k * kSubstreamStride;
    ErrorReport r;
    switch (target) {
      case ErrorTarget::VsMinimizer: {
        validate_cfg(p, cfg, ensemble);
        const auto vals = scheme_terminal_values(
            p, spec, cfg, ensemble, threads, offset,
            [&](const Vector& x) { return phi.eval(p, x); });
        const MeanStats stats = mean_stats(vals);
        r = base_report(ErrorTarget::VsMinimizer, phi.label(), cfg, ensemble);
        r.estimate = std::abs(stats.mean - phi.at_minimizer(p));
        r.std_error = stats.std_error;
        break;
      }
      case ErrorTarget::VsOde: {
        validate_cfg(p, cfg, ensemble);
        const auto vals = scheme_terminal_values(
            p, spec, cfg, ensemble, threads, offset,
            [&](const Vector& x) { return phi.eval(p, x); });
        const MeanStats stats = mean_stats(vals);
        const OdeSolution flow = gradient_flow(
            p, cfg.x0, static_cast<double>(cfg.n_steps) * cfg.h, kOdeTol);
        r = base_report(ErrorTarget::VsOde, phi.label(), cfg, ensemble);
        r.estimate = std::abs(stats.mean - phi.eval(p, flow.terminal));
        r.std_error = stats.std_error;
        break;
      }
      case ErrorTarget::VsModifiedSde:
        r = coupled_weak_error(p, spec, phi, cfg, ensemble, fine_substeps,
                               detail::DriftKind::Modified,
                               ErrorTarget::VsModifiedSde, threads, offset);
        break;
      case ErrorTarget::VsPlainSde:
        r = coupled_weak_error(p, spec, phi, cfg, ensemble, fine_substeps,
                               detail::DriftKind::Plain, ErrorTarget::VsPlainSde,
                               threads, offset);
        break;
    }
    out.reports.push_back(r);
  }

  std::vector<std::pair<double, double>> points;
  for (const auto& r : out.reports) {
    if (r.estimate >= 10.0 * r.std_error && r.estimate > 0.0) {
      points.emplace_back(r.h, r.estimate);
    }
  }
  if (points.size() < 3) {
    throw DegenerateFit("sweep: fewer than 3 points above the noise floor");
  }
  out.fit = fit_order(points);
  return out;
}

std::string report_csv_header() {
  return "target,phi,h,N,T,M,estimate,std_error,coupled,seed";
}

std::string report_csv_row(const ErrorReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%lld,%.17g,%lld,%.17g,%.17g,%s,%llu",
                target_label(r.target).c_str(), r.phi.c_str(), r.h,
                static_cast<long long>(r.n_steps), r.horizon,
                static_cast<long long>(r.ensemble), r.estimate, r.std_error,
                r.coupled ? "true" : "false",
                static_cast<unsigned long long>(r.seed));
  return std::string(buf);
}

}  // namespace modeq
