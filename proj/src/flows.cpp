#include "modeq/flows.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "modeq/detail/path_kernels.hpp"
#include "modeq/errors.hpp"
#include "modeq/parallel.hpp"

namespace modeq {
namespace {

using Rhs = std::function<void(double, const Vector&, Vector&)>;

struct Dopri5Result {
  Vector y;
  std::int64_t steps = 0;
  double max_local_error = 0.0;
};

// Dormand-Prince 5(4) with FSAL and a standard step controller.
Dopri5Result dopri5(const Rhs& f, const Vector& y0, double T, double tol) {
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  Dopri5Result out;
  const auto n = y0.size();
  Vector y = y0, ynew(n), yerr(n), ytmp(n);
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  double t = 0.0;
  if (T == 0.0) {
    out.y = y;
    return out;
  }
  f(t, y, k1);
  double h = std::min(T, 0.01 * (1.0 + y.norm()) / (1.0 + k1.norm()));
  const double h_min = 1e-14 * std::max(1.0, T);
  const std::int64_t max_steps = 100000000;
  while (t < T) {
    if (h < h_min) {
      throw ToleranceNotMet("dopri5: step size underflow at t = " + std::to_string(t));
    }
    if (t + h > T) h = T - t;
    ytmp = y + h * (a21 * k1);
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, ynew, k7);
    yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale = tol + tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      const double r = yerr(i) / scale;
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (err <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);
      out.steps++;
      out.max_local_error = std::max(out.max_local_error, err * tol);
      if (out.steps > max_steps) {
        throw ToleranceNotMet("dopri5: step budget exhausted");
      }
    }
    const double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    h *= std::min(5.0, std::max(0.2, factor));
  }
  out.y = y;
  return out;
}

bool is_quadratic(const ObjectiveProblem& p) {
  return p.kind == ObjectiveProblem::Kind::QuadraticDiag ||
         p.kind == ObjectiveProblem::Kind::QuadraticDense;
}

// exp(-A t)(x0 - x*) + x* for the quadratic kinds.
Vector quadratic_flow_exact(const ObjectiveProblem& p, const Vector& x0, double t) {
  if (p.kind == ObjectiveProblem::Kind::QuadraticDiag) {
    return p.minimizer.array() +
           (-p.diag.array() * t).exp() * (x0 - p.minimizer).array();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.dense);
  const Vector decay = (-es.eigenvalues().array() * t).exp();
  return p.minimizer +
         es.eigenvectors() *
             decay.cwiseProduct(es.eigenvectors().transpose() * (x0 - p.minimizer));
}

std::int64_t steps_from_horizon(double h, double T) {
  if (h <= 0.0) throw std::invalid_argument("h must be > 0");
  const double ratio = T / h;
  const std::int64_t n = static_cast<std::int64_t>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("horizon T must be an integer multiple of h");
  }
  return n;
}

detail::DriftKind to_detail(SdeDrift drift) {
  switch (drift) {
    case SdeDrift::Plain:
      return detail::DriftKind::Plain;
    case SdeDrift::Modified:
      return detail::DriftKind::Modified;
    case SdeDrift::Resolvent:
      return detail::DriftKind::Resolvent;
    case SdeDrift::Exponential:
      return detail::DriftKind::Exponential;
  }
  return detail::DriftKind::Plain;
}

}  // namespace

OdeSolution gradient_flow(const ObjectiveProblem& p, const Vector& x0, double T,
                          double tol) {
  if (T < 0.0) throw std::invalid_argument("gradient_flow: T must be >= 0");
  if (tol <= 0.0) throw std::invalid_argument("gradient_flow: tol must be > 0");
  OdeSolution out;
  if (T == 0.0) {
    out.terminal = x0;
    return out;
  }
  if (is_quadratic(p)) {
    out.terminal = quadratic_flow_exact(p, x0, T);
    out.exact = true;
    out.steps = 1;
    return out;
  }
  const auto res = dopri5(
      [&p](double, const Vector& x, Vector& dx) {
        p.gradient(x, dx);
        dx = -dx;
      },
      x0, T, tol);
  out.terminal = res.y;
  out.steps = res.steps;
  out.max_local_error = res.max_local_error;
  return out;
}

Vector tangent_ode(const ObjectiveProblem& p, const Vector& x0, const Vector& k,
                   double T, double tol) {
  if (T < 0.0) throw std::invalid_argument("tangent_ode: T must be >= 0");
  if (T == 0.0) return k;
  const int d = p.dim;
  if (is_quadratic(p)) {
    // Constant Hessian: eta solves the same linear system as the flow.
    if (p.kind == ObjectiveProblem::Kind::QuadraticDiag) {
      return ((-p.diag.array() * T).exp() * k.array()).matrix();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.dense);
    const Vector decay = (-es.eigenvalues().array() * T).exp();
    return es.eigenvectors() * decay.cwiseProduct(es.eigenvectors().transpose() * k);
  }
  Vector z0(2 * d);
  z0.head(d) = x0;
  z0.tail(d) = k;
  Vector hv(d);
  const auto res = dopri5(
      [&](double, const Vector& z, Vector& dz) {
        const Vector x = z.head(d);
        const Vector eta = z.tail(d);
        p.gradient(x, hv);
        dz.head(d) = -hv;
        p.hess_vec(x, eta, hv);
        dz.tail(d) = -hv;
      },
      z0, T, tol);
  return res.y.tail(d);
}

SdePathSet simulate_sde(const ObjectiveProblem& p, const DiffusionSpec& spec,
                        SdeDrift drift, double h, const Vector& x0, double T,
                        int fine_substeps, std::int64_t ensemble,
                        std::uint64_t seed, int threads) {
  if (fine_substeps < 1) throw std::invalid_argument("simulate_sde: S must be >= 1");
  if (ensemble < 1) throw std::invalid_argument("simulate_sde: ensemble must be >= 1");
  const std::int64_t n_steps = steps_from_horizon(h, T);

  SdePathSet out;
  out.terminal.resize(ensemble, p.dim);
  out.h = h;
  out.substeps = fine_substeps;
  out.horizon = T;
  out.seed = seed;
  out.drift = drift;

  const auto table = detail::envelope_table(spec, h, n_steps, fine_substeps);
  const detail::DriftKind dk = to_detail(drift);
  parallel_for(static_cast<std::size_t>(ensemble), threads,
               [&](std::size_t begin, std::size_t end) {
                 Vector xt(p.dim), yt(p.dim);
                 for (std::size_t m = begin; m < end; ++m) {
                   detail::coupled_path(p, spec, dk, h, n_steps, fine_substeps,
                                        x0, seed, m, /*want_x=*/false, xt, yt,
                                        &table);
                   out.terminal.row(static_cast<Eigen::Index>(m)) = yt.transpose();
                 }
               });
  return out;
}

TangentSdeMoments tangent_sde(const ObjectiveProblem& p, const DiffusionSpec& spec,
                              double h, const Vector& x0, const Vector& k,
                              double T, int fine_substeps, std::int64_t ensemble,
                              std::uint64_t seed, int threads) {
  if (fine_substeps < 1) throw std::invalid_argument("tangent_sde: S must be >= 1");
  if (ensemble < 1) throw std::invalid_argument("tangent_sde: ensemble must be >= 1");
  const std::int64_t n_steps = steps_from_horizon(h, T);
  const auto table = detail::envelope_table(spec, h, n_steps, fine_substeps);

  std::vector<double> m2(ensemble), m4(ensemble);
  parallel_for(static_cast<std::size_t>(ensemble), threads,
               [&](std::size_t begin, std::size_t end) {
                 Vector yt(p.dim), eta(p.dim);
                 for (std::size_t m = begin; m < end; ++m) {
                   detail::tangent_path(p, spec, h, n_steps, fine_substeps, x0,
                                        k, seed, m, yt, eta, &table);
                   const double sq = eta.squaredNorm();
                   m2[m] = sq;
                   m4[m] = sq * sq;
                 }
               });
  const MeanStats s2 = mean_stats(m2);
  const MeanStats s4 = mean_stats(m4);
  TangentSdeMoments out;
  out.second_moment = s2.mean;
  out.second_moment_se = s2.std_error;
  out.fourth_moment = s4.mean;
  out.fourth_moment_se = s4.std_error;
  out.ensemble = ensemble;
  return out;
}

}  // namespace modeq
