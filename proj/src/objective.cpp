#include "modeq/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "modeq/errors.hpp"
#include "modeq/rng.hpp"

namespace modeq {

double ObjectiveProblem::value(const Vector& x) const {
  switch (kind) {
    case Kind::QuadraticDiag: {
      const Vector d = x - minimizer;
      return 0.5 * d.dot(diag.cwiseProduct(d));
    }
    case Kind::QuadraticDense: {
      const Vector d = x - minimizer;
      return 0.5 * d.dot(dense * d);
    }
    case Kind::PerturbedQuadratic:
      return x.squaredNorm() + epsilon * x.array().cos().sum();
    case Kind::Custom:
      return custom_eval(x);
  }
  return 0.0;
}

void ObjectiveProblem::gradient(const Vector& x, Vector& out) const {
  switch (kind) {
    case Kind::QuadraticDiag:
      out = diag.cwiseProduct(x - minimizer);
      return;
    case Kind::QuadraticDense:
      out.noalias() = dense * (x - minimizer);
      return;
    case Kind::PerturbedQuadratic:
      out = 2.0 * x - epsilon * x.array().sin().matrix();
      return;
    case Kind::Custom:
      custom_grad(x, out);
      return;
  }
}

Vector ObjectiveProblem::gradient(const Vector& x) const {
  Vector g(dim);
  gradient(x, g);
  return g;
}

void ObjectiveProblem::hess_vec(const Vector& x, const Vector& k, Vector& out) const {
  switch (kind) {
    case Kind::QuadraticDiag:
      out = diag.cwiseProduct(k);
      return;
    case Kind::QuadraticDense:
      out.noalias() = dense * k;
      return;
    case Kind::PerturbedQuadratic:
      out = (2.0 - epsilon * x.array().cos()).matrix().cwiseProduct(k);
      return;
    case Kind::Custom:
      custom_hess_vec(x, k, out);
      return;
  }
}

Vector ObjectiveProblem::hess_vec(const Vector& x, const Vector& k) const {
  Vector out(dim);
  hess_vec(x, k, out);
  return out;
}

void ObjectiveProblem::third_vec(const Vector& x, const Vector& k1,
                                 const Vector& k2, Vector& out) const {
  switch (kind) {
    case Kind::QuadraticDiag:
    case Kind::QuadraticDense:
      out.setZero(dim);
      return;
    case Kind::PerturbedQuadratic:
      out = epsilon * x.array().sin().matrix().cwiseProduct(k1).cwiseProduct(k2);
      return;
    case Kind::Custom: {
      if (custom_third_vec) {
        custom_third_vec(x, k1, k2, out);
        return;
      }
      // Central difference of hess_vec in direction k1.
      const double scale = k1.norm();
      if (scale == 0.0) {
        out.setZero(dim);
        return;
      }
      const double step = std::cbrt(2.2e-16) * (1.0 + x.norm()) / scale;
      Vector hp(dim), hm(dim);
      hess_vec(x + step * k1, k2, hp);
      hess_vec(x - step * k1, k2, hm);
      out = (hp - hm) / (2.0 * step);
      return;
    }
  }
}

Matrix ObjectiveProblem::hessian(const Vector& x) const {
  switch (kind) {
    case Kind::QuadraticDiag:
      return diag.asDiagonal();
    case Kind::QuadraticDense:
      return dense;
    case Kind::PerturbedQuadratic:
      return (2.0 - epsilon * x.array().cos()).matrix().asDiagonal();
    case Kind::Custom: {
      Matrix h(dim, dim);
      Vector e = Vector::Zero(dim), col(dim);
      for (int j = 0; j < dim; ++j) {
        e(j) = 1.0;
        hess_vec(x, e, col);
        h.col(j) = col;
        e(j) = 0.0;
      }
      return 0.5 * (h + h.transpose());
    }
  }
  return Matrix();
}

ObjectiveProblem quadratic_problem(const Vector& diag, const Vector& shift) {
  if (diag.size() != shift.size() || diag.size() == 0) {
    throw std::invalid_argument("quadratic_problem: dimension mismatch");
  }
  if (diag.minCoeff() <= 0.0) {
    throw std::invalid_argument("quadratic_problem: A must be positive definite");
  }
  ObjectiveProblem p;
  p.kind = ObjectiveProblem::Kind::QuadraticDiag;
  p.dim = static_cast<int>(diag.size());
  p.diag = diag;
  p.minimizer = shift;
  p.mu = diag.minCoeff();
  p.lip = diag.maxCoeff();
  return p;
}

ObjectiveProblem quadratic_problem(const Matrix& a, const Vector& shift) {
  if (a.rows() != a.cols() || a.rows() != shift.size() || a.rows() == 0) {
    throw std::invalid_argument("quadratic_problem: dimension mismatch");
  }
  if (!a.isApprox(a.transpose(), 1e-12)) {
    throw std::invalid_argument("quadratic_problem: A must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("quadratic_problem: A must be positive definite");
  }
  ObjectiveProblem p;
  p.kind = ObjectiveProblem::Kind::QuadraticDense;
  p.dim = static_cast<int>(a.rows());
  p.dense = 0.5 * (a + a.transpose());
  p.minimizer = shift;
  p.mu = es.eigenvalues().minCoeff();
  p.lip = es.eigenvalues().maxCoeff();
  return p;
}

ObjectiveProblem perturbed_quadratic(int dim, double epsilon) {
  if (dim <= 0) throw std::invalid_argument("perturbed_quadratic: dim must be positive");
  if (epsilon < 0.0) throw std::invalid_argument("perturbed_quadratic: epsilon must be >= 0");
  ObjectiveProblem p;
  p.kind = ObjectiveProblem::Kind::PerturbedQuadratic;
  p.dim = dim;
  p.epsilon = epsilon;
  p.minimizer = Vector::Zero(dim);
  // All derivatives of G(x) = sum_i cos(x_i) are bounded by 1, so for
  // epsilon < 1 the declared constants are guaranteed. Past the threshold the
  // declared mu is a nominal claim left to check_assumptions to falsify.
  p.mu = epsilon < 1.0 ? 2.0 - epsilon : 1.0;
  p.lip = 2.0 + epsilon;
  return p;
}

double modified_objective(const ObjectiveProblem& p, double h, const Vector& x) {
  if (h < 0.0) throw std::invalid_argument("modified_objective: h must be >= 0");
  const Vector g = p.gradient(x);
  return p.value(x) + 0.25 * h * g.squaredNorm();
}

void modified_gradient(const ObjectiveProblem& p, double h, const Vector& x,
                       Vector& out) {
  if (h < 0.0) throw std::invalid_argument("modified_gradient: h must be >= 0");
  Vector g(p.dim);
  p.gradient(x, g);
  p.hess_vec(x, g, out);
  out = g + (0.5 * h) * out;
}

Vector modified_gradient(const ObjectiveProblem& p, double h, const Vector& x) {
  Vector out(p.dim);
  modified_gradient(p, h, x, out);
  return out;
}

void modified_hess_vec(const ObjectiveProblem& p, double h, const Vector& x,
                       const Vector& k, Vector& out) {
  Vector g(p.dim), hk(p.dim), hhk(p.dim), tk(p.dim);
  p.gradient(x, g);
  p.hess_vec(x, k, hk);
  p.hess_vec(x, hk, hhk);
  p.third_vec(x, k, g, tk);
  out = hk + (0.5 * h) * (tk + hhk);
}

Vector alternative_modified_drift(const ObjectiveProblem& p, double h,
                                  const Vector& x, DriftVariant variant) {
  if (h < 0.0) throw std::invalid_argument("alternative_modified_drift: h must be >= 0");
  const Vector g = p.gradient(x);
  const Matrix hess = p.hessian(x);
  if (variant == DriftVariant::Resolvent) {
    if (h * p.lip >= 2.0) {
      throw SingularHessianResolvent(
          "resolvent drift requires h * lip < 2 (got h * lip = " +
          std::to_string(h * p.lip) + ")");
    }
    const Matrix m = Matrix::Identity(p.dim, p.dim) - (0.5 * h) * hess;
    Eigen::PartialPivLU<Matrix> lu(m);
    const Vector sol = lu.solve(g);
    if (!sol.allFinite() || (m * sol - g).norm() > 1e-8 * (1.0 + g.norm())) {
      throw SingularHessianResolvent("resolvent linear solve failed");
    }
    return -sol;
  }
  // exp((h/2) Hess) grad via the symmetric eigendecomposition; d is small here.
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
  const Vector expvals = ((0.5 * h) * es.eigenvalues().array()).exp();
  return -(es.eigenvectors() *
           expvals.cwiseProduct(es.eigenvectors().transpose() * g));
}

bool AssumptionReport::all_pass() const {
  if (!lip_pass || !mu_pass) return false;
  for (const auto& m : modified) {
    if (!m.pass) return false;
  }
  return true;
}

AssumptionReport check_assumptions(const ObjectiveProblem& p,
                                   const std::vector<double>& h_grid,
                                   int sample_count, std::uint64_t seed,
                                   double box_radius) {
  if (sample_count < 2) {
    throw std::invalid_argument("check_assumptions: sample_count must be >= 2");
  }
  AssumptionReport report;
  report.box_radius = box_radius;
  report.sample_count = sample_count;
  report.lip_observed = 0.0;
  report.mu_observed = std::numeric_limits<double>::infinity();

  std::vector<double> mu_h(h_grid.size(),
                           std::numeric_limits<double>::infinity());

  const std::uint64_t stream = rng::stream_id(rng::Purpose::kSampling, 0);
  const int d = p.dim;
  Vector x1(d), x2(d), g1(d), g2(d), m1(d), m2(d);
  std::uint64_t block = 0;
  std::vector<double> buf;
  auto draw_uniform = [&](int n, double* out) {
    const int nb = (n + 1) / 2;
    buf.resize(2 * nb);
    rng::fill_uniforms(seed, stream, block, nb, buf.data());
    block += nb;
    for (int i = 0; i < n; ++i) out[i] = buf[i];
  };

  std::vector<double> u(2 * d + 1);
  for (int s = 0; s < sample_count; ++s) {
    draw_uniform(2 * d + 1, u.data());
    for (int i = 0; i < d; ++i) {
      x1(i) = p.minimizer(i) + box_radius * (2.0 * u[i] - 1.0);
    }
    // Alternate global pairs with nearby pairs; curvature violations are
    // easiest to catch locally.
    if (s % 2 == 0) {
      for (int i = 0; i < d; ++i) {
        x2(i) = p.minimizer(i) + box_radius * (2.0 * u[d + i] - 1.0);
      }
    } else {
      const double scale = 1e-3 * box_radius;
      for (int i = 0; i < d; ++i) {
        x2(i) = x1(i) + scale * (2.0 * u[d + i] - 1.0);
      }
    }
    const Vector dx = x2 - x1;
    const double dn2 = dx.squaredNorm();
    if (dn2 == 0.0) continue;

    p.gradient(x1, g1);
    p.gradient(x2, g2);
    const Vector dg = g2 - g1;
    report.lip_observed = std::max(report.lip_observed, dg.norm() / std::sqrt(dn2));
    report.mu_observed = std::min(report.mu_observed, dg.dot(dx) / dn2);

    for (std::size_t j = 0; j < h_grid.size(); ++j) {
      modified_gradient(p, h_grid[j], x1, m1);
      modified_gradient(p, h_grid[j], x2, m2);
      mu_h[j] = std::min(mu_h[j], (m2 - m1).dot(dx) / dn2);
    }
  }

  constexpr double kTol = 1e-10;
  report.lip_pass = report.lip_observed <= p.lip + kTol;
  report.mu_pass = report.mu_observed >= p.mu - kTol;
  for (std::size_t j = 0; j < h_grid.size(); ++j) {
    AssumptionReport::ModifiedConvexity row;
    row.h = h_grid[j];
    row.mu_observed = mu_h[j];
    row.pass = mu_h[j] >= p.mu - kTol;
    report.modified.push_back(row);
  }
  return report;
}

}  // namespace modeq
