#include "modeq/diffusion.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "modeq/quadrature.hpp"

namespace modeq {

double EnvelopeSchedule::value(double t) const {
  switch (kind) {
    case Kind::Constant:
      return c;
    case Kind::Exponential:
      return c * std::exp(-nu * t);
    case Kind::Polynomial:
      return c / (1.0 + std::pow(t, alpha));
  }
  return 0.0;
}

double EnvelopeSchedule::time_lipschitz() const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::Exponential:
      return c * nu;
    case Kind::Polynomial: {
      if (alpha < 1.0) return std::numeric_limits<double>::infinity();
      if (alpha == 1.0) return c;
      // |d/dt (1+t^a)^{-1}| peaks at t^a = (a-1)/(a+1).
      const double u = (alpha - 1.0) / (alpha + 1.0);
      const double t = std::pow(u, 1.0 / alpha);
      return c * alpha * std::pow(t, alpha - 1.0) / ((1.0 + u) * (1.0 + u));
    }
  }
  return 0.0;
}

EnvelopeSchedule EnvelopeSchedule::constant(double c) {
  if (c < 0.0) throw std::invalid_argument("envelope: c must be >= 0");
  return {Kind::Constant, c, 0.0, 0.0};
}

EnvelopeSchedule EnvelopeSchedule::exponential(double c, double nu) {
  if (c < 0.0 || nu <= 0.0) throw std::invalid_argument("envelope: need c >= 0, nu > 0");
  return {Kind::Exponential, c, nu, 0.0};
}

EnvelopeSchedule EnvelopeSchedule::polynomial(double c, double alpha) {
  if (c < 0.0 || alpha <= 0.0) throw std::invalid_argument("envelope: need c >= 0, alpha > 0");
  return {Kind::Polynomial, c, 0.0, alpha};
}

double DiffusionSpec::isotropic_factor(double t, const Vector& x) const {
  const double s = envelope.value(t);
  if (shape == Shape::ScalarIdentity) return s;
  if (shape == Shape::StateScaled) {
    const double r = (x - center).norm();
    return s * (1.0 + state_gain * r / (1.0 + r));
  }
  throw std::logic_error("isotropic_factor: diagonal shape is not isotropic");
}

double DiffusionSpec::growth_constant(int dim) const {
  const double sd = std::sqrt(static_cast<double>(dim));
  switch (shape) {
    case Shape::ScalarIdentity:
      return sd;
    case Shape::Diagonal:
      return base_diag.norm();
    case Shape::StateScaled:
      return sd * (1.0 + state_gain);
  }
  return sd;
}

Vector DiffusionSpec::factor_gradient(double t, const Vector& x) const {
  if (shape != Shape::StateScaled) return Vector::Zero(x.size());
  const Vector d = x - center;
  const double r = d.norm();
  if (r < 1e-300) return Vector::Zero(x.size());
  const double s = envelope.value(t);
  const double ds = state_gain / ((1.0 + r) * (1.0 + r));
  return (s * ds / r) * d;
}

void sigma_apply(const DiffusionSpec& spec, double t, const Vector& x,
                 const Vector& g, Vector& out) {
  if (spec.shape == DiffusionSpec::Shape::Diagonal) {
    out = spec.envelope.value(t) * spec.base_diag.cwiseProduct(g);
    return;
  }
  out = spec.isotropic_factor(t, x) * g;
}

Vector sigma_apply(const DiffusionSpec& spec, double t, const Vector& x,
                   const Vector& g) {
  Vector out(g.size());
  sigma_apply(spec, t, x, g, out);
  return out;
}

Matrix a_matrix(const DiffusionSpec& spec, double t, const Vector& x) {
  const auto d = x.size();
  if (spec.shape == DiffusionSpec::Shape::Diagonal) {
    const double s = spec.envelope.value(t);
    return (s * s) * spec.base_diag.cwiseProduct(spec.base_diag).asDiagonal();
  }
  const double f = spec.isotropic_factor(t, x);
  return (f * f) * Matrix::Identity(d, d);
}

double rho(const EnvelopeSchedule& envelope, double mu, double T) {
  if (T < 0.0) throw std::invalid_argument("rho: T must be >= 0");
  if (mu <= 0.0) throw std::invalid_argument("rho: mu must be > 0");
  if (T == 0.0) return 0.0;
  const double c2 = envelope.c * envelope.c;
  switch (envelope.kind) {
    case EnvelopeSchedule::Kind::Constant:
      return c2 * std::expm1(2.0 * mu * T) / (2.0 * mu);
    case EnvelopeSchedule::Kind::Exponential: {
      const double gap = mu - envelope.nu;
      if (gap == 0.0) return c2 * T;
      return c2 * std::expm1(2.0 * gap * T) / (2.0 * gap);
    }
    case EnvelopeSchedule::Kind::Polynomial:
      return rho_quadrature(envelope, mu, T);
  }
  return 0.0;
}

double rho_decay_factor(const EnvelopeSchedule& envelope, double mu, double T) {
  if (T == 0.0) return 0.0;
  // Evaluated multiplicatively so that large 2*mu*T does not overflow before
  // the decay factor is applied.
  const double c2 = envelope.c * envelope.c;
  switch (envelope.kind) {
    case EnvelopeSchedule::Kind::Constant:
      return c2 * (1.0 - std::exp(-2.0 * mu * T)) / (2.0 * mu);
    case EnvelopeSchedule::Kind::Exponential: {
      const double gap = mu - envelope.nu;
      if (gap == 0.0) return c2 * T * std::exp(-2.0 * mu * T);
      return c2 * (std::exp(-2.0 * envelope.nu * T) - std::exp(-2.0 * mu * T)) /
             (2.0 * gap);
    }
    case EnvelopeSchedule::Kind::Polynomial: {
      const EnvelopeSchedule& env = envelope;
      // int_0^T exp(-2 mu (T - s)) varsigma(s)^2 ds, directly in decayed form.
      return integrate_adaptive(
          [&env, mu, T](double s) {
            const double v = env.value(s);
            return std::exp(-2.0 * mu * (T - s)) * v * v;
          },
          0.0, T, 1e-10);
    }
  }
  return 0.0;
}

double rho_quadrature(const EnvelopeSchedule& envelope, double mu, double T,
                      double rel_tol) {
  if (T == 0.0) return 0.0;
  const EnvelopeSchedule& env = envelope;
  return integrate_adaptive(
      [&env, mu](double s) {
        const double v = env.value(s);
        return std::exp(2.0 * mu * s) * v * v;
      },
      0.0, T, rel_tol);
}

}  // namespace modeq
