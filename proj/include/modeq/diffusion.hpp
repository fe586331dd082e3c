#pragma once

#include <Eigen/Core>

namespace modeq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Nonincreasing envelope varsigma(t) bounding the diffusion coefficient.
struct EnvelopeSchedule {
  enum class Kind { Constant, Exponential, Polynomial };
  Kind kind = Kind::Constant;
  double c = 1.0;      // sup norm
  double nu = 0.0;     // exponential decay rate
  double alpha = 0.0;  // polynomial decay exponent

  double value(double t) const;
  double sup_norm() const { return c; }
  /// sup_t |d varsigma / dt|; infinite for polynomial decay with alpha < 1.
  double time_lipschitz() const;

  static EnvelopeSchedule constant(double c);
  static EnvelopeSchedule exponential(double c, double nu);
  static EnvelopeSchedule polynomial(double c, double alpha);
};

/// Time-dependent diffusion coefficient sigma(t, x). Three shapes:
///   scalar_identity: sigma = varsigma(t) I
///   diagonal:        sigma = varsigma(t) diag(base)
///   state_scaled:    sigma = varsigma(t) (1 + gain r/(1+r)) I, r = |x - center|
struct DiffusionSpec {
  enum class Shape { ScalarIdentity, Diagonal, StateScaled };
  Shape shape = Shape::ScalarIdentity;
  EnvelopeSchedule envelope;
  Vector base_diag;        // diagonal shape only
  double state_gain = 0.0; // state_scaled shape only
  Vector center;           // state_scaled shape only; saturating factor origin

  /// Scalar multiplier for the two isotropic shapes.
  double isotropic_factor(double t, const Vector& x) const;
  bool is_isotropic() const { return shape != Shape::Diagonal; }

  /// Constant such that |sigma(t,x)| <= C varsigma(t) (1 + |x - center|) and
  /// |sigma(t,x2) - sigma(t,x1)| <= C varsigma(t) |x2 - x1| (Frobenius norm).
  double growth_constant(int dim) const;

  /// Gradient of the isotropic factor at x (state_scaled only; zero for the
  /// other shapes). Used by the tangent SDE.
  Vector factor_gradient(double t, const Vector& x) const;
};

/// sigma(t, x) g, without materializing the matrix.
void sigma_apply(const DiffusionSpec& spec, double t, const Vector& x,
                 const Vector& g, Vector& out);
Vector sigma_apply(const DiffusionSpec& spec, double t, const Vector& x,
                   const Vector& g);

/// a(t, x) = sigma sigma^T.
Matrix a_matrix(const DiffusionSpec& spec, double t, const Vector& x);

/// rho(T) = int_0^T exp(2 mu s) varsigma(s)^2 ds. Closed form for constant and
/// exponential envelopes, adaptive quadrature for polynomial.
double rho(const EnvelopeSchedule& envelope, double mu, double T);

/// exp(-2 mu T) rho(T), the decaying prefactor in the second-order bound.
double rho_decay_factor(const EnvelopeSchedule& envelope, double mu, double T);

/// Quadrature route for rho, used as the independent cross-check of the
/// closed forms.
double rho_quadrature(const EnvelopeSchedule& envelope, double mu, double T,
                      double rel_tol = 1e-10);

}  // namespace modeq
