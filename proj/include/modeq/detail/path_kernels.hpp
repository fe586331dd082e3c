#pragma once

// Internal per-path simulation kernels shared by scheme, flows and the
// estimators. Every kernel addresses its Gaussian draws by
// (seed, path, coarse step, substep), so an ensemble is reproducible for any
// assignment of paths to workers.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "modeq/diffusion.hpp"
#include "modeq/objective.hpp"

namespace modeq::detail {

using Vector = Eigen::VectorXd;

enum class DriftKind { Plain, Modified, Resolvent, Exponential };

/// Drift vector b(y) for the chosen kind (negative gradient semantics).
void eval_drift(const ObjectiveProblem& p, DriftKind drift, double h,
                const Vector& y, Vector& out);

/// Envelope values at the fine grid times (n*S + j) * (h/S), j-major.
std::vector<double> envelope_table(const DiffusionSpec& spec, double h,
                                   std::int64_t n_steps, int substeps);

struct SchemeObserver {
  // Called after every coarse step with (n, state); n in [1, N].
  std::function<void(std::int64_t, const Vector&)> on_step;
  // Destination for unit normals (row n*S+j), or nullptr.
  Eigen::MatrixXd* increments = nullptr;
};

/// Reference walker for the discrete scheme. brownian=false draws one
/// Gaussian per step at substep layout S; brownian=true aggregates S fine
/// draws per step. Throws NonFiniteState on blow-up.
void scheme_path(const ObjectiveProblem& p, const DiffusionSpec& spec, double h,
                 std::int64_t n_steps, const Vector& x0, std::uint64_t seed,
                 std::uint64_t path, int substeps, bool brownian,
                 Vector& terminal, const SchemeObserver* observer = nullptr);

/// Coarse scheme path and fine Euler-Maruyama path driven by the same
/// Brownian increments (fine step h/S, diffusion sqrt(h) sigma). want_x
/// controls whether the scheme side is advanced at all; the draw layout is
/// identical either way.
void coupled_path(const ObjectiveProblem& p, const DiffusionSpec& spec,
                  DriftKind drift, double h, std::int64_t n_steps, int substeps,
                  const Vector& x0, std::uint64_t seed, std::uint64_t path,
                  bool want_x, Vector& x_terminal, Vector& y_terminal,
                  const std::vector<double>* env_table = nullptr);

/// Fine path of the modified SDE jointly with its first-variation process
/// eta (d eta = Db^h(Y) eta ds + sqrt(h) Dsigma(s,Y) eta dB).
void tangent_path(const ObjectiveProblem& p, const DiffusionSpec& spec, double h,
                  std::int64_t n_steps, int substeps, const Vector& x0,
                  const Vector& k, std::uint64_t seed, std::uint64_t path,
                  Vector& y_terminal, Vector& eta_terminal,
                  const std::vector<double>* env_table = nullptr);

}  // namespace modeq::detail
