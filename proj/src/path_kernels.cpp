#include "modeq/detail/path_kernels.hpp"

#include <cmath>
#include <cstring>

#include "modeq/errors.hpp"
#include "modeq/rng.hpp"

namespace modeq::detail {
namespace {

inline bool finite_vec(const double* v, int d) {
  bool ok = true;
  for (int i = 0; i < d; ++i) ok = ok && std::isfinite(v[i]);
  return ok;
}

inline double iso_state_factor(double env, double gain, double r) {
  return env * (1.0 + gain * r / (1.0 + r));
}

// Fixed-stride normal supply: vector draw g occupies blocks [g*B, (g+1)*B),
// refilled in aligned chunks so the addressing never depends on consumption
// patterns.
class NormalCursor {
 public:
  NormalCursor(std::uint64_t seed, std::uint64_t stream, std::uint64_t first_vector,
               int blocks_per_vec)
      : seed_(seed),
        stream_(stream),
        bpv_(blocks_per_vec),
        next_block_(first_vector * static_cast<std::uint64_t>(blocks_per_vec)) {
    chunk_vecs_ = std::max(1, 256 / bpv_);
    buf_.resize(static_cast<std::size_t>(2 * chunk_vecs_ * bpv_));
    avail_ = 0;
    pos_ = 0;
  }

  // Pointer to 2*B doubles holding the next vector draw.
  const double* next_vector() {
    if (avail_ == 0) {
      rng::fill_normals(seed_, stream_, next_block_, chunk_vecs_ * bpv_, buf_.data());
      next_block_ += static_cast<std::uint64_t>(chunk_vecs_ * bpv_);
      avail_ = chunk_vecs_;
      pos_ = 0;
    }
    const double* out = buf_.data() + pos_;
    pos_ += 2 * bpv_;
    --avail_;
    return out;
  }

 private:
  std::uint64_t seed_, stream_;
  int bpv_;
  std::uint64_t next_block_;
  int chunk_vecs_, avail_;
  std::size_t pos_ = 0;
  std::vector<double> buf_;
};

struct FastLinearCoeffs {
  bool usable = false;
  std::vector<double> kappa;  // drift: b(y) = -kappa_i (y_i - shift_i)
};

FastLinearCoeffs fast_linear(const ObjectiveProblem& p, DriftKind drift, double h) {
  FastLinearCoeffs out;
  if (p.kind != ObjectiveProblem::Kind::QuadraticDiag) return out;
  out.kappa.resize(p.dim);
  for (int i = 0; i < p.dim; ++i) {
    const double lam = p.diag(i);
    switch (drift) {
      case DriftKind::Plain:
        out.kappa[i] = lam;
        break;
      case DriftKind::Modified:
        out.kappa[i] = lam + 0.5 * h * lam * lam;
        break;
      case DriftKind::Resolvent:
        if (h * p.lip >= 2.0) {
          throw SingularHessianResolvent("resolvent drift requires h * lip < 2");
        }
        out.kappa[i] = lam / (1.0 - 0.5 * h * lam);
        break;
      case DriftKind::Exponential:
        out.kappa[i] = std::exp(0.5 * h * lam) * lam;
        break;
    }
  }
  out.usable = true;
  return out;
}

}  // namespace

void eval_drift(const ObjectiveProblem& p, DriftKind drift, double h,
                const Vector& y, Vector& out) {
  switch (drift) {
    case DriftKind::Plain:
      p.gradient(y, out);
      out = -out;
      return;
    case DriftKind::Modified:
      modified_gradient(p, h, y, out);
      out = -out;
      return;
    case DriftKind::Resolvent:
      out = alternative_modified_drift(p, h, y, DriftVariant::Resolvent);
      return;
    case DriftKind::Exponential:
      out = alternative_modified_drift(p, h, y, DriftVariant::Exponential);
      return;
  }
}

std::vector<double> envelope_table(const DiffusionSpec& spec, double h,
                                   std::int64_t n_steps, int substeps) {
  const double delta = h / static_cast<double>(substeps);
  std::vector<double> tab(static_cast<std::size_t>(n_steps) * substeps);
  for (std::size_t g = 0; g < tab.size(); ++g) {
    tab[g] = spec.envelope.value(static_cast<double>(g) * delta);
  }
  return tab;
}

void scheme_path(const ObjectiveProblem& p, const DiffusionSpec& spec, double h,
                 std::int64_t n_steps, const Vector& x0, std::uint64_t seed,
                 std::uint64_t path, int substeps, bool brownian,
                 Vector& terminal, const SchemeObserver* observer) {
  const int d = p.dim;
  const int bpv = rng::blocks_per_vector(d);
  const int s_layout = brownian ? substeps : 1;
  const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(s_layout));
  const std::uint64_t stream = rng::stream_id(rng::Purpose::kIncrements, path);
  NormalCursor draws(seed, stream, 0, bpv);

  Vector x = x0, grad(d), gamma(d), sig_gamma(d);
  for (std::int64_t n = 0; n < n_steps; ++n) {
    const double t_n = static_cast<double>(n) * h;
    gamma.setZero();
    for (int j = 0; j < s_layout; ++j) {
      const double* v = draws.next_vector();
      for (int i = 0; i < d; ++i) gamma(i) += v[i];
      if (observer && observer->increments) {
        for (int i = 0; i < d; ++i) {
          (*observer->increments)(n * s_layout + j, i) = v[i];
        }
      }
    }
    gamma *= inv_sqrt_s;
    p.gradient(x, grad);
    sigma_apply(spec, t_n, x, gamma, sig_gamma);
    x = x - h * grad + h * sig_gamma;
    if (!finite_vec(x.data(), d)) throw NonFiniteState(path, n + 1);
    if (observer && observer->on_step) observer->on_step(n + 1, x);
  }
  terminal = x;
}

void coupled_path(const ObjectiveProblem& p, const DiffusionSpec& spec,
                  DriftKind drift, double h, std::int64_t n_steps, int substeps,
                  const Vector& x0, std::uint64_t seed, std::uint64_t path,
                  bool want_x, Vector& x_terminal, Vector& y_terminal,
                  const std::vector<double>* env_table) {
  const int d = p.dim;
  const int bpv = rng::blocks_per_vector(d);
  const int s = substeps;
  const double delta = h / static_cast<double>(s);
  const double coef = h / std::sqrt(static_cast<double>(s));
  const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(s));
  const std::uint64_t stream = rng::stream_id(rng::Purpose::kIncrements, path);

  std::vector<double> local_table;
  if (env_table == nullptr) {
    local_table = envelope_table(spec, h, n_steps, s);
    env_table = &local_table;
  }
  const double* tab = env_table->data();

  const int blocks_per_step = s * bpv;
  std::vector<double> buf(static_cast<std::size_t>(2 * blocks_per_step));

  const bool diag_sigma = spec.shape == DiffusionSpec::Shape::Diagonal;
  const bool state_sigma = spec.shape == DiffusionSpec::Shape::StateScaled;

  FastLinearCoeffs fast = fast_linear(p, drift, h);

  if (fast.usable && !state_sigma && d <= 2) {
    // Register-resident specialization for the hot one- and two-dimensional
    // coupled runs.
    const double dk0 = delta * fast.kappa[0];
    const double dk1 = d > 1 ? delta * fast.kappa[1] : 0.0;
    const double hl0 = h * p.diag(0);
    const double hl1 = d > 1 ? h * p.diag(1) : 0.0;
    const double s0 = p.minimizer(0);
    const double s1 = d > 1 ? p.minimizer(1) : 0.0;
    const double b0 = diag_sigma ? spec.base_diag(0) : 1.0;
    const double b1 = diag_sigma && d > 1 ? spec.base_diag(1) : 1.0;
    double y0 = x0(0), y1 = d > 1 ? x0(1) : 0.0;
    double x0r = y0, x1r = y1;
    for (std::int64_t n = 0; n < n_steps; ++n) {
      rng::fill_normals(seed, stream,
                        static_cast<std::uint64_t>(n) * blocks_per_step,
                        blocks_per_step, buf.data());
      const double* v = buf.data();
      const double* te = tab + n * s;
      double sum0 = 0.0, sum1 = 0.0;
      if (d == 2) {
        for (int j = 0; j < s; ++j) {
          const double cenv = coef * te[j];
          const double xi0 = v[2 * j], xi1 = v[2 * j + 1];
          y0 += -dk0 * (y0 - s0) + cenv * b0 * xi0;
          y1 += -dk1 * (y1 - s1) + cenv * b1 * xi1;
          sum0 += xi0;
          sum1 += xi1;
        }
      } else {
        for (int j = 0; j < s; ++j) {
          const double xi0 = v[2 * j];
          y0 += -dk0 * (y0 - s0) + (coef * te[j]) * b0 * xi0;
          sum0 += xi0;
        }
      }
      if (!(std::isfinite(y0) && std::isfinite(y1))) throw NonFiniteState(path, n + 1);
      if (want_x) {
        const double env = spec.envelope.value(static_cast<double>(n) * h);
        x0r += -hl0 * (x0r - s0) + h * env * b0 * (inv_sqrt_s * sum0);
        if (d == 2) x1r += -hl1 * (x1r - s1) + h * env * b1 * (inv_sqrt_s * sum1);
        if (!(std::isfinite(x0r) && std::isfinite(x1r))) throw NonFiniteState(path, n + 1);
      }
    }
    y_terminal.resize(d);
    x_terminal.resize(d);
    y_terminal(0) = y0;
    x_terminal(0) = want_x ? x0r : x0(0);
    if (d > 1) {
      y_terminal(1) = y1;
      x_terminal(1) = want_x ? x1r : x0(1);
    }
    return;
  }

  if (fast.usable) {
    std::vector<double> y(d), x(d), sums(d), dkap(d), hlam(d), shift(d), bdiag(d, 1.0);
    for (int i = 0; i < d; ++i) {
      y[i] = x0(i);
      x[i] = x0(i);
      dkap[i] = delta * fast.kappa[i];
      hlam[i] = h * p.diag(i);
      shift[i] = p.minimizer(i);
      if (diag_sigma) bdiag[i] = spec.base_diag(i);
    }
    for (std::int64_t n = 0; n < n_steps; ++n) {
      rng::fill_normals(seed, stream,
                        static_cast<std::uint64_t>(n) * blocks_per_step,
                        blocks_per_step, buf.data());
      if (want_x) std::fill(sums.begin(), sums.end(), 0.0);
      for (int j = 0; j < s; ++j) {
        const double* v = buf.data() + static_cast<std::size_t>(j) * 2 * bpv;
        double env = tab[n * s + j];
        if (state_sigma) {
          double r2 = 0.0;
          for (int i = 0; i < d; ++i) {
            const double dd = y[i] - spec.center(i);
            r2 += dd * dd;
          }
          env = iso_state_factor(env, spec.state_gain, std::sqrt(r2));
        }
        const double cenv = coef * env;
        for (int i = 0; i < d; ++i) {
          const double xi = v[i];
          y[i] += -dkap[i] * (y[i] - shift[i]) + cenv * bdiag[i] * xi;
          if (want_x) sums[i] += xi;
        }
      }
      if (!finite_vec(y.data(), d)) throw NonFiniteState(path, n + 1);
      if (want_x) {
        const double t_n = static_cast<double>(n) * h;
        double env = spec.envelope.value(t_n);
        if (state_sigma) {
          double r2 = 0.0;
          for (int i = 0; i < d; ++i) {
            const double dd = x[i] - spec.center(i);
            r2 += dd * dd;
          }
          env = iso_state_factor(env, spec.state_gain, std::sqrt(r2));
        }
        for (int i = 0; i < d; ++i) {
          const double gamma = inv_sqrt_s * sums[i];
          x[i] += -hlam[i] * (x[i] - shift[i]) + h * env * bdiag[i] * gamma;
        }
        if (!finite_vec(x.data(), d)) throw NonFiniteState(path, n + 1);
      }
    }
    y_terminal.resize(d);
    x_terminal.resize(d);
    for (int i = 0; i < d; ++i) {
      y_terminal(i) = y[i];
      x_terminal(i) = want_x ? x[i] : x0(i);
    }
    return;
  }

  // Generic path: switch-dispatched drift and diffusion, Eigen scratch.
  Vector y = x0, x = x0, b(d), grad(d), gamma(d), sig(d), noise(d);
  for (std::int64_t n = 0; n < n_steps; ++n) {
    rng::fill_normals(seed, stream,
                      static_cast<std::uint64_t>(n) * blocks_per_step,
                      blocks_per_step, buf.data());
    gamma.setZero();
    for (int j = 0; j < s; ++j) {
      const double* v = buf.data() + static_cast<std::size_t>(j) * 2 * bpv;
      eval_drift(p, drift, h, y, b);
      double env = tab[n * s + j];
      for (int i = 0; i < d; ++i) noise(i) = v[i];
      if (diag_sigma) {
        sig = env * spec.base_diag.cwiseProduct(noise);
      } else {
        if (state_sigma) {
          env = iso_state_factor(env, spec.state_gain, (y - spec.center).norm());
        }
        sig = env * noise;
      }
      y = y + delta * b + coef * sig;
      if (want_x) gamma += noise;
    }
    if (!finite_vec(y.data(), d)) throw NonFiniteState(path, n + 1);
    if (want_x) {
      const double t_n = static_cast<double>(n) * h;
      gamma *= inv_sqrt_s;
      p.gradient(x, grad);
      sigma_apply(spec, t_n, x, gamma, sig);
      x = x - h * grad + h * sig;
      if (!finite_vec(x.data(), d)) throw NonFiniteState(path, n + 1);
    }
  }
  y_terminal = y;
  x_terminal = want_x ? x : x0;
}

void tangent_path(const ObjectiveProblem& p, const DiffusionSpec& spec, double h,
                  std::int64_t n_steps, int substeps, const Vector& x0,
                  const Vector& k, std::uint64_t seed, std::uint64_t path,
                  Vector& y_terminal, Vector& eta_terminal,
                  const std::vector<double>* env_table) {
  const int d = p.dim;
  const int bpv = rng::blocks_per_vector(d);
  const int s = substeps;
  const double delta = h / static_cast<double>(s);
  const double coef = h / std::sqrt(static_cast<double>(s));
  const std::uint64_t stream = rng::stream_id(rng::Purpose::kIncrements, path);

  std::vector<double> local_table;
  if (env_table == nullptr) {
    local_table = envelope_table(spec, h, n_steps, s);
    env_table = &local_table;
  }
  const double* tab = env_table->data();

  const bool diag_sigma = spec.shape == DiffusionSpec::Shape::Diagonal;
  const bool state_sigma = spec.shape == DiffusionSpec::Shape::StateScaled;

  const int blocks_per_step = s * bpv;
  std::vector<double> buf(static_cast<std::size_t>(2 * blocks_per_step));

  Vector y = x0, eta = k, b(d), deta(d), noise(d), sig(d), fac_grad(d);
  for (std::int64_t n = 0; n < n_steps; ++n) {
    rng::fill_normals(seed, stream,
                      static_cast<std::uint64_t>(n) * blocks_per_step,
                      blocks_per_step, buf.data());
    for (int j = 0; j < s; ++j) {
      const double* v = buf.data() + static_cast<std::size_t>(j) * 2 * bpv;
      const double t_fine = static_cast<double>(n * s + j) * delta;
      for (int i = 0; i < d; ++i) noise(i) = v[i];
      modified_gradient(p, h, y, b);
      modified_hess_vec(p, h, y, eta, deta);
      double env = tab[n * s + j];
      double eta_noise_scale = 0.0;
      if (state_sigma) {
        fac_grad = spec.factor_gradient(t_fine, y);
        eta_noise_scale = fac_grad.dot(eta);
        env = iso_state_factor(env, spec.state_gain, (y - spec.center).norm());
      }
      if (diag_sigma) {
        sig = env * spec.base_diag.cwiseProduct(noise);
      } else {
        sig = env * noise;
      }
      y = y - delta * b + coef * sig;
      eta = eta - delta * deta + (coef * eta_noise_scale) * noise;
    }
    if (!finite_vec(y.data(), d) || !finite_vec(eta.data(), d)) {
      throw NonFiniteState(path, n + 1);
    }
  }
  y_terminal = y;
  eta_terminal = eta;
}

}  // namespace modeq::detail
