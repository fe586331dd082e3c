#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "modeq/complexity.hpp"
#include "modeq/config.hpp"
#include "modeq/errors.hpp"
#include "modeq/parallel.hpp"
#include "modeq/rng.hpp"
#include "modeq/scheme.hpp"

namespace {

using namespace modeq;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

struct Output {
  std::string path;  // empty -> stdout
  std::ostringstream text;

  void flush() {
    if (path.empty()) {
      std::cout << text.str();
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << text.str();
  }
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--set", args.overrides, "override a config leaf, e.g. scheme.h=0.05");
  cmd->add_option("--out", args.out_path, "output CSV path (default: stdout)");
  cmd->add_option("--seed", args.seed, "override scheme.seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker count (overrides MODEQ_THREADS)");
}

ParsedConfig load(const CommonArgs& args) {
  nlohmann::json doc = load_config_file(args.config_path);
  for (const auto& ov : args.overrides) apply_override(doc, ov);
  ParsedConfig cfg = parse_config(doc);
  if (args.seed_set) cfg.scheme.seed = args.seed;
  return cfg;
}

void apply_threads(const CommonArgs& args) {
  if (args.threads > 0) {
    setenv("MODEQ_THREADS", std::to_string(args.threads).c_str(), 1);
  }
}

bool oracle_applicable(const ParsedConfig& cfg) {
  return cfg.problem.kind == ObjectiveProblem::Kind::QuadraticDiag &&
         cfg.diffusion.shape == DiffusionSpec::Shape::ScalarIdentity &&
         cfg.diffusion.envelope.kind == EnvelopeSchedule::Kind::Constant;
}

int cmd_run(const CommonArgs& args) {
  apply_threads(args);
  ParsedConfig cfg = load(args);
  const auto [h, n_steps] = cfg.scheme.resolve_steps();
  const auto threshold = step_size_threshold(cfg.problem, cfg.diffusion);
  if (h >= threshold.value) {
    std::cerr << "warning: h = " << h << " exceeds the moment-bound threshold "
              << threshold.value << "; expect instability\n";
  }

  SchemeConfig sc;
  sc.h = h;
  sc.n_steps = n_steps;
  sc.x0 = cfg.scheme.x0;
  sc.seed = cfg.scheme.seed;
  sc.noise_mode = cfg.scheme.noise_mode;
  sc.substeps = cfg.scheme.substeps;

  Output out;
  out.path = args.out_path;
  std::ostream& info = args.out_path.empty() ? std::cerr : std::cout;
  const int d = cfg.problem.dim;

  if (cfg.scheme.ensemble == 1) {
    const PathRecord rec = run_scheme(cfg.problem, cfg.diffusion, sc);
    out.text << "step,t";
    for (int i = 0; i < d; ++i) out.text << ",x" << i;
    out.text << "\n";
    for (std::size_t n = 0; n < rec.states.size(); ++n) {
      out.text << n << "," << fmt(rec.times[n]);
      for (int i = 0; i < d; ++i) out.text << "," << fmt(rec.states[n](i));
      out.text << "\n";
    }
    info << "final state:";
    for (int i = 0; i < d; ++i) info << " " << fmt(rec.states.back()(i));
    info << "\n";
  } else {
    const auto [rms, mean_abs] =
        strong_error(cfg.problem, cfg.diffusion, sc, cfg.scheme.ensemble);
    // Terminal ensemble CSV.
    out.text << "path";
    for (int i = 0; i < d; ++i) out.text << ",x" << i;
    out.text << "\n";
    // Re-simulate terminals for the CSV rows (deterministic by path index).
    for (std::int64_t m = 0; m < cfg.scheme.ensemble; ++m) {
      const PathRecord rec = run_scheme(cfg.problem, cfg.diffusion, sc, m);
      out.text << m;
      for (int i = 0; i < d; ++i) out.text << "," << fmt(rec.states.back()(i));
      out.text << "\n";
    }
    const double m2 = rms.estimate * rms.estimate;
    info << "ensemble M=" << cfg.scheme.ensemble << " N=" << n_steps
         << " h=" << fmt(h) << "\n";
    info << "E|X_N - x*|^2 = " << fmt(m2) << "  (rms " << fmt(rms.estimate)
         << " +- " << fmt(rms.std_error) << ")\n";
    info << "E|X_N - x*|   = " << fmt(mean_abs.estimate) << " +- "
         << fmt(mean_abs.std_error) << "\n";
    if (oracle_applicable(cfg)) {
      const auto oracle = quadratic_second_moment_recursion(
          cfg.problem.diag, cfg.diffusion.envelope.c, h, n_steps,
          cfg.scheme.x0 - cfg.problem.minimizer);
      const double se_m2 = 2.0 * rms.estimate * rms.std_error;
      const double z = se_m2 > 0.0 ? (m2 - oracle.back()) / se_m2 : 0.0;
      info << "recursion oracle m_N = " << fmt(oracle.back()) << "  (z = "
           << fmt(z) << ")\n";
    }
  }
  out.flush();
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  apply_threads(args);
  ParsedConfig cfg = load(args);
  if (!cfg.phi.has_value()) throw ConfigError("sweep: config requires a phi block");
  if (!cfg.sweep_target.has_value()) throw ConfigError("sweep: config requires a sweep block");
  if (cfg.scheme.h_grid.empty()) throw ConfigError("sweep: scheme.h_grid is required");
  if (!cfg.scheme.horizon.has_value()) throw ConfigError("sweep: scheme.T is required");

  const SweepResult res =
      sweep(cfg.problem, cfg.diffusion, *cfg.phi, cfg.scheme.h_grid,
            *cfg.scheme.horizon, cfg.scheme.ensemble, *cfg.sweep_target,
            cfg.scheme.x0, cfg.scheme.seed, cfg.scheme.substeps);

  Output out;
  out.path = args.out_path;
  out.text << report_csv_header() << "\n";
  for (const auto& r : res.reports) out.text << report_csv_row(r) << "\n";
  out.text << "# fit slope=" << fmt(res.fit.slope)
           << " intercept=" << fmt(res.fit.intercept)
           << " r_squared=" << fmt(res.fit.r_squared)
           << " points=" << res.fit.points.size() << "\n";
  out.flush();
  std::ostream& info = args.out_path.empty() ? std::cerr : std::cout;
  info << "order fit: slope " << fmt(res.fit.slope) << ", R^2 "
       << fmt(res.fit.r_squared) << " (" << res.fit.points.size() << " points)\n";
  return 0;
}

struct PlanArgs {
  CommonArgs common;
  std::vector<std::string> regimes;
  std::vector<double> eps;
  double mu = 1.0;
  double nu = 0.0;
  double alpha = 0.0;
  bool compare = false;
};

int cmd_plan(const PlanArgs& args) {
  std::vector<std::string> regimes = args.regimes;
  std::vector<double> eps = args.eps;
  double mu = args.mu, nu = args.nu, alpha = args.alpha;
  bool compare = args.compare;

  if (!args.common.config_path.empty()) {
    nlohmann::json doc = load_config_file(args.common.config_path);
    for (const auto& ov : args.common.overrides) apply_override(doc, ov);
    for (const auto& item : doc.items()) {
      const std::string& key = item.key();
      if (key == "regimes") {
        regimes = doc.at("regimes").get<std::vector<std::string>>();
      } else if (key == "eps") {
        eps = doc.at("eps").get<std::vector<double>>();
      } else if (key == "mu") {
        mu = doc.at("mu").get<double>();
      } else if (key == "nu") {
        nu = doc.at("nu").get<double>();
      } else if (key == "alpha") {
        alpha = doc.at("alpha").get<double>();
      } else if (key == "compare") {
        compare = doc.at("compare").get<bool>();
      } else {
        throw ConfigError("plan config: unknown key '" + key + "'");
      }
    }
  }
  if (eps.empty()) throw ConfigError("plan: at least one --eps is required");
  for (const double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("plan: eps must be in (0, 1)");
  }

  Output out;
  out.path = args.common.out_path;
  if (compare) {
    const auto rows = compare_regimes(eps, mu, alpha);
    out.text << compare_csv_header() << "\n";
    for (const auto& row : rows) out.text << compare_csv_row(row) << "\n";
  } else {
    if (regimes.empty()) throw ConfigError("plan: --regime is required");
    out.text << plan_csv_header() << "\n";
    for (const auto& name : regimes) {
      const Regime regime = parse_regime(name, nu, alpha);
      for (const double e : eps) {
        out.text << plan_csv_row(regime, plan(regime, e, mu)) << "\n";
      }
    }
  }
  out.flush();
  return 0;
}

int cmd_check(const CommonArgs& args) {
  apply_threads(args);
  ParsedConfig cfg = load(args);
  const auto& p = cfg.problem;
  const auto& spec = cfg.diffusion;
  const CheckSettings& cs = cfg.check;

  struct Row {
    std::string name;
    double observed;
    double threshold;
    bool pass;
  };
  std::vector<Row> rows;

  const AssumptionReport rep =
      check_assumptions(p, cs.h_grid, cs.samples, cfg.scheme.seed, cs.radius);
  rows.push_back({"gradient_lipschitz", rep.lip_observed, p.lip, rep.lip_pass});
  rows.push_back({"mu_convexity", rep.mu_observed, p.mu, rep.mu_pass});
  for (const auto& m : rep.modified) {
    rows.push_back({"modified_mu_convexity(h=" + fmt(m.h) + ")", m.mu_observed,
                    p.mu, m.pass});
  }

  // Diffusion invariants on sampled (t, x).
  {
    double min_eig = 0.0, worst_growth = 0.0;
    std::vector<double> u(2 * p.dim + 2);
    const auto stream = rng::stream_id(rng::Purpose::kSampling, 1);
    std::uint64_t block = 0;
    for (int s = 0; s < 50; ++s) {
      std::vector<double> buf(2 * ((u.size() + 1) / 2));
      rng::fill_uniforms(cfg.scheme.seed, stream, block, (u.size() + 1) / 2, buf.data());
      block += (u.size() + 1) / 2;
      Vector x(p.dim);
      for (int i = 0; i < p.dim; ++i) {
        x(i) = p.minimizer(i) + cs.radius * (2.0 * buf[i] - 1.0);
      }
      const double t = 5.0 * buf[p.dim];
      const Matrix a = a_matrix(spec, t, x);
      Eigen::SelfAdjointEigenSolver<Matrix> es(a);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      const double bound = spec.growth_constant(p.dim) * spec.envelope.value(t) *
                           (1.0 + (x - p.minimizer).norm());
      const double norm = std::sqrt(a.trace());
      worst_growth = std::max(worst_growth, norm - bound);
    }
    rows.push_back({"a_matrix_psd", min_eig, -1e-12, min_eig >= -1e-12});
    rows.push_back({"sigma_growth_bound", worst_growth, 1e-10, worst_growth <= 1e-10});
  }

  // rho closed form against quadrature.
  {
    double worst = 0.0;
    for (const double T : {0.5, 1.0, 2.0, 5.0}) {
      const double a = rho(spec.envelope, p.mu, T);
      const double b = rho_quadrature(spec.envelope, p.mu, T);
      worst = std::max(worst, std::abs(a - b) / std::max(1e-300, std::abs(b)));
    }
    rows.push_back({"rho_closed_vs_quadrature", worst, 1e-8, worst <= 1e-8});
  }

  if (cs.tangent.has_value()) {
    const auto& ts = *cs.tangent;
    double worst_ode = -1e300;
    for (int inst = 0; inst < ts.instances; ++inst) {
      const Vector k = rng::gaussian_vector(cfg.scheme.seed,
          rng::stream_id(rng::Purpose::kSampling, 2), inst, p.dim);
      const Vector eta = tangent_ode(p, cfg.scheme.x0, k, ts.horizon, ts.tol);
      const double excess =
          eta.norm() - std::exp(-p.mu * ts.horizon) * k.norm() - 10.0 * ts.tol;
      worst_ode = std::max(worst_ode, excess);
    }
    rows.push_back({"tangent_ode_decay", worst_ode, 0.0, worst_ode <= 0.0});

    const Vector k = Vector::Ones(p.dim);
    double c_fit = -1e300;
    for (const double T : {0.5 * ts.horizon, ts.horizon}) {
      const auto mom = tangent_sde(p, spec, ts.h, cfg.scheme.x0, k, T,
                                   ts.substeps, ts.ensemble, cfg.scheme.seed);
      const double rate = -std::log(mom.second_moment / k.squaredNorm()) / (2.0 * T);
      c_fit = std::max(c_fit, (p.mu - rate) / ts.h);
    }
    rows.push_back({"tangent_sde_decay_c", c_fit, 0.5 * p.mu / ts.h,
                    c_fit * ts.h <= 0.5 * p.mu});
  }

  if (cs.contraction.has_value()) {
    const auto& cc = *cs.contraction;
    const double d0 = (cfg.scheme.x0 - p.minimizer).squaredNorm();
    double c_fit = 0.0;
    for (const double T : cc.horizon_grid) {
      for (const double h : cc.h_grid) {
        const auto set = simulate_sde(p, spec, SdeDrift::Modified, h,
                                      cfg.scheme.x0, T, cc.substeps, cc.ensemble,
                                      cfg.scheme.seed);
        double m2 = 0.0;
        for (Eigen::Index r = 0; r < set.terminal.rows(); ++r) {
          m2 += (set.terminal.row(r).transpose() - p.minimizer).squaredNorm();
        }
        m2 /= static_cast<double>(set.terminal.rows());
        const double bound = std::exp(-2.0 * p.mu * T) *
                             (d0 + h * rho(spec.envelope, p.mu, T) * (1.0 + d0));
        c_fit = std::max(c_fit, m2 / bound);
      }
    }
    rows.push_back({"sde_contraction_c", c_fit, cc.c_max, c_fit <= cc.c_max});
  }

  Output out;
  out.path = args.out_path;
  out.text << "check,observed,threshold,pass\n";
  bool all = true;
  for (const auto& row : rows) {
    out.text << row.name << "," << fmt(row.observed) << "," << fmt(row.threshold)
             << "," << (row.pass ? "true" : "false") << "\n";
    all = all && row.pass;
    std::printf("%-34s %12.5g  %12.5g  %s\n", row.name.c_str(), row.observed,
                row.threshold, row.pass ? "PASS" : "FAIL");
  }
  std::printf("%s\n", all ? "all checks passed" : "some checks FAILED");
  if (!args.out_path.empty()) out.flush();
  return 0;
}

struct ValidateArgs {
  CommonArgs common;
  std::string regime = "first-weak";
  double eps = 0.1;
  double mu = 1.0;
  double nu = 0.0;
  double alpha = 0.0;
};

int cmd_validate_plan(const ValidateArgs& args) {
  apply_threads(args.common);
  ParsedConfig cfg = load(args.common);
  if (!cfg.phi.has_value()) throw ConfigError("validate-plan: config requires a phi block");
  const Regime regime = parse_regime(args.regime, args.nu, args.alpha);
  const PlanValidation v =
      validate_plan(cfg.problem, cfg.diffusion, *cfg.phi, regime, args.eps,
                    args.mu, cfg.scheme.x0, cfg.scheme.ensemble, cfg.scheme.seed);
  Output out;
  out.path = args.common.out_path;
  out.text << plan_csv_header() << ",measured_error,std_error,pilot_C,pass\n";
  out.text << plan_csv_row(regime, v.main_plan) << "," << fmt(v.measured_error)
           << "," << fmt(v.std_error) << "," << fmt(v.pilot_c) << ","
           << (v.pass ? "true" : "false") << "\n";
  out.flush();
  std::ostream& info = args.common.out_path.empty() ? std::cerr : std::cout;
  info << "validate-plan " << regime.label() << " eps=" << args.eps << ": "
       << (v.pass ? "PASS" : "FAIL") << " (measured " << fmt(v.measured_error)
       << ", pilot C " << fmt(v.pilot_c) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic gradient scheme / modified equation toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, check_args;
  PlanArgs plan_args;
  ValidateArgs validate_args;

  auto* run = app.add_subcommand("run", "simulate scheme paths");
  add_common(run, run_args);
  auto* sw = app.add_subcommand("sweep", "error estimates over an h grid + order fit");
  add_common(sw, sweep_args);
  auto* pl = app.add_subcommand("plan", "complexity planning tables");
  add_common(pl, plan_args.common, /*config_required=*/false);
  pl->add_option("--regime", plan_args.regimes,
                 "first-weak|first-strong|second-weak-exp|second-strong-exp|"
                 "second-weak-poly|second-strong-poly");
  pl->add_option("--eps", plan_args.eps, "target accuracies in (0,1)");
  pl->add_option("--mu", plan_args.mu, "contraction rate (default 1)");
  pl->add_option("--nu", plan_args.nu, "exponential decay rate");
  pl->add_option("--alpha", plan_args.alpha, "polynomial decay exponent");
  pl->add_flag("--compare", plan_args.compare, "emit the regime comparison table");
  auto* ck = app.add_subcommand("check", "assumption and decay checks");
  add_common(ck, check_args);
  auto* vp = app.add_subcommand("validate-plan", "run the estimator at the planned (h, N)");
  add_common(vp, validate_args.common);
  vp->add_option("--regime", validate_args.regime, "regime name")->required();
  vp->add_option("--eps", validate_args.eps, "target accuracy")->required();
  vp->add_option("--mu", validate_args.mu, "contraction rate (default 1)");
  vp->add_option("--nu", validate_args.nu, "exponential decay rate");
  vp->add_option("--alpha", validate_args.alpha, "polynomial decay exponent");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_args);
    if (sw->parsed()) return cmd_sweep(sweep_args);
    if (pl->parsed()) return cmd_plan(plan_args);
    if (ck->parsed()) return cmd_check(check_args);
    if (vp->parsed()) return cmd_validate_plan(validate_args);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidRegime& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateFit& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteState& e) {
    std::cerr << "numerical blow-up: " << e.what() << "\n";
    return 3;
  } catch (const ToleranceNotMet& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
