#include "bbcopas/estimator.hpp"

#include "bbcopas/errors.hpp"
#include "bbcopas/information.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace bbcopas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_inverse(const MarginalSelection& sel, double gamma0, double gamma1) {
  const auto probs = sel.probabilities(gamma0, gamma1);
  double acc = 0.0;
  for (double pr : probs) acc += 1.0 / std::max(pr, 1e-300);
  return acc / static_cast<double>(probs.size());
}

constexpr double kRootLimit = 1e4;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Root of a decreasing function given as (value, slope), by Newton safeguarded
// with bisection once a bracket is known. NaN when the iterate leaves
// [-kRootLimit, kRootLimit].
template <class F>
double decreasing_root(F&& f_and_slope, double g, double rel_step) {
  double lo = -kInf, hi = kInf, step = 1.0;
  for (int it = 0; it < 200; ++it) {
    const auto [f, df] = f_and_slope(g);
    if (std::abs(f) < 1e-15) return g;
    if (f > 0.0) lo = g; else hi = g;
    double next = g - f / df;
    const bool newton_ok = std::isfinite(next) && df < 0.0 && next > lo && next < hi;
    if (!newton_ok) {
      if (std::isfinite(lo) && std::isfinite(hi)) {
        next = 0.5 * (lo + hi);
      } else {
        next = std::isfinite(lo) ? lo + step : hi - step;
        step *= 2.0;
      }
    }
    if (std::abs(next) > kRootLimit) break;
    if (newton_ok && std::abs(next - g) <= rel_step * std::max(1.0, std::abs(g))) return next;
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-15 * std::max(1.0, std::abs(g)))
      return next;
    g = next;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<std::string> names_for(bool with_gamma1) {
  std::vector<std::string> names;
  names.reserve(ModelParams::kUnconstrainedNames.size() + 1);
  for (const auto& n : ModelParams::kUnconstrainedNames) names.emplace_back(n);
  if (with_gamma1) names.push_back(std::string("gamma1"));
  return names;
}

// Covariance + SROC summary from an objective in optimizer coordinates.
void attach_inference(FitResult& fit, const Objective& negloglik, const Eigen::VectorXd& x,
                      const FitOptions& options) {
  const Link link = options.likelihood.link;
  Eigen::Matrix2d cov_ab = Eigen::Matrix2d::Zero();
  bool have_cov = false;
  if (options.compute_covariance) {
    try {
      auto info = observed_information(negloglik, x);
      fit.covariance = info.covariance;
      fit.covariance_projected = info.projected;
      have_cov = true;
    } catch (const SingularInformation& e) {
      if (x.size() > ModelParams::kSize) {
        // Flat in gamma1: fall back to Theta conditional on gamma1-hat.
        const Eigen::VectorXd head = x.head(ModelParams::kSize);
        const double g1 = x(ModelParams::kSize);
        const Objective restricted = [&](const Eigen::VectorXd& y) {
          Eigen::VectorXd full(x.size());
          full << y, g1;
          return negloglik(full);
        };
        try {
          auto info = observed_information(restricted, head);
          fit.covariance = info.covariance;
          fit.covariance_projected = info.projected;
          fit.covariance_names = names_for(false);
          fit.message += "observed information singular in gamma1; covariance conditional on "
                         "gamma1. ";
          have_cov = true;
        } catch (const SingularInformation& e2) {
          fit.message += std::string(e2.what()) + ". ";
        }
      } else {
        fit.message += std::string(e.what()) + ". ";
      }
    }
  }
  if (have_cov) cov_ab = fit.covariance.block<2, 2>(1, 1);
  fit.sroc = summarize_sroc(fit.params, cov_ab, link, options.level);
  if (options.compute_covariance && !have_cov) {
    fit.sroc.sauc_variance = std::numeric_limits<double>::quiet_NaN();
    fit.sroc.ci_low = fit.sroc.ci_high = std::numeric_limits<double>::quiet_NaN();
  }
}

Eigen::VectorXd lower_bounds(std::size_t n, double sigma_floor) {
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -kInf);
  lower(3) = lower(4) = std::log(sigma_floor);
  if (n > ModelParams::kSize) lower(ModelParams::kSize) = 0.0;
  return lower;
}

} // namespace

std::vector<double> FitResult::standard_errors() const {
  std::vector<double> se;
  if (covariance.rows() == 0) return se;
  for (Eigen::Index i = 0; i < covariance.rows(); ++i) {
    double s = std::sqrt(std::max(0.0, covariance(i, i)));
    if (i == 3) s *= params.sigma_theta;
    if (i == 4) s *= params.sigma_alpha;
    se.push_back(s);
  }
  return se;
}

double solve_gamma0(const MarginalSelection& sel, double gamma1, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("solve_gamma0: p must lie in (0,1]");
  if (sel.size() == 0) throw InvalidArgument("solve_gamma0: no studies");
  if (p == 1.0) return kInf;
  if (gamma1 == 0.0) return normal_quantile(p);

  const double target = std::log(1.0 / p);
  auto reduce = [&](const std::vector<std::pair<double, double>>& ps) {
    double inv = 0.0, dinv = 0.0;
    for (const auto& [pr, slope] : ps) {
      const double q = std::max(pr, 1e-300);
      inv += 1.0 / q;
      dinv -= slope / (q * q);
    }
    return std::pair{std::log(inv / static_cast<double>(ps.size())) - target, dinv / inv};
  };

  // Starting point from a normal surrogate of each study's t distribution.
  const auto moments = sel.t_moments();
  auto surrogate = [&](double g0) {
    std::vector<std::pair<double, double>> ps;
    ps.reserve(moments.size());
    for (const auto& m : moments) {
      const double scale = 1.0 / std::sqrt(1.0 + gamma1 * gamma1 * m.variance);
      const double z = scale * (g0 + gamma1 * m.mean);
      ps.emplace_back(normal_cdf(z), scale * kInvSqrt2Pi * std::exp(-0.5 * z * z));
    }
    return reduce(ps);
  };
  const double guess = decreasing_root(surrogate, normal_quantile(p), 1e-10);
  const double g0 = decreasing_root(
      [&](double g) { return reduce(sel.probabilities_with_slope(g, gamma1)); },
      std::isfinite(guess) ? guess : normal_quantile(p), 1e-11);
  if (std::isfinite(g0)) return g0;
  throw ConstraintInfeasible("no gamma0 satisfies the selection constraint for p = " +
                                 std::to_string(p),
                             1.0 / mean_inverse(sel, -kRootLimit, gamma1),
                             1.0 / mean_inverse(sel, kRootLimit, gamma1));
}

double solve_gamma0(const ModelParams& params, const SelectionSpec& spec,
                    const std::vector<Study2x2>& studies, const FitOptions& options) {
  spec.check();
  if (studies.empty()) throw InvalidArgument("solve_gamma0: no studies");
  if (spec.p == 1.0) return kInf;
  if (spec.gamma1 == 0.0) return normal_quantile(spec.p);
  MarginalSelection sel(params, spec.c0, spec.c1, study_sizes(studies), options.likelihood,
                        options.selection);
  return solve_gamma0(sel, spec.gamma1, spec.p);
}

AdjustedLoglikTerms adjusted_log_likelihood_terms(const ModelParams& params, double gamma1,
                                                  const SelectionSpec& spec,
                                                  const std::vector<Study2x2>& studies,
                                                  const FitOptions& options) {
  if (studies.empty()) throw InvalidArgument("adjusted_log_likelihood: no studies");
  AdjustedLoglikTerms terms;
  terms.log_fp = ordered_sum(study_log_marginals(params, studies, options.likelihood));
  if (spec.p == 1.0) return terms;

  if (gamma1 == 0.0) {
    // Study-independent selection: log a(t_s) and log P_s both equal log Phi(gamma0).
    terms.gamma0 = normal_quantile(spec.p);
    const double lp = log_normal_cdf(terms.gamma0);
    terms.log_select = terms.log_marginal = static_cast<double>(studies.size()) * lp;
    return terms;
  }

  MarginalSelection sel(params, spec.c0, spec.c1, study_sizes(studies), options.likelihood,
                        options.selection);
  terms.gamma0 = solve_gamma0(sel, gamma1, spec.p);
  const auto probs = sel.probabilities(terms.gamma0, gamma1);
  for (std::size_t s = 0; s < studies.size(); ++s) {
    const double t = observed_t_statistic(studies[s], spec.c0, spec.c1);
    terms.log_select += log_normal_cdf(terms.gamma0 + gamma1 * t);
    terms.log_marginal += std::log(probs[s]);
  }
  return terms;
}

double adjusted_log_likelihood(const ModelParams& params, double gamma1, const SelectionSpec& spec,
                               const std::vector<Study2x2>& studies, const FitOptions& options) {
  return adjusted_log_likelihood_terms(params, gamma1, spec, studies, options).total();
}

FitResult fit_unadjusted(const std::vector<Study2x2>& studies,
                         const std::optional<ModelParams>& init, const FitOptions& options) {
  validate(studies);
  if (studies.size() < 2) throw InvalidArgument("fit_unadjusted: need at least 2 studies");
  const auto& cfg = options.likelihood;
  const ModelParams start = init.value_or(default_initial_params(studies, cfg.link));
  start.check();

  const Objective negloglik = [&](const Eigen::VectorXd& x) {
    try {
      return -marginal_log_likelihood_unadjusted(ModelParams::from_unconstrained(x), studies, cfg);
    } catch (const NumericFailure&) {
      return kInf;
    }
  };
  Eigen::VectorXd x0 = start.to_unconstrained();
  x0(3) = std::max(x0(3), std::log(options.sigma_floor));
  x0(4) = std::max(x0(4), std::log(options.sigma_floor));
  const auto opt = minimize(negloglik, x0, lower_bounds(ModelParams::kSize, options.sigma_floor),
                            options.optim);
  if (!opt.converged) {
    throw ConvergenceFailure("fit_unadjusted: no convergence after " +
                                 std::to_string(opt.iterations) + " iterations",
                             std::vector<double>(opt.x.data(), opt.x.data() + opt.x.size()),
                             opt.gradient_norm);
  }

  FitResult fit;
  fit.params = ModelParams::from_unconstrained(opt.x);
  fit.loglik = -opt.value;
  fit.converged = true;
  fit.boundary_hit = opt.boundary_hit;
  fit.few_studies = studies.size() < 3;
  fit.iterations = opt.iterations;
  fit.evaluations = opt.evaluations;
  fit.gradient_norm = opt.gradient_norm;
  fit.p = 1.0;
  fit.spec.p = 1.0;
  fit.spec.gamma1 = options.gamma1;
  fit.gamma1 = options.gamma1;
  fit.gamma0 = kInf;
  fit.method = options.selection.method;
  fit.gamma1_mode = options.gamma1_mode;
  fit.covariance_names = names_for(false);
  if (fit.boundary_hit) fit.message += "a random-effect SD reached its lower bound. ";
  attach_inference(fit, negloglik, opt.x, options);
  return fit;
}

FitResult fit_adjusted(const std::vector<Study2x2>& studies, const SelectionSpec& spec,
                       const FitOptions& options, const std::optional<FitStart>& init) {
  spec.check();
  validate(studies);
  if (spec.p == 1.0) {
    FitResult fit = fit_unadjusted(studies, init ? std::optional(init->params) : std::nullopt,
                                   options);
    fit.spec = spec;
    fit.gamma1 = init ? init->gamma1 : options.gamma1;
    fit.spec.gamma1 = fit.gamma1;
    return fit;
  }

  FitStart start;
  if (init) {
    start = *init;
  } else {
    start.params = fit_unadjusted(studies, std::nullopt, options).params;
    start.gamma1 = options.gamma1;
  }

  const bool profile = options.gamma1_mode == Gamma1Mode::profile;
  const std::size_t n = ModelParams::kSize + (profile ? 1 : 0);
  const double fixed_gamma1 = options.gamma1;

  auto gamma1_of = [&](const Eigen::VectorXd& x) {
    return profile ? x(ModelParams::kSize) : fixed_gamma1;
  };
  const Objective negloglik = [&](const Eigen::VectorXd& x) {
    try {
      const auto params = ModelParams::from_unconstrained(x);
      SelectionSpec s = spec;
      s.gamma1 = gamma1_of(x);
      return -adjusted_log_likelihood(params, s.gamma1, s, studies, options);
    } catch (const NumericFailure&) {
      return kInf;
    } catch (const ConstraintInfeasible&) {
      return kInf;
    }
  };

  Eigen::VectorXd x0(static_cast<Eigen::Index>(n));
  x0.head(ModelParams::kSize) = start.params.to_unconstrained();
  x0(3) = std::max(x0(3), std::log(options.sigma_floor));
  x0(4) = std::max(x0(4), std::log(options.sigma_floor));
  if (profile) x0(ModelParams::kSize) = std::max(0.0, start.gamma1);

  const auto opt = minimize(negloglik, x0, lower_bounds(n, options.sigma_floor), options.optim);

  FitResult fit;
  fit.params = ModelParams::from_unconstrained(opt.x);
  fit.gamma1 = gamma1_of(opt.x);
  fit.loglik = -opt.value;
  fit.converged = opt.converged && std::isfinite(opt.value);
  fit.boundary_hit = opt.boundary_hit;
  fit.few_studies = studies.size() < 3;
  fit.iterations = opt.iterations;
  fit.evaluations = opt.evaluations;
  fit.gradient_norm = opt.gradient_norm;
  fit.p = spec.p;
  fit.spec = spec;
  fit.spec.gamma1 = fit.gamma1;
  fit.method = options.selection.method;
  fit.gamma1_mode = options.gamma1_mode;
  fit.covariance_names = names_for(profile);
  if (!fit.converged) fit.message += "optimizer did not converge. ";
  if (fit.boundary_hit) fit.message += "a parameter reached its lower bound. ";

  if (std::isfinite(opt.value)) {
    MarginalSelection sel(fit.params, spec.c0, spec.c1, study_sizes(studies), options.likelihood,
                          options.selection);
    fit.gamma0 = solve_gamma0(sel, fit.gamma1, spec.p);
    fit.constraint_residual = mean_inverse(sel, fit.gamma0, fit.gamma1) - 1.0 / spec.p;
    attach_inference(fit, negloglik, opt.x, options);
  }
  return fit;
}

std::vector<std::pair<double, double>> default_c_pairs() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{r, r}, {0.0, 1.0}, {1.0, 0.0}};
}

std::vector<double> default_p_grid() { return {1.0, 0.8, 0.6, 0.4, 0.2}; }

SensitivityTable sensitivity_analysis(const std::vector<Study2x2>& studies,
                                      const std::vector<std::pair<double, double>>& c_pairs,
                                      const std::vector<double>& p_grid,
                                      const FitOptions& options) {
  if (p_grid.empty()) throw InvalidArgument("sensitivity_analysis: empty p grid");
  if (c_pairs.empty()) throw InvalidArgument("sensitivity_analysis: no (c0, c1) pairs");
  for (double p : p_grid)
    if (!(p > 0.0 && p <= 1.0))
      throw InvalidArgument("sensitivity_analysis: p values must lie in (0,1]");

  SensitivityTable table;
  table.p_grid = p_grid;
  std::sort(table.p_grid.begin(), table.p_grid.end(), std::greater<>());
  table.p_grid.erase(std::unique(table.p_grid.begin(), table.p_grid.end()), table.p_grid.end());
  for (const auto& [c0, c1] : c_pairs) {
    const auto s = SelectionSpec::normalized(c0, c1, options.gamma1, 1.0);
    table.c_pairs.emplace_back(s.c0, s.c1);
  }

  // Shared p = 1 fit; it also seeds every c-pair chain.
  std::optional<FitStart> seed;
  SensitivityRow baseline;
  baseline.baseline = true;
  baseline.spec = SelectionSpec::normalized(table.c_pairs.front().first,
                                            table.c_pairs.front().second, options.gamma1, 1.0);
  try {
    baseline.fit = fit_unadjusted(studies, std::nullopt, options);
    baseline.fit.spec = baseline.spec;
    baseline.ok = true;
    seed = FitStart{baseline.fit.params, options.gamma1};
  } catch (const std::exception& e) {
    baseline.error = e.what();
  }
  if (table.p_grid.front() == 1.0) table.rows.push_back(baseline);

  FitOptions warm = options;
  warm.optim.simplex_max_iterations = 0;

  auto chains = map_indexed<std::vector<SensitivityRow>>(
      table.c_pairs.size(), options.likelihood.exec, [&](std::size_t k) {
        std::vector<SensitivityRow> rows;
        std::optional<FitStart> start = seed;
        for (double p : table.p_grid) {
          if (p == 1.0) continue;
          SensitivityRow row;
          row.p = p;
          row.spec = SelectionSpec::normalized(table.c_pairs[k].first, table.c_pairs[k].second,
                                               options.gamma1, p);
          try {
            row.fit = fit_adjusted(studies, row.spec, start ? warm : options, start);
            row.ok = true;
            start = FitStart{row.fit.params, row.fit.gamma1};
          } catch (const std::exception& e) {
            row.error = e.what();
          }
          rows.push_back(std::move(row));
        }
        return rows;
      });
  for (auto& chain : chains)
    for (auto& row : chain) table.rows.push_back(std::move(row));
  return table;
}

} // namespace bbcopas
