#include "bbcopas/simulation.hpp"

#include "bbcopas/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace bbcopas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("simulation scenario: ") + what);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

MarginalSelection population_selection(const std::vector<SimStudy>& population,
                                       const SimScenario& scenario, const LikelihoodConfig& cfg) {
  std::vector<std::pair<int, int>> sizes;
  sizes.reserve(population.size());
  for (const auto& s : population) sizes.emplace_back(s.study.n1(), s.study.n0());
  SelectionOptions exact;
  exact.method = SelectionMethod::exact;
  try {
    return MarginalSelection(scenario.generating_params(), scenario.c0, scenario.c1, sizes, cfg,
                             exact);
  } catch (const SizeError&) {
    return MarginalSelection(scenario.generating_params(), scenario.c0, scenario.c1, sizes, cfg,
                             SelectionOptions{});
  }
}

} // namespace

ModelParams SimScenario::generating_params() const {
  check();
  const double upper = link_quantile(link, sens) * std::exp(beta / 2.0);   // theta + alpha/2
  const double lower = -link_quantile(link, spec) * std::exp(-beta / 2.0); // theta - alpha/2
  ModelParams p;
  p.theta = 0.5 * (upper + lower);
  p.alpha = upper - lower;
  p.beta = beta;
  p.sigma_theta = sigma_theta;
  p.sigma_alpha = sigma_alpha;
  return p;
}

double SimScenario::true_sauc() const {
  const auto p = generating_params();
  return sauc(p.alpha, p.beta, link);
}

void SimScenario::check() const {
  require(sens > 0.0 && sens < 1.0, "sens must lie in (0,1)");
  require(spec > 0.0 && spec < 1.0, "spec must lie in (0,1)");
  require(std::isfinite(beta), "beta must be finite");
  require(sigma_theta > 0.0 && std::isfinite(sigma_theta), "sigma_theta must be positive");
  require(sigma_alpha > 0.0 && std::isfinite(sigma_alpha), "sigma_alpha must be positive");
  require(n1_min >= 1 && n1_max >= n1_min, "need 1 <= n1_min <= n1_max");
  require(n0_min >= 1 && n0_max >= n0_min, "need 1 <= n0_min <= n0_max");
  require(gamma1 >= 0.0 && std::isfinite(gamma1), "gamma1 must be finite and >= 0");
  require(p_target > 0.0 && p_target <= 1.0, "p_target must lie in (0,1]");
  require(std::abs(c0 * c0 + c1 * c1 - 1.0) <= 1e-10, "c0^2 + c1^2 must equal 1");
  require(studies >= 1, "studies must be >= 1");
}

SimScenario experiment_scenario(int experiment) {
  if (experiment < 1 || experiment > 6)
    throw InvalidArgument("experiment_scenario: experiment must be 1..6");
  static constexpr double kOp[3][2] = {{0.9, 0.5}, {0.5, 0.9}, {0.8, 0.8}};
  SimScenario s;
  const int k = (experiment - 1) % 3;
  s.sens = kOp[k][0];
  s.spec = kOp[k][1];
  s.sigma_theta = experiment <= 3 ? 0.6 : 1.2;
  s.sigma_alpha = experiment <= 3 ? 1.2 : 0.6;
  return s;
}

std::vector<SimStudy> generate_population(const SimScenario& scenario, Philox4x32& rng) {
  const auto params = scenario.generating_params();
  std::uniform_int_distribution<int> n1_dist(scenario.n1_min, scenario.n1_max);
  std::uniform_int_distribution<int> n0_dist(scenario.n0_min, scenario.n0_max);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<SimStudy> out;
  out.reserve(static_cast<std::size_t>(scenario.studies));
  for (int s = 0; s < scenario.studies; ++s) {
    const int n1 = n1_dist(rng);
    const int n0 = n0_dist(rng);
    const double u = scenario.sigma_theta * normal(rng);
    const double v = scenario.sigma_alpha * normal(rng);
    const auto pr = study_probabilities(params, u, v, scenario.link);
    const int tp = std::binomial_distribution<int>(n1, pr.pi1)(rng);
    const int fp = std::binomial_distribution<int>(n0, pr.pi0)(rng);
    SimStudy st;
    st.study = Study2x2{tp, fp, n1 - tp, n0 - fp, "sim-" + std::to_string(s + 1)};
    st.t_value = observed_t_statistic(st.study, scenario.c0, scenario.c1);
    out.push_back(std::move(st));
  }
  return out;
}

double calibrate_gamma0_sim(const std::vector<SimStudy>& population, const SimScenario& scenario,
                            const LikelihoodConfig& cfg) {
  scenario.check();
  if (population.empty()) throw InvalidArgument("calibrate_gamma0_sim: empty population");
  if (scenario.p_target == 1.0) return kInf;
  if (scenario.gamma1 == 0.0) return normal_quantile(scenario.p_target);

  const auto sel = population_selection(population, scenario, cfg);
  auto mean_p = [&](double g0) {
    const auto ps = sel.probabilities(g0, scenario.gamma1);
    return ordered_sum(ps) / static_cast<double>(ps.size());
  };
  auto f = [&](double g0) { return mean_p(g0) - scenario.p_target; };

  double lo = -20.0, hi = 20.0;
  double flo = f(lo), fhi = f(hi);
  for (int k = 0; k < 8 && flo > 0.0; ++k) flo = f(lo *= 2.0);
  for (int k = 0; k < 8 && fhi < 0.0; ++k) fhi = f(hi *= 2.0);
  if (flo > 0.0 || fhi < 0.0)
    throw ConstraintInfeasible("calibrate_gamma0_sim: p_target outside the achievable range",
                               mean_p(lo), mean_p(hi));
  boost::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

std::vector<Study2x2> apply_selection(std::vector<SimStudy>& population, double gamma0,
                                      double gamma1, Philox4x32& rng) {
  std::vector<Study2x2> published;
  for (auto& s : population) {
    const double u = rng.uniform();
    s.published = u < selection_prob(s.t_value, gamma0, gamma1);
    if (s.published) published.push_back(s.study);
  }
  return published;
}

SparsityRates sparsity_summary(const std::vector<Study2x2>& studies) {
  SparsityRates r;
  if (studies.empty()) return r;
  for (const auto& s : studies) {
    const int m = s.min_cell();
    r.zero += m == 0;
    r.le3 += m <= 3;
    r.le5 += m <= 5;
  }
  const double scale = 100.0 / static_cast<double>(studies.size());
  r.zero *= scale;
  r.le3 *= scale;
  r.le5 *= scale;
  return r;
}

std::string EstimatorSpec::label() const {
  if (kind == EstimatorKind::mle_published) return "mle_published";
  const auto s = SelectionSpec::normalized(c0, c1, 1.0, 1.0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "proposal(c0=%.4g,c1=%.4g)", s.c0, s.c1);
  return buf;
}

ReplicationRecord run_replication(const SimulationConfig& config, int index) {
  const auto& sc = config.scenario;
  Philox4x32 rng(sc.seed, static_cast<std::uint64_t>(index));
  auto population = generate_population(sc, rng);

  LikelihoodConfig lcfg = config.fit.likelihood;
  if (config.exec == ExecPolicy::parallel) lcfg.exec = ExecPolicy::serial;
  const double gamma0 = calibrate_gamma0_sim(population, sc, lcfg);
  const auto published = apply_selection(population, gamma0, sc.gamma1, rng);

  ReplicationRecord rec;
  rec.index = index;
  rec.published = static_cast<int>(published.size());
  std::vector<Study2x2> full;
  full.reserve(population.size());
  for (const auto& s : population) full.push_back(s.study);
  rec.full = sparsity_summary(full);
  rec.published_rates = sparsity_summary(published);

  FitOptions opts = config.fit;
  opts.likelihood = lcfg;
  opts.compute_covariance = false;
  for (const auto& est : config.estimators) {
    EstimateRecord e;
    try {
      if (published.size() < 2) throw InvalidArgument("fewer than 2 published studies");
      FitResult fit;
      if (est.kind == EstimatorKind::mle_published) {
        fit = fit_unadjusted(published, std::nullopt, opts);
      } else {
        const auto spec = SelectionSpec::normalized(est.c0, est.c1, opts.gamma1, sc.p_target);
        fit = fit_adjusted(published, spec, opts);
      }
      if (!fit.converged) throw ConvergenceFailure("optimizer did not converge", {}, fit.gradient_norm);
      const auto op = sop(fit.params, opts.likelihood.link);
      e.ok = true;
      e.sauc = fit.sroc.sauc;
      e.theta = fit.params.theta;
      e.alpha = fit.params.alpha;
      e.sens = op.sensitivity;
      e.spec = op.specificity;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    rec.estimates.push_back(std::move(e));
  }
  return rec;
}

SimulationSummary run_simulation_study(const SimulationConfig& config) {
  config.scenario.check();
  if (config.replications < 1) throw InvalidArgument("simulation: replications must be >= 1");
  if (config.estimators.empty()) throw InvalidArgument("simulation: no estimators");

  SimulationSummary out;
  out.config = config;
  out.true_sauc = config.scenario.true_sauc();
  out.replications = map_indexed<ReplicationRecord>(
      static_cast<std::size_t>(config.replications), config.exec,
      [&](std::size_t r) { return run_replication(config, static_cast<int>(r)); });

  std::vector<double> frac, fz, f3, f5, pz, p3, p5;
  for (const auto& rec : out.replications) {
    frac.push_back(rec.published / static_cast<double>(config.scenario.studies));
    fz.push_back(rec.full.zero);
    f3.push_back(rec.full.le3);
    f5.push_back(rec.full.le5);
    if (rec.published > 0) {
      pz.push_back(rec.published_rates.zero);
      p3.push_back(rec.published_rates.le3);
      p5.push_back(rec.published_rates.le5);
    }
  }
  out.mean_published_fraction = mean_of(frac);
  out.full = {mean_of(fz), mean_of(f3), mean_of(f5)};
  out.published = {mean_of(pz), mean_of(p3), mean_of(p5)};

  for (std::size_t k = 0; k < config.estimators.size(); ++k) {
    EstimatorSummary s;
    s.label = config.estimators[k].label();
    std::vector<double> sauc, theta, alpha, sens, spec;
    for (const auto& rec : out.replications) {
      const auto& e = rec.estimates[k];
      if (!e.ok) {
        ++s.failed;
        continue;
      }
      ++s.ok;
      sauc.push_back(e.sauc);
      theta.push_back(e.theta);
      alpha.push_back(e.alpha);
      sens.push_back(e.sens);
      spec.push_back(e.spec);
    }
    s.mean_sauc = mean_of(sauc);
    s.sd_sauc = sd_of(sauc);
    s.mean_theta = mean_of(theta);
    s.mean_alpha = mean_of(alpha);
    s.mean_sens = mean_of(sens);
    s.mean_spec = mean_of(spec);
    out.estimators.push_back(std::move(s));
  }
  return out;
}

} // namespace bbcopas
