#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bbcopas/errors.hpp"
#include "bbcopas/information.hpp"
#include "bbcopas/rng.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <random>
#include <set>
#include <tuple>

using namespace bbcopas;
using bbcopas::testing::cd64;

namespace {

constexpr double kR = 0.70710678118654752440;

const FitResult& baseline() {
  static const FitResult fit = fit_unadjusted(cd64(), std::nullopt, FitOptions{});
  return fit;
}

SelectionSpec spec_at(double gamma1, double p, double c0 = kR, double c1 = kR) {
  return SelectionSpec::normalized(c0, c1, gamma1, p);
}

double mean_inverse(const ModelParams& params, const SelectionSpec& spec, double gamma0,
                    const std::vector<Study2x2>& studies) {
  const LikelihoodConfig cfg;
  double acc = 0.0;
  for (const auto& s : studies)
    acc += 1.0 / marginal_select_prob_approx(params, spec, gamma0, s.n1(), s.n0(), cfg);
  return acc / studies.size();
}

// Bisection on the monotone constraint, independent of the Newton solver.
double bisect_gamma0(const ModelParams& params, const SelectionSpec& spec,
                     const std::vector<Study2x2>& studies) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_inverse(params, spec, mid, studies) > 1.0 / spec.p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<Study2x2> synthetic(std::uint64_t seed, int count, int max_n) {
  const ModelParams truth{0.4, 2.4, 0.1, 0.5, 0.8};
  Philox4x32 rng(seed, 0);
  std::uniform_int_distribution<int> nd(10, max_n);
  std::normal_distribution<double> z;
  std::vector<Study2x2> out;
  for (int s = 0; s < count; ++s) {
    const int n1 = nd(rng), n0 = nd(rng);
    const auto pr = study_probabilities(truth, truth.sigma_theta * z(rng), truth.sigma_alpha * z(rng),
                                        Link::logistic);
    const int tp = std::binomial_distribution<int>(n1, pr.pi1)(rng);
    const int fp = std::binomial_distribution<int>(n0, pr.pi0)(rng);
    out.push_back({tp, fp, n1 - tp, n0 - fp, "s" + std::to_string(s)});
  }
  return out;
}

} // namespace

TEST_CASE("gamma0 from the constraint") {
  const auto& data = cd64();
  const auto& theta = baseline().params;

  for (double p : {0.2, 0.55, 0.9}) {
    CHECK(solve_gamma0(theta, spec_at(0.0, p), data) == doctest::Approx(normal_quantile(p)).epsilon(1e-10));
  }
  CHECK(solve_gamma0(theta, spec_at(1.5, 1.0), data) == std::numeric_limits<double>::infinity());

  const auto spec = spec_at(1.5, 0.7);
  const double g0 = solve_gamma0(theta, spec, data);
  CHECK(std::abs(mean_inverse(theta, spec, g0, data) - 1.0 / 0.7) < 1e-8);
  CHECK(g0 == doctest::Approx(bisect_gamma0(theta, spec, data)).epsilon(1e-8));

  double prev = -std::numeric_limits<double>::infinity();
  for (double p : {0.5, 0.9, 0.99, 0.999}) {
    const double g = solve_gamma0(theta, spec_at(1.5, p), data);
    CHECK(g > prev);
    prev = g;
  }

  // The root lies far outside the admissible gamma0 range.
  const ModelParams strong{4.0, 6.0, 0.0, 0.1, 0.1};
  CHECK_THROWS_AS(solve_gamma0(strong, spec_at(1e4, 1e-6), data), ConstraintInfeasible);
}

TEST_CASE("adjusted log-likelihood reductions") {
  const auto& data = cd64();
  const auto& theta = baseline().params;
  const double unadjusted = marginal_log_likelihood_unadjusted(theta, data, LikelihoodConfig{});

  CHECK(adjusted_log_likelihood(theta, 1.5, spec_at(1.5, 1.0), data) ==
        doctest::Approx(unadjusted).epsilon(1e-12));
  for (double p : {0.3, 0.8}) {
    CHECK(adjusted_log_likelihood(theta, 0.0, spec_at(0.0, p), data) ==
          doctest::Approx(unadjusted).epsilon(1e-12));
  }
}

TEST_CASE("adjusted log-likelihood decomposition") {
  const auto& data = cd64();
  const auto& theta = baseline().params;
  const auto spec = spec_at(1.5, 0.7);
  const LikelihoodConfig cfg;

  const double g0 = bisect_gamma0(theta, spec, data);
  double log_fp = 0.0, log_select = 0.0, log_marginal = 0.0;
  for (const auto& s : data) {
    log_fp += study_log_marginal(theta, s, cfg);
    log_select += std::log(normal_cdf(g0 + 1.5 * observed_t_statistic(s, kR, kR)));
    log_marginal += std::log(marginal_select_prob_approx(theta, spec, g0, s.n1(), s.n0(), cfg));
  }

  const auto terms = adjusted_log_likelihood_terms(theta, 1.5, spec, data);
  CHECK(terms.gamma0 == doctest::Approx(g0).epsilon(1e-8));
  CHECK(terms.log_fp == doctest::Approx(log_fp).epsilon(1e-12));
  CHECK(terms.log_select == doctest::Approx(log_select).epsilon(1e-8));
  CHECK(terms.log_marginal == doctest::Approx(log_marginal).epsilon(1e-8));
  CHECK(adjusted_log_likelihood(theta, 1.5, spec, data) ==
        doctest::Approx(log_fp + log_select - log_marginal).epsilon(1e-8));
}

TEST_CASE("observed information") {
  Eigen::Matrix3d a;
  a << 4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0;
  const Objective quad = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(a * x); };
  const Objective twice = [&](const Eigen::VectorXd& x) { return x.dot(a * x); };
  const Eigen::VectorXd at = Eigen::Vector3d(0.3, -0.2, 0.1);

  const auto info = observed_information(quad, at);
  CHECK((info.covariance - Eigen::MatrixXd(a.inverse())).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_FALSE(info.projected);
  const auto info2 = observed_information(twice, at);
  CHECK((info2.covariance - 0.5 * info.covariance).cwiseAbs().maxCoeff() < 1e-6);

  const Objective flat = [](const Eigen::VectorXd& x) { return x(0) * x(0); };
  CHECK_THROWS_AS(observed_information(flat, at), SingularInformation);
}

TEST_CASE("p = 1 matches the unadjusted fit") {
  const auto& data = cd64();
  const auto adjusted = fit_adjusted(data, spec_at(1.0, 1.0));
  REQUIRE(adjusted.converged);
  const auto& base = baseline();
  const Eigen::VectorXd x = adjusted.params.to_unconstrained(), y = base.params.to_unconstrained();
  CHECK((x - y).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(adjusted.gamma0 == std::numeric_limits<double>::infinity());
  CHECK(adjusted.sroc.sauc == doctest::Approx(base.sroc.sauc).epsilon(1e-6));
}

TEST_CASE("adjusted fit on CD64 satisfies the constraint") {
  const auto& data = cd64();
  FitOptions opts;
  opts.gamma1_mode = Gamma1Mode::fixed;
  opts.gamma1 = 1.5;
  const auto fit = fit_adjusted(data, spec_at(1.5, 0.6), opts);
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.constraint_residual) < 1e-6);
  CHECK(std::abs(mean_inverse(fit.params, fit.spec, fit.gamma0, data) - 1.0 / 0.6) < 1e-6);
  CHECK(fit.sroc.sauc < baseline().sroc.sauc);
  CHECK(std::isfinite(fit.loglik));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.covariance);
  CHECK(eig.eigenvalues().minCoeff() > -1e-8);
  CHECK(fit.covariance.rows() == 5);
}

TEST_CASE("warm start reaches the same optimum") {
  const auto& data = cd64();
  const auto at_08 = fit_adjusted(data, spec_at(1.0, 0.8));
  REQUIRE(at_08.converged);
  const auto warm = fit_adjusted(data, spec_at(1.0, 0.6), {}, FitStart{at_08.params, at_08.gamma1});
  const auto cold = fit_adjusted(data, spec_at(1.0, 0.6));
  REQUIRE(warm.converged);
  REQUIRE(cold.converged);
  CHECK(std::abs(warm.loglik - cold.loglik) < 1e-6);
  CHECK(warm.covariance.rows() == 6);
}

TEST_CASE("sensitivity grid") {
  const auto& data = cd64();

  const auto single = sensitivity_analysis(data, default_c_pairs(), {1.0});
  REQUIRE(single.rows.size() == 1);
  CHECK(single.rows[0].baseline);
  CHECK(single.rows[0].fit.sroc.sauc == doctest::Approx(baseline().sroc.sauc).epsilon(1e-6));

  FitOptions opts;
  opts.gamma1_mode = Gamma1Mode::fixed;
  opts.gamma1 = 1.5;
  const auto table = sensitivity_analysis(data, default_c_pairs(), default_p_grid(), opts);
  CHECK(table.rows.size() == 13);
  int baselines = 0;
  std::set<std::tuple<double, double, double>> keys;
  for (const auto& row : table.rows) {
    baselines += row.baseline;
    CHECK(row.ok);
    keys.insert({row.p, row.spec.c0, row.spec.c1});
  }
  CHECK(baselines == 1);
  CHECK(keys.size() == 13);
}

TEST_CASE("exact and approximate selection probabilities give close fits") {
  const auto data = synthetic(41, 5, 30);
  FitOptions approx, exact;
  approx.gamma1_mode = exact.gamma1_mode = Gamma1Mode::fixed;
  approx.gamma1 = exact.gamma1 = 1.5;
  exact.selection.method = SelectionMethod::exact;
  const auto a = fit_adjusted(data, spec_at(1.5, 0.7), approx);
  const auto e = fit_adjusted(data, spec_at(1.5, 0.7), exact);
  REQUIRE(a.converged);
  REQUIRE(e.converged);
  CHECK(a.few_studies == false);
  CHECK(std::abs(a.sroc.sauc - e.sroc.sauc) < 0.01);
}
