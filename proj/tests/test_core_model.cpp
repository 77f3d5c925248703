#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bbcopas/errors.hpp"
#include "bbcopas/rng.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <random>

using namespace bbcopas;
using bbcopas::testing::cd64;

TEST_CASE("quadrature rule integrates normal moments exactly") {
  for (int order : {5, 21, 41}) {
    const auto rule = QuadratureRule::gauss_hermite(order);
    double total = 0.0;
    for (double w : rule.weights()) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    double double_factorial = 1.0; // (k-1)!! for even k
    for (int k = 0; k <= 2 * order - 1; ++k) {
      double m = 0.0;
      for (int i = 0; i < order; ++i) m += rule.weights()[i] * std::pow(rule.nodes()[i], k);
      if (k % 2 == 1) {
        CHECK(std::abs(m) < 1e-10 * std::max(1.0, double_factorial));
      } else {
        if (k > 0) double_factorial *= k - 1;
        CHECK(m == doctest::Approx(double_factorial).epsilon(1e-10));
      }
    }
  }
  CHECK_THROWS_AS(QuadratureRule::gauss_hermite(4), InvalidArgument);
}

TEST_CASE("parameter transform round-trips") {
  const ModelParams p{0.3, -1.2, 0.4, 0.7, 2.5};
  const auto q = ModelParams::from_unconstrained(p.to_unconstrained());
  CHECK(q.theta == p.theta);
  CHECK(q.alpha == p.alpha);
  CHECK(q.beta == p.beta);
  CHECK(q.sigma_theta == doctest::Approx(p.sigma_theta).epsilon(1e-15));
  CHECK(q.sigma_alpha == doctest::Approx(p.sigma_alpha).epsilon(1e-15));
  CHECK_THROWS_AS((ModelParams{0, 0, 0, 0.0, 1.0}.check()), InvalidArgument);
}

TEST_CASE("study probabilities") {
  const auto half = study_probabilities({0, 0, 0, 1, 1}, 0, 0, Link::logistic);
  CHECK(half.pi1 == doctest::Approx(0.5));
  CHECK(half.pi0 == doctest::Approx(0.5));

  const auto s1 = study_probabilities({1.18418, 2.36837, 0.15, 1, 1}, 0, 0, Link::logistic);
  CHECK(s1.pi1 == doctest::Approx(0.9).epsilon(1e-5));
  CHECK(1.0 - s1.pi0 == doctest::Approx(0.5).epsilon(1e-5));

  const auto far = study_probabilities({0, 0, 0, 1, 1}, -10.0, 0, Link::logistic);
  CHECK(far.pi1 < 1e-4);
  CHECK(far.pi0 < 1e-4);

  const auto sat = study_probabilities({0, 0, 0, 1, 1}, 1e4, 0, Link::probit);
  CHECK(sat.pi1 < 1.0);
  CHECK(sat.pi1 == doctest::Approx(1.0 - kProbClamp));

  CHECK_THROWS_AS(study_probabilities({0, 0, 0, 1, 1}, NAN, 0, Link::logistic), InvalidArgument);
}

TEST_CASE("link monotonicity in theta and alpha") {
  const double h = 1e-4;
  for (Link link : {Link::logistic, Link::probit}) {
    for (double theta : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
      for (double alpha : {-1.0, 0.0, 1.5, 3.0}) {
        for (double beta : {-0.8, 0.0, 0.6}) {
          const ModelParams p{theta, alpha, beta, 1, 1};
          auto at = [&](double dt, double da) {
            ModelParams q = p;
            q.theta += dt;
            q.alpha += da;
            return study_probabilities(q, 0, 0, link);
          };
          const auto base = at(0, 0), up_t = at(h, 0), up_a = at(0, h);
          CHECK(up_t.pi1 > base.pi1);
          CHECK(up_t.pi0 > base.pi0);
          CHECK(up_a.pi1 > base.pi1);
          CHECK(up_a.pi0 < base.pi0);
        }
      }
    }
  }
}

TEST_CASE("within-study log pmf") {
  CHECK(within_study_log_pmf({1, 0, 0, 1, ""}, 0.5, 0.5) == doctest::Approx(-1.386294).epsilon(1e-6));
  CHECK(within_study_log_pmf({2, 0, 0, 2, ""}, 1 - 1e-12, 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
  const Study2x2 icardi{53, 6, 3, 47, "Icardi"};
  const double oracle =
      testing::log_binom_pmf(53, 56, 0.9) + testing::log_binom_pmf(6, 53, 0.1);
  CHECK(within_study_log_pmf(icardi, 0.9, 0.1) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("degenerate random effects collapse to the fixed-effects likelihood") {
  const auto& data = cd64();
  for (double sigma : {1e-8, 1e-6}) {
    const ModelParams p{-0.2, 3.5, 0.1, sigma, sigma};
    for (QuadratureMode mode : {QuadratureMode::adaptive, QuadratureMode::fixed}) {
      const auto cfg = LikelihoodConfig::make(Link::logistic, 21, mode);
      const auto pr = study_probabilities(p, 0, 0, Link::logistic);
      double fixed = 0.0;
      for (const auto& s : data) fixed += within_study_log_pmf(s, pr.pi1, pr.pi0);
      CHECK(marginal_log_likelihood_unadjusted(p, data, cfg) == doctest::Approx(fixed).epsilon(1e-4 / std::abs(fixed)));
    }
  }
}

TEST_CASE("quadrature order convergence") {
  const ModelParams p{0.2, 2.8, 0.1, 0.7, 1.1};
  const Study2x2 s{24, 7, 3, 41, "synthetic"};
  const double v21 = study_log_marginal(p, s, LikelihoodConfig::make(Link::logistic, 21));
  const double v61 = study_log_marginal(p, s, LikelihoodConfig::make(Link::logistic, 61));
  CHECK(std::abs(v21 - v61) < 1e-8);

  const auto& data = cd64();
  const ModelParams q{-0.24, 3.63, 0.09, 0.6, 1.37};
  const double l21 = marginal_log_likelihood_unadjusted(q, data, LikelihoodConfig::make(Link::logistic, 21));
  const double l41 = marginal_log_likelihood_unadjusted(q, data, LikelihoodConfig::make(Link::logistic, 41));
  CHECK(std::abs(l21 - l41) / data.size() < 1e-6);
}

TEST_CASE("likelihood is invariant to study order") {
  auto data = cd64();
  const ModelParams p{-0.24, 3.63, 0.09, 0.6, 1.37};
  const LikelihoodConfig cfg;
  const double base = marginal_log_likelihood_unadjusted(p, data, cfg);
  std::mt19937 g(5);
  for (int k = 0; k < 3; ++k) {
    std::shuffle(data.begin(), data.end(), g);
    CHECK(std::abs(marginal_log_likelihood_unadjusted(p, data, cfg) - base) < 1e-12 * std::abs(base) + 1e-12);
  }
}

TEST_CASE("likelihood preconditions") {
  const LikelihoodConfig cfg;
  const ModelParams p;
  CHECK_THROWS_AS(marginal_log_likelihood_unadjusted(p, {cd64().front()}, cfg), InvalidArgument);
  CHECK_THROWS_AS(validate(Study2x2{0, 3, 0, 4, "x"}), InvalidArgument);
  CHECK_THROWS_AS(validate(Study2x2{-1, 3, 2, 4, "x"}), InvalidArgument);
}

TEST_CASE("unadjusted fit on CD64") {
  const auto& data = cd64();
  const auto fit = fit_unadjusted(data, std::nullopt, FitOptions{});
  REQUIRE(fit.converged);
  CHECK(fit.sroc.sauc == doctest::Approx(0.925).epsilon(0.005 / 0.925));
  CHECK(std::abs(fit.sroc.ci_low - 0.880) < 0.010);
  CHECK(std::abs(fit.sroc.ci_high - 0.954) < 0.010);

  SUBCASE("the estimate is a local maximum") {
    const LikelihoodConfig cfg;
    const double best = marginal_log_likelihood_unadjusted(fit.params, data, cfg);
    CHECK(best == doctest::Approx(fit.loglik).epsilon(1e-12));
    const Eigen::VectorXd x = fit.params.to_unconstrained();
    for (int i = 0; i < ModelParams::kSize; ++i) {
      for (double d : {-1e-3, 1e-3}) {
        Eigen::VectorXd y = x;
        y(i) += d;
        CHECK(marginal_log_likelihood_unadjusted(ModelParams::from_unconstrained(y), data, cfg) < best);
      }
    }
  }

  SUBCASE("covariance is symmetric positive semidefinite") {
    const Eigen::MatrixXd& c = fit.covariance;
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    CHECK(eig.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("unadjusted fit recovers known parameters on a large synthetic set") {
  const ModelParams truth{0.4, 2.6, 0.2, 0.5, 0.8};
  Philox4x32 rng(99, 0);
  std::uniform_int_distribution<int> n1d(30, 60), n0d(50, 100);
  std::normal_distribution<double> z;
  std::vector<Study2x2> data;
  for (int s = 0; s < 500; ++s) {
    const int n1 = n1d(rng), n0 = n0d(rng);
    const auto pr = study_probabilities(truth, truth.sigma_theta * z(rng), truth.sigma_alpha * z(rng),
                                        Link::logistic);
    const int tp = std::binomial_distribution<int>(n1, pr.pi1)(rng);
    const int fp = std::binomial_distribution<int>(n0, pr.pi0)(rng);
    data.push_back({tp, fp, n1 - tp, n0 - fp, std::to_string(s)});
  }
  const auto fit = fit_unadjusted(data, std::nullopt, FitOptions{});
  REQUIRE(fit.converged);
  const auto se = fit.standard_errors();
  const double est[] = {fit.params.theta, fit.params.alpha, fit.params.beta, fit.params.sigma_theta,
                        fit.params.sigma_alpha};
  const double tru[] = {truth.theta, truth.alpha, truth.beta, truth.sigma_theta, truth.sigma_alpha};
  for (int i = 0; i < 5; ++i) {
    CAPTURE(i);
    CHECK(std::abs(est[i] - tru[i]) < 3.0 * se[i]);
  }
}
