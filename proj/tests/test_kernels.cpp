#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bbcopas/kernels.hpp"
#include "support.hpp"

using namespace bbcopas;
using bbcopas::testing::cd64;

TEST_CASE("binomial pmf") {
  for (int n : {1, 7, 40, 300}) {
    for (double p : {0.03, 0.5, 0.91}) {
      const auto pmf = kernels::binomial_pmf(n, p);
      double total = 0.0;
      for (int m = 0; m <= n; ++m) {
        CHECK(pmf[m] == doctest::Approx(std::exp(testing::log_binom_pmf(m, n, p))).epsilon(1e-10));
        total += pmf[m];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("cell mixture") {
  const ModelParams p{0.9, 2.2, 0.15, 0.6, 1.2};
  const LikelihoodConfig cfg = LikelihoodConfig::make(Link::logistic, 21, QuadratureMode::fixed);
  for (auto [n1, n0] : {std::pair{3, 4}, std::pair{17, 60}, std::pair{30, 300}}) {
    const auto par = kernels::cell_mixture(p, n1, n0, cfg);
    const auto ser = kernels::cell_mixture_serial(p, n1, n0, cfg);
    REQUIRE(par.size() == ser.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < par.size(); ++k) worst = std::max(worst, std::abs(par[k] - ser[k]));
    CHECK(worst < 1e-14);
    LikelihoodConfig one_thread = cfg;
    one_thread.exec = ExecPolicy::serial;
    CHECK(kernels::cell_mixture(p, n1, n0, one_thread) == par);
    double total = 0.0;
    for (double v : par) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Full double loop over nodes and tables.
  const int n1 = 6, n0 = 9;
  std::vector<double> oracle((n1 + 1) * (n0 + 1), 0.0);
  const auto& z = cfg.rule.nodes();
  const auto& w = cfg.rule.weights();
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      const auto pr = study_probabilities(p, p.sigma_theta * z[i], p.sigma_alpha * z[j], Link::logistic);
      for (int a = 0; a <= n1; ++a)
        for (int b = 0; b <= n0; ++b)
          oracle[a * (n0 + 1) + b] += w[i] * w[j] * std::exp(testing::log_binom_pmf(a, n1, pr.pi1) +
                                                             testing::log_binom_pmf(b, n0, 1.0 - pr.pi0));
    }
  }
  const auto got = kernels::cell_mixture(p, n1, n0, cfg);
  for (std::size_t k = 0; k < oracle.size(); ++k) CHECK(std::abs(got[k] - oracle[k]) < 1e-13);
}

TEST_CASE("per-study log marginals") {
  const auto& data = cd64();
  const ModelParams p{-0.24, 3.63, 0.09, 0.6, 1.37};
  for (QuadratureMode mode : {QuadratureMode::adaptive, QuadratureMode::fixed}) {
    const auto cfg = LikelihoodConfig::make(Link::logistic, 21, mode);
    const auto par = kernels::log_marginals(p, data, cfg);
    const auto ser = kernels::log_marginals_serial(p, data, cfg);
    CHECK(par == ser);
    for (std::size_t s = 0; s < data.size(); ++s)
      CHECK(par[s] == doctest::Approx(study_log_marginal(p, data[s], cfg)).epsilon(1e-13));
  }
}
