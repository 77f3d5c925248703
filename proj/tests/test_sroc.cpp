#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bbcopas/errors.hpp"
#include "bbcopas/rng.hpp"
#include "support.hpp"

#include <random>

using namespace bbcopas;

TEST_CASE("summary operating point") {
  auto op = sop({0, 0, 0, 1, 1}, Link::logistic);
  CHECK(op.sensitivity == doctest::Approx(0.5));
  CHECK(op.specificity == doctest::Approx(0.5));

  op = sop({1.18418, 2.36837, 0.15, 1, 1}, Link::logistic);
  CHECK(op.sensitivity == doctest::Approx(0.9).epsilon(1e-5));
  CHECK(op.specificity == doctest::Approx(0.5).epsilon(1e-5));

  op = sop({0, 2 * logit(0.8), 0, 1, 1}, Link::logistic);
  CHECK(op.sensitivity == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(op.specificity == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("SROC curve") {
  for (double x : {0.01, 0.2, 0.5, 0.9, 0.999}) CHECK(sroc_curve(0, 0, x) == doctest::Approx(x).epsilon(1e-14));
  CHECK(sroc_curve(2 * logit(0.8), 0, 0.2) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(sroc_curve(60.0, 0.3, 0.3) > 1 - 1e-12);
  CHECK_THROWS_AS(sroc_curve(1, 0, 0.0), DomainError);
  CHECK_THROWS_AS(sroc_curve(1, 0, 1.0), DomainError);

  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double y = sroc_curve(1.7, -0.6, i / 100.0, Link::probit);
    CHECK(y > prev);
    prev = y;
  }
}

TEST_CASE("SOP lies on the SROC curve") {
  Philox4x32 rng(3, 0);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const ModelParams p{u(rng), 2 * u(rng), 0.5 * u(rng), 1, 1};
    for (Link link : {Link::logistic, Link::probit}) {
      const auto op = sop(p, link);
      CHECK(sroc_curve(p.alpha, p.beta, 1 - op.specificity, link) ==
            doctest::Approx(op.sensitivity).epsilon(1e-10));
    }
  }
}

TEST_CASE("SAUC") {
  for (double beta : {-1.0, 0.0, 0.7}) CHECK(sauc(0.0, beta) == doctest::Approx(0.5).epsilon(1e-12));
  const double a = 2 * logit(0.8);
  CHECK(std::abs(sauc(a, 0.0) - testing::trapezoid_sauc(a, 0.0, 1'000'000)) < 1e-6);

  Philox4x32 rng(11, 0);
  std::uniform_real_distribution<double> ua(-2.0, 4.0), ub(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double alpha = ua(rng), beta = ub(rng);
    CAPTURE(alpha);
    CAPTURE(beta);
    CHECK(std::abs(sauc(alpha, beta) - testing::trapezoid_sauc(alpha, beta, 200'000)) < 1e-6);
  }
}

TEST_CASE("SAUC increases with alpha") {
  for (double beta = -1.0; beta <= 1.0 + 1e-9; beta += 0.25) {
    double prev = sauc(-2.0, beta);
    for (double alpha = -1.9; alpha <= 4.0 + 1e-9; alpha += 0.1) {
      const double v = sauc(alpha, beta);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("delta-method variance") {
  CHECK(sauc_variance(1.5, 0.2, Eigen::Matrix2d::Zero()) == 0.0);

  const Eigen::Vector2d g = sauc_gradient(0.0, 0.0);
  CHECK(sauc_variance(0.0, 0.0, Eigen::Matrix2d::Identity()) == doctest::Approx(g.squaredNorm()).epsilon(1e-12));
  const Eigen::Vector2d fine = sauc_gradient(0.0, 0.0, Link::logistic, 1e-6);
  CHECK((g - fine).norm() / fine.norm() < 1e-3);

  Eigen::Matrix2d cov;
  cov << 0.09, 0.01, 0.01, 0.06;
  const double v = sauc_variance(3.6, 0.1, cov);
  CHECK(sauc_variance(3.6, 0.1, 4.0 * cov) == doctest::Approx(4.0 * v).epsilon(1e-13));

  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(sauc_variance(1.0, 0.0, bad), InvalidArgument);
}

TEST_CASE("gradient stable under step refinement") {
  for (double alpha : {0.5, 2.0, 3.6}) {
    for (double beta : {-0.5, 0.1, 0.8}) {
      const Eigen::Vector2d g1 = sauc_gradient(alpha, beta, Link::logistic, 1e-5);
      const Eigen::Vector2d g2 = sauc_gradient(alpha, beta, Link::logistic, 2.5e-6);
      CHECK((g1 - g2).norm() / g2.norm() < 1e-3);
    }
  }
}

TEST_CASE("logit-scale confidence interval") {
  auto [lo, hi] = sauc_ci(0.9, 0.0);
  CHECK(lo == 0.9);
  CHECK(hi == 0.9);
  std::tie(lo, hi) = sauc_ci(0.9, 100.0);
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  for (double s : {0.55, 0.8, 0.97}) {
    for (double var : {1e-4, 1e-2, 0.3}) {
      const auto narrow = sauc_ci(s, var, 0.90);
      const auto wide = sauc_ci(s, var, 0.99);
      CHECK(wide.first < narrow.first);
      CHECK(narrow.first < s);
      CHECK(s < narrow.second);
      CHECK(narrow.second < wide.second);
    }
  }
}
