#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bbcopas/errors.hpp"
#include "bbcopas/simulation.hpp"
#include "support.hpp"

#include <cmath>

using namespace bbcopas;

TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::bijection(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});

  Philox4x32 a(7, 3), b(7, 3), c(7, 4);
  bool differs = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differs |= x != z;
  }
  CHECK(differs);
  Philox4x32 u(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK((v >= 0.0 && v < 1.0));
  }
}

TEST_CASE("generating parameters and population") {
  const auto sc = experiment_scenario(1);
  const auto p = sc.generating_params();
  CHECK(p.theta == doctest::Approx(1.18418).epsilon(1e-5));
  CHECK(p.alpha == doctest::Approx(2.36837).epsilon(1e-5));
  const auto op = sop(p, Link::logistic);
  CHECK(op.sensitivity == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(op.specificity == doctest::Approx(0.5).epsilon(1e-12));

  SimScenario big = sc;
  big.studies = 2000;
  Philox4x32 rng(big.seed, 0);
  const auto pop = generate_population(big, rng);
  REQUIRE(pop.size() == 2000);
  for (const auto& s : pop) {
    CHECK((s.study.n1() >= 10 && s.study.n1() <= 30));
    CHECK((s.study.n0() >= 200 && s.study.n0() <= 300));
    CHECK_FALSE(s.published);
    CHECK(s.t_value == observed_t_statistic(s.study, sc.c0, sc.c1));
  }

  CHECK_THROWS_AS(experiment_scenario(7), InvalidArgument);
}

TEST_CASE("rates without random effects") {
  SimScenario sc = experiment_scenario(3);
  sc.sigma_theta = sc.sigma_alpha = 1e-8;
  sc.studies = 10'000;
  Philox4x32 rng(5, 0);
  const auto pop = generate_population(sc, rng);
  double tpr = 0.0, tnr = 0.0;
  for (const auto& s : pop) {
    tpr += static_cast<double>(s.study.n11) / s.study.n1();
    tnr += static_cast<double>(s.study.n00) / s.study.n0();
  }
  CHECK(std::abs(tpr / pop.size() - sc.sens) < 0.01);
  CHECK(std::abs(tnr / pop.size() - sc.spec) < 0.01);
}

TEST_CASE("gamma0 calibration") {
  SimScenario sc = experiment_scenario(1);
  Philox4x32 rng(sc.seed, 0);
  const auto pop = generate_population(sc, rng);

  SimScenario flat = sc;
  flat.gamma1 = 0.0;
  CHECK(calibrate_gamma0_sim(pop, flat) == doctest::Approx(normal_quantile(0.7)).epsilon(1e-12));
  SimScenario all = sc;
  all.p_target = 1.0;
  CHECK(calibrate_gamma0_sim(pop, all) == std::numeric_limits<double>::infinity());

  const double g0 = calibrate_gamma0_sim(pop, sc);
  const auto spec = SelectionSpec::normalized(sc.c0, sc.c1, sc.gamma1, sc.p_target);
  const LikelihoodConfig cfg;
  double mean_p = 0.0;
  for (const auto& s : pop)
    mean_p += marginal_select_prob_exact(sc.generating_params(), spec, g0, s.study.n1(), s.study.n0(), cfg);
  CHECK(std::abs(mean_p / pop.size() - 0.7) < 1e-8);

  double prev = -std::numeric_limits<double>::infinity();
  for (double p : {0.3, 0.7, 0.95}) {
    sc.p_target = p;
    const double g = calibrate_gamma0_sim(pop, sc);
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("Bernoulli publication") {
  SimScenario sc = experiment_scenario(2);
  Philox4x32 rng(11, 0);
  auto pop = generate_population(sc, rng);

  const auto everything = apply_selection(pop, std::numeric_limits<double>::infinity(), 0.0, rng);
  CHECK(everything.size() == pop.size());
  for (const auto& s : pop) CHECK(s.published);

  // Published count ~ Binomial(S, 1/2) at gamma1 = 0, gamma0 = 0.
  const int reps = 1000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    Philox4x32 stream(12, static_cast<std::uint64_t>(r));
    total += static_cast<double>(apply_selection(pop, 0.0, 0.0, stream).size());
  }
  const double n = static_cast<double>(pop.size());
  CHECK(std::abs(total / reps - n / 2) < 3.0 * std::sqrt(n * 0.25 / reps));

  const double cut = 3.0, g1 = 1e6;
  const auto kept = apply_selection(pop, -g1 * cut, g1, rng);
  std::size_t expected = 0;
  for (const auto& s : pop) {
    CHECK(s.published == (s.t_value > cut));
    expected += s.t_value > cut;
  }
  CHECK(kept.size() == expected);
}

TEST_CASE("sparsity summary") {
  const auto one = sparsity_summary({{0, 5, 5, 5, ""}});
  CHECK(one.zero == 100.0);
  CHECK(one.le3 == 100.0);
  CHECK(one.le5 == 100.0);
  const auto mixed = sparsity_summary({{0, 5, 5, 5, ""}, {4, 9, 9, 9, ""}, {6, 6, 6, 6, ""}, {3, 7, 8, 9, ""}});
  CHECK(mixed.zero == 25.0);
  CHECK(mixed.le3 == 50.0);
  CHECK(mixed.le5 == 75.0);
  const auto none = sparsity_summary({});
  CHECK(none.zero == 0.0);

  // Zero-entry share in the full populations, 100 replications of 15 studies.
  auto zero_rate = [](int experiment) {
    const auto sc = experiment_scenario(experiment);
    double acc = 0.0;
    for (int r = 0; r < 100; ++r) {
      Philox4x32 rng(sc.seed, static_cast<std::uint64_t>(r));
      std::vector<Study2x2> studies;
      for (const auto& s : generate_population(sc, rng)) studies.push_back(s.study);
      acc += sparsity_summary(studies).zero;
    }
    return acc / 100.0;
  };
  const double z1 = zero_rate(1), z2 = zero_rate(2);
  CHECK(std::abs(z1 - 19.6) < 3.0);
  CHECK(std::abs(z2 - 1.0) < 1.5);
  CHECK(z1 > z2);
}

TEST_CASE("published fraction matches the target") {
  const auto sc = experiment_scenario(1);
  CHECK(sc.true_sauc() == doctest::Approx(0.832).epsilon(0.0005 / 0.832));
  double fraction = 0.0;
  for (int r = 0; r < 100; ++r) {
    Philox4x32 rng(sc.seed, static_cast<std::uint64_t>(r));
    auto pop = generate_population(sc, rng);
    const double g0 = calibrate_gamma0_sim(pop, sc);
    fraction += static_cast<double>(apply_selection(pop, g0, sc.gamma1, rng).size()) / pop.size();
  }
  CHECK(std::abs(fraction / 100.0 - 0.7) < 0.03);
}

TEST_CASE("replications are deterministic") {
  SimulationConfig cfg;
  cfg.scenario = experiment_scenario(1);
  cfg.replications = 1;
  cfg.estimators = {EstimatorSpec{EstimatorKind::mle_published}};
  const auto a = run_replication(cfg, 0), b = run_replication(cfg, 0);
  CHECK(a.published == b.published);
  REQUIRE(a.estimates.size() == 1);
  CHECK(a.estimates[0].ok == b.estimates[0].ok);
  CHECK(a.estimates[0].sauc == b.estimates[0].sauc);
  CHECK(a.estimates[0].theta == b.estimates[0].theta);

  cfg.replications = 4;
  cfg.exec = ExecPolicy::serial;
  const auto serial = run_simulation_study(cfg);
  cfg.exec = ExecPolicy::parallel;
  const auto parallel = run_simulation_study(cfg);
  for (int r = 0; r < 4; ++r) {
    CHECK(serial.replications[r].published == parallel.replications[r].published);
    CHECK(serial.replications[r].estimates[0].sauc == parallel.replications[r].estimates[0].sauc);
  }
  CHECK(serial.replications[0].estimates[0].sauc == a.estimates[0].sauc);
}
