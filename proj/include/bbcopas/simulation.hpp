#pragma once

// Simulation of published and unpublished study populations and benchmarking
// of estimators on the published subset.

#include "bbcopas/estimator.hpp"
#include "bbcopas/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bbcopas {

struct SimScenario {
  double sens = 0.9;
  double spec = 0.5;
  double beta = 0.15;
  double sigma_theta = 0.6;
  double sigma_alpha = 1.2;
  int n1_min = 10, n1_max = 30;
  int n0_min = 200, n0_max = 300;
  double gamma1 = 1.5;
  double p_target = 0.7;
  double c0 = 0.70710678118654752440;
  double c1 = 0.70710678118654752440;
  int studies = 15; // population size, published + unpublished
  std::uint64_t seed = 20240501;
  Link link = Link::logistic;

  // (theta, alpha) solving sop() = (sens, spec) at this beta.
  ModelParams generating_params() const;
  double true_sauc() const;
  void check() const;
};

// Experiments 1-3: (sens, spec) = (0.9, 0.5), (0.5, 0.9), (0.8, 0.8) with
// (sigma_theta, sigma_alpha) = (0.6, 1.2); experiments 4-6: same with (1.2, 0.6).
SimScenario experiment_scenario(int experiment);

struct SimStudy {
  Study2x2 study;
  double t_value = 0.0;
  bool published = false;
};

// Draws the full population. Publication flags are left false.
std::vector<SimStudy> generate_population(const SimScenario& scenario, Philox4x32& rng);

// gamma0 with mean over the population of P(select | n1, n0) equal to
// p_target, P computed at the generating parameters (exact summation within
// the default cap, the approximation beyond it). +inf for
// p_target = 1, Phi^{-1}(p_target) for gamma1 = 0.
double calibrate_gamma0_sim(const std::vector<SimStudy>& population, const SimScenario& scenario,
                            const LikelihoodConfig& cfg = {});

// Bernoulli(Phi(gamma0 + gamma1 t)) publication; sets the flags and returns
// the published tables in population order.
std::vector<Study2x2> apply_selection(std::vector<SimStudy>& population, double gamma0,
                                      double gamma1, Philox4x32& rng);

struct SparsityRates {
  double zero = 0.0; // % of studies with a zero cell
  double le3 = 0.0;  // % with smallest cell <= 3
  double le5 = 0.0;  // % with smallest cell <= 5
};
SparsityRates sparsity_summary(const std::vector<Study2x2>& studies);

enum class EstimatorKind { mle_published, proposal };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::mle_published;
  double c0 = 0.70710678118654752440;
  double c1 = 0.70710678118654752440;
  std::string label() const;
};

struct SimulationConfig {
  SimScenario scenario;
  int replications = 100;
  std::vector<EstimatorSpec> estimators;
  // Estimation settings for the proposal; p is scenario.p_target.
  FitOptions fit;
  ExecPolicy exec = ExecPolicy::parallel;
};

struct EstimateRecord {
  bool ok = false;
  std::string error;
  double sauc = 0.0;
  double theta = 0.0;
  double alpha = 0.0;
  double sens = 0.0;
  double spec = 0.0;
};

struct ReplicationRecord {
  int index = 0;
  int published = 0;
  SparsityRates full;
  SparsityRates published_rates;
  std::vector<EstimateRecord> estimates; // one per estimator, config order
};

struct EstimatorSummary {
  std::string label;
  int ok = 0;
  int failed = 0;
  double mean_sauc = 0.0, sd_sauc = 0.0;
  double mean_theta = 0.0, mean_alpha = 0.0;
  double mean_sens = 0.0, mean_spec = 0.0;
};

struct SimulationSummary {
  SimulationConfig config;
  double true_sauc = 0.0;
  double mean_published_fraction = 0.0;
  SparsityRates full;
  SparsityRates published;
  std::vector<EstimatorSummary> estimators;
  std::vector<ReplicationRecord> replications;
};

// Replication r draws from the stream (scenario.seed, r), so results do not
// depend on the number of threads.
ReplicationRecord run_replication(const SimulationConfig& config, int index);
SimulationSummary run_simulation_study(const SimulationConfig& config);

} // namespace bbcopas
