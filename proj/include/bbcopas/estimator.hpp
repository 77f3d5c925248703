#pragma once

// Maximum likelihood conditional on publication. For a fixed marginal
// selection probability p, gamma0 is profiled out through the empirical
// constraint
//   (1/S) * sum_s 1 / P(select | n1_s, n0_s; gamma0) = 1/p
// and the log-likelihood of the published studies is
//   l_O = sum log f_P(cells_s) + sum log a(t_s) - sum log P(select | n1_s, n0_s)
// (a parameter-free term dropped).

#include "bbcopas/core_model.hpp"
#include "bbcopas/optimizer.hpp"
#include "bbcopas/selection.hpp"
#include "bbcopas/sroc.hpp"

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bbcopas {

enum class Gamma1Mode { profile, fixed };

struct FitOptions {
  LikelihoodConfig likelihood;
  SelectionOptions selection;
  Gamma1Mode gamma1_mode = Gamma1Mode::profile;
  double gamma1 = 1.0; // starting value (profile) or held value (fixed)
  OptimOptions optim;
  double sigma_floor = 1e-4;
  double level = 0.95;
  bool compute_covariance = true;
};

struct FitResult {
  ModelParams params;
  double gamma0 = std::numeric_limits<double>::infinity();
  double gamma1 = 0.0;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  // Covariance in the optimizer coordinates named by covariance_names:
  // (theta, alpha, beta, log sigma_theta, log sigma_alpha[, gamma1]).
  Eigen::MatrixXd covariance;
  std::vector<std::string> covariance_names;
  SrocSummary sroc;
  bool converged = false;
  bool boundary_hit = false;
  bool covariance_projected = false;
  bool few_studies = false; // fewer than 3 studies
  double p = 1.0;
  SelectionSpec spec;
  SelectionMethod method = SelectionMethod::approx;
  Gamma1Mode gamma1_mode = Gamma1Mode::profile;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = std::numeric_limits<double>::quiet_NaN();
  double constraint_residual = 0.0; // mean(1/P) - 1/p at the estimate
  std::string message;

  // Standard errors on the natural scale: (theta, alpha, beta, sigma_theta,
  // sigma_alpha[, gamma1]); sigma SEs via the delta method on the log scale.
  std::vector<double> standard_errors() const;
};

// gamma0 solving the constraint at (params, spec.gamma1). Returns +inf for
// p = 1 and Phi^{-1}(p) exactly when gamma1 = 0. Throws ConstraintInfeasible
// when no root exists in the expanded bracket.
double solve_gamma0(const ModelParams& params, const SelectionSpec& spec,
                    const std::vector<Study2x2>& studies, const FitOptions& options = {});

// Same, with the marginal selection probabilities already tabulated.
double solve_gamma0(const MarginalSelection& selection, double gamma1, double p);

struct AdjustedLoglikTerms {
  double log_fp = 0.0;       // sum log f_P(cells)
  double log_select = 0.0;   // sum log a(t_s)
  double log_marginal = 0.0; // sum log P(select | n1, n0)
  double gamma0 = std::numeric_limits<double>::infinity();
  double total() const { return log_fp + log_select - log_marginal; }
};

AdjustedLoglikTerms adjusted_log_likelihood_terms(const ModelParams& params, double gamma1,
                                                  const SelectionSpec& spec,
                                                  const std::vector<Study2x2>& studies,
                                                  const FitOptions& options = {});

double adjusted_log_likelihood(const ModelParams& params, double gamma1, const SelectionSpec& spec,
                               const std::vector<Study2x2>& studies,
                               const FitOptions& options = {});

struct FitStart {
  ModelParams params;
  double gamma1 = 1.0;
};

// Maximizes l_O over (Theta, gamma1) (or Theta alone with a fixed gamma1).
// Defaults to starting from the unadjusted MLE. A convergence failure
// returns the best point with converged = false.
FitResult fit_adjusted(const std::vector<Study2x2>& studies, const SelectionSpec& spec,
                       const FitOptions& options = {},
                       const std::optional<FitStart>& init = std::nullopt);

struct SensitivityRow {
  double p = 1.0;
  SelectionSpec spec;
  bool baseline = false; // the shared p = 1 fit
  bool ok = false;
  std::string error;
  FitResult fit;
};

struct SensitivityTable {
  std::vector<SensitivityRow> rows;
  std::vector<std::pair<double, double>> c_pairs; // (c0, c1), normalized
  std::vector<double> p_grid;                     // descending
};

std::vector<std::pair<double, double>> default_c_pairs();
std::vector<double> default_p_grid();

// One fit per (c pair, p < 1) plus a single shared p = 1 baseline when the
// grid contains 1. Within a c pair, p runs downward and each fit starts from
// the previous solution with the quasi-Newton phase only. Per-cell failures
// are recorded and the run goes on.
SensitivityTable sensitivity_analysis(const std::vector<Study2x2>& studies,
                                      const std::vector<std::pair<double, double>>& c_pairs,
                                      const std::vector<double>& p_grid,
                                      const FitOptions& options = {});

} // namespace bbcopas
