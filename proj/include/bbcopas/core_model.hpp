#pragma once

// Bivariate binomial random-effects model:
//   pi1 = G( (theta + u + (alpha + v)/2) * exp(-beta/2) )   (TPR)
//   pi0 = G( (theta + u - (alpha + v)/2) * exp(+beta/2) )   (FPR)
//   u ~ N(0, sigma_theta^2), v ~ N(0, sigma_alpha^2) independent,
//   TP ~ Bin(n1, pi1), FP ~ Bin(n0, pi0) given (u, v).
// G is symmetric, so 1 - G(-x) = G(x) and the linear predictors above are
// the arguments of G directly.

#include "bbcopas/link.hpp"
#include "bbcopas/parallel.hpp"
#include "bbcopas/params.hpp"
#include "bbcopas/quadrature.hpp"
#include "bbcopas/study.hpp"

#include <optional>
#include <vector>

namespace bbcopas {

struct FitResult;
struct FitOptions;

inline constexpr double kProbClamp = 1e-12;

struct LikelihoodConfig {
  Link link = Link::logistic;
  QuadratureRule rule = QuadratureRule::gauss_hermite(21);
  QuadratureMode mode = QuadratureMode::adaptive;
  ExecPolicy exec = ExecPolicy::parallel;

  static LikelihoodConfig make(Link link, int order,
                               QuadratureMode mode = QuadratureMode::adaptive,
                               ExecPolicy exec = ExecPolicy::parallel) {
    return {link, QuadratureRule::gauss_hermite(order), mode, exec};
  }
};

struct StudyProbabilities {
  double pi1; // sensitivity / TPR
  double pi0; // FPR = 1 - specificity
};

// Linear predictors (eta1, eta0) with pi_d = G(eta_d).
struct LinearPredictors {
  double eta1;
  double eta0;
};
LinearPredictors linear_predictors(const ModelParams& params, double re_theta,
                                   double re_alpha) noexcept;

// Clamped to [1e-12, 1 - 1e-12]. Throws InvalidArgument on non-finite input.
StudyProbabilities study_probabilities(const ModelParams& params, double re_theta,
                                       double re_alpha, Link link);

// log Bin(n11 | n1, pi1) + log Bin(n10 | n0, pi0), binomial coefficients
// included.
double within_study_log_pmf(const Study2x2& study, double pi1, double pi0);

// log of the sum of the two log binomial coefficients of a study.
double log_binomial_coefficients(const Study2x2& study);

// log f_P(cells) for one study: the random effects integrated out.
double study_log_marginal(const ModelParams& params, const Study2x2& study,
                          const LikelihoodConfig& cfg);

// Per-study contributions in study order. Throws NumericFailure carrying the
// index of the first non-finite contribution.
std::vector<double> study_log_marginals(const ModelParams& params,
                                        const std::vector<Study2x2>& studies,
                                        const LikelihoodConfig& cfg);

// Sum of study_log_marginals in canonical (input) order. Requires >= 2 studies.
double marginal_log_likelihood_unadjusted(const ModelParams& params,
                                          const std::vector<Study2x2>& studies,
                                          const LikelihoodConfig& cfg);

// Continuity-corrected moment estimates of (theta, alpha) with beta = 0 and
// sigma = 0.5.
ModelParams default_initial_params(const std::vector<Study2x2>& studies, Link link);

// Maximum likelihood fit ignoring publication bias (p = 1). Throws
// ConvergenceFailure when the optimizer budget is exhausted.
FitResult fit_unadjusted(const std::vector<Study2x2>& studies,
                         const std::optional<ModelParams>& init,
                         const FitOptions& options);

} // namespace bbcopas
