#pragma once

// SROC curve and its area. With x = 1 - specificity,
//   SROC(x; alpha, beta) = 1 - G( -alpha*exp(-beta/2) + exp(-beta)*G^{-1}(1 - x) )
//   SAUC(alpha, beta)    = integral of SROC over (0, 1).

#include "bbcopas/link.hpp"
#include "bbcopas/params.hpp"

#include <Eigen/Core>

#include <utility>

namespace bbcopas {

struct OperatingPoint {
  double sensitivity;
  double specificity;
};

struct SrocSummary {
  double sauc = 0.5;
  double sauc_variance = 0.0;
  double ci_low = 0.5;
  double ci_high = 0.5;
  double level = 0.95;
  double sop_sensitivity = 0.5;
  double sop_specificity = 0.5;
};

// Summary operating point: the random effects set to zero.
OperatingPoint sop(const ModelParams& params, Link link);

// Throws DomainError unless 0 < x < 1.
double sroc_curve(double alpha, double beta, double x, Link link = Link::logistic);

// Adaptive Gauss-Kronrod on the G^{-1}(1 - x) scale, where the integrand is
// smooth and decays in both tails; absolute error well below 1e-8.
double sauc(double alpha, double beta, Link link = Link::logistic);

// Central-difference gradient of SAUC in (alpha, beta); step
// relative_step * max(1, |param|).
Eigen::Vector2d sauc_gradient(double alpha, double beta, Link link = Link::logistic,
                              double relative_step = 1e-5);

// Delta method: grad' * cov_ab * grad. Throws InvalidArgument when cov_ab is
// not symmetric positive semidefinite.
double sauc_variance(double alpha, double beta, const Eigen::Matrix2d& cov_ab,
                     Link link = Link::logistic);

// Logit-scale interval logit^{-1}(logit(s) +/- z * sqrt(var) / (s(1-s))),
// always inside (0, 1).
std::pair<double, double> sauc_ci(double sauc_value, double variance, double level = 0.95);

SrocSummary summarize_sroc(const ModelParams& params, const Eigen::Matrix2d& cov_ab,
                           Link link, double level = 0.95);

} // namespace bbcopas
