#pragma once

#include "bbcopas/optimizer.hpp"

#include <Eigen/Core>

namespace bbcopas {

struct InformationResult {
  Eigen::MatrixXd hessian;    // of the negative log-likelihood
  Eigen::MatrixXd covariance; // inverse observed information, PSD
  bool projected = false;     // negative eigenvalues were clipped
  double condition_number = 0.0;
};

// Central-difference Hessian of `negative_loglik` at `at` (relative step
// 1e-4), inverted to a covariance. Eigenvalues of the covariance below -1e-6
// are clipped to zero (nearest PSD matrix) and flagged. Throws
// SingularInformation when the Hessian is numerically singular.
InformationResult observed_information(const Objective& negative_loglik,
                                       const Eigen::VectorXd& at,
                                       double relative_step = 1e-4);

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& at,
                                  double relative_step);

} // namespace bbcopas
