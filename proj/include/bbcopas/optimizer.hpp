#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>

namespace bbcopas {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimOptions {
  int max_iterations = 2000;       // Nelder-Mead + BFGS iterations combined
  double f_tolerance = 1e-9;       // absolute objective change
  double x_tolerance = 1e-7;       // max coordinate change
  double gradient_step = 1e-5;     // relative central-difference step
  double initial_step = 0.25;      // simplex edge length
  int simplex_max_iterations = 600;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = std::numeric_limits<double>::quiet_NaN();
  bool boundary_hit = false;
};

// Minimizes f subject to x >= lower (use -inf for unbounded coordinates):
// a Nelder-Mead pass locates the basin, then BFGS with central-difference
// gradients polishes. Convergence requires |df| < f_tolerance and
// max|dx| < x_tolerance between successive BFGS iterates (or a vanishing
// gradient). Non-finite objective values are treated as +inf.
OptimResult minimize(const Objective& f, const Eigen::VectorXd& x0,
                     const Eigen::VectorXd& lower, const OptimOptions& options = {});

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x,
                                 double relative_step);

} // namespace bbcopas
